//! TASEP with a second-class particle, its last-passage-percolation
//! representation, and the numerics needed to compare shock fluctuations
//! with Tracy-Widom limit laws.

pub mod acceptance;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod interface;
pub mod lpp;
pub mod rng;
pub mod shock;
pub mod stationary;
pub mod tasep;
pub mod tw;

pub use error::{Error, Result};

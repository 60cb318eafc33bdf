//! Partition-based regression ensembles: exact CART splitting processes,
//! leading-order MSE terms, inverse-moment expansions and Monte-Carlo checks.

pub mod cart_process;
pub mod ensemble_core;
pub mod error;
pub mod exec;
pub mod mc_harness;
pub mod model;
pub mod moments;
pub mod selftest;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};

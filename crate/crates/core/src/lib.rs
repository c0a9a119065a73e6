// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod geometry;
pub mod model_space;
pub mod numerics;
pub mod quantum_space;
pub mod report;
pub mod runner;
pub mod spectral;
pub mod suite;
pub mod toeplitz;

pub use error::{Error, Result};

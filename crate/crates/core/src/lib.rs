//! Univariate time-series imputation and benchmarking.
//!
//! The crate covers the whole experimental loop: build or load a complete
//! [`TimeSeries`], delete values with the MCAR simulator in [`missing`],
//! fill them with one of the [`Algorithm`]s, and score the result with the
//! [`metrics`] at the deleted positions. [`bench`] runs that loop over a
//! grid of rates, seeds and algorithms.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod decomposition;
pub mod error;
pub mod imputation;
pub mod io;
pub mod metrics;
pub mod missing;
pub mod optim;
pub mod series;
pub mod statespace;

pub use error::{Error, Result};
pub use imputation::{impute, Algorithm, ImputationOutcome, ImputeOptions};
pub use series::TimeSeries;

//! Higher-order Kolmogorov-Smirnov two-sample tests.
//!
//! The order-k statistic compares truncated k-th moments
//! `E(X - t)_+^k / k!` (and their mirror images) across all truncation
//! points `t`, recovering the classic KS statistic at k = 0. This crate
//! provides:
//!
//! - exact linear-time computation for orders k <= 5 and a certified
//!   eps-approximation for k >= 6 ([`statistic`]),
//! - the knot-grid and plus-side-only literature variants ([`statistic`]),
//! - permutation and simulated asymptotic-null calibration ([`nulls`]),
//! - reference two-sample tests: energy distance, Gaussian and polynomial
//!   MMD, Anderson-Darling ([`baselines`]),
//! - slow-but-sure oracles: dense-grid brute force and the population
//!   distance via iterated tail integrals of the CDF difference
//!   ([`oracles`]),
//! - a name-keyed registry of all statistics behind one trait
//!   ([`registry`]) and a desk-scale experiment harness ([`experiments`]).

pub mod baselines;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod nulls;
pub mod oracles;
pub mod poly;
mod roots;
pub mod registry;
pub mod samples;
pub mod statistic;

pub use error::{Error, Result};
pub use samples::{ingest_samples, pool_and_sort, rescale, CsvFormat, PooledSample, TwoSamples};
pub use statistic::{
    grid_error_bound, hks_aggregate, hks_exact, hks_grid, hks_wang, ks_classic, HksConfig, Method,
    StatMethod, TestResult, WitnessSide,
};

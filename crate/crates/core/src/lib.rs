//! Simulation and verification toolkit for random walks in random scenery
//! and at random times, discretized stable random measures, local-time and
//! indicator fractional stable motions, a recursive construction of
//! fractional motions with composed Hurst exponents, and hitting-time
//! time changes that recover Brownian motion from indicator processes.
//!
//! Distributional theorems about these objects become executable checks:
//! exact per-path identities are verified to fixed tolerance, and scaling
//! limits are verified statistically on seeded Monte Carlo ensembles (see
//! the `acceptance` module and the `scenery` CLI).
//!
//! Everything random is driven by [`rng::RandomStream`], so runs are
//! reproducible bit for bit at a fixed master seed regardless of thread
//! count.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod limits;
pub mod measure;
pub mod recursion;
pub mod report;
pub mod rng;
pub mod scenery;
pub mod stats;
pub mod timechange;
pub mod walks;

pub use error::{Error, Result};

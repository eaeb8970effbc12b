//! Best-path variable selection on mixed graphical forests.
//!
//! A forest is learnt over all variables from penalised pairwise mutual
//! information. The variables around a target are then grouped into nested
//! path-steps by forest distance. Each step is scored, either with a kernel
//! entropy coefficient or with adjusted R² from OLS, and the best step is
//! pruned with per-variable independence tests.

pub mod baselines;
pub mod bpa;
pub mod cli;
pub mod data;
pub mod density;
pub mod error;
pub mod forest;
pub mod format;
pub mod knn;
pub mod linear;
pub mod manifest;
pub mod pairwise;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

//! Anti-profile SVM toolkit.
//!
//! Classifies heterogeneous anomalous classes by their pattern of deviation
//! from a stable normal class: the decision function is expanded over
//! representers of normal samples only, which reduces to a standard SVM dual
//! over the indirect kernel `K~ = K_s K_n^+ K_s^T`. The crate also ships the
//! standard SVM baseline, heterogeneity diagnostics, and a reproducible
//! simulation benchmark harness.

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod rkhs;
pub mod solver;

mod linalg;
pub mod sampling;

pub use dataset::{Dataset, Role, Split};
pub use error::{Error, ErrorKind, Result};
pub use kernels::{GramMatrix, KernelSpec};
pub use rkhs::IndirectKernelContext;
pub use solver::{Mode, TrainOptions, TrainedModel};

/// Toolkit version recorded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Multivariate smooth-sign-accuracy (M-SSA) predictors: causal linear filters that
//! maximize correlation with a target subject to a prescribed expected holding time
//! between zero-crossings.

pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod processes;
pub mod solver;
pub mod spectral;
pub mod targets;

pub use error::{MssaError, Result};
pub use metrics::{acf_from_ht, ht_from_acf, sa_from_corr, MetricReport};
pub use processes::{LaggedFilter, MaExpansion, VarmaModel};
pub use solver::{HtConstraint, MssaSolution};
pub use spectral::{NoiseCovariance, StackedFilter, TridiagSpectrum};
pub use targets::{BenchmarkFilter, TargetSpec};

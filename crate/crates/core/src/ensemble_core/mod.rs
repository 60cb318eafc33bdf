//! Partition ensembles on finite product spaces: estimators, the
//! cross-partition covariance calculus, the generalized MSE decomposition
//! and consistency diagnostics.

mod covariance;
mod diagnostics;
mod estimator;
mod gmse;
mod partition;
mod rules;
mod scalar;
mod space;

pub use covariance::{
    covariance_report, cross_partition_cov, error_cov, error_var, local_cov, projection_cross, signal_cov, signal_var,
    CovKind, CovarianceReport,
};
pub use diagnostics::{consistency_diagnostic, ConsistencyRow, DiagnosticStep};
pub use estimator::{ensemble_estimate, partition_estimate, CellMeans};
pub use gmse::{direct_gmse, gmse_decompose, theorem42_leading_terms, GmseDecomposition, Theorem42Report, DEFAULT_INNER_REPS};
pub use partition::DiscretePartition;
pub use rules::{binary_state_partition, BinaryCartRule, FixedRule, PartitionRule};
pub use scalar::{le_sqrt_product, ratio, Scalar};
pub use space::{sample_data, DiscreteSample, DiscreteSpace, MAX_ATOMS};

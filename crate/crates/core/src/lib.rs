//! Kendall's tau matrices under a block structure.
//!
//! The crate estimates (conditional) Kendall's tau matrices when the
//! variables split into groups whose cross-group taus are constant, gives
//! exact finite-sample variances of the averaging estimators, runs
//! simulation studies, and turns tau matrices into elliptical Value-at-Risk.

pub mod block;
pub mod concordance;
pub mod conditional;
pub mod data;
pub mod elliptical;
pub mod error;
pub mod io;
pub mod matrix;
pub mod seed;
pub mod simulation;
pub mod variance;

pub use block::{
    averaged_kendall_matrix, block_pair_set, structure_residual, AveragingCount, EstimatorScheme,
    Partition, SchemeKind,
};
pub use concordance::{
    averaged_quantities, concordance_quantities, concordance_sign, kendall_matrix,
    pairwise_kendall, AveragingSet, ConcordanceQuantities, QuantityOptions,
};
pub use data::ObservationMatrix;
pub use error::{Error, Result};
pub use matrix::KendallMatrix;

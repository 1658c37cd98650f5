//! Weight assignments, weight cones and the contraction argument behind
//! unique ergodicity, with truncated evaluation of transverse measures.

pub mod certify;
pub mod cones;
pub mod evaluate;
pub mod metric;
pub mod weights;

use thiserror::Error;

use crate::sequence_lab::SequenceError;
use crate::solenoid_scope::ScopeError;

pub use certify::{
    certify_unique_ergodicity, certify_with, CertificateStatus, CertifyConfig, DimBounds,
    ErgodicityCertificate, SemiNormalWitness,
};
pub use cones::{
    cone_approximation, contraction_csv, contraction_trace, contraction_trace_at, ConeApprox,
    ContractionRow,
};
pub use evaluate::{evaluate_transverse_measure, perron_weights, MeasureEvaluation};
pub use metric::{
    birkhoff_check, delta_bound, hilbert_distance, projective_distance, projective_distance_exact,
    veech_inequality_check, DeltaBound, VeechCheck,
};
pub use weights::{check_weight_equations, push_weights, ResidualReport, WeightVector};

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("weight vector at level {level} has {found} entries, expected {expected}")]
    DimensionMismatch {
        level: i32,
        expected: usize,
        found: usize,
    },
    #[error("weight vectors must cover consecutive levels")]
    NonContiguous,
    #[error("negative weight at level {0}")]
    NegativeWeight(i32),
    #[error("projective distance needs nonzero nonnegative vectors")]
    ZeroVector,
    #[error("matrix is not positive")]
    NonPositiveMatrix,
    #[error("sequence is not expanding: {0}")]
    NonExpandingSequence(String),
    #[error("no weights for level {0}")]
    MissingWeights(i32),
    #[error("{0}")]
    NoRecurringWindow(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
}

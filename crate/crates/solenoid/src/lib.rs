//! Split sequences of core graphs, finite-depth probes of the solenoids
//! they induce, and the weight-cone pipeline for unique ergodicity.

pub mod fixtures;
pub mod fold_machine;
pub mod graph_core;
pub mod linalg;
pub mod measure_cones;
pub mod persist;
pub mod ratio;
pub mod scalar;
pub mod sequence_lab;
pub mod solenoid_scope;

pub use linalg::Matrix;
pub use ratio::Rational;

/// Exact integer matrices: transition and window matrices.
pub type IntMatrix = Matrix<num_bigint::BigInt>;
/// Exact rational matrices, used for ranks and weights.
pub type RatMatrix = Matrix<Rational>;
/// Floating point matrices for the metric side of the pipeline.
pub type FloatMatrix = Matrix<f64>;

//! Growing split sequences level by level and auditing their standing
//! hypotheses on a finite prefix.

pub mod audits;
pub mod chart;
pub mod generator;
pub mod sequence;
pub mod split;

use thiserror::Error;

use crate::fold_machine::FoldError;
use crate::graph_core::GraphError;

pub use audits::{audit, AuditConfig, AuditReport, Verdict};
pub use chart::{canonical_renumbering, Chart, Template, TemplateEdge};
pub use generator::{BacktrackPolicy, EdgeRule, Generator, SplitPlan, SplitStep, VertexRule};
pub use sequence::{Level, LevelFold, SplitSequence, WindowMatrix};
pub use split::{split, Cut, SplitOutcome, SplitSpec};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("generator is stuck at level {level}: {reason}")]
    GeneratorStuck { level: i64, reason: String },
    #[error("sequence has no generator to extend it")]
    NoGenerator,
    #[error("level {level} is outside the prefix")]
    LevelOutOfRange { level: i64 },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("chart: {0}")]
    Chart(String),
    #[error("rank changes at level {level}")]
    RankMismatch { level: i32 },
    #[error("valence or length bound fails at level {level}")]
    BoundViolation { level: i32 },
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

//! Finite-depth probes of the solenoid: fibers over points, turns and
//! their pre-turns, star chains, and partial leaf traces.

pub mod chains;
pub mod fiber;
pub mod leaf;
pub mod turns;

use thiserror::Error;

use crate::graph_core::DartId;
use crate::sequence_lab::{SequenceError, SplitSequence};

pub use chains::{scan_star_chains, SingularityCensus, StarChainRecord};
pub use fiber::{
    binary_refinement, check_partitions, compute_fiber, fiber_partition_system, is_generic,
    FiberTree, PartitionChecks, PartitionSystem, PointSpec,
};
pub use leaf::{trace_partial_leaf, LeafStatus, LeafTraceRecord};
pub use turns::{
    decompose_turn_transversal, pre_turn_shadows, PreTurn, ShadowLevel, TurnDecomposition, TurnSpec,
};

#[derive(Debug, Error)]
pub enum ScopeError {
    #[error("bad point: {0}")]
    BadPoint(String),
    #[error("bad turn: {0}")]
    BadTurn(String),
    #[error("depth {0} is outside the computed prefix")]
    Depth(usize),
    #[error("{found} pre-singularity candidates exceed the bound {bound}")]
    CensusBound { found: usize, bound: usize },
    #[error("not enough depth: {0}")]
    InsufficientDepth(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Image in `G_to` of a dart path of `G_from`, one fold at a time. Cheaper
/// than building the composite map when only a few paths are needed.
pub fn push_path(
    seq: &SplitSequence,
    from: i32,
    to: i32,
    path: &[DartId],
) -> Result<Vec<DartId>, SequenceError> {
    let mut p = path.to_vec();
    for k in from..to {
        p = seq.fold(k)?.map.image_of_path(&p);
    }
    Ok(p)
}

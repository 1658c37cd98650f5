//! Tracing a stretch of the leaf through a point, using the natural edges
//! of deeper levels as a finite proxy for the leaf.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::graph_core::DartId;
use crate::ratio::{self, Rational};
use crate::sequence_lab::SplitSequence;

use super::fiber::{preimages, PointSpec};
use super::{push_path, ScopeError};

/// Consecutive deepest levels that must be settled before a trace that
/// has not reached `steps` is declared closed.
pub const CLOSE_WINDOW: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafLevel {
    pub level: i32,
    /// Natural edge of this level holding the lifted point, and where.
    pub edge: usize,
    #[serde(with = "ratio::serde_str")]
    pub pos: Rational,
    /// Level-0 natural vertices crossed before and after the point by the
    /// image of that edge.
    pub backward: usize,
    pub forward: usize,
    /// Length of the edge, which is also the length of its image in `G_0`.
    #[serde(with = "ratio::serde_str")]
    pub length: Rational,
    /// Same crossings as the level above, and the segment grew by at most
    /// half of what it grew the time before: the segment is converging.
    pub settled: bool,
}

impl LeafLevel {
    pub fn hops(&self) -> usize {
        self.backward + self.forward
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LeafStatus {
    /// The leaf runs injectively across at least `hops` natural vertices
    /// of `G_0`.
    Injective { hops: usize },
    /// The leaf stopped growing: it closes up after `segments` level-0
    /// natural edges.
    Closed { segments: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafTraceRecord {
    pub steps: usize,
    pub depth: usize,
    pub levels: Vec<LeafLevel>,
    /// Labels of the level-0 natural edges along the deepest segment.
    pub segments: Vec<String>,
    pub status: LeafStatus,
}

/// Follow the leaf through `start` (a point of `G_0` inside a natural
/// edge) for `steps` natural-vertex crossings. The thread above `start`
/// takes the first preimage inside a natural edge at each level; the
/// image of that edge is an embedded segment of the leaf.
pub fn trace_partial_leaf(
    seq: &SplitSequence,
    start: &PointSpec,
    steps: usize,
    depth: usize,
) -> Result<LeafTraceRecord, ScopeError> {
    if start.level != 0 {
        return Err(ScopeError::BadPoint("leaf traces start in G_0".into()));
    }
    if depth > seq.depth() {
        return Err(ScopeError::Depth(depth));
    }
    let top = seq.graph(0)?;
    start.validate(top)?;
    if top.natural_coords(&start.point).is_none() {
        return Err(ScopeError::BadPoint(
            "leaf traces start inside a natural edge".into(),
        ));
    }
    let mut x = start.point.clone();
    let mut levels = Vec::new();
    let mut labels_at_depth = Vec::new();
    for k in 0..=depth {
        let level = -(k as i32);
        let g = seq.graph(level)?;
        if k > 0 {
            let f = &seq.fold(level)?.map;
            x = preimages(f, &x)
                .into_iter()
                .map(|p| p.point)
                .find(|p| g.natural_coords(p).is_some())
                .ok_or_else(|| {
                    ScopeError::InsufficientDepth(format!(
                        "every lift at level {level} is a natural vertex"
                    ))
                })?;
        }
        let (edge, pos) = g.natural_coords(&x).unwrap();
        let path = push_path(seq, level, 0, &g.natural().edges[edge].darts)?;
        let (backward, forward, labels) = crossings(seq, &path, &pos)?;
        let length = g.path_len(&g.natural().edges[edge].darts);
        let settled = match levels.as_slice() {
            [.., p2, p1] => {
                let (p2, p1): (&LeafLevel, &LeafLevel) = (p2, p1);
                let grew = length.clone() - &p1.length;
                let before = p1.length.clone() - &p2.length;
                p1.backward == backward
                    && p1.forward == forward
                    && labels == labels_at_depth
                    && grew.clone() + grew <= before
            }
            _ => false,
        };
        levels.push(LeafLevel {
            level,
            edge,
            pos,
            backward,
            forward,
            length,
            settled,
        });
        labels_at_depth = labels;
        if backward + forward >= steps {
            return Ok(LeafTraceRecord {
                steps,
                depth: k,
                levels,
                segments: labels_at_depth,
                status: LeafStatus::Injective { hops: steps },
            });
        }
    }
    let tail: Vec<&LeafLevel> = levels.iter().rev().take(CLOSE_WINDOW).collect();
    if tail.len() == CLOSE_WINDOW && tail.iter().all(|l| l.settled) {
        let segments = tail[0].hops() + 1;
        return Ok(LeafTraceRecord {
            steps,
            depth,
            levels,
            segments: labels_at_depth,
            status: LeafStatus::Closed { segments },
        });
    }
    Err(ScopeError::InsufficientDepth(format!(
        "{} of {steps} crossings after {depth} levels",
        levels.last().map_or(0, LeafLevel::hops)
    )))
}

/// Natural vertices of `G_0` met by `path` before and after arc length
/// `s`, and the labels of the natural edges it runs through.
fn crossings(
    seq: &SplitSequence,
    path: &[DartId],
    s: &Rational,
) -> Result<(usize, usize, Vec<String>), ScopeError> {
    let g = seq.graph(0)?;
    let nat = g.natural();
    let labels = nat.labels();
    let (mut back, mut fwd) = (0, 0);
    let mut names = Vec::new();
    let mut acc = Rational::zero();
    for (i, &d) in path.iter().enumerate() {
        if i == 0 || g.is_natural(g.origin(d)) {
            names.push(labels[nat.edge_index(d)].clone());
        }
        acc += g.dart_len(d);
        if i + 1 < path.len() && g.is_natural(g.terminus(d)) {
            if acc < *s {
                back += 1;
            } else {
                fwd += 1;
            }
        }
    }
    Ok((back, fwd, names))
}

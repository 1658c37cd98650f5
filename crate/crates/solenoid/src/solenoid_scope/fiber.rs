//! Fibers over level points, built one fold at a time, and the nested
//! partitions they carry.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::fold_machine::GraphMap;
use crate::graph_core::{dart_of, edge_of, is_forward, rev, CoreGraph, DartId, Point};
use crate::ratio::{self, Rational};
use crate::sequence_lab::{SequenceError, SplitSequence};

use super::ScopeError;

/// A point of `G_level`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSpec {
    pub level: i32,
    pub point: Point,
}

impl PointSpec {
    pub fn new(level: i32, point: Point) -> PointSpec {
        PointSpec { level, point }
    }

    /// The point at distance `pos` from the start of natural edge `edge`.
    pub fn on_natural(
        seq: &SplitSequence,
        level: i32,
        edge: usize,
        pos: &Rational,
    ) -> Result<PointSpec, ScopeError> {
        let g = seq.graph(level)?;
        let ne = g
            .natural()
            .edges
            .get(edge)
            .ok_or(ScopeError::BadPoint(format!("no natural edge {edge}")))?;
        let len = g.path_len(&ne.darts);
        if *pos <= Rational::zero() || *pos >= len {
            return Err(ScopeError::BadPoint(format!(
                "position {} is not inside a natural edge of length {}",
                ratio::format(pos),
                ratio::format(&len)
            )));
        }
        Ok(PointSpec::new(level, g.point_at_natural(edge, pos)))
    }

    pub fn validate(&self, g: &CoreGraph) -> Result<(), ScopeError> {
        let ok = match &self.point {
            Point::Vertex(v) => g.has_vertex(*v),
            Point::OnEdge { edge, t } => {
                g.has_edge(*edge) && *t > Rational::zero() && *t < g.edge(*edge).len
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ScopeError::BadPoint(format!("{self:?}")))
        }
    }

    pub fn to_json(&self, g: &CoreGraph) -> Value {
        let natural = g
            .natural_coords(&self.point)
            .map(|(e, pos)| json!({"edge": g.natural().labels()[e], "pos": ratio::format(&pos)}));
        let loc = match &self.point {
            Point::Vertex(v) => json!({"vertex": v}),
            Point::OnEdge { edge, t } => json!({"edge": edge, "t": ratio::format(t)}),
        };
        json!({"level": self.level, "location": loc, "natural": natural})
    }
}

/// A preimage of a point together with how its directions map. Directions
/// at an edge point are the two darts of that edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preimage {
    pub point: Point,
    /// `(direction at the preimage, image direction at the point)`.
    pub dirs: Vec<(DartId, DartId)>,
}

/// All preimages of `q` under a map that is isometric on edges.
pub fn preimages(f: &GraphMap, q: &Point) -> Vec<Preimage> {
    let dom = &f.domain;
    let cod = &f.codomain;
    let mut out = Vec::new();
    if let Point::Vertex(v) = q {
        for z in dom.vertices().filter(|z| f.vertex_map[z] == *v) {
            out.push(Preimage {
                point: Point::Vertex(z),
                dirs: dom.star(z).iter().map(|&c| (c, f.germ(c))).collect(),
            });
        }
    }
    for (e, _) in dom.edges() {
        let fwd = dart_of(e, true);
        let path = f.image(fwd);
        let mut acc = Rational::zero();
        for (i, &x) in path.iter().enumerate() {
            let l = cod.dart_len(x);
            match q {
                Point::Vertex(v) => {
                    if i + 1 < path.len() && cod.terminus(x) == *v {
                        out.push(Preimage {
                            point: Point::OnEdge {
                                edge: e,
                                t: acc.clone() + l.clone(),
                            },
                            dirs: vec![(fwd, path[i + 1]), (rev(fwd), rev(x))],
                        });
                    }
                }
                Point::OnEdge { edge, t } => {
                    if edge_of(x) == *edge {
                        let off = if is_forward(x) {
                            t.clone()
                        } else {
                            l.clone() - t
                        };
                        out.push(Preimage {
                            point: Point::OnEdge {
                                edge: e,
                                t: acc.clone() + off,
                            },
                            dirs: vec![(fwd, x), (rev(fwd), rev(x))],
                        });
                    }
                }
            }
            acc += l;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberNode {
    pub point: PointSpec,
    pub parent: Option<usize>,
}

/// Preimage tree of a point: `layers[d]` holds the node indices at level
/// `root.level - d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberTree {
    pub nodes: Vec<FiberNode>,
    pub layers: Vec<Vec<usize>>,
}

impl FiberTree {
    pub fn root(&self) -> &PointSpec {
        &self.nodes[0].point
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn leaf_count(&self, d: usize) -> usize {
        self.layers[d].len()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        let level = self.nodes[i].point.level;
        let d = (self.root().level - level) as usize;
        match self.layers.get(d + 1) {
            Some(next) => next
                .iter()
                .copied()
                .filter(|&c| self.nodes[c].parent == Some(i))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Ancestor of node `i` lying in layer `d`.
    pub fn ancestor(&self, mut i: usize, d: usize) -> usize {
        let mut at = (self.root().level - self.nodes[i].point.level) as usize;
        while at > d {
            i = self.nodes[i].parent.expect("non-root node has a parent");
            at -= 1;
        }
        i
    }

    pub fn leaf_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }
}

pub fn compute_fiber(
    seq: &SplitSequence,
    q: &PointSpec,
    depth: usize,
) -> Result<FiberTree, ScopeError> {
    q.validate(seq.graph(q.level)?)?;
    let bottom = q.level - depth as i32;
    if bottom < seq.bottom() {
        return Err(SequenceError::LevelOutOfRange {
            level: bottom as i64,
        }
        .into());
    }
    let mut nodes = vec![FiberNode {
        point: q.clone(),
        parent: None,
    }];
    let mut layers = vec![vec![0]];
    for d in 0..depth {
        let level = q.level - d as i32;
        let f = &seq.fold(level - 1)?.map;
        let mut next = Vec::new();
        for &i in &layers[d] {
            let pts: BTreeSet<Point> = preimages(f, &nodes[i].point.point)
                .into_iter()
                .map(|p| p.point)
                .collect();
            for p in pts {
                next.push(nodes.len());
                nodes.push(FiberNode {
                    point: PointSpec::new(level - 1, p),
                    parent: Some(i),
                });
            }
        }
        layers.push(next);
    }
    Ok(FiberTree { nodes, layers })
}

/// Whether a point avoids every vertex orbit between `bottom` and `top`:
/// its images up to `top` and all its preimages down to `bottom` are edge
/// interior points.
pub fn is_generic(seq: &SplitSequence, q: &PointSpec, bottom: i32, top: i32) -> bool {
    if matches!(q.point, Point::Vertex(_)) {
        return false;
    }
    if (q.level..top).any(|j| matches!(seq.push_point(q.level, j + 1, &q.point), Point::Vertex(_)))
    {
        return false;
    }
    match compute_fiber(seq, q, (q.level - bottom) as usize) {
        Ok(t) => t
            .nodes
            .iter()
            .all(|n| !matches!(n.point.point, Point::Vertex(_))),
        Err(_) => false,
    }
}

/// `P_d` groups the deepest layer of the fiber by depth-`d` ancestor.
/// Blocks are lists of indices into that layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSystem {
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub checks: PartitionChecks,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionChecks {
    pub starts_whole: bool,
    pub disjoint_covers: bool,
    pub nested: bool,
    pub sizes_non_decreasing: bool,
    /// Every block splits into at most two at each step of some refinement.
    pub binary_refinable: bool,
}

impl PartitionChecks {
    pub fn all(&self) -> bool {
        self.starts_whole
            && self.disjoint_covers
            && self.nested
            && self.sizes_non_decreasing
            && self.binary_refinable
    }
}

pub fn fiber_partition_system(t: &FiberTree) -> PartitionSystem {
    let depth = t.depth();
    let leaves = &t.layers[depth];
    let n = leaves.len();
    let partitions: Vec<Vec<Vec<usize>>> = (0..=depth)
        .map(|d| {
            t.layers[d]
                .iter()
                .map(|&a| (0..n).filter(|&k| t.ancestor(leaves[k], d) == a).collect())
                .filter(|b: &Vec<usize>| !b.is_empty())
                .collect()
        })
        .collect();
    let checks = check_partitions(&partitions, n);
    PartitionSystem { partitions, checks }
}

/// The tree-partition axioms on a finite system of partitions of
/// `0..n`, with the surjection to the coarser partition taken to be
/// containment.
pub fn check_partitions(ps: &[Vec<Vec<usize>>], n: usize) -> PartitionChecks {
    let starts_whole = ps.first().is_some_and(|p| p.len() == 1 && p[0].len() == n);
    let disjoint_covers = ps.iter().all(|p| {
        let mut seen = vec![false; n];
        for b in p {
            for &x in b {
                if x >= n || seen[x] {
                    return false;
                }
                seen[x] = true;
            }
        }
        seen.into_iter().all(|s| s)
    });
    let nested = ps.windows(2).all(|w| {
        w[1].iter()
            .all(|b| w[0].iter().any(|c| b.iter().all(|x| c.contains(x))))
    });
    let sizes_non_decreasing = ps.windows(2).all(|w| w[0].len() <= w[1].len());
    // A block with m children refines through m - 1 binary splits, so any
    // nested system with nonempty blocks can be binarized.
    let binary_refinable = ps.iter().all(|p| p.iter().all(|b| !b.is_empty()));
    PartitionChecks {
        starts_whole,
        disjoint_covers,
        nested,
        sizes_non_decreasing,
        binary_refinable,
    }
}

/// Refine a nested system so each block has at most two children: a block
/// with `m` children is split off one child at a time.
pub fn binary_refinement(ps: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for w in ps.windows(2) {
        let (coarse, fine) = (&w[0], &w[1]);
        let mut current = coarse.clone();
        out.push(current.clone());
        loop {
            let mut changed = false;
            let mut next = Vec::new();
            for b in &current {
                let kids: Vec<&Vec<usize>> = fine
                    .iter()
                    .filter(|c| c.iter().all(|x| b.contains(x)))
                    .collect();
                if kids.len() >= 2 {
                    let first = kids[0].clone();
                    let rest: Vec<usize> =
                        b.iter().copied().filter(|x| !first.contains(x)).collect();
                    next.push(first);
                    next.push(rest);
                    changed = true;
                } else {
                    next.push(b.clone());
                }
            }
            if !changed {
                break;
            }
            out.push(next.clone());
            current = next;
        }
    }
    if let Some(last) = ps.last() {
        if out.last() != Some(last) {
            out.push(last.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_checks_catch_overlap() {
        let ps = vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![1, 2]]];
        assert!(!check_partitions(&ps, 3).disjoint_covers);
        let ok = vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]]];
        assert!(check_partitions(&ok, 3).all());
    }

    #[test]
    fn binary_refinement_splits_one_child_at_a_time() {
        let ps = vec![
            vec![vec![0, 1, 2, 3]],
            vec![vec![0], vec![1], vec![2], vec![3]],
        ];
        let b = binary_refinement(&ps);
        for w in b.windows(2) {
            for block in &w[0] {
                let kids = w[1]
                    .iter()
                    .filter(|c| c.iter().all(|x| block.contains(x)))
                    .count();
                assert!(kids <= 2);
            }
        }
        assert_eq!(b.last().unwrap().len(), 4);
        assert!(check_partitions(&b, 4).nested);
    }
}

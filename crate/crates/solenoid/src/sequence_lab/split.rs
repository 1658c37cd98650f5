//! Splits: the inverse of a fold. Splitting a natural vertex `w` of `H`
//! along an initial segment of a natural edge produces a graph `G` and a
//! fold `G -> H`, which is how a sequence grows one level deeper.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::fold_machine::{walk_natural, Extent, FoldSpec, GraphMap};
use crate::graph_core::{dart_of, edge_of, is_forward, rev, CoreGraph, DartId, Edge, VertexId};
use crate::ratio::{self, Rational};

use super::SequenceError;

/// Length of the split segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Cut {
    /// The whole natural edge, so the fold vertex is an existing natural
    /// vertex.
    Full,
    #[serde(with = "crate::ratio::serde_str")]
    Fixed(Rational),
    /// A fraction of the natural edge length.
    #[serde(with = "crate::ratio::serde_str")]
    Fraction(Rational),
}

impl Cut {
    pub fn resolve(&self, natural_len: &Rational) -> Rational {
        match self {
            Cut::Full => natural_len.clone(),
            Cut::Fixed(q) => q.clone(),
            Cut::Fraction(q) => q.clone() * natural_len.clone(),
        }
    }
}

/// A split in raw ids of the graph being split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub w: VertexId,
    pub d0: DartId,
    pub side1: Vec<DartId>,
    pub cut: Cut,
}

/// A split whose cut point is already a vertex.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub graph: CoreGraph,
    pub map: GraphMap,
    pub fold: FoldSpec,
    pub w1: VertexId,
    pub w2: VertexId,
    pub p: VertexId,
    /// Segment darts of `H`, from `w` to `p`.
    pub segment: Vec<DartId>,
}

pub(crate) fn side2(h: &CoreGraph, w: VertexId, d0: DartId, side1: &[DartId]) -> Vec<DartId> {
    h.star(w)
        .iter()
        .copied()
        .filter(|d| *d != d0 && !side1.contains(d))
        .collect()
}

/// Check the combinatorial part of a split and resolve its cut length.
pub(crate) fn check_split(h: &CoreGraph, s: &SplitSpec) -> Result<Rational, SequenceError> {
    let bad = |m: String| Err(SequenceError::InvalidSplit(m));
    if !h.has_vertex(s.w) || !h.is_natural(s.w) {
        return bad(format!("vertex {} is not a natural vertex", s.w));
    }
    let star: BTreeSet<DartId> = h.star(s.w).iter().copied().collect();
    if !star.contains(&s.d0) {
        return bad(format!("dart {} does not start at {}", s.d0, s.w));
    }
    let s1: BTreeSet<DartId> = s.side1.iter().copied().collect();
    if s1.len() != s.side1.len() || s1.contains(&s.d0) || !s1.is_subset(&star) {
        return bad("side 1 must be distinct darts at w other than d0".into());
    }
    if s1.is_empty() || side2(h, s.w, s.d0, &s.side1).is_empty() {
        return bad("both sides of a split must be nonempty".into());
    }
    let n0 = walk_natural(h, s.d0);
    let l0 = h.path_len(&n0);
    let l = s.cut.resolve(&l0);
    let is_loop = h.terminus(*n0.last().unwrap()) == s.w;
    if l <= Rational::zero() || l > l0 || (is_loop && l == l0) {
        return bad(format!(
            "cut {} does not fit natural edge of length {}",
            ratio::format(&l),
            ratio::format(&l0)
        ));
    }
    Ok(l)
}

/// Split `h` at `w` along `d0` for length `l`, moving the darts outside
/// `side1` to a new vertex. The point at distance `l` must be a vertex.
pub fn split(
    h: &Arc<CoreGraph>,
    s: &SplitSpec,
    l: &Rational,
) -> Result<SplitOutcome, SequenceError> {
    let n0 = walk_natural(h, s.d0);
    let mut segment = Vec::new();
    let mut acc = Rational::zero();
    for &d in &n0 {
        if acc >= *l {
            break;
        }
        acc += h.dart_len(d);
        segment.push(d);
    }
    if acc != *l {
        return Err(SequenceError::InvalidSplit(
            "cut point is not a vertex".into(),
        ));
    }
    let s2 = side2(h, s.w, s.d0, &s.side1);
    let p = h.terminus(*segment.last().unwrap());
    let (mut vertices, mut edges) = h.parts();
    let mut next_v = h.max_vertex_id() + 1;
    let mut next_e = h.max_edge_id() + 1;
    let w2 = next_v;
    next_v += 1;
    vertices.insert(w2);
    for &d in &segment {
        edges.remove(&edge_of(d));
    }
    for &d in &s2 {
        let e = edges
            .get_mut(&edge_of(d))
            .expect("side darts are not in the segment");
        if is_forward(d) {
            e.from = w2;
        } else {
            e.to = w2;
        }
    }
    let m = segment.len();
    let inner: Vec<VertexId> = segment[..m - 1].iter().map(|&d| h.terminus(d)).collect();
    let fresh_inner: Vec<VertexId> = (0..m - 1)
        .map(|_| {
            next_v += 1;
            next_v - 1
        })
        .collect();
    vertices.extend(fresh_inner.iter().copied());
    let mut vertex_map: BTreeMap<VertexId, VertexId> = h.vertices().map(|v| (v, v)).collect();
    vertex_map.insert(w2, s.w);
    for (a, b) in fresh_inner.iter().zip(&inner) {
        vertex_map.insert(*a, *b);
    }
    let mut dart_map: BTreeMap<DartId, Vec<DartId>> = BTreeMap::new();
    for &id in edges.keys() {
        for d in [dart_of(id, true), dart_of(id, false)] {
            dart_map.insert(d, vec![d]);
        }
    }
    let mut copies = [Vec::new(), Vec::new()];
    for (side, start) in [(0usize, s.w), (1, w2)] {
        let along: Vec<VertexId> = std::iter::once(start)
            .chain(if side == 0 {
                inner.clone()
            } else {
                fresh_inner.clone()
            })
            .chain(std::iter::once(p))
            .collect();
        for (i, &sd) in segment.iter().enumerate() {
            let id = next_e;
            next_e += 1;
            edges.insert(
                id,
                Edge {
                    from: along[i],
                    to: along[i + 1],
                    len: h.dart_len(sd),
                    label: None,
                },
            );
            dart_map.insert(dart_of(id, true), vec![sd]);
            dart_map.insert(dart_of(id, false), vec![rev(sd)]);
            copies[side].push(dart_of(id, true));
        }
    }
    let g = CoreGraph::from_parts(vertices, edges)?;
    let g = Arc::new(g);
    let map = GraphMap::new(g.clone(), h.clone(), vertex_map, dart_map)?;
    let extent = if s.side1.len() >= 2 || s2.len() >= 2 {
        Extent::Full
    } else {
        Extent::Partial(l.clone())
    };
    let fold = FoldSpec {
        vertex: p,
        dart1: rev(*copies[0].last().unwrap()),
        dart2: rev(*copies[1].last().unwrap()),
        extent,
    };
    Ok(SplitOutcome {
        graph: (*g).clone(),
        map,
        fold,
        w1: s.w,
        w2,
        p,
        segment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fold_machine::{transition_matrix, validate_fold};
    use crate::graph_core::shapes::{gamma3, theta};
    use crate::ratio::{half, int};

    #[test]
    fn theta_split_is_a_partial_fold() {
        let mut h = theta();
        let (h2, _) = h.subdivide(2, &half(), 2, 3);
        h = h2;
        let h = Arc::new(h);
        let s = SplitSpec {
            w: 0,
            d0: 4,
            side1: vec![0],
            cut: Cut::Fixed(half()),
        };
        let l = check_split(&h, &s).unwrap();
        let out = split(&h, &s, &l).unwrap();
        assert_eq!(out.graph.rank(), 2);
        assert_eq!(out.fold.extent, Extent::Partial(half()));
        let r = validate_fold(&out.map, &out.fold).unwrap();
        assert!(r.axioms_ok && !r.strongly_proper);
        let tm = transition_matrix(&out.map);
        assert_eq!(
            tm.matrix
                .column_sums()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>(),
            ["2", "2", "1"].map(String::from)
        );
    }

    #[test]
    fn full_cut_is_strongly_proper() {
        let h = Arc::new(gamma3());
        let s = SplitSpec {
            w: 0,
            d0: 0,
            side1: vec![2, 4],
            cut: Cut::Full,
        };
        let l = check_split(&h, &s).unwrap();
        assert_eq!(l, int(1));
        let out = split(&h, &s, &l).unwrap();
        assert_eq!(out.fold.extent, Extent::Full);
        assert_eq!(out.graph.valence(out.p), 4);
        assert!(validate_fold(&out.map, &out.fold).unwrap().strongly_proper);
    }

    #[test]
    fn invalid_splits() {
        let h = theta();
        let s = SplitSpec {
            w: 0,
            d0: 0,
            side1: vec![2, 4],
            cut: Cut::Full,
        };
        assert!(check_split(&h, &s).is_err());
        let s = SplitSpec {
            w: 0,
            d0: 0,
            side1: vec![2],
            cut: Cut::Fixed(int(2)),
        };
        assert!(check_split(&h, &s).is_err());
        let s = SplitSpec {
            w: 0,
            d0: 1,
            side1: vec![2],
            cut: Cut::Full,
        };
        assert!(check_split(&h, &s).is_err());
    }
}

//! Turns, their pre-turns at deeper levels, and the decomposition of a
//! turn transversal into edge transversals.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::graph_core::{edge_of, CoreGraph, DartId, Point, VertexId};
use crate::ratio::{self, Rational};
use crate::sequence_lab::SplitSequence;

use super::fiber::preimages;
use super::{push_path, ScopeError};

/// A turn at some level: an open interval inside a natural edge, or an
/// unordered pair of distinct darts at a natural vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnSpec {
    Edge {
        level: i32,
        edge: usize,
        #[serde(with = "ratio::serde_str")]
        from: Rational,
        #[serde(with = "ratio::serde_str")]
        to: Rational,
    },
    Vertex {
        level: i32,
        vertex: VertexId,
        darts: (DartId, DartId),
    },
}

impl TurnSpec {
    pub fn level(&self) -> i32 {
        match self {
            TurnSpec::Edge { level, .. } | TurnSpec::Vertex { level, .. } => *level,
        }
    }

    pub fn validate(&self, seq: &SplitSequence) -> Result<(), ScopeError> {
        let g = seq.graph(self.level())?;
        let bad = |m: &str| Err(ScopeError::BadTurn(m.to_string()));
        match self {
            TurnSpec::Edge { edge, from, to, .. } => {
                let Some(ne) = g.natural().edges.get(*edge) else {
                    return bad("no such natural edge");
                };
                if !(Rational::zero() < *from && from < to && *to < g.path_len(&ne.darts)) {
                    return bad("interval must lie strictly inside the natural edge");
                }
            }
            TurnSpec::Vertex { vertex, darts, .. } => {
                if !g.has_vertex(*vertex) || !g.is_natural(*vertex) {
                    return bad("vertex turns sit at natural vertices");
                }
                let star = g.star(*vertex);
                if darts.0 == darts.1 || !star.contains(&darts.0) || !star.contains(&darts.1) {
                    return bad("a vertex turn needs two distinct darts at the vertex");
                }
            }
        }
        Ok(())
    }

    /// Whether `q` (a point at the turn's level) lies on the turn: inside
    /// the interval, or at the vertex or inside the first edge of either
    /// dart.
    pub fn contains(&self, g: &CoreGraph, q: &Point) -> bool {
        match self {
            TurnSpec::Edge { edge, from, to, .. } => g
                .natural_coords(q)
                .is_some_and(|(e, pos)| e == *edge && *from < pos && pos < *to),
            TurnSpec::Vertex { vertex, darts, .. } => match q {
                Point::Vertex(v) => v == vertex,
                Point::OnEdge { edge, .. } => {
                    *edge == edge_of(darts.0) || *edge == edge_of(darts.1)
                }
            },
        }
    }
}

/// A lift of a turn to a deeper level that maps homeomorphically onto it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreTurn {
    /// Lift of an edge turn: an interval of natural edge `edge`, traversed
    /// against its orientation when `reversed`.
    Arc {
        level: i32,
        edge: usize,
        #[serde(with = "ratio::serde_str")]
        from: Rational,
        #[serde(with = "ratio::serde_str")]
        to: Rational,
        reversed: bool,
    },
    /// A vertex turn taken inside natural edge `edge`, at `at`.
    Crossing {
        level: i32,
        edge: usize,
        #[serde(with = "ratio::serde_str")]
        at: Rational,
    },
    /// A vertex turn lifted to a natural vertex.
    Corner {
        level: i32,
        vertex: VertexId,
        darts: (DartId, DartId),
    },
}

impl PreTurn {
    pub fn level(&self) -> i32 {
        match self {
            PreTurn::Arc { level, .. }
            | PreTurn::Crossing { level, .. }
            | PreTurn::Corner { level, .. } => *level,
        }
    }

    /// Natural edge carrying the weight of an edge pre-turn.
    pub fn edge(&self) -> Option<usize> {
        match self {
            PreTurn::Arc { edge, .. } | PreTurn::Crossing { edge, .. } => Some(*edge),
            PreTurn::Corner { .. } => None,
        }
    }
}

/// Pre-image pieces at one level that meet the turn without covering it
/// homeomorphically; they hang together at the listed points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSet {
    pub level: i32,
    pub vertices: Vec<VertexId>,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowLevel {
    pub level: i32,
    pub pre_turns: Vec<PreTurn>,
    /// Connected components of the shadow, as indices into `pre_turns`.
    pub components: Vec<Vec<usize>>,
    pub star_sets: Vec<StarSet>,
}

/// Directed point lift: a point with an ordered pair of directions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lift {
    point: Point,
    dirs: (DartId, DartId),
}

/// One fold down: every lift of `l` through `f_{level - 1}`.
fn lift_once(seq: &SplitSequence, level: i32, l: &Lift) -> Result<Vec<Lift>, ScopeError> {
    let f = &seq.fold(level - 1)?.map;
    let mut out = Vec::new();
    for p in preimages(f, &l.point) {
        for &(c1, g1) in &p.dirs {
            if g1 != l.dirs.0 {
                continue;
            }
            for &(c2, g2) in &p.dirs {
                if c2 != c1 && g2 == l.dirs.1 {
                    out.push(Lift {
                        point: p.point.clone(),
                        dirs: (c1, c2),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn classify(g: &CoreGraph, level: i32, l: &Lift) -> PreTurn {
    match &l.point {
        Point::Vertex(v) if g.is_natural(*v) => PreTurn::Corner {
            level,
            vertex: *v,
            darts: l.dirs,
        },
        p => {
            let (edge, at) = g.natural_coords(p).expect("non-natural point");
            PreTurn::Crossing { level, edge, at }
        }
    }
}

fn start_lift(turn: &TurnSpec) -> Option<Lift> {
    match turn {
        TurnSpec::Vertex { vertex, darts, .. } => Some(Lift {
            point: Point::Vertex(*vertex),
            dirs: *darts,
        }),
        TurnSpec::Edge { .. } => None,
    }
}

fn check_depth(seq: &SplitSequence, turn: &TurnSpec, depth: usize) -> Result<(), ScopeError> {
    turn.validate(seq)?;
    if turn.level() - (depth as i32) < seq.bottom() {
        return Err(ScopeError::Depth(depth));
    }
    Ok(())
}

/// All pre-turns of `turn` at each level from its own down `depth` more.
pub fn pre_turn_shadows(
    seq: &SplitSequence,
    turn: &TurnSpec,
    depth: usize,
) -> Result<Vec<ShadowLevel>, ScopeError> {
    check_depth(seq, turn, depth)?;
    match turn {
        TurnSpec::Vertex { .. } => vertex_shadows(seq, turn, depth),
        TurnSpec::Edge {
            level,
            edge,
            from,
            to,
        } => (0..=depth)
            .map(|d| edge_shadow(seq, *level, *edge, from, to, *level - d as i32))
            .collect(),
    }
}

fn vertex_shadows(
    seq: &SplitSequence,
    turn: &TurnSpec,
    depth: usize,
) -> Result<Vec<ShadowLevel>, ScopeError> {
    let mut level = turn.level();
    let mut lifts = vec![start_lift(turn).unwrap()];
    let mut out = Vec::new();
    for d in 0..=depth {
        if d > 0 {
            let mut next = BTreeSet::new();
            for l in &lifts {
                next.extend(lift_once(seq, level, l)?);
            }
            lifts = next.into_iter().collect();
            level -= 1;
        }
        let g = seq.graph(level)?;
        let pre_turns: Vec<PreTurn> = lifts.iter().map(|l| classify(g, level, l)).collect();
        let mut by_point: BTreeMap<&Point, Vec<usize>> = BTreeMap::new();
        for (i, l) in lifts.iter().enumerate() {
            by_point.entry(&l.point).or_default().push(i);
        }
        let star_sets = by_point
            .iter()
            .filter(|(_, ix)| ix.len() > 1)
            .filter_map(|(p, ix)| match p {
                Point::Vertex(v) => Some(StarSet {
                    level,
                    vertices: vec![*v],
                    pieces: ix.len(),
                }),
                Point::OnEdge { .. } => None,
            })
            .collect();
        out.push(ShadowLevel {
            level,
            pre_turns,
            components: by_point.into_values().collect(),
            star_sets,
        });
    }
    Ok(out)
}

/// Maximal stretch of a pushed path inside one natural edge of the target,
/// moving one way.
struct Run {
    edge: usize,
    forward: bool,
    /// Interval covered, in the target edge's coordinates.
    lo: Rational,
    hi: Rational,
    /// Arc-length positions along the source path where the run starts
    /// and ends.
    s0: Rational,
    s1: Rational,
}

fn runs(g: &CoreGraph, path: &[DartId]) -> Vec<Run> {
    let nat = g.natural();
    let offsets: Vec<Vec<Rational>> = nat
        .edges
        .iter()
        .map(|ne| {
            let mut acc = Rational::zero();
            ne.darts
                .iter()
                .map(|&d| {
                    let o = acc.clone();
                    acc += g.dart_len(d);
                    o
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Run> = Vec::new();
    let mut s = Rational::zero();
    for &x in path {
        let place = nat.place(x).expect("dart in natural structure");
        let l = g.dart_len(x);
        let a = offsets[place.edge][place.index].clone();
        let b = a.clone() + l.clone();
        let s_next = s.clone() + l;
        let extend = out.last().is_some_and(|r| {
            r.edge == place.edge
                && r.forward == place.forward
                && if place.forward { r.hi == a } else { r.lo == b }
                && r.s1 == s
        });
        if extend {
            let r = out.last_mut().unwrap();
            if place.forward {
                r.hi = b;
            } else {
                r.lo = a;
            }
            r.s1 = s_next.clone();
        } else {
            out.push(Run {
                edge: place.edge,
                forward: place.forward,
                lo: a,
                hi: b,
                s0: s.clone(),
                s1: s_next.clone(),
            });
        }
        s = s_next;
    }
    out
}

fn edge_shadow(
    seq: &SplitSequence,
    top: i32,
    target: usize,
    a: &Rational,
    b: &Rational,
    level: i32,
) -> Result<ShadowLevel, ScopeError> {
    let g = seq.graph(level)?;
    let gt = seq.graph(top)?;
    let mut pre_turns = Vec::new();
    // Ends of partial pieces, joined when they share a point.
    let mut pieces: Vec<Vec<Point>> = Vec::new();
    for (m, ne) in g.natural().edges.iter().enumerate() {
        let path = push_path(seq, level, top, &ne.darts)?;
        let len = g.path_len(&ne.darts);
        for r in runs(gt, &path).into_iter().filter(|r| r.edge == target) {
            if r.hi <= *a || r.lo >= *b {
                continue;
            }
            if r.lo <= *a && *b <= r.hi {
                let (from, to) = if r.forward {
                    (r.s0.clone() + a - &r.lo, r.s0.clone() + b - &r.lo)
                } else {
                    (r.s0.clone() + &r.hi - b, r.s0.clone() + &r.hi - a)
                };
                pre_turns.push(PreTurn::Arc {
                    level,
                    edge: m,
                    from,
                    to,
                    reversed: !r.forward,
                });
                continue;
            }
            // The piece ends inside the turn at its start, its end, or both.
            let (start_in, end_in) = if r.forward {
                (r.lo > *a, r.hi < *b)
            } else {
                (r.hi < *b, r.lo > *a)
            };
            let at = |s: &Rational| -> Point {
                if s.is_zero() {
                    Point::Vertex(g.origin(ne.darts[0]))
                } else if *s == len {
                    Point::Vertex(g.terminus(*ne.darts.last().unwrap()))
                } else {
                    g.point_at_natural(m, s)
                }
            };
            let mut ends = Vec::new();
            if start_in {
                ends.push(at(&r.s0));
            }
            if end_in {
                ends.push(at(&r.s1));
            }
            pieces.push(ends);
        }
    }
    let star_sets = group_pieces(level, &pieces);
    let components = (0..pre_turns.len()).map(|i| vec![i]).collect();
    Ok(ShadowLevel {
        level,
        pre_turns,
        components,
        star_sets,
    })
}

fn group_pieces(level: i32, pieces: &[Vec<Point>]) -> Vec<StarSet> {
    // Union-find over pieces, merged through shared end points.
    let mut parent: Vec<usize> = (0..pieces.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut owner: BTreeMap<&Point, usize> = BTreeMap::new();
    for (i, ends) in pieces.iter().enumerate() {
        for e in ends {
            if let Some(&j) = owner.get(e) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            } else {
                owner.insert(e, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, (BTreeSet<VertexId>, usize)> = BTreeMap::new();
    for (i, ends) in pieces.iter().enumerate() {
        let r = find(&mut parent, i);
        let entry = groups.entry(r).or_default();
        entry.1 += 1;
        for e in ends {
            if let Point::Vertex(v) = e {
                entry.0.insert(*v);
            }
        }
    }
    groups
        .into_values()
        .map(|(vs, n)| StarSet {
            level,
            vertices: vs.into_iter().collect(),
            pieces: n,
        })
        .collect()
}

/// Maximal edge pre-turns peeled off level by level, with whatever is
/// still unresolved at the cutoff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnDecomposition {
    pub turn: TurnSpec,
    pub depth: usize,
    pub emitted: Vec<PreTurn>,
    /// Vertex pre-turns left at the deepest level.
    pub remainder: Vec<PreTurn>,
    /// `unresolved[d]`: vertex pre-turns at depth `d`.
    pub unresolved: Vec<usize>,
}

impl TurnDecomposition {
    /// A vertex pre-turn survives to the cutoff, so a pseudo-singular
    /// piece of the transversal may be hiding below it.
    pub fn pseudo_singular_candidate(&self) -> bool {
        !self.remainder.is_empty()
    }
}

pub fn decompose_turn_transversal(
    seq: &SplitSequence,
    turn: &TurnSpec,
    q: &Point,
    depth: usize,
) -> Result<TurnDecomposition, ScopeError> {
    check_depth(seq, turn, depth)?;
    let g = seq.graph(turn.level())?;
    if !turn.contains(g, q) {
        return Err(ScopeError::BadPoint(format!(
            "{q:?} is not on the turn {turn:?}"
        )));
    }
    let Some(start) = start_lift(turn) else {
        let TurnSpec::Edge {
            level,
            edge,
            from,
            to,
        } = turn.clone()
        else {
            unreachable!()
        };
        return Ok(TurnDecomposition {
            turn: turn.clone(),
            depth,
            emitted: vec![PreTurn::Arc {
                level,
                edge,
                from,
                to,
                reversed: false,
            }],
            remainder: Vec::new(),
            unresolved: vec![0; depth + 1],
        });
    };
    let mut level = turn.level();
    let mut corners = vec![start];
    let mut emitted = Vec::new();
    let mut unresolved = vec![1];
    for _ in 0..depth {
        let mut next = Vec::new();
        for l in &corners {
            for m in lift_once(seq, level, l)? {
                let g = seq.graph(level - 1)?;
                match classify(g, level - 1, &m) {
                    p @ PreTurn::Crossing { .. } => emitted.push(p),
                    _ => next.push(m),
                }
            }
        }
        level -= 1;
        unresolved.push(next.len());
        corners = next;
    }
    let g = seq.graph(level)?;
    let remainder = corners.iter().map(|l| classify(g, level, l)).collect();
    Ok(TurnDecomposition {
        turn: turn.clone(),
        depth,
        emitted,
        remainder,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::theta_cycle;
    use crate::ratio::rat;

    fn theta(depth: usize) -> SplitSequence {
        let mut s = theta_cycle().unwrap();
        s.extend_to(depth).unwrap();
        s
    }

    fn c_turn(seq: &SplitSequence, from: Rational, to: Rational) -> TurnSpec {
        let edge = seq.graph(0).unwrap().natural().index_of_label("c").unwrap();
        TurnSpec::Edge {
            level: 0,
            edge,
            from,
            to,
        }
    }

    #[test]
    fn fold_segment_of_c_has_two_pre_turns() {
        let s = theta(2);
        let sh = pre_turn_shadows(&s, &c_turn(&s, rat(1, 10), rat(1, 5)), 1).unwrap();
        assert_eq!(sh[0].pre_turns.len(), 1);
        assert_eq!(sh[1].pre_turns.len(), 2);
        let g = s.graph(-1).unwrap();
        let mut labels: Vec<String> = sh[1]
            .pre_turns
            .iter()
            .map(|p| g.natural().labels()[p.edge().unwrap()].clone())
            .collect();
        labels.sort();
        assert_eq!(labels, ["a", "b"]);
    }

    #[test]
    fn rest_of_c_lifts_to_c_alone() {
        let s = theta(2);
        let sh = pre_turn_shadows(&s, &c_turn(&s, rat(3, 5), rat(7, 10)), 1).unwrap();
        assert_eq!(sh[1].pre_turns.len(), 1);
        let g = s.graph(-1).unwrap();
        assert_eq!(
            g.natural().labels()[sh[1].pre_turns[0].edge().unwrap()],
            "c"
        );
    }

    #[test]
    fn pre_turns_are_isometric_lifts() {
        let s = theta(4);
        let sh = pre_turn_shadows(&s, &c_turn(&s, rat(1, 10), rat(1, 5)), 4).unwrap();
        for level in &sh {
            for p in &level.pre_turns {
                let PreTurn::Arc { from, to, .. } = p else {
                    panic!("edge turns lift to arcs")
                };
                assert_eq!(to.clone() - from, rat(1, 10));
            }
        }
    }

    #[test]
    fn edge_turn_decomposes_to_itself() {
        let s = theta(3);
        let i = c_turn(&s, rat(1, 10), rat(1, 5));
        let g = s.graph(0).unwrap();
        let edge = g.natural().index_of_label("c").unwrap();
        let q = g.point_at_natural(edge, &rat(3, 20));
        let d = decompose_turn_transversal(&s, &i, &q, 3).unwrap();
        assert_eq!(d.emitted.len(), 1);
        assert!(d.remainder.is_empty());
        assert!(!d.pseudo_singular_candidate());
    }

    #[test]
    fn basepoint_must_lie_on_the_turn() {
        let s = theta(2);
        let i = c_turn(&s, rat(1, 10), rat(1, 5));
        let g = s.graph(0).unwrap();
        let edge = g.natural().index_of_label("c").unwrap();
        let q = g.point_at_natural(edge, &rat(1, 2));
        assert!(matches!(
            decompose_turn_transversal(&s, &i, &q, 1),
            Err(ScopeError::BadPoint(_))
        ));
    }

    #[test]
    fn invalid_turns_are_rejected() {
        let s = theta(1);
        let bad = c_turn(&s, rat(1, 2), rat(1, 4));
        assert!(bad.validate(&s).is_err());
        let g = s.graph(0).unwrap();
        let v = *g.natural().natural_vertices.iter().next().unwrap();
        let d = g.star(v)[0];
        let same = TurnSpec::Vertex {
            level: 0,
            vertex: v,
            darts: (d, d),
        };
        assert!(same.validate(&s).is_err());
    }

    #[test]
    fn vertex_turns_leave_at_most_one_unresolved_lift() {
        let s = theta(8);
        let g = s.graph(0).unwrap();
        for &v in &g.natural().natural_vertices {
            let star = g.star(v);
            for i in 0..star.len() {
                for j in i + 1..star.len() {
                    let t = TurnSpec::Vertex {
                        level: 0,
                        vertex: v,
                        darts: (star[i], star[j]),
                    };
                    let d = decompose_turn_transversal(&s, &t, &Point::Vertex(v), 8).unwrap();
                    assert!(d.unresolved.iter().all(|&n| n <= 1), "{:?}", d.unresolved);
                }
            }
        }
    }

    #[test]
    fn turn_spec_round_trips_with_rational_strings() {
        let t = TurnSpec::Edge {
            level: -2,
            edge: 1,
            from: rat(1, 3),
            to: rat(1, 2),
        };
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"1/3\""), "{s}");
        assert_eq!(serde_json::from_str::<TurnSpec>(&s).unwrap(), t);
    }
}

//! Metric graphs stored as darts (half-edges), with the natural structure
//! (natural vertices and maximal natural edges) derived on construction.
//!
//! Edge `e` owns darts `2e` (along the stored orientation `from -> to`) and
//! `2e + 1` (backwards), so reversal is `d ^ 1` and has no fixed points.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::{self, Rational};

pub type VertexId = u32;
pub type EdgeId = u32;
pub type DartId = u32;

#[inline]
pub fn rev(d: DartId) -> DartId {
    d ^ 1
}

#[inline]
pub fn edge_of(d: DartId) -> EdgeId {
    d >> 1
}

#[inline]
pub fn dart_of(e: EdgeId, forward: bool) -> DartId {
    2 * e + u32::from(!forward)
}

#[inline]
pub fn is_forward(d: DartId) -> bool {
    d & 1 == 0
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("vertex {0} has valence below 2")]
    LowValenceVertex(VertexId),
    #[error("edge {0} has non-positive length")]
    NonPositiveLength(EdgeId),
    #[error("edge {edge} refers to unknown vertex {vertex}")]
    UnknownVertex { edge: EdgeId, vertex: VertexId },
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("graph has no edges")]
    Empty,
    #[error("path is not composable at position {0}")]
    NonComposablePath(usize),
    #[error("unknown dart {0}")]
    UnknownDart(DartId),
    #[error("bad rational {0:?}")]
    BadRational(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub len: Rational,
    pub label: Option<String>,
}

/// A maximal edge path through valence-2 points, oriented along the forward
/// dart of its smallest edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalEdge {
    pub darts: Vec<DartId>,
    pub start: VertexId,
    pub end: VertexId,
    pub len: Rational,
    pub label: Option<String>,
}

impl NaturalEdge {
    pub fn is_loop(&self) -> bool {
        self.start == self.end
    }

    pub fn min_edge(&self) -> EdgeId {
        self.darts
            .iter()
            .map(|&d| edge_of(d))
            .min()
            .expect("natural edge has darts")
    }
}

/// Where a dart sits inside the natural structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DartPlace {
    pub edge: usize,
    pub index: usize,
    /// True when the dart runs along the natural edge's orientation.
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub natural_vertices: usize,
    pub natural_edges: usize,
    pub vertex_bound: usize,
    pub edge_bound: usize,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.natural_vertices <= self.vertex_bound && self.natural_edges <= self.edge_bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalStructure {
    pub natural_vertices: BTreeSet<VertexId>,
    pub edges: Vec<NaturalEdge>,
    /// A circle with no natural vertex. The natural edge set is left empty.
    pub degenerate: bool,
    place: HashMap<DartId, DartPlace>,
}

impl NaturalStructure {
    pub fn place(&self, d: DartId) -> Option<DartPlace> {
        self.place.get(&d).copied()
    }

    /// Index of the natural edge containing dart `d` (either orientation).
    pub fn edge_index(&self, d: DartId) -> usize {
        self.place[&d].edge
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| e.label.clone().unwrap_or_else(|| format!("#{i}")))
            .collect()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| e.label.as_deref() == Some(label))
    }
}

/// Serializable vertex/edge description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
    #[serde(with = "crate::ratio::serde_str")]
    pub len: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EdgeSpec {
    pub fn new(id: EdgeId, from: VertexId, to: VertexId, len: Rational, label: &str) -> Self {
        EdgeSpec {
            id,
            from,
            to,
            len,
            label: Some(label.to_string()),
        }
    }
}

/// A point of a graph: a vertex, or a position measured from `from` along
/// an edge, strictly inside it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Vertex(VertexId),
    OnEdge { edge: EdgeId, t: Rational },
}

#[derive(Clone, PartialEq, Eq)]
pub struct CoreGraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Edge>,
    star: BTreeMap<VertexId, Vec<DartId>>,
    natural: NaturalStructure,
}

impl fmt::Debug for CoreGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoreGraph")
            .field("rank", &self.rank())
            .field("vertices", &self.vertices.len())
            .field("edges", &self.edges.len())
            .field("natural_edges", &self.natural.edges.len())
            .finish()
    }
}

/// Build and validate a core graph from a spec.
pub fn build_core_graph(spec: &GraphSpec) -> Result<CoreGraph, GraphError> {
    let mut vertices = BTreeSet::new();
    for &v in &spec.vertices {
        if !vertices.insert(v) {
            return Err(GraphError::DuplicateVertex(v));
        }
    }
    let mut edges = BTreeMap::new();
    for e in &spec.edges {
        let edge = Edge {
            from: e.from,
            to: e.to,
            len: e.len.clone(),
            label: e.label.clone(),
        };
        if edges.insert(e.id, edge).is_some() {
            return Err(GraphError::DuplicateEdge(e.id));
        }
    }
    CoreGraph::from_parts(vertices, edges)
}

pub fn natural_structure(g: &CoreGraph) -> &NaturalStructure {
    &g.natural
}

impl CoreGraph {
    pub fn from_parts(
        vertices: BTreeSet<VertexId>,
        edges: BTreeMap<EdgeId, Edge>,
    ) -> Result<CoreGraph, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut star: BTreeMap<VertexId, Vec<DartId>> =
            vertices.iter().map(|&v| (v, Vec::new())).collect();
        for (&id, e) in &edges {
            if e.len <= Rational::zero() {
                return Err(GraphError::NonPositiveLength(id));
            }
            for (v, d) in [(e.from, dart_of(id, true)), (e.to, dart_of(id, false))] {
                star.get_mut(&v)
                    .ok_or(GraphError::UnknownVertex {
                        edge: id,
                        vertex: v,
                    })?
                    .push(d);
            }
        }
        for (&v, darts) in &star {
            if darts.len() < 2 {
                return Err(GraphError::LowValenceVertex(v));
            }
        }
        let mut g = CoreGraph {
            vertices,
            edges,
            star,
            natural: NaturalStructure {
                natural_vertices: BTreeSet::new(),
                edges: Vec::new(),
                degenerate: false,
                place: HashMap::new(),
            },
        };
        if !g.connected() {
            return Err(GraphError::DisconnectedGraph);
        }
        g.natural = g.compute_natural();
        Ok(g)
    }

    fn connected(&self) -> bool {
        let Some(&first) = self.vertices.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([first]);
        let mut queue = VecDeque::from([first]);
        while let Some(v) = queue.pop_front() {
            for &d in &self.star[&v] {
                let w = self.terminus(d);
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    fn compute_natural(&self) -> NaturalStructure {
        let natural_vertices: BTreeSet<VertexId> = self
            .vertices
            .iter()
            .copied()
            .filter(|&v| self.valence(v) >= 3)
            .collect();
        if natural_vertices.is_empty() {
            return NaturalStructure {
                natural_vertices,
                edges: Vec::new(),
                degenerate: true,
                place: HashMap::new(),
            };
        }
        let mut used: BTreeSet<DartId> = BTreeSet::new();
        let mut raw = Vec::new();
        for &v in &natural_vertices {
            for &d0 in &self.star[&v] {
                if used.contains(&d0) {
                    continue;
                }
                let mut path = vec![d0];
                let mut cur = d0;
                loop {
                    let w = self.terminus(cur);
                    if natural_vertices.contains(&w) {
                        break;
                    }
                    let back = rev(cur);
                    cur = *self.star[&w]
                        .iter()
                        .find(|&&x| x != back)
                        .expect("valence two");
                    path.push(cur);
                }
                for &d in &path {
                    used.insert(d);
                    used.insert(rev(d));
                }
                raw.push(path);
            }
        }
        let mut edges: Vec<NaturalEdge> = raw
            .into_iter()
            .map(|path| {
                let min_edge = path.iter().map(|&d| edge_of(d)).min().unwrap();
                let along = path.iter().find(|&&d| edge_of(d) == min_edge).unwrap();
                let path = if is_forward(*along) {
                    path
                } else {
                    reverse_path(&path)
                };
                let len = path
                    .iter()
                    .map(|&d| self.dart_len(d))
                    .fold(Rational::zero(), |a, b| a + b);
                let labels: BTreeSet<&String> = path
                    .iter()
                    .filter_map(|&d| self.edges[&edge_of(d)].label.as_ref())
                    .collect();
                let label = if labels.len() == 1 {
                    labels.into_iter().next().cloned()
                } else {
                    None
                };
                NaturalEdge {
                    start: self.origin(path[0]),
                    end: self.terminus(*path.last().unwrap()),
                    darts: path,
                    len,
                    label,
                }
            })
            .collect();
        edges.sort_by_key(NaturalEdge::min_edge);
        let mut place = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            for (k, &d) in e.darts.iter().enumerate() {
                place.insert(
                    d,
                    DartPlace {
                        edge: i,
                        index: k,
                        forward: true,
                    },
                );
                place.insert(
                    rev(d),
                    DartPlace {
                        edge: i,
                        index: k,
                        forward: false,
                    },
                );
            }
        }
        NaturalStructure {
            natural_vertices,
            edges,
            degenerate: false,
            place,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().map(|(&id, e)| (id, e))
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[&e]
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn has_dart(&self, d: DartId) -> bool {
        self.edges.contains_key(&edge_of(d))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn darts(&self) -> impl Iterator<Item = DartId> + '_ {
        self.edges
            .keys()
            .flat_map(|&e| [dart_of(e, true), dart_of(e, false)])
    }

    pub fn max_edge_id(&self) -> EdgeId {
        *self.edges.keys().next_back().expect("nonempty")
    }

    pub fn max_vertex_id(&self) -> VertexId {
        *self.vertices.iter().next_back().expect("nonempty")
    }

    pub fn origin(&self, d: DartId) -> VertexId {
        let e = &self.edges[&edge_of(d)];
        if is_forward(d) {
            e.from
        } else {
            e.to
        }
    }

    pub fn terminus(&self, d: DartId) -> VertexId {
        self.origin(rev(d))
    }

    pub fn dart_len(&self, d: DartId) -> Rational {
        self.edges[&edge_of(d)].len.clone()
    }

    /// Darts with origin `v`, in increasing id order.
    pub fn star(&self, v: VertexId) -> &[DartId] {
        &self.star[&v]
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.star[&v].len()
    }

    pub fn is_natural(&self, v: VertexId) -> bool {
        self.natural.natural_vertices.contains(&v)
    }

    pub fn natural(&self) -> &NaturalStructure {
        &self.natural
    }

    /// Rank of the free fundamental group: `E - V + 1`.
    pub fn rank(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn bounds(&self) -> BoundReport {
        let n = self.rank();
        BoundReport {
            natural_vertices: self.natural.natural_vertices.len(),
            natural_edges: self.natural.edges.len(),
            vertex_bound: 2 * (n.saturating_sub(1)),
            edge_bound: 3 * (n.saturating_sub(1)),
        }
    }

    pub fn total_length(&self) -> Rational {
        self.edges
            .values()
            .fold(Rational::zero(), |a, e| a + e.len.clone())
    }

    pub fn path_len(&self, p: &[DartId]) -> Rational {
        p.iter()
            .fold(Rational::zero(), |a, &d| a + self.dart_len(d))
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertices.iter().copied().collect(),
            edges: self
                .edges
                .iter()
                .map(|(&id, e)| EdgeSpec {
                    id,
                    from: e.from,
                    to: e.to,
                    len: e.len.clone(),
                    label: e.label.clone(),
                })
                .collect(),
        }
    }

    pub(crate) fn parts(&self) -> (BTreeSet<VertexId>, BTreeMap<EdgeId, Edge>) {
        (self.vertices.clone(), self.edges.clone())
    }

    /// Insert a valence-2 vertex at distance `t` from `from` along edge `e`.
    /// The piece touching `from` keeps the id `e`; the other piece gets
    /// `new_edge`. Returns the new graph and the new vertex.
    pub fn subdivide(
        &self,
        e: EdgeId,
        t: &Rational,
        new_vertex: VertexId,
        new_edge: EdgeId,
    ) -> (CoreGraph, VertexId) {
        let (mut vertices, mut edges) = self.parts();
        let old = edges[&e].clone();
        assert!(
            *t > Rational::zero() && *t < old.len,
            "subdivision point must be interior"
        );
        assert!(!vertices.contains(&new_vertex) && !edges.contains_key(&new_edge));
        vertices.insert(new_vertex);
        edges.insert(
            e,
            Edge {
                from: old.from,
                to: new_vertex,
                len: t.clone(),
                label: old.label.clone(),
            },
        );
        edges.insert(
            new_edge,
            Edge {
                from: new_vertex,
                to: old.to,
                len: old.len.clone() - t.clone(),
                label: None,
            },
        );
        (
            CoreGraph::from_parts(vertices, edges).expect("subdivision keeps validity"),
            new_vertex,
        )
    }

    /// Locate the point at arc length `s` along a dart path starting at its
    /// origin. `s` must lie in `[0, len(path)]`.
    pub fn point_along(&self, path: &[DartId], s: &Rational) -> Point {
        let mut acc = Rational::zero();
        if s.is_zero() {
            return Point::Vertex(self.origin(path[0]));
        }
        for &d in path {
            let l = self.dart_len(d);
            let next = acc.clone() + l.clone();
            if *s < next {
                let off = s.clone() - acc;
                let t = if is_forward(d) { off } else { l - off };
                return Point::OnEdge {
                    edge: edge_of(d),
                    t,
                };
            }
            if *s == next {
                return Point::Vertex(self.terminus(d));
            }
            acc = next;
        }
        panic!("arc length beyond path end");
    }

    /// Natural-edge coordinates of a point strictly inside a natural edge:
    /// `(edge index, distance from its start)`. Vertices that are natural
    /// return `None`.
    pub fn natural_coords(&self, p: &Point) -> Option<(usize, Rational)> {
        let (dart, off) = match p {
            Point::OnEdge { edge, t } => (dart_of(*edge, true), t.clone()),
            Point::Vertex(v) => {
                if self.is_natural(*v) || self.natural.degenerate {
                    return None;
                }
                // A valence-2 vertex: the origin of one of its darts.
                (self.star[v][0], Rational::zero())
            }
        };
        let place = self.natural.place[&dart];
        let ne = &self.natural.edges[place.edge];
        let before = self.path_len(&ne.darts[..place.index]);
        let pos = if place.forward {
            before + off
        } else {
            // The dart runs against the natural edge: its forward partner is
            // the natural-edge dart, and `off` is measured from that dart's
            // terminus.
            let l = self.dart_len(ne.darts[place.index]);
            before + l - off
        };
        Some((place.edge, pos))
    }

    /// Inverse of [`CoreGraph::natural_coords`].
    pub fn point_at_natural(&self, edge: usize, pos: &Rational) -> Point {
        let ne = &self.natural.edges[edge];
        self.point_along(&ne.darts, pos)
    }

    /// Check a dart sequence is composable and return its reduced form.
    pub fn check_path(&self, p: &[DartId]) -> Result<(), GraphError> {
        for &d in p {
            if !self.has_dart(d) {
                return Err(GraphError::UnknownDart(d));
            }
        }
        for (i, w) in p.windows(2).enumerate() {
            if self.terminus(w[0]) != self.origin(w[1]) {
                return Err(GraphError::NonComposablePath(i + 1));
            }
        }
        Ok(())
    }
}

pub fn reverse_path(p: &[DartId]) -> Vec<DartId> {
    p.iter().rev().map(|&d| rev(d)).collect()
}

/// An ordered, composable sequence of darts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgePath(pub Vec<DartId>);

impl EdgePath {
    pub fn is_reduced(&self) -> bool {
        first_backtrack(&self.0).is_none()
    }
}

/// Position `i` such that `p[i+1]` reverses `p[i]`.
pub fn first_backtrack(p: &[DartId]) -> Option<usize> {
    p.windows(2).position(|w| w[1] == rev(w[0]))
}

/// Cancel adjacent dart/reversal pairs (stack reduction). Pure dart-level
/// operation; composability is the caller's concern.
pub fn reduce_darts(p: &[DartId]) -> Vec<DartId> {
    let mut out: Vec<DartId> = Vec::with_capacity(p.len());
    for &d in p {
        if out.last() == Some(&rev(d)) {
            out.pop();
        } else {
            out.push(d);
        }
    }
    out
}

/// Tighten a path rel endpoints.
pub fn tighten_path(g: &CoreGraph, p: &EdgePath) -> Result<EdgePath, GraphError> {
    g.check_path(&p.0)?;
    Ok(EdgePath(reduce_darts(&p.0)))
}

/// Unit-free convenience constructors used across tests and fixtures.
pub mod shapes {
    use super::*;
    use crate::ratio::int;

    /// Two vertices `0 -> 1` joined by three edges `a, b, c` (ids 0, 1, 2).
    pub fn theta() -> CoreGraph {
        build_core_graph(&GraphSpec {
            vertices: vec![0, 1],
            edges: vec![
                EdgeSpec::new(0, 0, 1, int(1), "a"),
                EdgeSpec::new(1, 0, 1, int(1), "b"),
                EdgeSpec::new(2, 0, 1, int(1), "c"),
            ],
        })
        .expect("theta is a core graph")
    }

    /// Rose with `n` unit loops at vertex 0.
    pub fn rose(n: u32) -> CoreGraph {
        let names = ["a", "b", "c", "d", "e", "f"];
        build_core_graph(&GraphSpec {
            vertices: vec![0],
            edges: (0..n)
                .map(|i| EdgeSpec::new(i, 0, 0, int(1), names[i as usize % names.len()]))
                .collect(),
        })
        .expect("rose is a core graph")
    }

    /// Rank-3 graph: `o` (0) of valence 4, `p` (1) and `q` (2) of valence 3,
    /// with `e1, e2: o -> p`, `e3, e4: o -> q`, `e5: p -> q`.
    pub fn gamma3() -> CoreGraph {
        build_core_graph(&GraphSpec {
            vertices: vec![0, 1, 2],
            edges: vec![
                EdgeSpec::new(0, 0, 1, int(1), "e1"),
                EdgeSpec::new(1, 0, 1, int(1), "e2"),
                EdgeSpec::new(2, 0, 2, int(1), "e3"),
                EdgeSpec::new(3, 0, 2, int(1), "e4"),
                EdgeSpec::new(4, 1, 2, int(1), "e5"),
            ],
        })
        .expect("gamma3 is a core graph")
    }
}

/// Parse a rational for spec-building helpers.
pub fn parse_len(s: &str) -> Result<Rational, GraphError> {
    ratio::parse(s).map_err(GraphError::BadRational)
}

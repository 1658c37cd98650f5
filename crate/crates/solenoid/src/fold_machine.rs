//! Fold moves, graph maps between core graphs, composition, backtracking
//! checks and transition matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph_core::{
    dart_of, edge_of, first_backtrack, is_forward, rev, reverse_path, CoreGraph, DartId, Edge,
    EdgeId, GraphError, Point, VertexId,
};
use crate::linalg::Matrix;
use crate::ratio::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoldError {
    #[error("fold identifies a dart with itself")]
    SelfDartFold,
    #[error("dart {dart} does not start at vertex {vertex}")]
    WrongOrigin { dart: DartId, vertex: VertexId },
    #[error("invalid fold extent: {0}")]
    InvalidExtent(String),
    #[error("fold would drop the rank")]
    RankDrop,
    #[error("fold result is not a core graph: {0}")]
    NotCore(String),
    #[error("fold axiom violated: {0}")]
    AxiomViolation(String),
    #[error("maps are not composable")]
    DomainMismatch,
    #[error("invalid graph map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extent {
    Full,
    Partial(Rational),
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extent::Full => s.serialize_str("full"),
            Extent::Partial(l) => s.serialize_str(&ratio::format(l)),
        }
    }
}

impl<'de> Deserialize<'de> for Extent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "full" {
            Ok(Extent::Full)
        } else {
            ratio::parse(&s)
                .map(Extent::Partial)
                .map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub vertex: VertexId,
    pub dart1: DartId,
    pub dart2: DartId,
    pub extent: Extent,
}

/// A cellular map: vertices to vertices, darts to nonempty dart paths.
#[derive(Clone, PartialEq, Eq)]
pub struct GraphMap {
    pub domain: Arc<CoreGraph>,
    pub codomain: Arc<CoreGraph>,
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    pub dart_map: BTreeMap<DartId, Vec<DartId>>,
}

impl std::fmt::Debug for GraphMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphMap")
            .field("vertex_map", &self.vertex_map)
            .field("dart_map", &self.dart_map)
            .finish()
    }
}

impl GraphMap {
    /// Checks continuity and reversal equivariance. Metric compatibility
    /// is checked separately by [`GraphMap::is_isometric_on_edges`].
    pub fn new(
        domain: Arc<CoreGraph>,
        codomain: Arc<CoreGraph>,
        vertex_map: BTreeMap<VertexId, VertexId>,
        dart_map: BTreeMap<DartId, Vec<DartId>>,
    ) -> Result<GraphMap, FoldError> {
        let bad = |m: String| Err(FoldError::InvalidMap(m));
        for v in domain.vertices() {
            match vertex_map.get(&v) {
                Some(w) if codomain.has_vertex(*w) => {}
                _ => return bad(format!("vertex {v} has no valid image")),
            }
        }
        for d in domain.darts() {
            let Some(p) = dart_map.get(&d) else {
                return bad(format!("dart {d} has no image"));
            };
            if p.is_empty() {
                return bad(format!("dart {d} collapses"));
            }
            codomain.check_path(p)?;
            if codomain.origin(p[0]) != vertex_map[&domain.origin(d)]
                || codomain.terminus(*p.last().unwrap()) != vertex_map[&domain.terminus(d)]
            {
                return bad(format!("image of dart {d} is not continuous"));
            }
            if dart_map.get(&rev(d)) != Some(&reverse_path(p)) {
                return bad(format!("image of dart {d} is not reversal equivariant"));
            }
        }
        Ok(GraphMap {
            domain,
            codomain,
            vertex_map,
            dart_map,
        })
    }

    pub fn identity(g: Arc<CoreGraph>) -> GraphMap {
        let vertex_map = g.vertices().map(|v| (v, v)).collect();
        let dart_map = g.darts().map(|d| (d, vec![d])).collect();
        GraphMap {
            domain: g.clone(),
            codomain: g,
            vertex_map,
            dart_map,
        }
    }

    pub fn image(&self, d: DartId) -> &[DartId] {
        &self.dart_map[&d]
    }

    pub fn image_of_path(&self, p: &[DartId]) -> Vec<DartId> {
        p.iter()
            .flat_map(|d| self.dart_map[d].iter().copied())
            .collect()
    }

    /// Concatenated image of the `k`-th natural edge of the domain.
    pub fn natural_edge_image(&self, k: usize) -> Vec<DartId> {
        self.image_of_path(&self.domain.natural().edges[k].darts)
    }

    pub fn map_point(&self, p: &Point) -> Point {
        match p {
            Point::Vertex(v) => Point::Vertex(self.vertex_map[v]),
            Point::OnEdge { edge, t } => self
                .codomain
                .point_along(&self.dart_map[&dart_of(*edge, true)], t),
        }
    }

    /// Every dart's image has the dart's length.
    pub fn is_isometric_on_edges(&self) -> bool {
        self.domain
            .darts()
            .all(|d| self.codomain.path_len(&self.dart_map[&d]) == self.domain.dart_len(d))
    }

    /// First dart of the image of `d` (the derivative on germs).
    pub fn germ(&self, d: DartId) -> DartId {
        self.dart_map[&d][0]
    }
}

/// Walk from dart `d` through valence-2 vertices until a natural vertex.
pub fn walk_natural(g: &CoreGraph, d: DartId) -> Vec<DartId> {
    let mut path = vec![d];
    let mut cur = d;
    loop {
        let w = g.terminus(cur);
        if g.is_natural(w) || path.len() > 2 * g.edge_count() {
            return path;
        }
        let back = rev(cur);
        cur = *g.star(w).iter().find(|&&x| x != back).expect("valence two");
        path.push(cur);
    }
}

struct UnionFind(BTreeMap<VertexId, VertexId>);

impl UnionFind {
    fn find(&mut self, v: VertexId) -> VertexId {
        let p = *self.0.get(&v).unwrap_or(&v);
        if p == v {
            return v;
        }
        let r = self.find(p);
        self.0.insert(v, r);
        r
    }

    /// Merge the class of `b` into the class of `a`, keeping `a`'s root.
    fn union(&mut self, a: VertexId, b: VertexId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0.insert(rb, ra);
        }
    }
}

/// Subdivide `g` at a set of interior edge points. Pieces of a split edge
/// are returned in `from -> to` order; `keeper(edge, midpoints)` picks the
/// piece that keeps the original id. Fresh ids are assigned in increasing
/// edge order, pieces in order.
pub(crate) fn subdivide_many(
    g: &CoreGraph,
    points: &BTreeSet<(EdgeId, Rational)>,
    mut keeper: impl FnMut(EdgeId, &[Rational]) -> usize,
) -> (CoreGraph, BTreeMap<EdgeId, Vec<EdgeId>>) {
    let (mut vertices, mut edges) = g.parts();
    let mut next_v = g.max_vertex_id() + 1;
    let mut next_e = g.max_edge_id() + 1;
    let mut by_edge: BTreeMap<EdgeId, Vec<Rational>> = BTreeMap::new();
    for (e, t) in points {
        by_edge.entry(*e).or_default().push(t.clone());
    }
    let mut pieces_of = BTreeMap::new();
    for (e, mut ts) in by_edge {
        ts.sort();
        ts.dedup();
        let old = edges.remove(&e).expect("edge exists");
        let mut cuts = vec![Rational::zero()];
        cuts.extend(ts);
        cuts.push(old.len.clone());
        let mids: Vec<Rational> = cuts
            .windows(2)
            .map(|w| (w[0].clone() + w[1].clone()) / ratio::int(2))
            .collect();
        let keep = keeper(e, &mids);
        let mut verts = vec![old.from];
        for _ in 1..cuts.len() - 1 {
            vertices.insert(next_v);
            verts.push(next_v);
            next_v += 1;
        }
        verts.push(old.to);
        let mut ids = Vec::new();
        for i in 0..cuts.len() - 1 {
            let id = if i == keep {
                e
            } else {
                next_e += 1;
                next_e - 1
            };
            let label = if i == keep { old.label.clone() } else { None };
            edges.insert(
                id,
                Edge {
                    from: verts[i],
                    to: verts[i + 1],
                    len: cuts[i + 1].clone() - cuts[i].clone(),
                    label,
                },
            );
            ids.push(id);
        }
        pieces_of.insert(e, ids);
    }
    let h = CoreGraph::from_parts(vertices, edges).expect("subdivision keeps validity");
    (h, pieces_of)
}

/// Image of an old dart as a path of pieces after [`subdivide_many`].
pub(crate) fn piece_path(pieces: &BTreeMap<EdgeId, Vec<EdgeId>>, d: DartId) -> Vec<DartId> {
    match pieces.get(&edge_of(d)) {
        None => vec![d],
        Some(ids) if is_forward(d) => ids.iter().map(|&e| dart_of(e, true)).collect(),
        Some(ids) => ids.iter().rev().map(|&e| dart_of(e, false)).collect(),
    }
}

/// Take the prefix of `p` of total length exactly `l`.
fn prefix_of_len(g: &CoreGraph, p: &[DartId], l: &Rational) -> Vec<DartId> {
    let mut acc = Rational::zero();
    let mut out = Vec::new();
    for &d in p {
        if acc >= *l {
            break;
        }
        acc += g.dart_len(d);
        out.push(d);
    }
    debug_assert_eq!(&acc, l);
    out
}

fn cumulative(g: &CoreGraph, p: &[DartId]) -> Vec<Rational> {
    let mut acc = Rational::zero();
    p.iter()
        .map(|&d| {
            acc += g.dart_len(d);
            acc.clone()
        })
        .collect()
}

/// Arc-length position of the point `t` on edge `e` along path `p`, if
/// `e` occurs in `p`.
fn arc_position(g: &CoreGraph, p: &[DartId], e: EdgeId, t: &Rational) -> Option<Rational> {
    let mut acc = Rational::zero();
    for &d in p {
        let l = g.dart_len(d);
        if edge_of(d) == e {
            let off = if is_forward(d) {
                t.clone()
            } else {
                l - t.clone()
            };
            return Some(acc + off);
        }
        acc += l;
    }
    None
}

/// The quotient of `g` by the fold `s`, with the quotient map.
pub fn apply_fold(g: &CoreGraph, s: &FoldSpec) -> Result<(CoreGraph, GraphMap), FoldError> {
    let v = s.vertex;
    if !g.has_vertex(v) {
        return Err(GraphError::UnknownVertex {
            edge: u32::MAX,
            vertex: v,
        }
        .into());
    }
    for d in [s.dart1, s.dart2] {
        if !g.has_dart(d) {
            return Err(GraphError::UnknownDart(d).into());
        }
        if g.origin(d) != v {
            return Err(FoldError::WrongOrigin { dart: d, vertex: v });
        }
    }
    if s.dart1 == s.dart2 {
        return Err(FoldError::SelfDartFold);
    }
    if g.valence(v) < 3 {
        return Err(FoldError::NotCore(format!(
            "folding vertex {v} has valence 2"
        )));
    }
    let p1 = walk_natural(g, s.dart1);
    let p2 = walk_natural(g, s.dart2);
    let (l1, l2) = (g.path_len(&p1), g.path_len(&p2));
    let shorter = if l1 < l2 { l1.clone() } else { l2.clone() };
    let same_loop = p2 == reverse_path(&p1);
    let l = match &s.extent {
        Extent::Full => {
            let end1 = g.terminus(*p1.last().unwrap());
            let end2 = g.terminus(*p2.last().unwrap());
            if same_loop || (l1 == l2 && end1 == end2) {
                return Err(FoldError::RankDrop);
            }
            shorter
        }
        Extent::Partial(l) => {
            if *l <= Rational::zero() || *l >= shorter {
                return Err(FoldError::InvalidExtent(format!(
                    "partial length {} must lie strictly between 0 and {}",
                    ratio::format(l),
                    ratio::format(&shorter)
                )));
            }
            if same_loop && l.clone() * ratio::int(2) >= l1 {
                return Err(FoldError::InvalidExtent(
                    "folded segments of a loop overlap".into(),
                ));
            }
            l.clone()
        }
    };

    // Common refinement of both folded segments.
    let mut arcs: BTreeSet<Rational> = BTreeSet::from([l.clone()]);
    for c in cumulative(g, &p1).into_iter().chain(cumulative(g, &p2)) {
        if c < l {
            arcs.insert(c);
        }
    }
    let mut points = BTreeSet::new();
    for a in &arcs {
        for p in [&p1, &p2] {
            if let Point::OnEdge { edge, t } = g.point_along(p, a) {
                points.insert((edge, t));
            }
        }
    }
    let (g2, pieces) = subdivide_many(g, &points, |e, mids| {
        let inside = |m: &Rational| {
            [&p1, &p2]
                .iter()
                .any(|p| arc_position(g, p, e, m).is_some_and(|a| a < l))
        };
        if let Some(i) = mids.iter().position(|m| !inside(m)) {
            return i;
        }
        let along = p1
            .iter()
            .chain(&p2)
            .find(|&&d| edge_of(d) == e)
            .copied()
            .unwrap();
        if is_forward(along) {
            0
        } else {
            mids.len() - 1
        }
    });
    let lift =
        |p: &[DartId]| -> Vec<DartId> { p.iter().flat_map(|&d| piece_path(&pieces, d)).collect() };
    let q1 = prefix_of_len(&g2, &lift(&p1), &l);
    let q2 = prefix_of_len(&g2, &lift(&p2), &l);
    if q1.len() != q2.len() {
        return Err(FoldError::AxiomViolation(
            "refinements of folded segments differ".into(),
        ));
    }

    let mut uf = UnionFind(BTreeMap::new());
    let mut ident: BTreeMap<DartId, DartId> = BTreeMap::new();
    for (&x, &y) in q1.iter().zip(&q2) {
        if g2.dart_len(x) != g2.dart_len(y) || edge_of(x) == edge_of(y) {
            return Err(FoldError::AxiomViolation("folded segments overlap".into()));
        }
        uf.union(g2.origin(x), g2.origin(y));
        uf.union(g2.terminus(x), g2.terminus(y));
        ident.insert(y, x);
        ident.insert(rev(y), rev(x));
    }
    let (verts2, edges2) = g2.parts();
    let vertices: BTreeSet<VertexId> = verts2.iter().map(|&v| uf.find(v)).collect();
    let mut edges = BTreeMap::new();
    for (id, e) in edges2 {
        if ident.contains_key(&dart_of(id, true)) {
            continue;
        }
        edges.insert(
            id,
            Edge {
                from: uf.find(e.from),
                to: uf.find(e.to),
                ..e
            },
        );
    }
    let h = CoreGraph::from_parts(vertices, edges).map_err(|e| match e {
        GraphError::LowValenceVertex(_) => FoldError::NotCore(e.to_string()),
        other => FoldError::Graph(other),
    })?;
    if h.rank() != g.rank() {
        return Err(FoldError::RankDrop);
    }
    let vertex_map = g.vertices().map(|v| (v, uf.find(v))).collect();
    let dart_map = g
        .darts()
        .map(|d| {
            let p = piece_path(&pieces, d)
                .into_iter()
                .map(|x| ident.get(&x).copied().unwrap_or(x))
                .collect();
            (d, p)
        })
        .collect();
    let h = Arc::new(h);
    let f = GraphMap::new(Arc::new(g.clone()), h.clone(), vertex_map, dart_map)?;
    Ok(((*h).clone(), f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldReport {
    pub axioms_ok: bool,
    pub strongly_proper: bool,
}

/// Check that `f` is (a subdivision of) the quotient map of the fold `s`.
pub fn validate_fold(f: &GraphMap, s: &FoldSpec) -> Result<FoldReport, FoldError> {
    let viol = |m: String| Err(FoldError::AxiomViolation(m));
    let g = &f.domain;
    let h = &f.codomain;
    if !f.is_isometric_on_edges() {
        return viol("map is not an isometry on edges".into());
    }
    let (h1, f1) = apply_fold(g, s)?;
    // phi: darts of the reference quotient -> runs of darts of h.
    let mut phi: BTreeMap<DartId, Vec<DartId>> = BTreeMap::new();
    let mut phi_v: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for d in g.darts().filter(|&d| is_forward(d)) {
        let reference = f1.image(d);
        let actual = f.image(d);
        let mut k = 0;
        for &x in reference {
            let target = h1.dart_len(x);
            let mut acc = Rational::zero();
            let mut run = Vec::new();
            while acc < target {
                let Some(&y) = actual.get(k) else {
                    return viol(format!("image of dart {d} is too short"));
                };
                acc += h.dart_len(y);
                run.push(y);
                k += 1;
            }
            if acc != target {
                return viol(format!(
                    "image of dart {d} is not a subdivision of the quotient"
                ));
            }
            for (a, b) in [
                (h1.origin(x), h.origin(run[0])),
                (h1.terminus(x), h.terminus(*run.last().unwrap())),
            ] {
                if *phi_v.entry(a).or_insert(b) != b {
                    return viol(format!("quotient vertex {a} has two images"));
                }
            }
            let back = reverse_path(&run);
            if *phi.entry(x).or_insert_with(|| run.clone()) != run
                || *phi.entry(rev(x)).or_insert(back.clone()) != back
            {
                return viol(format!("quotient dart {x} has two images"));
            }
        }
        if k != actual.len() {
            return viol(format!("image of dart {d} is too long"));
        }
    }
    for v in g.vertices() {
        if phi_v.get(&f1.vertex_map[&v]) != Some(&f.vertex_map[&v]) {
            return viol(format!("vertex {v} is not mapped as the quotient map"));
        }
    }
    let mut seen = BTreeSet::new();
    for run in phi.values() {
        for &y in run {
            if !seen.insert(y) {
                return viol(format!("dart {y} is covered twice"));
            }
        }
    }
    if seen.len() != 2 * h.edge_count() || phi.len() != 2 * h1.edge_count() {
        return viol("quotient and codomain differ".into());
    }
    let images: BTreeSet<VertexId> = phi_v.values().copied().collect();
    for w in h.vertices() {
        if !images.contains(&w) && h.valence(w) != 2 {
            return viol(format!(
                "extra codomain vertex {w} is not a subdivision point"
            ));
        }
    }
    let strongly_proper = g
        .natural()
        .natural_vertices
        .iter()
        .all(|v| h.is_natural(f.vertex_map[v]));
    Ok(FoldReport {
        axioms_ok: true,
        strongly_proper,
    })
}

/// `f ∘ g` without tightening.
pub fn compose(f: &GraphMap, g: &GraphMap) -> Result<GraphMap, FoldError> {
    if !Arc::ptr_eq(&g.codomain, &f.domain) && *g.codomain != *f.domain {
        return Err(FoldError::DomainMismatch);
    }
    let vertex_map = g
        .vertex_map
        .iter()
        .map(|(&v, w)| (v, f.vertex_map[w]))
        .collect();
    let dart_map = g
        .dart_map
        .iter()
        .map(|(&d, p)| (d, f.image_of_path(p)))
        .collect();
    Ok(GraphMap {
        domain: g.domain.clone(),
        codomain: f.codomain.clone(),
        vertex_map,
        dart_map,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BacktrackReport {
    pub ok: bool,
    /// Domain natural edge and the offending `(x, rev x)` pair.
    pub witness: Option<(usize, DartId, DartId)>,
}

pub fn check_no_backtracking(f: &GraphMap) -> BacktrackReport {
    for k in 0..f.domain.natural().edges.len() {
        let p = f.natural_edge_image(k);
        if let Some(i) = first_backtrack(&p) {
            return BacktrackReport {
                ok: false,
                witness: Some((k, p[i], p[i + 1])),
            };
        }
    }
    // A circle has no natural edges; check its single cycle directly.
    if f.domain.natural().degenerate {
        let start = f.domain.darts().next().unwrap();
        let cycle = walk_natural(&f.domain, start);
        let p = f.image_of_path(&cycle);
        if let Some(i) = first_backtrack(&p) {
            return BacktrackReport {
                ok: false,
                witness: Some((0, p[i], p[i + 1])),
            };
        }
    }
    BacktrackReport {
        ok: true,
        witness: None,
    }
}

/// Rows are codomain natural edges, columns domain natural edges, with
/// labels (or `#i` when unlabeled).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Matrix<BigInt>,
}

/// Count maximal runs of each codomain natural edge along every natural
/// edge image. A run is broken at every natural vertex of the codomain.
pub fn transition_matrix(f: &GraphMap) -> TransitionMatrix {
    let dom = f.domain.natural();
    let cod = f.codomain.natural();
    let mut m = Matrix::zeros(cod.edges.len(), dom.edges.len());
    for k in 0..dom.edges.len() {
        let p = f.natural_edge_image(k);
        for (idx, &x) in p.iter().enumerate() {
            if idx == 0 || f.codomain.is_natural(f.codomain.origin(x)) {
                let i = cod.edge_index(x);
                m[(i, k)] += BigInt::one();
            }
        }
    }
    TransitionMatrix {
        rows: cod.labels(),
        cols: dom.labels(),
        matrix: m,
    }
}

/// Dense row-major integers with labels; entries are numbers when they fit
/// in an `i64`, decimal strings otherwise.
impl Serialize for TransitionMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            rows: &'a [String],
            cols: &'a [String],
            data: Vec<Vec<serde_json::Value>>,
        }
        Out {
            rows: &self.rows,
            cols: &self.cols,
            data: int_rows_json(&self.matrix),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct In {
            rows: Vec<String>,
            cols: Vec<String>,
            data: Vec<Vec<serde_json::Value>>,
        }
        let i = In::deserialize(d)?;
        let matrix = int_rows_from_json(&i.data).map_err(serde::de::Error::custom)?;
        Ok(TransitionMatrix {
            rows: i.rows,
            cols: i.cols,
            matrix,
        })
    }
}

pub fn int_rows_json(m: &Matrix<BigInt>) -> Vec<Vec<serde_json::Value>> {
    use num_traits::ToPrimitive;
    m.to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| match x.to_i64() {
                    Some(v) => serde_json::Value::from(v),
                    None => serde_json::Value::from(x.to_string()),
                })
                .collect()
        })
        .collect()
}

pub fn int_rows_from_json(rows: &[Vec<serde_json::Value>]) -> Result<Matrix<BigInt>, String> {
    let parsed: Result<Vec<Vec<BigInt>>, String> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| match v {
                    serde_json::Value::Number(n) => n
                        .as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| format!("bad entry {n}")),
                    serde_json::Value::String(s) => s.parse().map_err(|_| format!("bad entry {s}")),
                    other => Err(format!("bad entry {other}")),
                })
                .collect()
        })
        .collect();
    let parsed = parsed?;
    if parsed
        .iter()
        .any(|r| r.len() != parsed.first().map_or(0, Vec::len))
    {
        return Err("ragged matrix".into());
    }
    Ok(Matrix::from_rows(parsed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_core::shapes::{gamma3, theta};
    use crate::ratio::half;

    fn fwd(e: EdgeId) -> DartId {
        dart_of(e, true)
    }

    fn int_rows(m: &Matrix<BigInt>) -> Vec<Vec<i64>> {
        use num_traits::ToPrimitive;
        m.to_rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect()
    }

    #[test]
    fn theta_partial_fold() {
        let g = theta();
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Partial(half()),
        };
        let (h, f) = apply_fold(&g, &s).unwrap();
        assert_eq!(h.rank(), 2);
        assert_eq!(h.natural().natural_vertices.len(), 2);
        assert_eq!(h.valence(0), 2);
        assert_eq!(h.natural().labels(), vec!["a", "b", "c"]);
        let tm = transition_matrix(&f);
        assert_eq!(
            int_rows(&tm.matrix),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 1]]
        );
        let r = validate_fold(&f, &s).unwrap();
        assert!(r.axioms_ok && !r.strongly_proper);
        assert!(check_no_backtracking(&f).ok);
    }

    #[test]
    fn theta_full_fold_drops_rank() {
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Full,
        };
        assert_eq!(apply_fold(&theta(), &s).unwrap_err(), FoldError::RankDrop);
    }

    #[test]
    fn gamma3_full_fold() {
        let g = gamma3();
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(2),
            extent: Extent::Full,
        };
        let (h, f) = apply_fold(&g, &s).unwrap();
        assert_eq!(h.rank(), 3);
        assert_eq!(h.vertex_count(), 2);
        let vals: BTreeSet<usize> = h.vertices().map(|v| h.valence(v)).collect();
        assert_eq!(vals, BTreeSet::from([3, 5]));
        let tm = transition_matrix(&f);
        assert_eq!(tm.rows, vec!["e1", "e2", "e4", "e5"]);
        assert_eq!(
            int_rows(&tm.matrix),
            vec![
                vec![1, 0, 1, 0, 0],
                vec![0, 1, 0, 0, 0],
                vec![0, 0, 0, 1, 0],
                vec![0, 0, 0, 0, 1]
            ]
        );
        assert!(validate_fold(&f, &s).unwrap().strongly_proper);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let g = theta();
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(0),
            extent: Extent::Full,
        };
        assert_eq!(apply_fold(&g, &s).unwrap_err(), FoldError::SelfDartFold);
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Partial(ratio::int(1)),
        };
        assert!(matches!(
            apply_fold(&g, &s),
            Err(FoldError::InvalidExtent(_))
        ));
        let s = FoldSpec {
            vertex: 1,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Full,
        };
        assert!(matches!(
            apply_fold(&g, &s),
            Err(FoldError::WrongOrigin { .. })
        ));
    }

    #[test]
    fn hand_built_backtracking_map() {
        let g = Arc::new(theta());
        let mut f = GraphMap::identity(g.clone());
        let (a, b) = (fwd(0), fwd(1));
        f.dart_map.insert(a, vec![b, rev(b), a]);
        f.dart_map.insert(rev(a), vec![rev(a), b, rev(b)]);
        let f = GraphMap::new(g.clone(), g, f.vertex_map, f.dart_map).unwrap();
        assert!(!f.is_isometric_on_edges());
        let r = check_no_backtracking(&f);
        assert!(!r.ok);
        assert_eq!(r.witness, Some((0, b, rev(b))));
    }

    #[test]
    fn compose_with_identity() {
        let g = theta();
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Partial(half()),
        };
        let (_, f) = apply_fold(&g, &s).unwrap();
        let id = GraphMap::identity(f.codomain.clone());
        assert_eq!(compose(&id, &f).unwrap(), f);
        assert_eq!(compose(&f, &f).unwrap_err(), FoldError::DomainMismatch);
    }

    #[test]
    fn loop_partial_fold_on_a_rose() {
        let g = crate::graph_core::shapes::rose(2);
        // Fold both ends of loop a: needs 2L < 1.
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: rev(fwd(0)),
            extent: Extent::Partial(ratio::rat(1, 4)),
        };
        let (h, f) = apply_fold(&g, &s).unwrap();
        assert_eq!(h.rank(), 2);
        assert!(validate_fold(&f, &s).unwrap().axioms_ok);
        let s = FoldSpec {
            vertex: 0,
            dart1: fwd(0),
            dart2: fwd(1),
            extent: Extent::Partial(ratio::rat(1, 3)),
        };
        let (h, f) = apply_fold(&g, &s).unwrap();
        assert_eq!(h.rank(), 2);
        assert!(validate_fold(&f, &s).unwrap().axioms_ok);
    }

    #[test]
    fn serialization_round_trip() {
        let s = FoldSpec {
            vertex: 3,
            dart1: 4,
            dart2: 7,
            extent: Extent::Partial(half()),
        };
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"1/2\""));
        assert_eq!(serde_json::from_str::<FoldSpec>(&j).unwrap(), s);
        let tm = TransitionMatrix {
            rows: vec!["A".into()],
            cols: vec!["a".into(), "b".into()],
            matrix: Matrix::from_i64_rows(&[&[1, 2]]),
        };
        let j = serde_json::to_string(&tm).unwrap();
        assert_eq!(serde_json::from_str::<TransitionMatrix>(&j).unwrap(), tm);
    }
}

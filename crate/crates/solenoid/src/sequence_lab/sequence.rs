//! The split sequence itself: level graphs, folds between them, window
//! matrices and the subdivision cascade that keeps every map cellular.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::fold_machine::{
    compose, transition_matrix, validate_fold, walk_natural, FoldSpec, GraphMap, TransitionMatrix,
};
use crate::graph_core::{
    dart_of, edge_of, is_forward, rev, CoreGraph, DartId, EdgeId, Point, VertexId,
};
use crate::linalg::Matrix;
use crate::ratio::Rational;

use super::chart::{canonical_renumbering, oriented_natural_path, Chart, Template};
use super::generator::{EdgeRule, Generator, SplitStep, VertexRule};
use super::split::{check_split, split, SplitOutcome, SplitSpec};
use super::SequenceError;

/// The fold out of a level, `f_j: G_j -> G_{j+1}`.
#[derive(Debug, Clone)]
pub struct LevelFold {
    pub spec: FoldSpec,
    pub map: GraphMap,
    pub matrix: TransitionMatrix,
    pub strongly_proper: bool,
    /// False when the composite to the top backtracks at the new level.
    pub no_backtracking: bool,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub graph: Arc<CoreGraph>,
    pub fold: Option<LevelFold>,
    pub chart: Option<Chart>,
    pub template: Option<Template>,
}

/// `window(i, j)` for levels `i <= j <= 0`.
#[derive(Debug, Clone)]
pub struct WindowMatrix {
    pub i: i32,
    pub j: i32,
    pub matrix: Arc<Matrix<BigInt>>,
    pub positive: bool,
}

/// A finite prefix `G_0 <- G_{-1} <- ... <- G_{-N}`. Levels are addressed
/// by nonpositive integers; internally `levels[k]` holds `G_{-k}`.
pub struct SplitSequence {
    rank: usize,
    levels: Vec<Level>,
    generator: Option<Generator>,
    windows: Mutex<HashMap<(usize, usize), Arc<Matrix<BigInt>>>>,
}

impl Clone for SplitSequence {
    fn clone(&self) -> Self {
        SplitSequence {
            rank: self.rank,
            levels: self.levels.clone(),
            generator: self.generator.clone(),
            windows: Mutex::new(self.windows.lock().unwrap().clone()),
        }
    }
}

impl std::fmt::Debug for SplitSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitSequence")
            .field("rank", &self.rank)
            .field("depth", &self.depth())
            .field("generator", &self.generator.as_ref().map(Generator::kind))
            .finish()
    }
}

fn idx(level: i32) -> usize {
    (-level) as usize
}

impl SplitSequence {
    /// A sequence consisting of `G_0` only. With a template, `G_0` is
    /// renumbered canonically and charted.
    pub fn new(
        g0: CoreGraph,
        generator: Option<Generator>,
        template: Option<Template>,
    ) -> Result<SplitSequence, SequenceError> {
        let (graph, chart) = match &template {
            Some(t) => {
                let chart = Chart::trivial(&g0);
                chart.validate(&g0, t).map_err(SequenceError::Chart)?;
                let (g, c, _) = canonical_renumbering(&g0, &chart, t);
                (g, Some(c))
            }
            None => (g0, None),
        };
        if !graph.bounds().ok() {
            return Err(SequenceError::BoundViolation { level: 0 });
        }
        Ok(SplitSequence {
            rank: graph.rank(),
            levels: vec![Level {
                graph: Arc::new(graph),
                fold: None,
                chart,
                template,
            }],
            generator,
            windows: Mutex::new(HashMap::new()),
        })
    }

    /// Assemble a sequence from stored levels (used when loading files).
    pub fn from_levels(
        levels: Vec<Level>,
        generator: Option<Generator>,
    ) -> Result<SplitSequence, SequenceError> {
        let rank = levels
            .first()
            .ok_or(SequenceError::LevelOutOfRange { level: 0 })?
            .graph
            .rank();
        for (k, l) in levels.iter().enumerate() {
            let level = -(k as i32);
            if l.graph.rank() != rank {
                return Err(SequenceError::RankMismatch { level });
            }
            if !l.graph.bounds().ok() {
                return Err(SequenceError::BoundViolation { level });
            }
            if let (Some(c), Some(t)) = (&l.chart, &l.template) {
                c.validate(&l.graph, t).map_err(SequenceError::Chart)?;
            }
            match (&l.fold, k) {
                (None, 0) => {}
                (Some(f), k) if k > 0 => {
                    if *f.map.codomain != *levels[k - 1].graph || *f.map.domain != *l.graph {
                        return Err(SequenceError::InvalidSplit(format!(
                            "fold at level {level} does not connect levels"
                        )));
                    }
                    validate_fold(&f.map, &f.spec)?;
                }
                _ => {
                    return Err(SequenceError::InvalidSplit(format!(
                        "level {level} has a misplaced fold"
                    )))
                }
            }
        }
        Ok(SplitSequence {
            rank,
            levels,
            generator,
            windows: Mutex::new(HashMap::new()),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of folds in the prefix.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn bottom(&self) -> i32 {
        -(self.depth() as i32)
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// Template of `G_0`.
    pub fn template(&self) -> Option<&Template> {
        self.levels[0].template.as_ref()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    fn check_level(&self, level: i32) -> Result<usize, SequenceError> {
        if level > 0 || idx(level) > self.depth() {
            return Err(SequenceError::LevelOutOfRange {
                level: level as i64,
            });
        }
        Ok(idx(level))
    }

    pub fn level(&self, level: i32) -> Result<&Level, SequenceError> {
        Ok(&self.levels[self.check_level(level)?])
    }

    pub fn graph(&self, level: i32) -> Result<&Arc<CoreGraph>, SequenceError> {
        Ok(&self.level(level)?.graph)
    }

    /// The fold `f_level: G_level -> G_{level+1}`, for `level <= -1`.
    pub fn fold(&self, level: i32) -> Result<&LevelFold, SequenceError> {
        self.level(level)?
            .fold
            .as_ref()
            .ok_or(SequenceError::LevelOutOfRange {
                level: level as i64,
            })
    }

    pub fn edge_count(&self, level: i32) -> usize {
        self.levels[idx(level)].graph.natural().edges.len()
    }

    pub fn labels(&self, level: i32) -> Vec<String> {
        self.levels[idx(level)].graph.natural().labels()
    }

    /// Product `M(f_{j-1}) ... M(f_i)`, cached.
    pub fn window(&self, i: i32, j: i32) -> Result<WindowMatrix, SequenceError> {
        if i > j {
            return Err(SequenceError::LevelOutOfRange { level: i as i64 });
        }
        let (ki, kj) = (self.check_level(i)?, self.check_level(j)?);
        let m = self.window_idx(ki, kj);
        let positive = m.is_positive();
        Ok(WindowMatrix {
            i,
            j,
            matrix: m,
            positive,
        })
    }

    fn window_idx(&self, ki: usize, kj: usize) -> Arc<Matrix<BigInt>> {
        if let Some(m) = self.windows.lock().unwrap().get(&(ki, kj)) {
            return m.clone();
        }
        // Build from the nearest cached shorter window.
        let mut start = kj;
        let mut acc = Arc::new(Matrix::identity(
            self.levels[kj].graph.natural().edges.len(),
        ));
        {
            let cache = self.windows.lock().unwrap();
            for k in (kj + 1..ki).rev() {
                if let Some(m) = cache.get(&(k, kj)) {
                    start = k;
                    acc = m.clone();
                    break;
                }
            }
        }
        let mut fresh = Vec::new();
        for k in start + 1..=ki {
            let f = self.levels[k]
                .fold
                .as_ref()
                .expect("deeper levels have folds");
            acc = Arc::new(&*acc * &f.matrix.matrix);
            fresh.push(((k, kj), acc.clone()));
        }
        let mut cache = self.windows.lock().unwrap();
        cache.insert(
            (kj, kj),
            Arc::new(Matrix::identity(
                self.levels[kj].graph.natural().edges.len(),
            )),
        );
        for (key, m) in fresh {
            cache.insert(key, m);
        }
        acc
    }

    /// Number of times the image of natural edge `ek` of level `k` crosses
    /// natural edge `ej` of level `j`.
    pub fn mingling_number(
        &self,
        k: i32,
        ek: usize,
        j: i32,
        ej: usize,
    ) -> Result<BigInt, SequenceError> {
        if k >= j {
            return Err(SequenceError::LevelOutOfRange { level: k as i64 });
        }
        let w = self.window(k, j)?;
        Ok(w.matrix[(ej, ek)].clone())
    }

    /// The composite `f^i_j: G_i -> G_j` as an explicit map. Image paths
    /// grow exponentially, so this is for shallow windows.
    pub fn composite(&self, i: i32, j: i32) -> Result<GraphMap, SequenceError> {
        let (ki, kj) = (self.check_level(i)?, self.check_level(j)?);
        if ki < kj {
            return Err(SequenceError::LevelOutOfRange { level: i as i64 });
        }
        let mut acc = GraphMap::identity(self.levels[kj].graph.clone());
        for k in kj + 1..=ki {
            let f = &self.levels[k].fold.as_ref().unwrap().map;
            acc = compose(&acc, f)?;
        }
        Ok(acc)
    }

    /// First dart of the image of `d` (a dart of `G_level`) in `G_0`.
    pub fn germ_to_top(&self, level: i32, d: DartId) -> DartId {
        let mut x = d;
        for k in (1..=idx(level)).rev() {
            x = self.levels[k].fold.as_ref().unwrap().map.germ(x);
        }
        x
    }

    /// Image of a point of `G_from` in `G_to` (`from <= to`).
    pub fn push_point(&self, from: i32, to: i32, p: &Point) -> Point {
        let mut q = p.clone();
        for k in (idx(to) + 1..=idx(from)).rev() {
            q = self.levels[k].fold.as_ref().unwrap().map.map_point(&q);
        }
        q
    }

    /// Image of a vertex of `G_from` in `G_to`.
    pub fn push_vertex(&self, from: i32, to: i32, v: VertexId) -> VertexId {
        let mut x = v;
        for k in (idx(to) + 1..=idx(from)).rev() {
            x = self.levels[k].fold.as_ref().unwrap().map.vertex_map[&x];
        }
        x
    }

    /// `extend_sequence`: a new snapshot with `d` more levels.
    pub fn extended(&self, d: usize) -> Result<SplitSequence, SequenceError> {
        let mut s = self.clone();
        s.extend(d)?;
        Ok(s)
    }

    /// Extend to at least `depth` levels.
    pub fn extend_to(&mut self, depth: usize) -> Result<(), SequenceError> {
        if depth > self.depth() {
            self.extend(depth - self.depth())?;
        }
        Ok(())
    }

    pub fn extend(&mut self, d: usize) -> Result<(), SequenceError> {
        for _ in 0..d {
            self.push_level()?;
        }
        Ok(())
    }

    fn push_level(&mut self) -> Result<(), SequenceError> {
        let n = self.depth();
        let generator = self.generator.clone().ok_or(SequenceError::NoGenerator)?;
        let plan = {
            let h = &self.levels[n].graph;
            let chart = match (&self.levels[n].chart, &self.levels[n].template) {
                (Some(c), Some(t)) => Some((c, t)),
                _ => None,
            };
            let level = -(n as i32);
            let germ = |d: DartId| self.germ_to_top(level, d);
            let plan = generator.plan(n, h, chart, &germ)?;
            let clean = super::generator::germs_ok(h, &plan.spec, &germ);
            (plan, clean)
        };
        let (plan, no_backtracking) = plan;
        let mut spec = plan.spec;
        let l = check_split(&self.levels[n].graph, &spec)?;
        let h = self.levels[n].graph.clone();
        let n0 = walk_natural(&h, spec.d0);
        if let pt @ Point::OnEdge { .. } = h.point_along(&n0, &l) {
            let (_, sub) = self.ensure_vertex(n, &pt);
            if let Some((e, ne)) = sub {
                let remap = |d: DartId| {
                    if edge_of(d) == e && !is_forward(d) {
                        dart_of(ne, false)
                    } else {
                        d
                    }
                };
                spec = SplitSpec {
                    w: spec.w,
                    d0: remap(spec.d0),
                    side1: spec.side1.iter().map(|&d| remap(d)).collect(),
                    cut: spec.cut,
                };
            }
        }
        let h = self.levels[n].graph.clone();
        let out = split(&h, &spec, &l)?;
        let level = -(n as i32) - 1;
        let (graph, map, fold_spec, chart, template) = match (&plan.step, &self.levels[n].template)
        {
            (Some(step), Some(t_old)) => {
                let t = step.template.as_ref().unwrap_or(t_old);
                let hc = self.levels[n].chart.as_ref().expect("charted sequence");
                let chart = chart_after_split(&out, step, hc, t_old, t, &h)
                    .map_err(|m| SequenceError::Chart(format!("level {level}: {m}")))?;
                chart
                    .validate(&out.graph, t)
                    .map_err(|m| SequenceError::Chart(format!("level {level}: {m}")))?;
                let (g, c, ren) = canonical_renumbering(&out.graph, &chart, t);
                let g = Arc::new(g);
                let map = ren.domain_of(&out.map, g.clone());
                (g, map, ren.fold_spec(&out.fold), Some(c), Some(t.clone()))
            }
            _ => (
                Arc::new(out.graph.clone()),
                out.map.clone(),
                out.fold.clone(),
                None,
                None,
            ),
        };
        let report = validate_fold(&map, &fold_spec)?;
        if graph.rank() != self.rank {
            return Err(SequenceError::RankMismatch { level });
        }
        if !graph.bounds().ok() {
            return Err(SequenceError::BoundViolation { level });
        }
        let matrix = transition_matrix(&map);
        self.levels.push(Level {
            graph,
            fold: Some(LevelFold {
                spec: fold_spec,
                map,
                matrix,
                strongly_proper: report.strongly_proper,
                no_backtracking,
            }),
            chart,
            template,
        });
        Ok(())
    }

    /// Make `p` a vertex of `G_{-k}`, subdividing and propagating through
    /// the maps on both sides. Returns the vertex and, when an edge `e` was
    /// split, `(e, new edge)`.
    pub(crate) fn ensure_vertex(
        &mut self,
        k: usize,
        p: &Point,
    ) -> (VertexId, Option<(EdgeId, EdgeId)>) {
        let (e, t) = match p {
            Point::Vertex(v) => return (*v, None),
            Point::OnEdge { edge, t } => (*edge, t.clone()),
        };
        let g = self.levels[k].graph.clone();
        let nv = g.max_vertex_id() + 1;
        let ne = g.max_edge_id() + 1;
        let (g2, _) = g.subdivide(e, &t, nv, ne);
        let g2 = Arc::new(g2);

        // Outgoing map: split the image path of e at arc length t.
        if k >= 1 {
            let (path, cut) = loop {
                let f = &self.levels[k].fold.as_ref().unwrap().map;
                let path = f.dart_map[&dart_of(e, true)].clone();
                let cod = f.codomain.clone();
                let mut acc = Rational::zero();
                let mut found = None;
                let mut inner = None;
                for (i, &x) in path.iter().enumerate() {
                    if acc == t {
                        found = Some(i);
                        break;
                    }
                    let l = cod.dart_len(x);
                    if t < acc.clone() + l.clone() {
                        let off = t.clone() - acc.clone();
                        let tt = if is_forward(x) { off } else { l - off };
                        inner = Some(Point::OnEdge {
                            edge: edge_of(x),
                            t: tt,
                        });
                        break;
                    }
                    acc += l;
                }
                match (found, inner) {
                    (Some(i), _) => break (path, i),
                    (None, Some(q)) => {
                        self.ensure_vertex(k - 1, &q);
                    }
                    _ => unreachable!("point lies inside the edge"),
                }
            };
            let lf = self.levels[k].fold.as_mut().unwrap();
            let f = &mut lf.map;
            let head = path[..cut].to_vec();
            let tail = path[cut..].to_vec();
            let y = f.codomain.origin(tail[0]);
            f.dart_map.insert(dart_of(e, true), head.clone());
            f.dart_map
                .insert(dart_of(e, false), crate::graph_core::reverse_path(&head));
            f.dart_map.insert(dart_of(ne, true), tail.clone());
            f.dart_map
                .insert(dart_of(ne, false), crate::graph_core::reverse_path(&tail));
            f.vertex_map.insert(nv, y);
            f.domain = g2.clone();
            for d in [&mut lf.spec.dart1, &mut lf.spec.dart2] {
                if *d == dart_of(e, false) {
                    *d = dart_of(ne, false);
                }
            }
        }
        // Incoming map: refine codomain paths.
        if k + 1 < self.levels.len() {
            let f = &mut self.levels[k + 1].fold.as_mut().unwrap().map;
            let (ef, eb) = (dart_of(e, true), dart_of(e, false));
            for path in f.dart_map.values_mut() {
                if path.iter().any(|&x| edge_of(x) == e) {
                    let mut out = Vec::with_capacity(path.len() + 1);
                    for &x in path.iter() {
                        if x == ef {
                            out.extend([ef, dart_of(ne, true)]);
                        } else if x == eb {
                            out.extend([dart_of(ne, false), eb]);
                        } else {
                            out.push(x);
                        }
                    }
                    *path = out;
                }
            }
            f.codomain = g2.clone();
        }
        if let Some(c) = self.levels[k].chart.as_mut() {
            for d in c.darts.iter_mut() {
                if *d == dart_of(e, false) {
                    *d = dart_of(ne, false);
                }
            }
        }
        self.levels[k].graph = g2;
        (nv, Some((e, ne)))
    }
}

/// Chart of the split graph from a step's relabeling rules.
fn chart_after_split(
    out: &SplitOutcome,
    step: &SplitStep,
    hc: &Chart,
    t_old: &Template,
    t: &Template,
    h: &CoreGraph,
) -> Result<Chart, String> {
    let g = &out.graph;
    let mut vertices = Vec::new();
    for name in &t.vertices {
        let rule = step
            .vertices
            .get(name)
            .ok_or_else(|| format!("no rule for vertex {name}"))?;
        vertices.push(match rule {
            VertexRule::Old(old) => {
                hc.vertices[t_old
                    .vertex_index(old)
                    .ok_or_else(|| format!("unknown vertex {old}"))?]
            }
            VertexRule::Fold => out.p,
            VertexRule::Side1 => out.w1,
            VertexRule::Side2 => out.w2,
        });
    }
    let removed: std::collections::BTreeSet<EdgeId> =
        out.segment.iter().map(|&d| edge_of(d)).collect();
    let mut darts = Vec::new();
    for te in &t.edges {
        let rule = step
            .edges
            .get(&te.label)
            .ok_or_else(|| format!("no rule for edge {}", te.label))?;
        let (x, flip) = match rule {
            EdgeRule::Old { label, flip } => {
                let i = t_old
                    .edge_index(label)
                    .ok_or_else(|| format!("unknown edge {label}"))?;
                let kept = hc
                    .path(h, i)
                    .into_iter()
                    .find(|d| !removed.contains(&edge_of(*d)))
                    .ok_or_else(|| format!("edge {label} is consumed by the split"))?;
                (kept, *flip)
            }
            EdgeRule::Copy1 { flip } => (out.fold.dart1, *flip),
            EdgeRule::Copy2 { flip } => (out.fold.dart2, *flip),
        };
        let path = oriented_natural_path(g, x);
        darts.push(if flip {
            rev(*path.last().unwrap())
        } else {
            path[0]
        });
    }
    Ok(Chart { vertices, darts })
}

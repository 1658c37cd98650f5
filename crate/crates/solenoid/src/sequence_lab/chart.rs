//! Charts identify each level graph with a fixed template graph, so that
//! natural edges carry stable labels and matrices can be compared across
//! levels.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fold_machine::{FoldSpec, GraphMap};
use crate::graph_core::{
    dart_of, is_forward, rev, reverse_path, CoreGraph, DartId, Edge, EdgeId, VertexId,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateEdge {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Natural vertices (by name) and oriented natural edges (by label).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub vertices: Vec<String>,
    pub edges: Vec<TemplateEdge>,
}

impl Template {
    /// Template read off a graph: natural vertices in id order, named by
    /// `names`, and natural edges with their labels and orientations.
    pub fn of_graph(g: &CoreGraph, names: &[&str]) -> Template {
        let verts: Vec<VertexId> = g.natural().natural_vertices.iter().copied().collect();
        assert_eq!(verts.len(), names.len(), "one name per natural vertex");
        let index = |v: VertexId| verts.iter().position(|&x| x == v).unwrap();
        let labels = g.natural().labels();
        Template {
            vertices: names.iter().map(|s| s.to_string()).collect(),
            edges: g
                .natural()
                .edges
                .iter()
                .zip(labels)
                .map(|(e, label)| TemplateEdge {
                    label,
                    start: index(e.start),
                    end: index(e.end),
                })
                .collect(),
        }
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, label: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.label.clone()).collect()
    }
}

/// Template vertex `i` sits at `vertices[i]`; template edge `i` is the
/// natural edge starting with `darts[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub vertices: Vec<VertexId>,
    pub darts: Vec<DartId>,
}

/// The whole natural edge containing `d`, traversed in the direction of `d`.
pub fn oriented_natural_path(g: &CoreGraph, d: DartId) -> Vec<DartId> {
    let place = g
        .natural()
        .place(d)
        .expect("dart belongs to a natural edge");
    let ne = &g.natural().edges[place.edge];
    if place.forward {
        ne.darts.clone()
    } else {
        reverse_path(&ne.darts)
    }
}

impl Chart {
    /// The chart of a graph whose natural structure is the template itself.
    pub fn trivial(g: &CoreGraph) -> Chart {
        Chart {
            vertices: g.natural().natural_vertices.iter().copied().collect(),
            darts: g.natural().edges.iter().map(|e| e.darts[0]).collect(),
        }
    }

    pub fn path(&self, g: &CoreGraph, i: usize) -> Vec<DartId> {
        oriented_natural_path(g, self.darts[i])
    }

    /// Resolve `"c+"` (along the template orientation) or `"c-"` to the dart
    /// that starts that oriented natural edge.
    pub fn dart(&self, g: &CoreGraph, t: &Template, spec: &str) -> Result<DartId, String> {
        let (label, sign) = spec.split_at(spec.len().saturating_sub(1));
        let i = t
            .edge_index(label)
            .ok_or_else(|| format!("unknown edge label {label:?}"))?;
        let path = self.path(g, i);
        match sign {
            "+" => Ok(path[0]),
            "-" => Ok(rev(*path.last().unwrap())),
            _ => Err(format!("direction {spec:?} must end in + or -")),
        }
    }

    pub fn validate(&self, g: &CoreGraph, t: &Template) -> Result<(), String> {
        let ns = g.natural();
        if self.vertices.len() != t.vertices.len() || self.darts.len() != t.edges.len() {
            return Err("chart and template sizes differ".into());
        }
        let vs: BTreeSet<VertexId> = self.vertices.iter().copied().collect();
        if vs != ns.natural_vertices {
            return Err("chart vertices are not the natural vertices".into());
        }
        if ns.edges.len() != t.edges.len() {
            return Err("natural edge count differs from the template".into());
        }
        let mut used = BTreeSet::new();
        for (i, te) in t.edges.iter().enumerate() {
            let d = self.darts[i];
            if !g.has_dart(d) {
                return Err(format!("chart dart {d} is missing"));
            }
            let path = self.path(g, i);
            if path[0] != d {
                return Err(format!(
                    "chart dart for {} does not start its natural edge",
                    te.label
                ));
            }
            if g.origin(d) != self.vertices[te.start]
                || g.terminus(*path.last().unwrap()) != self.vertices[te.end]
            {
                return Err(format!("edge {} has the wrong endpoints", te.label));
            }
            if !used.insert(ns.edge_index(d)) {
                return Err(format!("edge {} is charted twice", te.label));
            }
        }
        Ok(())
    }
}

/// Vertex and dart renaming produced by [`canonical_renumbering`].
#[derive(Debug, Clone, Default)]
pub struct Renaming {
    pub vertices: BTreeMap<VertexId, VertexId>,
    pub darts: BTreeMap<DartId, DartId>,
}

impl Renaming {
    pub fn dart(&self, d: DartId) -> DartId {
        self.darts[&d]
    }

    pub fn vertex(&self, v: VertexId) -> VertexId {
        self.vertices[&v]
    }

    pub fn fold_spec(&self, s: &FoldSpec) -> FoldSpec {
        FoldSpec {
            vertex: self.vertex(s.vertex),
            dart1: self.dart(s.dart1),
            dart2: self.dart(s.dart2),
            extent: s.extent.clone(),
        }
    }

    /// Rename the domain side of `f`.
    pub fn domain_of(&self, f: &GraphMap, domain: Arc<CoreGraph>) -> GraphMap {
        GraphMap {
            domain,
            codomain: f.codomain.clone(),
            vertex_map: f
                .vertex_map
                .iter()
                .map(|(&v, &w)| (self.vertex(v), w))
                .collect(),
            dart_map: f
                .dart_map
                .iter()
                .map(|(&d, p)| (self.dart(d), p.clone()))
                .collect(),
        }
    }
}

/// Renumber `g` so that template vertices get ids `0..V`, and walking the
/// natural edges in template order assigns consecutive edge ids oriented
/// along the walk. Each natural edge's first edge carries its label.
pub fn canonical_renumbering(
    g: &CoreGraph,
    chart: &Chart,
    t: &Template,
) -> (CoreGraph, Chart, Renaming) {
    let mut ren = Renaming::default();
    for (i, &v) in chart.vertices.iter().enumerate() {
        ren.vertices.insert(v, i as VertexId);
    }
    let mut next_v = chart.vertices.len() as VertexId;
    let mut next_e: EdgeId = 0;
    let mut firsts = Vec::new();
    let mut labels = BTreeMap::new();
    for i in 0..t.edges.len() {
        let path = chart.path(g, i);
        for (k, &x) in path.iter().enumerate() {
            for v in [g.origin(x), g.terminus(x)] {
                ren.vertices.entry(v).or_insert_with(|| {
                    next_v += 1;
                    next_v - 1
                });
            }
            ren.darts.insert(x, dart_of(next_e, true));
            ren.darts.insert(rev(x), dart_of(next_e, false));
            if k == 0 {
                firsts.push(dart_of(next_e, true));
                labels.insert(next_e, t.edges[i].label.clone());
            }
            next_e += 1;
        }
    }
    let vertices = g.vertices().map(|v| ren.vertex(v)).collect();
    let edges = g
        .edges()
        .map(|(id, e)| {
            let nd = ren.dart(dart_of(id, true));
            let ne = nd >> 1;
            let (from, to) = if is_forward(nd) {
                (e.from, e.to)
            } else {
                (e.to, e.from)
            };
            let edge = Edge {
                from: ren.vertex(from),
                to: ren.vertex(to),
                len: e.len.clone(),
                label: labels.get(&ne).cloned(),
            };
            (ne, edge)
        })
        .collect();
    let h = CoreGraph::from_parts(vertices, edges).expect("renumbering keeps validity");
    let chart = Chart {
        vertices: (0..chart.vertices.len() as VertexId).collect(),
        darts: firsts,
    };
    (h, chart, ren)
}

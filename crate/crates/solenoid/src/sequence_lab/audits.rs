//! Finite-depth audits of the standing hypotheses on split sequences.
//!
//! Every property here quantifies over all levels of an infinite sequence,
//! so each audit returns `Verified` only up to the audited depth,
//! `Violated` with a witness that can be rechecked, or `Inconclusive`.
//! Periodic generators are the exception: their matrices recur, which
//! turns some finite observations into proofs.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::fold_machine::int_rows_json;
use crate::graph_core::{rev, DartId, VertexId};
use crate::linalg::Matrix;

use super::sequence::SplitSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Proper,
    StronglyProper,
    Stabilized,
    FullyMingling,
    Expanding,
    SemiNormal,
}

impl AuditKind {
    pub const ALL: [AuditKind; 6] = [
        AuditKind::Proper,
        AuditKind::StronglyProper,
        AuditKind::Stabilized,
        AuditKind::FullyMingling,
        AuditKind::Expanding,
        AuditKind::SemiNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::Proper => "proper",
            AuditKind::StronglyProper => "strongly_proper",
            AuditKind::Stabilized => "stabilized",
            AuditKind::FullyMingling => "fully_mingling",
            AuditKind::Expanding => "expanding",
            AuditKind::SemiNormal => "semi_normal",
        }
    }

    pub fn parse(s: &str) -> Option<AuditKind> {
        AuditKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub status: Verdict,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
    #[serde(default)]
    pub trace: Vec<Value>,
    #[serde(default)]
    pub evidence: BTreeMap<String, Value>,
}

impl AuditReport {
    fn new(kind: AuditKind, depth: usize) -> AuditReport {
        AuditReport {
            kind,
            status: Verdict::Inconclusive,
            depth,
            witness: None,
            trace: Vec::new(),
            evidence: BTreeMap::new(),
        }
    }

    fn violated(mut self, witness: Value) -> AuditReport {
        self.status = Verdict::Violated;
        self.witness = Some(witness);
        self
    }

    fn with(mut self, key: &str, v: Value) -> AuditReport {
        self.evidence.insert(key.to_string(), v);
        self
    }

    pub fn is_verified(&self) -> bool {
        self.status == Verdict::Verified
    }

    pub fn is_violated(&self) -> bool {
        self.status == Verdict::Violated
    }
}

/// Heuristic knobs; none of these come from the theory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Levels without new image points before properness counts as stable.
    pub stability_window: usize,
    /// Levels kept below the judged range so deep windows can exist.
    pub lookahead: usize,
    pub min_repeats: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            stability_window: 5,
            lookahead: 6,
            min_repeats: 3,
        }
    }
}

fn lvl(k: usize) -> i32 {
    -(k as i32)
}

/// Run the requested audits on the first `depth` levels. An empty `kinds`
/// runs nothing; pass [`AuditKind::ALL`] for everything.
pub fn audit(
    seq: &SplitSequence,
    kinds: &[AuditKind],
    depth: usize,
    cfg: &AuditConfig,
) -> Vec<AuditReport> {
    kinds
        .iter()
        .map(|k| match k {
            AuditKind::Proper => audit_properness(seq, depth, cfg),
            AuditKind::StronglyProper => audit_strong_properness(seq, depth),
            AuditKind::Stabilized => audit_stabilization(seq, depth).0,
            AuditKind::FullyMingling => scan_full_mingling(seq, depth, cfg).0,
            AuditKind::Expanding => audit_expanding(seq, depth, cfg),
            AuditKind::SemiNormal => scan_semi_normality(seq, depth, cfg).0,
        })
        .collect()
}

/// Images in `G_0` of natural vertices of `G_j`, `-depth <= j <= -1`.
pub fn properness_trace(seq: &SplitSequence, depth: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut trace = Vec::new();
    for k in 1..=depth.min(seq.depth()) {
        let g = &seq.levels()[k].graph;
        for &v in &g.natural().natural_vertices {
            seen.insert(seq.push_vertex(lvl(k), 0, v));
        }
        trace.push(seen.len());
    }
    trace
}

pub fn audit_properness(seq: &SplitSequence, depth: usize, cfg: &AuditConfig) -> AuditReport {
    let depth = depth.min(seq.depth());
    let trace = properness_trace(seq, depth);
    let mut r = AuditReport::new(AuditKind::Proper, depth);
    r.trace = trace
        .iter()
        .enumerate()
        .map(|(i, n)| json!({"depth": i + 1, "image_points": n}))
        .collect();
    let strongly = (1..=depth).all(|k| seq.levels()[k].fold.as_ref().unwrap().strongly_proper);
    let w = cfg.stability_window;
    let stable = depth > w && trace[depth - 1] == trace[depth - 1 - w];
    if depth > 0 && (strongly || stable) {
        r.status = Verdict::Verified;
    }
    r.with("stability_window", json!(w))
        .with("strongly_proper_prefix", json!(strongly))
        .with("image_points", json!(trace.last().copied().unwrap_or(0)))
}

pub fn audit_strong_properness(seq: &SplitSequence, depth: usize) -> AuditReport {
    let depth = depth.min(seq.depth());
    let mut r = AuditReport::new(AuditKind::StronglyProper, depth);
    let flags: Vec<bool> = (1..=depth)
        .map(|k| seq.levels()[k].fold.as_ref().unwrap().strongly_proper)
        .collect();
    r.trace = flags
        .iter()
        .enumerate()
        .map(|(i, f)| json!({"level": lvl(i + 1), "strongly_proper": f}))
        .collect();
    if let Some(i) = flags.iter().position(|f| !f) {
        let k = i + 1;
        let f = seq.levels()[k].fold.as_ref().unwrap();
        let g = &seq.levels()[k].graph;
        let bad: Vec<VertexId> = g
            .natural()
            .natural_vertices
            .iter()
            .copied()
            .filter(|v| !f.map.codomain.is_natural(f.map.vertex_map[v]))
            .collect();
        return r.violated(json!({"level": lvl(k), "fold": f.spec, "non_natural_images": bad}));
    }
    if depth > 0 {
        r.status = Verdict::Verified;
    }
    r
}

fn zero_pattern(m: &Matrix<BigInt>) -> Vec<Vec<bool>> {
    m.to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| x.sign() != num_bigint::Sign::NoSign)
                .collect()
        })
        .collect()
}

/// Period of the per-fold matrices, when the generator is periodic and the
/// observed matrices repeat with that period.
pub fn matrix_period(seq: &SplitSequence) -> Option<usize> {
    let p = seq.generator()?.period()?;
    let ls = seq.levels();
    for k in 1..ls.len() {
        if k + p < ls.len()
            && ls[k].fold.as_ref()?.matrix.matrix != ls[k + p].fold.as_ref()?.matrix.matrix
        {
            return None;
        }
    }
    Some(p)
}

/// For a periodic sequence, a proof that no window ending at `j` is ever
/// positive: the zero pattern of whole-period windows has stopped changing
/// while still containing a zero. Returns the stable pattern's window.
fn periodic_refutation(seq: &SplitSequence, j: i32) -> Option<Value> {
    let p = matrix_period(seq)? as i32;
    let bottom = seq.bottom();
    let mut prev: Option<Vec<Vec<bool>>> = None;
    let mut m = 1;
    while j - m * p >= bottom {
        let w = seq.window(j - m * p, j).ok()?;
        if w.positive {
            return None;
        }
        let pat = zero_pattern(&w.matrix);
        if prev.as_ref() == Some(&pat) {
            return Some(json!({
                "j": j,
                "period": p,
                "window": [j - m * p, j],
                "matrix": int_rows_json(&w.matrix),
            }));
        }
        prev = Some(pat);
        m += 1;
    }
    None
}

fn judged_range(depth: usize, lookahead: usize) -> Vec<i32> {
    if depth <= lookahead {
        vec![0]
    } else {
        (0..=(depth - lookahead)).map(lvl).collect()
    }
}

/// For each judged level `j`, the nearest `k < j` with a positive window.
pub fn scan_full_mingling(
    seq: &SplitSequence,
    depth: usize,
    cfg: &AuditConfig,
) -> (AuditReport, Vec<(i32, i32)>) {
    let depth = depth.min(seq.depth());
    let mut r = AuditReport::new(AuditKind::FullyMingling, depth);
    if depth == 0 {
        return (r, Vec::new());
    }
    let bottom = lvl(depth);
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for j in judged_range(depth, cfg.lookahead) {
        let hit = (bottom..j)
            .rev()
            .find(|&k| seq.window(k, j).map(|w| w.positive).unwrap_or(false));
        match hit {
            Some(k) => found.push((j, k)),
            None => missing.push(j),
        }
        r.trace.push(json!({"j": j, "positive_from": hit}));
    }
    r = r.with("positive_windows", json!(found.len()));
    if missing.is_empty() {
        r.status = Verdict::Verified;
        r = r.with(
            "certificate",
            json!("every judged level has a positive window; minimal if the pattern persists"),
        );
    } else if let Some(w) = missing.iter().find_map(|&j| periodic_refutation(seq, j)) {
        r = r.violated(w);
    }
    (r, found)
}

/// A strongly mingling edge sequence: each edge maps homeomorphically onto
/// the next one up. Follows unit columns down from `(j, e)`.
fn homeomorphic_chain(seq: &SplitSequence, j: i32, e: usize, bottom: i32) -> Vec<usize> {
    let mut chain = vec![e];
    let mut cur = e;
    let mut k = j;
    while k > bottom {
        let m = &seq.fold(k - 1).unwrap().matrix.matrix;
        let next = (0..m.ncols()).find(|&c| {
            let col = m.column(c);
            col.iter().enumerate().all(|(i, x)| {
                if i == cur {
                    *x == BigInt::from(1)
                } else {
                    x.sign() == num_bigint::Sign::NoSign
                }
            })
        });
        match next {
            Some(c) => {
                chain.push(c);
                cur = c;
                k -= 1;
            }
            None => break,
        }
    }
    chain
}

pub fn audit_expanding(seq: &SplitSequence, depth: usize, cfg: &AuditConfig) -> AuditReport {
    let depth = depth.min(seq.depth());
    let mut r = AuditReport::new(AuditKind::Expanding, depth);
    if depth == 0 {
        return r;
    }
    let bottom = lvl(depth);
    let mut all_found = true;
    for j in judged_range(depth, cfg.lookahead) {
        for e in 0..seq.edge_count(j) {
            let chain = homeomorphic_chain(seq, j, e, bottom);
            if chain.len() as i32 == j - bottom + 1 {
                let labels: Vec<String> = chain
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| seq.labels(j - i as i32)[c].clone())
                    .collect();
                return r.violated(json!({
                    "top_level": j,
                    "bottom_level": bottom,
                    "edges": chain,
                    "labels": labels,
                    "note": "each edge maps homeomorphically onto the next",
                }));
            }
            let hit = (bottom..j).rev().find(|&k| {
                let w = seq.window(k, j).unwrap();
                let sums = w.matrix.column_sums();
                (0..w.matrix.ncols()).all(|c| {
                    w.matrix[(e, c)].sign() == num_bigint::Sign::NoSign
                        || sums[c] >= BigInt::from(2)
                })
            });
            r.trace
                .push(json!({"j": j, "edge": e, "stretched_from": hit}));
            all_found &= hit.is_some();
        }
    }
    if all_found {
        r.status = Verdict::Verified;
    }
    r
}

/// A recurring positive window matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiNormalCertificate {
    pub dim: usize,
    pub matrix: Vec<Vec<Value>>,
    /// `(i, j)` pairs of window endpoints, top first.
    pub windows: Vec<(i32, i32)>,
    /// True when a periodic generator guarantees recurrence.
    pub exact: bool,
}

impl SemiNormalCertificate {
    pub fn matrix(&self) -> Matrix<BigInt> {
        crate::fold_machine::int_rows_from_json(&self.matrix).expect("certificate matrix")
    }
}

pub fn scan_semi_normality(
    seq: &SplitSequence,
    depth: usize,
    cfg: &AuditConfig,
) -> (AuditReport, Option<SemiNormalCertificate>) {
    let depth = depth.min(seq.depth());
    let mut r = AuditReport::new(AuditKind::SemiNormal, depth);
    let reps = cfg.min_repeats.max(1);
    if depth < reps {
        return (r, None);
    }
    let period = matrix_period(seq);
    for width in 1..=depth / reps {
        // Group positive windows of this width by matrix, top-down, keeping
        // occurrences whose interiors are disjoint.
        let mut groups: Vec<(Matrix<BigInt>, Vec<(i32, i32)>)> = Vec::new();
        for top in 0..=(depth - width) {
            let j = lvl(top);
            let i = j - width as i32;
            let w = seq.window(i, j).unwrap();
            if !w.positive || seq.edge_count(i) != seq.edge_count(j) {
                continue;
            }
            match groups.iter_mut().find(|(m, _)| *m == *w.matrix) {
                Some((_, occ)) => {
                    if occ.last().is_none_or(|&(li, _)| j <= li) {
                        occ.push((i, j));
                    }
                }
                None => groups.push(((*w.matrix).clone(), vec![(i, j)])),
            }
        }
        let best = groups
            .iter()
            .filter(|(_, o)| o.len() >= reps)
            .max_by(|a, b| {
                a.1.len()
                    .cmp(&b.1.len())
                    .then_with(|| b.1[0].1.cmp(&a.1[0].1).reverse())
            });
        if let Some((m, occ)) = best {
            let exact = period.is_some_and(|p| width % p == 0);
            let cert = SemiNormalCertificate {
                dim: m.nrows(),
                matrix: int_rows_json(m),
                windows: occ.clone(),
                exact,
            };
            r.status = Verdict::Verified;
            r = r.with(
                "certificate",
                json!(if exact { "exact" } else { "candidate" }),
            );
            r.trace = occ.iter().map(|(i, j)| json!([i, j])).collect();
            return (r, Some(cert));
        }
    }
    if matrix_period(seq).is_some() {
        let p = matrix_period(seq).unwrap() as i32;
        let refutations: Option<Vec<Value>> =
            (0..p).map(|s| periodic_refutation(seq, -s)).collect();
        if let Some(w) = refutations {
            return (r.violated(json!({"no_positive_window": w})), None);
        }
    }
    (r, None)
}

/// Forward orbit of a natural vertex at the bottom of a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub bottom: i32,
    /// `vertices[i]` lives at level `bottom + i`.
    pub vertices: Vec<VertexId>,
    /// Number of leading levels where the orbit is a natural vertex.
    pub natural_levels: usize,
}

impl Chain {
    pub fn top(&self) -> i32 {
        self.bottom + self.vertices.len() as i32 - 1
    }

    pub fn at(&self, level: i32) -> VertexId {
        self.vertices[(level - self.bottom) as usize]
    }

    pub fn is_natural_throughout(&self) -> bool {
        self.natural_levels == self.vertices.len()
    }
}

pub fn natural_chains(seq: &SplitSequence, bottom: i32, top: i32) -> Vec<Chain> {
    let g = seq.graph(bottom).unwrap();
    g.natural()
        .natural_vertices
        .iter()
        .map(|&v| {
            let mut vertices = vec![v];
            let mut cur = v;
            for j in bottom..top {
                cur = seq.fold(j).unwrap().map.vertex_map[&cur];
                vertices.push(cur);
            }
            let natural_levels = vertices
                .iter()
                .enumerate()
                .take_while(|(i, &x)| seq.graph(bottom + *i as i32).unwrap().is_natural(x))
                .count();
            Chain {
                bottom,
                vertices,
                natural_levels,
            }
        })
        .collect()
}

/// Germ of `d` (a dart at level `from`) pushed up to level `to`.
pub fn germ_between(seq: &SplitSequence, from: i32, to: i32, d: DartId) -> DartId {
    let mut x = d;
    for j in from..to {
        x = seq.fold(j).unwrap().map.germ(x);
    }
    x
}

/// Darts of the star at level `from`, grouped by their germ at level `to`.
/// The number of groups is the prong count of the star-chain prefix.
pub fn prongs(
    seq: &SplitSequence,
    from: i32,
    v: VertexId,
    to: i32,
) -> BTreeMap<DartId, Vec<DartId>> {
    let mut out: BTreeMap<DartId, Vec<DartId>> = BTreeMap::new();
    for &d in seq.graph(from).unwrap().star(v) {
        out.entry(germ_between(seq, from, to, d))
            .or_default()
            .push(d);
    }
    out
}

type Turn = (DartId, DartId);

fn turn(a: DartId, b: DartId) -> Turn {
    (a.min(b), a.max(b))
}

/// Turns at natural vertices of each level that some leaf segment from the
/// window crosses: crossed by an edge image one level down, or the image
/// of a turn crossed further down.
fn taken_turns(
    seq: &SplitSequence,
    bottom: i32,
    top: i32,
) -> BTreeMap<i32, BTreeMap<VertexId, BTreeSet<Turn>>> {
    let mut out: BTreeMap<i32, BTreeMap<VertexId, BTreeSet<Turn>>> = BTreeMap::new();
    out.insert(bottom, BTreeMap::new());
    for j in bottom + 1..=top {
        let f = &seq.fold(j - 1).unwrap().map;
        let g = seq.graph(j).unwrap();
        let mut here: BTreeMap<VertexId, BTreeSet<Turn>> = BTreeMap::new();
        for k in 0..f.domain.natural().edges.len() {
            let p = f.natural_edge_image(k);
            for w in p.windows(2) {
                let x = g.terminus(w[0]);
                if g.is_natural(x) {
                    here.entry(x).or_default().insert(turn(rev(w[0]), w[1]));
                }
            }
        }
        for (y, ts) in &out[&(j - 1)] {
            let x = f.vertex_map[y];
            if !g.is_natural(x) {
                continue;
            }
            for &(a, b) in ts {
                let (ga, gb) = (f.germ(a), f.germ(b));
                if ga != gb {
                    here.entry(x).or_default().insert(turn(ga, gb));
                }
            }
        }
        out.insert(j, here);
    }
    out
}

/// Outcome of the stabilization checks on one window.
#[derive(Debug, Clone, PartialEq)]
enum Stab {
    Pass,
    Undecided(Value),
    Fail(Value),
}

/// Levels this far above the bottom have enough history to judge turns.
const TURN_HISTORY: i32 = 3;

fn stabilization_window(seq: &SplitSequence, bottom: i32, top: i32) -> Stab {
    let chains = natural_chains(seq, bottom, top);
    // V1: at most one chain of natural vertices over each point.
    let mut over: BTreeMap<VertexId, Vec<&Chain>> = BTreeMap::new();
    for c in chains.iter().filter(|c| c.is_natural_throughout()) {
        over.entry(c.at(top)).or_default().push(c);
    }
    if let Some((y, cs)) = over.iter().find(|(_, cs)| cs.len() > 1) {
        return Stab::Fail(json!({"criterion": "V1", "level": top, "vertex": y, "chains": cs}));
    }
    // V2: no chain of natural vertices over a non-natural point.
    if let Some(c) = chains
        .iter()
        .find(|c| c.natural_levels >= 2 && !c.is_natural_throughout())
    {
        return Stab::Fail(json!({"criterion": "V2", "chain": c}));
    }
    // T3: a star chain that looks 3-pronged near the top must stay so.
    for c in chains.iter().filter(|c| c.is_natural_throughout()) {
        let counts: Vec<usize> = (bottom..top)
            .map(|b| prongs(seq, b, c.at(b), top).len())
            .collect();
        let shallow_max = counts.iter().rev().scan(0, |m, &x| {
            *m = (*m).max(x);
            Some(*m)
        });
        let drop = counts
            .iter()
            .rev()
            .zip(shallow_max)
            .position(|(&x, m)| m >= 3 && x <= 2);
        if let Some(pos) = drop {
            return Stab::Fail(json!({
                "criterion": "T3",
                "chain": c,
                "prongs_by_bottom_level": counts,
                "drops_at": top - 1 - pos as i32,
            }));
        }
    }
    // T4: each singular-candidate turn is taken at all judged levels or at
    // none. A level where it is not yet taken may still be taken by a leaf
    // segment from below the prefix, so a mixed pattern is undecided.
    if top - bottom < TURN_HISTORY {
        return Stab::Undecided(json!({"reason": "window too shallow to judge turns"}));
    }
    let taken = taken_turns(seq, bottom, top);
    for c in chains.iter().filter(|c| c.is_natural_throughout()) {
        let pr = prongs(seq, bottom, c.at(bottom), top);
        if pr.len() < 3 {
            continue;
        }
        let reps: Vec<DartId> = pr.values().map(|ds| ds[0]).collect();
        for (i, &d1) in reps.iter().enumerate() {
            for &d2 in &reps[i + 1..] {
                let pattern: Vec<bool> = (bottom + TURN_HISTORY..=top)
                    .map(|j| {
                        let t = turn(
                            germ_between(seq, bottom, j, d1),
                            germ_between(seq, bottom, j, d2),
                        );
                        taken[&j].get(&c.at(j)).is_some_and(|s| s.contains(&t))
                    })
                    .collect();
                if pattern.iter().any(|&x| x) && pattern.iter().any(|&x| !x) {
                    return Stab::Undecided(json!({
                        "criterion": "T4",
                        "chain": c,
                        "turn_bottom_darts": [d1, d2],
                        "taken_from_level": bottom + TURN_HISTORY,
                        "pattern": pattern,
                    }));
                }
            }
        }
    }
    Stab::Pass
}

/// Returns the report and the highest level `K` such that the tail below
/// `K` passes every check to the audited depth.
pub fn audit_stabilization(seq: &SplitSequence, depth: usize) -> (AuditReport, Option<i32>) {
    let depth = depth.min(seq.depth());
    let mut r = AuditReport::new(AuditKind::Stabilized, depth);
    let bottom = lvl(depth);
    if depth < TURN_HISTORY as usize {
        return (
            r.with("reason", json!("depth too small to judge turns")),
            None,
        );
    }
    let mut best = None;
    let mut first = None;
    for top in (bottom + TURN_HISTORY..=0).rev() {
        let s = stabilization_window(seq, bottom, top);
        if first.is_none() {
            first = Some(s.clone());
        }
        if s == Stab::Pass {
            best = Some(top);
            break;
        }
    }
    r = r.with("passing_tail_top", json!(best));
    match first.unwrap() {
        Stab::Pass => r.status = Verdict::Verified,
        Stab::Fail(w) => r = r.violated(w),
        Stab::Undecided(w) => r = r.with("undecided", w),
    }
    let chains: Vec<Value> = natural_chains(seq, bottom, 0)
        .into_iter()
        .filter(|c| c.is_natural_throughout())
        .map(|c| json!({"top_vertex": c.at(0), "vertices": c.vertices}))
        .collect();
    r.trace = chains;
    (r, best)
}

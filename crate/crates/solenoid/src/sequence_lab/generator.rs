//! Policies that choose the next split when a sequence is extended.

use std::collections::BTreeMap;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph_core::{CoreGraph, DartId};
use crate::ratio::rat;

use super::chart::{Chart, Template};
use super::split::{side2, split, Cut, SplitSpec};
use super::SequenceError;

/// How a template vertex of the new level is found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRule {
    /// A vertex of the split graph, by its template name there.
    Old(String),
    /// The vertex where the segment copies meet again.
    Fold,
    Side1,
    Side2,
}

/// How a template edge of the new level is found, and whether to reverse
/// the natural orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// The natural edge containing what remains of the named edge, oriented
    /// as before.
    Old {
        label: String,
        flip: bool,
    },
    /// The natural edge through the first copy, oriented away from the fold
    /// vertex.
    Copy1 {
        flip: bool,
    },
    Copy2 {
        flip: bool,
    },
}

/// One period step of a periodic generator, in template terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStep {
    pub vertex: String,
    /// `"c+"`: natural edge `c`, leaving along its orientation.
    pub direction: String,
    pub side1: Vec<String>,
    pub cut: Cut,
    pub vertices: BTreeMap<String, VertexRule>,
    pub edges: BTreeMap<String, EdgeRule>,
    /// Template of the new level when it differs from the current one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
}

/// What a periodic generator does when a step would make the composite
/// to the top backtrack.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktrackPolicy {
    /// Refuse the step.
    #[default]
    Forbid,
    /// Take the step anyway; the level is flagged.
    Allow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Periodic {
        steps: Vec<SplitStep>,
        #[serde(default)]
        backtracking: BacktrackPolicy,
    },
    /// Raw splits, one per level, in ids current when they are applied.
    Scripted { script: Vec<SplitSpec> },
    /// Seeded choice among all admissible splits at each level.
    Random {
        seed: u64,
        #[serde(default)]
        strongly_proper: bool,
        /// Alternate between partial-extent and full-extent folds where
        /// possible.
        #[serde(default)]
        alternate: bool,
    },
}

/// What the generator wants done at the next level.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub spec: SplitSpec,
    pub step: Option<SplitStep>,
}

fn fractions() -> Vec<Cut> {
    [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)]
        .iter()
        .map(|&(n, d)| Cut::Fraction(rat(n, d)))
        .collect()
}

/// Level-indexed RNG so that extension is independent of chunking.
pub fn level_rng(seed: u64, level: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (level as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Generator {
    pub fn period(&self) -> Option<usize> {
        match self {
            Generator::Periodic { steps, .. } => Some(steps.len()),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Generator::Periodic { .. } => "periodic",
            Generator::Scripted { .. } => "scripted",
            Generator::Random { .. } => "random",
        }
    }

    /// Plan the split of level index `n` (graph `h`). `germ(d)` returns the
    /// first dart of the image of `d` in the top graph, used to refuse
    /// splits that would create backtracking.
    pub fn plan(
        &self,
        n: usize,
        h: &CoreGraph,
        chart: Option<(&Chart, &Template)>,
        germ: &dyn Fn(DartId) -> DartId,
    ) -> Result<SplitPlan, SequenceError> {
        let stuck = |reason: String| SequenceError::GeneratorStuck {
            level: -(n as i64) - 1,
            reason,
        };
        match self {
            Generator::Periodic {
                steps,
                backtracking,
            } => {
                let step = &steps[n % steps.len()];
                let (c, t) = chart.ok_or_else(|| stuck("periodic steps need a chart".into()))?;
                let vi = t
                    .vertex_index(&step.vertex)
                    .ok_or_else(|| stuck(format!("unknown vertex {}", step.vertex)))?;
                let read = |c: &Chart| -> Result<SplitSpec, SequenceError> {
                    let d0 = c.dart(h, t, &step.direction).map_err(stuck)?;
                    let side1 = step
                        .side1
                        .iter()
                        .map(|s| c.dart(h, t, s))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(stuck)?;
                    Ok(SplitSpec {
                        w: c.vertices[vi],
                        d0,
                        side1,
                        cut: step.cut.clone(),
                    })
                };
                let spec = read(c)?;
                if germs_ok(h, &spec, germ) || *backtracking == BacktrackPolicy::Allow {
                    return Ok(SplitPlan {
                        spec,
                        step: Some(step.clone()),
                    });
                }
                Err(stuck("periodic step creates backtracking".into()))
            }
            Generator::Scripted { script } => {
                let spec = script
                    .get(n)
                    .cloned()
                    .ok_or_else(|| stuck("script exhausted".into()))?;
                if !germs_ok(h, &spec, germ) {
                    return Err(stuck("scripted split creates backtracking".into()));
                }
                Ok(SplitPlan { spec, step: None })
            }
            Generator::Random {
                seed,
                strongly_proper,
                alternate,
            } => {
                let mut all = candidates(h, *strongly_proper);
                all.retain(|c| keeps_gates(h, c, germ));
                let mut rng = level_rng(*seed, n);
                all.shuffle(&mut rng);
                if *alternate {
                    // Even levels prefer partial extent (both sides single
                    // darts), odd levels full extent; the rest stay as a
                    // fallback.
                    let want_partial = n.is_multiple_of(2);
                    all.sort_by_key(|c| {
                        (c.side1.len() == 1 && side2(h, c.w, c.d0, &c.side1).len() == 1)
                            != want_partial
                    });
                }
                let spec = if *strongly_proper {
                    // Whole-edge cuts can run into dead ends a few levels
                    // later; take the first candidate that survives a
                    // bounded search.
                    let h = Arc::new(h.clone());
                    all.into_iter().find(|c| survives(&h, c, germ, LOOKAHEAD))
                } else {
                    all.into_iter().next()
                };
                let spec = spec.ok_or_else(|| stuck("no admissible split".into()))?;
                Ok(SplitPlan { spec, step: None })
            }
        }
    }
}

/// Levels the strongly proper random policy searches ahead.
pub const LOOKAHEAD: usize = 8;

/// Whether taking whole-edge split `c` of `h` leaves a sequence that can be
/// continued for `depth` more levels.
fn survives(
    h: &Arc<CoreGraph>,
    c: &SplitSpec,
    germ: &dyn Fn(DartId) -> DartId,
    depth: usize,
) -> bool {
    if depth == 0 {
        return true;
    }
    let Ok(out) = split(
        h,
        c,
        &h.path_len(&crate::fold_machine::walk_natural(h, c.d0)),
    ) else {
        return false;
    };
    if !out.graph.bounds().ok() {
        return false;
    }
    let g = Arc::new(out.graph);
    let child_germ = |d: DartId| germ(out.map.germ(d));
    candidates(&g, true)
        .iter()
        .filter(|c| keeps_gates(&g, c, &child_germ))
        .any(|c| survives(&g, c, &child_germ, depth - 1))
}

/// Every split of `h` the random policy may take, in a fixed order. In
/// strongly proper mode only whole-edge cuts qualify, and splits that
/// would leave a single natural vertex (so only loops, which cannot be
/// cut whole) are skipped.
pub fn candidates(h: &CoreGraph, strongly_proper: bool) -> Vec<SplitSpec> {
    let natural = &h.natural().natural_vertices;
    let mut out = Vec::new();
    for &w in natural {
        let star = h.star(w);
        for &d0 in star {
            let rest: Vec<DartId> = star.iter().copied().filter(|&d| d != d0).collect();
            let n0 = crate::fold_machine::walk_natural(h, d0);
            let is_loop = h.terminus(*n0.last().unwrap()) == w;
            let mut cuts = Vec::new();
            if !is_loop {
                cuts.push(Cut::Full);
            }
            if !strongly_proper {
                cuts.extend(fractions());
            }
            // Side 1 always holds the first remaining dart, so each
            // unordered partition appears once.
            for mask in 0u32..(1 << (rest.len() - 1)) {
                let mut side1 = vec![rest[0]];
                side1.extend(
                    (1..rest.len())
                        .filter(|i| mask & (1 << (i - 1)) != 0)
                        .map(|i| rest[i]),
                );
                if side1.len() == rest.len() {
                    continue;
                }
                let s2 = rest.len() - side1.len();
                if strongly_proper
                    && natural.len() - 1 + usize::from(side1.len() >= 2) + usize::from(s2 >= 2) < 2
                {
                    continue;
                }
                for cut in &cuts {
                    out.push(SplitSpec {
                        w,
                        d0,
                        side1: side1.clone(),
                        cut: cut.clone(),
                    });
                }
            }
        }
    }
    out
}

/// A side with a single dart leaves a valence-2 point where the path
/// turns from `d0` back out along that dart; the composite to the top
/// backtracks there exactly when both germs agree.
pub fn germs_ok(h: &CoreGraph, s: &SplitSpec, germ: &dyn Fn(DartId) -> DartId) -> bool {
    let s2 = side2(h, s.w, s.d0, &s.side1);
    let g0 = germ(s.d0);
    [&s.side1, &s2]
        .iter()
        .all(|side| side.len() != 1 || germ(side[0]) != g0)
}

/// Stronger than [`germs_ok`]: every side keeps a dart whose germ differs
/// from that of `d0`. A natural vertex whose darts all share one germ at
/// the top can never be split again without backtracking, and this is
/// the only way a split can produce one.
pub fn keeps_gates(h: &CoreGraph, s: &SplitSpec, germ: &dyn Fn(DartId) -> DartId) -> bool {
    let s2 = side2(h, s.w, s.d0, &s.side1);
    let g0 = germ(s.d0);
    [&s.side1, &s2]
        .iter()
        .all(|side| side.iter().any(|&d| germ(d) != g0))
}

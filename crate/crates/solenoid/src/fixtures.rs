//! Named example sequences.
//!
//! - `THETA_CYCLE`: rank 2, period 3. Each step splits the theta graph at
//!   `u` for length 1/2, so the folds cycle through `(a,b)`, `(b,c)`,
//!   `(c,a)` and the three-step window is positive.
//! - `REPEAT_AB`: rank 2, period 1. Always folds `a` with `b` over half of
//!   `c`. The transition matrix never changes; `c` halves in length at
//!   every level while `a` and `b` converge to length 2.
//! - `RANK3_SP`: rank 3, strongly proper, seeded. Starts from `Γ3` and
//!   alternates folds of partial extent (single-dart sides) with folds of
//!   full extent wherever the graph allows it.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph_core::shapes::{gamma3, theta};
use crate::graph_core::CoreGraph;
use crate::ratio::{half, Rational};
use crate::sequence_lab::{
    BacktrackPolicy, Cut, EdgeRule, Generator, SequenceError, SplitSequence, SplitStep, Template,
    VertexRule,
};

pub const FIXTURE_NAMES: [&str; 3] = ["THETA_CYCLE", "REPEAT_AB", "RANK3_SP"];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture {0:?}; known fixtures are THETA_CYCLE, REPEAT_AB, RANK3_SP")]
    UnknownFixture(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

pub fn load_fixture(name: &str) -> Result<SplitSequence, FixtureError> {
    match name {
        "THETA_CYCLE" => Ok(theta_cycle()?),
        "REPEAT_AB" => Ok(repeat_ab()?),
        "RANK3_SP" => Ok(rank3_sp()?),
        _ => Err(FixtureError::UnknownFixture(name.to_string())),
    }
}

fn old(label: &str) -> EdgeRule {
    EdgeRule::Old {
        label: label.into(),
        flip: false,
    }
}

fn copy1() -> EdgeRule {
    EdgeRule::Copy1 { flip: false }
}

fn copy2() -> EdgeRule {
    EdgeRule::Copy2 { flip: false }
}

fn vold(name: &str) -> VertexRule {
    VertexRule::Old(name.into())
}

struct StepBuilder {
    step: SplitStep,
}

fn step(vertex: &str, direction: &str, side1: &[&str], cut: Cut) -> StepBuilder {
    StepBuilder {
        step: SplitStep {
            vertex: vertex.into(),
            direction: direction.into(),
            side1: side1.iter().map(|s| s.to_string()).collect(),
            cut,
            vertices: BTreeMap::new(),
            edges: BTreeMap::new(),
            template: None,
        },
    }
}

impl StepBuilder {
    fn vertices(mut self, rules: Vec<(&str, VertexRule)>) -> Self {
        self.step.vertices = rules.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        self
    }

    fn edges(mut self, rules: Vec<(&str, EdgeRule)>) -> Self {
        self.step.edges = rules.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        self
    }

    fn done(self) -> SplitStep {
        self.step
    }
}

fn theta_template(g: &CoreGraph) -> Template {
    Template::of_graph(g, &["u", "v"])
}

/// The split whose fold identifies `a` and `b` over the first half of `C`.
fn theta_ab(cut: Cut) -> SplitStep {
    step("u", "c+", &["a+"], cut)
        .vertices(vec![("u", VertexRule::Fold), ("v", vold("v"))])
        .edges(vec![("a", copy1()), ("b", copy2()), ("c", old("c"))])
        .done()
}

pub fn theta_cycle_steps(l: Rational) -> Vec<SplitStep> {
    let fixed = || Cut::Fixed(l.clone());
    let v = || vec![("u", VertexRule::Fold), ("v", vold("v"))];
    vec![
        theta_ab(fixed()),
        step("u", "a+", &["b+"], fixed())
            .vertices(v())
            .edges(vec![("a", old("a")), ("b", copy1()), ("c", copy2())])
            .done(),
        step("u", "b+", &["c+"], fixed())
            .vertices(v())
            .edges(vec![("a", copy2()), ("b", old("b")), ("c", copy1())])
            .done(),
    ]
}

pub fn theta_cycle() -> Result<SplitSequence, SequenceError> {
    let g = theta();
    let t = theta_template(&g);
    let generator = Generator::Periodic {
        steps: theta_cycle_steps(half()),
        backtracking: BacktrackPolicy::Allow,
    };
    SplitSequence::new(g, Some(generator), Some(t))
}

pub fn repeat_ab() -> Result<SplitSequence, SequenceError> {
    let g = theta();
    let t = theta_template(&g);
    let steps = vec![theta_ab(Cut::Fraction(half()))];
    SplitSequence::new(
        g,
        Some(Generator::Periodic {
            steps,
            backtracking: BacktrackPolicy::Forbid,
        }),
        Some(t),
    )
}

/// Seed of the `RANK3_SP` policy.
pub const RANK3_SEED: u64 = 3;

pub fn rank3_sp() -> Result<SplitSequence, SequenceError> {
    let generator = Generator::Random {
        seed: RANK3_SEED,
        strongly_proper: true,
        alternate: true,
    };
    SplitSequence::new(gamma3(), Some(generator), None)
}

/// An uncharted sequence driven by the seeded random policy.
pub fn random_sequence(
    g0: CoreGraph,
    seed: u64,
    strongly_proper: bool,
) -> Result<SplitSequence, SequenceError> {
    SplitSequence::new(
        g0,
        Some(Generator::Random {
            seed,
            strongly_proper,
            alternate: false,
        }),
        None,
    )
}

//! Truncated evaluation of a transverse measure on a turn transversal.

use serde::{Deserialize, Serialize};

use crate::graph_core::Point;
use crate::scalar::Field;
use crate::sequence_lab::audits::{audit_expanding, matrix_period};
use crate::sequence_lab::{AuditConfig, SplitSequence};
use crate::solenoid_scope::{decompose_turn_transversal, PreTurn, TurnSpec};

use super::weights::{push_weights, WeightVector};
use super::ConeError;

/// The measure lies in `[value, value + remainder_bound]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEvaluation<T> {
    pub depth: usize,
    pub value: T,
    pub remainder_bound: T,
    pub emitted: usize,
    pub unresolved: usize,
}

impl MeasureEvaluation<f64> {
    pub fn overlaps(&self, other: &MeasureEvaluation<f64>) -> bool {
        self.value <= other.value + other.remainder_bound
            && other.value <= self.value + self.remainder_bound
    }
}

/// Iterations of the power method; the matrices met here are small and
/// positive, so convergence is fast.
const POWER_STEPS: usize = 500;

/// Perron eigenvalue and eigenvector (summing to 1) of a positive matrix.
pub fn perron(m: &crate::linalg::Matrix<f64>) -> (f64, Vec<f64>) {
    let n = m.ncols();
    let mut u = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..POWER_STEPS {
        let v = m.mul_vec(&u);
        lambda = v.iter().sum::<f64>();
        u = v.into_iter().map(|x| x / lambda).collect();
    }
    (lambda, u)
}

/// Weights along a periodic sequence in the Perron direction of its
/// period window, for levels `-depth..=0` (rounded down to a whole number
/// of periods at the bottom). `w_0` is the Perron vector.
pub fn perron_weights(
    seq: &SplitSequence,
    depth: usize,
) -> Result<Vec<WeightVector<f64>>, ConeError> {
    let p = matrix_period(seq)
        .ok_or_else(|| ConeError::NoRecurringWindow("sequence is not periodic".into()))?;
    let periods = depth / p;
    if periods == 0 {
        return Err(ConeError::NoRecurringWindow(format!(
            "depth {depth} is shorter than the period {p}"
        )));
    }
    let bottom = -((periods * p) as i32);
    if bottom < seq.bottom() {
        return Err(ConeError::Sequence(
            crate::sequence_lab::SequenceError::LevelOutOfRange {
                level: bottom as i64,
            },
        ));
    }
    let w = seq.window(-(p as i32), 0)?;
    let (lambda, u) = perron(&w.matrix.to_f64());
    let scale = lambda.powi(-(periods as i32));
    let w_bottom = WeightVector {
        level: bottom,
        entries: u.iter().map(|x| x * scale).collect(),
    };
    push_weights(seq, w_bottom, 0)
}

fn weight_at<T: Field>(ws: &[WeightVector<T>], level: i32, edge: usize) -> Result<T, ConeError> {
    ws.iter()
        .find(|w| w.level == level)
        .map(|w| w.entries[edge].clone())
        .ok_or(ConeError::MissingWeights(level))
}

/// Sum the weights of the maximal edge pre-turns peeled off within
/// `depth` levels; the remainder bound sums, over the vertex pre-turns
/// left at the cutoff, the smaller weight of the two edges they turn
/// between.
pub fn evaluate_transverse_measure<T: Field>(
    seq: &SplitSequence,
    weights: &[WeightVector<T>],
    turn: &TurnSpec,
    q: &Point,
    depth: usize,
) -> Result<MeasureEvaluation<T>, ConeError> {
    let expanding = audit_expanding(seq, seq.depth(), &AuditConfig::default());
    if expanding.is_violated() {
        return Err(ConeError::NonExpandingSequence(
            expanding.witness.map(|w| w.to_string()).unwrap_or_default(),
        ));
    }
    let dec = decompose_turn_transversal(seq, turn, q, depth)?;
    let mut value = T::zero();
    for p in &dec.emitted {
        let edge = p.edge().expect("emitted pre-turns sit in edges");
        value = value + weight_at(weights, p.level(), edge)?;
    }
    let mut remainder = T::zero();
    for p in &dec.remainder {
        if let PreTurn::Corner { level, darts, .. } = p {
            let g = seq.graph(*level)?;
            let nat = g.natural();
            let a = weight_at(weights, *level, nat.edge_index(darts.0))?;
            let b = weight_at(weights, *level, nat.edge_index(darts.1))?;
            remainder = remainder + if a < b { a } else { b };
        }
    }
    Ok(MeasureEvaluation {
        depth,
        value,
        remainder_bound: remainder,
        emitted: dec.emitted.len(),
        unresolved: dec.remainder.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{repeat_ab, theta_cycle};
    use crate::linalg::Matrix;
    use crate::measure_cones::check_weight_equations;
    use crate::ratio::rat;

    #[test]
    fn perron_of_a_symmetric_matrix() {
        let m = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (l, u) = perron(&m);
        assert!((l - 3.0).abs() < 1e-12);
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perron_weights_are_consistent_and_normalized() {
        let mut s = theta_cycle().unwrap();
        s.extend_to(12).unwrap();
        let ws = perron_weights(&s, 11).unwrap();
        assert_eq!(ws[0].level, -9);
        assert!(perron_weights(&s, 2).is_err());
        let top = ws.last().unwrap();
        assert_eq!(top.level, 0);
        assert!((top.entries.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let r = check_weight_equations(&s, &ws).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn edge_turn_measures_its_edge() {
        let mut s = theta_cycle().unwrap();
        s.extend_to(6).unwrap();
        let ws = perron_weights(&s, 6).unwrap();
        let g = s.graph(0).unwrap();
        let c = g.natural().index_of_label("c").unwrap();
        let turn = TurnSpec::Edge {
            level: 0,
            edge: c,
            from: rat(1, 10),
            to: rat(1, 5),
        };
        let q = g.point_at_natural(c, &rat(3, 20));
        let e = evaluate_transverse_measure(&s, &ws, &turn, &q, 4).unwrap();
        assert_eq!(e.value, ws.last().unwrap().entries[c]);
        assert_eq!(e.remainder_bound, 0.0);
        assert!(e.overlaps(&e));
    }

    #[test]
    fn non_expanding_sequences_are_refused() {
        let mut s = repeat_ab().unwrap();
        s.extend_to(10).unwrap();
        let ws = vec![WeightVector::new(0, vec![1.0; 3]).unwrap()];
        let g = s.graph(0).unwrap();
        let turn = TurnSpec::Edge {
            level: 0,
            edge: 0,
            from: rat(0, 1),
            to: rat(1, 2),
        };
        let q = g.point_at_natural(0, &rat(1, 4));
        assert!(matches!(
            evaluate_transverse_measure(&s, &ws, &turn, &q, 2),
            Err(ConeError::NonExpandingSequence(_))
        ));
    }

    #[test]
    fn intervals_overlap_symmetrically() {
        let a = MeasureEvaluation {
            depth: 1,
            value: 0.0,
            remainder_bound: 1.0,
            emitted: 0,
            unresolved: 1,
        };
        let b = MeasureEvaluation {
            value: 0.5,
            remainder_bound: 0.1,
            ..a.clone()
        };
        let c = MeasureEvaluation {
            value: 1.5,
            remainder_bound: 0.1,
            ..a.clone()
        };
        assert!(a.overlaps(&b) && b.overlaps(&a));
        assert!(!a.overlaps(&c) && !c.overlaps(&a));
    }
}

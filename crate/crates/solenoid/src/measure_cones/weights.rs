//! Weight vectors on natural edges and the equations tying consecutive
//! levels together.

use serde::{Deserialize, Serialize};

use crate::scalar::{int_to_field, Field};
use crate::sequence_lab::SplitSequence;

use super::ConeError;

/// Nonnegative weights on the natural edges of one level, in that level's
/// natural-edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    pub level: i32,
    pub entries: Vec<T>,
}

impl<T: Field> WeightVector<T> {
    pub fn new(level: i32, entries: Vec<T>) -> Result<WeightVector<T>, ConeError> {
        if entries.iter().any(|x| *x < T::zero()) {
            return Err(ConeError::NegativeWeight(level));
        }
        Ok(WeightVector { level, entries })
    }

    pub fn get(&self, edge: usize) -> &T {
        &self.entries[edge]
    }
}

/// Residuals `w_{j+1} - T_j w_j`, one per consecutive pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    /// `(j, residual)` for the equation between levels `j` and `j + 1`.
    pub equations: Vec<(i32, Vec<T>)>,
}

impl<T: Field> ResidualReport<T> {
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for (_, r) in &self.equations {
            for x in r {
                if x.abs() > m {
                    m = x.abs();
                }
            }
        }
        m
    }

    pub fn all_zero(&self) -> bool {
        self.max_abs().is_zero()
    }
}

fn check_dim<T>(seq: &SplitSequence, w: &WeightVector<T>) -> Result<(), ConeError> {
    let expected = seq.graph(w.level)?.natural().edges.len();
    if w.entries.len() != expected {
        return Err(ConeError::DimensionMismatch {
            level: w.level,
            expected,
            found: w.entries.len(),
        });
    }
    Ok(())
}

/// `T_j w_j`: the weights induced one level up.
pub fn apply_fold<T: Field>(
    seq: &SplitSequence,
    w: &WeightVector<T>,
) -> Result<WeightVector<T>, ConeError> {
    check_dim(seq, w)?;
    let m = seq.fold(w.level)?.matrix.matrix.map(int_to_field::<T>);
    Ok(WeightVector {
        level: w.level + 1,
        entries: m.mul_vec(&w.entries),
    })
}

/// Check the weight equation between every consecutive pair of `ws`,
/// which must be sorted by level without gaps.
pub fn check_weight_equations<T: Field>(
    seq: &SplitSequence,
    ws: &[WeightVector<T>],
) -> Result<ResidualReport<T>, ConeError> {
    for w in ws {
        check_dim(seq, w)?;
    }
    let mut equations = Vec::new();
    for pair in ws.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if hi.level != lo.level + 1 {
            return Err(ConeError::NonContiguous);
        }
        let pushed = apply_fold(seq, lo)?;
        let r = hi
            .entries
            .iter()
            .zip(&pushed.entries)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        equations.push((lo.level, r));
    }
    Ok(ResidualReport { equations })
}

/// Push `w` up to level `top`, returning every intermediate level.
pub fn push_weights<T: Field>(
    seq: &SplitSequence,
    w: WeightVector<T>,
    top: i32,
) -> Result<Vec<WeightVector<T>>, ConeError> {
    let mut out = vec![w];
    while out.last().unwrap().level < top {
        let next = apply_fold(seq, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

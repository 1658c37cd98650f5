//! Finite-depth approximations of the weight cone at a level.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::fold_machine::int_rows_json;
use crate::linalg::{nonnegative_combination, rank_of_vectors};
use crate::ratio::Rational;
use crate::sequence_lab::SplitSequence;

use super::metric::{delta_of, projective_distance_exact};
use super::ConeError;

/// The cone spanned by the columns of `window(K - depth, K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeApprox {
    pub level: i32,
    pub depth: usize,
    #[serde(serialize_with = "ser_columns", deserialize_with = "de_columns")]
    pub generators: Vec<Vec<BigInt>>,
    pub rank: usize,
    /// Indices of generators that are not nonnegative combinations of the
    /// others, when pruning was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremal: Option<Vec<usize>>,
}

fn ser_columns<S: serde::Serializer>(g: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    int_rows_json(&crate::linalg::Matrix::from_rows(g.to_vec())).serialize(s)
}

fn de_columns<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
    let rows = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
    crate::fold_machine::int_rows_from_json(&rows)
        .map(|m| m.to_rows())
        .map_err(serde::de::Error::custom)
}

impl ConeApprox {
    pub fn dim(&self) -> usize {
        self.generators.first().map_or(0, Vec::len)
    }
}

pub fn cone_approximation(
    seq: &SplitSequence,
    level: i32,
    depth: usize,
    prune: bool,
) -> Result<ConeApprox, ConeError> {
    let w = seq.window(level - depth as i32, level)?;
    let generators = w.matrix.columns();
    let rank = rank_of_vectors(&generators);
    let extremal = prune.then(|| extremal_rays(&generators));
    Ok(ConeApprox {
        level,
        depth,
        generators,
        rank,
        extremal,
    })
}

/// Generators not expressible as a nonnegative combination of the other
/// generators. Of several parallel copies only the first is kept.
fn extremal_rays(gens: &[Vec<BigInt>]) -> Vec<usize> {
    let q: Vec<Vec<Rational>> = gens
        .iter()
        .map(|g| {
            g.iter()
                .map(|x| Rational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    (0..q.len())
        .filter(|&i| {
            let earlier_parallel = (0..i).any(|j| parallel(&gens[i], &gens[j]));
            let others: Vec<Vec<Rational>> = (0..q.len())
                .filter(|&j| j != i && !parallel(&gens[i], &gens[j]))
                .map(|j| q[j].clone())
                .collect();
            !earlier_parallel && nonnegative_combination(&q[i], &others).is_none()
        })
        .collect()
}

fn parallel(x: &[BigInt], y: &[BigInt]) -> bool {
    (0..x.len()).all(|i| (0..x.len()).all(|j| &x[i] * &y[j] == &x[j] * &y[i]))
}

/// One row of a contraction trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub depth: usize,
    /// Largest projective distance between two generators.
    pub diameter: f64,
    pub rank: usize,
    /// δ of the window matrix, when it is positive.
    pub delta: Option<f64>,
}

impl ContractionRow {
    pub const CSV_HEADER: &'static str = "depth,diameter,rank,delta";

    pub fn csv(&self) -> String {
        let delta = self.delta.map_or(String::new(), |d| format!("{d}"));
        format!("{},{:e},{},{}", self.depth, self.diameter, self.rank, delta)
    }
}

pub fn diameter(gens: &[Vec<BigInt>]) -> Result<f64, ConeError> {
    let mut best = 0.0f64;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            best = best.max(projective_distance_exact(&gens[i], &gens[j])?);
        }
    }
    Ok(best)
}

/// Diameter, rank and δ of the cone at `level` for every depth up to
/// `max_depth`.
pub fn contraction_trace(
    seq: &SplitSequence,
    level: i32,
    max_depth: usize,
) -> Result<Vec<ContractionRow>, ConeError> {
    contraction_trace_at(seq, level, 0..=max_depth)
}

/// As [`contraction_trace`], at the given depths only.
pub fn contraction_trace_at(
    seq: &SplitSequence,
    level: i32,
    depths: impl IntoIterator<Item = usize>,
) -> Result<Vec<ContractionRow>, ConeError> {
    depths
        .into_iter()
        .map(|d| {
            let c = cone_approximation(seq, level, d, false)?;
            let w = seq.window(level - d as i32, level)?;
            let delta = delta_of(&w.matrix.to_rational()).and_then(|r| {
                use num_traits::ToPrimitive;
                r.to_f64()
            });
            Ok(ContractionRow {
                depth: d,
                diameter: diameter(&c.generators)?,
                rank: c.rank,
                delta,
            })
        })
        .collect()
}

pub fn contraction_csv(rows: &[ContractionRow]) -> String {
    let mut s = format!("{}\n", ContractionRow::CSV_HEADER);
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

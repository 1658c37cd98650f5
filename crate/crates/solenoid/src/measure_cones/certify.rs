//! Unique-ergodicity certificates and dimension bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ratio::{self, Rational};
use crate::sequence_lab::audits::{audit_strong_properness, scan_semi_normality};
use crate::sequence_lab::{AuditConfig, SplitSequence};

use super::cones::{contraction_trace_at, ContractionRow};
use super::metric::delta_bound;
use super::ConeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertificateStatus {
    /// A positive window recurs with a proof of recurrence, so the weight
    /// cone is a single ray.
    UniquelyErgodicExact,
    /// The cone's projective diameter fell below `tol`; finite evidence.
    UniquelyErgodicNumeric {
        diameter: f64,
        tol: f64,
    },
    /// `r` generators stayed linearly independent at every audited depth.
    LowerBoundDim {
        r: usize,
    },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiNormalWitness {
    /// Window width `d`.
    pub width: usize,
    pub windows: Vec<(i32, i32)>,
    pub matrix: Vec<Vec<Value>>,
    #[serde(with = "ratio::serde_str")]
    pub delta: Rational,
    /// Recurrence is guaranteed by a periodic generator.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimBounds {
    /// 1 when unique ergodicity is certified, else the surviving rank.
    pub lower: usize,
    pub smallest_recurring: usize,
    /// `3(n - 1)`.
    pub coarse: usize,
}

impl DimBounds {
    pub fn consistent(&self) -> bool {
        1 <= self.lower
            && self.lower <= self.smallest_recurring
            && self.smallest_recurring <= self.coarse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityCertificate {
    #[serde(flatten)]
    pub status: CertificateStatus,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<SemiNormalWitness>,
    pub trace: Vec<ContractionRow>,
    /// Diameters after each certified window, top down.
    pub certified_diameters: Vec<f64>,
    pub dim_bounds: DimBounds,
    /// Whether the strong-properness audit passed; without it the verdict
    /// is about the matrices only.
    pub strongly_proper: bool,
    pub interpretation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub tol: f64,
    /// Occurrences an edge count needs in the audited range to count as
    /// recurring.
    pub recur_min: usize,
    pub audit: AuditConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            tol: 1e-8,
            recur_min: 3,
            audit: AuditConfig::default(),
        }
    }
}

pub fn certify_unique_ergodicity(
    seq: &SplitSequence,
    depth: usize,
    tol: f64,
) -> Result<ErgodicityCertificate, ConeError> {
    certify_with(
        seq,
        depth,
        &CertifyConfig {
            tol,
            ..CertifyConfig::default()
        },
    )
}

/// Least natural-edge count seen at `recur_min` or more audited levels,
/// falling back to the least count seen at all.
fn smallest_recurring(seq: &SplitSequence, depth: usize, recur_min: usize) -> usize {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for k in 0..=depth {
        *seen.entry(seq.edge_count(-(k as i32))).or_default() += 1;
    }
    seen.iter()
        .find(|(_, &n)| n >= recur_min)
        .or_else(|| seen.iter().next())
        .map(|(&d, _)| d)
        .unwrap_or(0)
}

pub fn certify_with(
    seq: &SplitSequence,
    depth: usize,
    cfg: &CertifyConfig,
) -> Result<ErgodicityCertificate, ConeError> {
    let depth = depth.min(seq.depth());
    let (_, cert) = scan_semi_normality(seq, depth, &cfg.audit);
    let witness = cert.map(|c| {
        let m = c.matrix();
        let (i, j) = c.windows[0];
        SemiNormalWitness {
            width: (j - i) as usize,
            windows: c.windows.clone(),
            delta: delta_bound(&m).delta.expect("recurring window is positive"),
            matrix: c.matrix,
            exact: c.exact,
        }
    });
    let trace = contraction_trace_at(seq, 0, 0..=depth)?;
    let certified_diameters = match &witness {
        Some(w) => (0..=depth / w.width)
            .map(|k| trace[k * w.width].diameter)
            .collect(),
        None => Vec::new(),
    };
    let last = trace.last().expect("trace has depth 0");
    let surviving = trace.iter().map(|r| r.rank).min().unwrap_or(0);
    let status = if witness.as_ref().is_some_and(|w| w.exact) {
        CertificateStatus::UniquelyErgodicExact
    } else if last.diameter < cfg.tol {
        CertificateStatus::UniquelyErgodicNumeric {
            diameter: last.diameter,
            tol: cfg.tol,
        }
    } else if surviving >= 2 {
        CertificateStatus::LowerBoundDim { r: surviving }
    } else {
        CertificateStatus::Inconclusive
    };
    let lower = match status {
        CertificateStatus::LowerBoundDim { r } => r,
        _ => 1,
    };
    let strongly_proper = audit_strong_properness(seq, depth).is_verified();
    Ok(ErgodicityCertificate {
        status,
        depth,
        witness,
        trace,
        certified_diameters,
        dim_bounds: DimBounds {
            lower,
            smallest_recurring: smallest_recurring(seq, depth, cfg.recur_min),
            coarse: 3 * (seq.rank() - 1),
        },
        strongly_proper,
        interpretation: if strongly_proper {
            "solenoid"
        } else {
            "matrix-level"
        }
        .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{repeat_ab, theta_cycle};

    #[test]
    fn theta_gets_an_exact_certificate() {
        let mut s = theta_cycle().unwrap();
        s.extend_to(30).unwrap();
        let c = certify_unique_ergodicity(&s, 30, 1e-8).unwrap();
        assert_eq!(c.status, CertificateStatus::UniquelyErgodicExact);
        let w = c.witness.as_ref().unwrap();
        assert!(w.exact);
        assert_eq!(c.certified_diameters.len(), 30 / w.width + 1);
        assert!(c.certified_diameters.windows(2).all(|p| p[1] < p[0]));
        assert_eq!(c.dim_bounds.lower, 1);
        assert!(c.dim_bounds.consistent());
        assert_eq!(c.trace.len(), 31);
    }

    #[test]
    fn repeat_ab_only_bounds_the_dimension() {
        let mut s = repeat_ab().unwrap();
        s.extend_to(10).unwrap();
        let c = certify_unique_ergodicity(&s, 10, 1e-8).unwrap();
        assert_eq!(c.status, CertificateStatus::LowerBoundDim { r: 3 });
        assert!(c.witness.is_none());
        assert_eq!(
            c.dim_bounds,
            DimBounds {
                lower: 3,
                smallest_recurring: 3,
                coarse: 3
            }
        );
    }

    #[test]
    fn certificate_round_trips_through_json() {
        let mut s = theta_cycle().unwrap();
        s.extend_to(30).unwrap();
        let c = certify_unique_ergodicity(&s, 30, 1e-8).unwrap();
        let j = serde_json::to_value(&c).unwrap();
        assert_eq!(j["status"], "uniquely_ergodic_exact");
        let back: ErgodicityCertificate = serde_json::from_value(j).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn inconsistent_bounds_are_detected() {
        let b = DimBounds {
            lower: 4,
            smallest_recurring: 3,
            coarse: 3,
        };
        assert!(!b.consistent());
    }
}

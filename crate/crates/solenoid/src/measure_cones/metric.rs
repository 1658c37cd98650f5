//! Projective distance, δ-boundedness and the contraction inequality.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::ratio::Rational;
use crate::scalar::{Field, Scalar};

use super::ConeError;

fn norm<F: Float>(x: &[F]) -> F {
    x.iter().fold(F::zero(), |a, &v| a + v * v).sqrt()
}

/// Euclidean distance between `x/|x|` and `y/|y|`.
pub fn projective_distance<F: Float>(x: &[F], y: &[F]) -> Result<F, ConeError> {
    let (nx, ny) = (norm(x), norm(y));
    if nx.is_zero() || ny.is_zero() || x.iter().chain(y).any(|v| *v < F::zero()) {
        return Err(ConeError::ZeroVector);
    }
    let d2 = x
        .iter()
        .zip(y)
        .fold(F::zero(), |a, (&p, &q)| a + (p / nx - q / ny).powi(2));
    Ok(d2.sqrt())
}

/// The same distance for integer vectors, accurate to relative precision
/// even when the vectors are nearly parallel. The squared sine of the
/// angle comes out exactly from Lagrange's identity, and
/// `D = sqrt(2 sin^2 / (1 + cos))`.
pub fn projective_distance_exact(x: &[BigInt], y: &[BigInt]) -> Result<f64, ConeError> {
    if x.iter().chain(y).any(Signed::is_negative) {
        return Err(ConeError::ZeroVector);
    }
    let dot = |a: &[BigInt], b: &[BigInt]| -> BigInt { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    let (xx, yy) = (dot(x, x), dot(y, y));
    if xx.is_zero() || yy.is_zero() {
        return Err(ConeError::ZeroVector);
    }
    let mut cross = BigInt::zero();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let c = &x[i] * &y[j] - &x[j] * &y[i];
            cross += &c * &c;
        }
    }
    let sin2 = BigRational::new(cross, &xx * &yy).to_f64().unwrap_or(0.0);
    let cos = (1.0 - sin2).max(0.0).sqrt();
    Ok((2.0 * sin2 / (1.0 + cos)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound {
    /// Smallest δ with `m_ij <= δ m_ik` and `m_ij <= δ m_kj`; `None` when
    /// some entry is not positive.
    #[serde(with = "opt_ratio")]
    pub delta: Option<Rational>,
}

mod opt_ratio {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::ratio::{self, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&ratio::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| ratio::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Largest max/min ratio over rows and columns, generic over fields.
pub fn delta_of<F: Field>(m: &Matrix<F>) -> Option<F> {
    if m.nrows() == 0 || !m.is_positive() {
        return None;
    }
    let lines = m.to_rows().into_iter().chain(m.columns());
    let mut best = F::one();
    for line in lines {
        let mut lo = line[0].clone();
        let mut hi = line[0].clone();
        for x in &line[1..] {
            if *x < lo {
                lo = x.clone();
            }
            if *x > hi {
                hi = x.clone();
            }
        }
        let r = hi / lo;
        if r > best {
            best = r;
        }
    }
    Some(best)
}

pub fn delta_bound(m: &Matrix<BigInt>) -> DeltaBound {
    DeltaBound {
        delta: delta_of(&m.to_rational()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VeechCheck<F> {
    pub lhs: F,
    pub rhs: F,
    pub holds: bool,
}

/// Relative tolerance used by [`veech_inequality_check`].
pub const VEECH_TOL: f64 = 1e-9;

fn positive_image<F: Float + Scalar>(b: &Matrix<F>, u: &[F]) -> Result<Vec<F>, ConeError> {
    if !b.is_positive() {
        return Err(ConeError::NonPositiveMatrix);
    }
    Ok(b.mul_vec(u))
}

/// `D(Bu, Bv)` against `D(u, v) + ln((1 + δ e^{-D(u,v)}) / (1 + δ e^{D(u,v)}))`.
pub fn veech_inequality_check<F: Float + Scalar>(
    b: &Matrix<F>,
    delta: F,
    u: &[F],
    v: &[F],
) -> Result<VeechCheck<F>, ConeError> {
    let (bu, bv) = (positive_image(b, u)?, positive_image(b, v)?);
    let d = projective_distance(u, v)?;
    let lhs = projective_distance(&bu, &bv)?;
    let one = F::one();
    let rhs = d + ((one + delta * (-d).exp()) / (one + delta * d.exp())).ln();
    let tol = F::from(VEECH_TOL).unwrap() * one.max(rhs.abs());
    Ok(VeechCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
    })
}

/// Hilbert projective distance between two positive vectors.
pub fn hilbert_distance<F: Float>(x: &[F], y: &[F]) -> Result<F, ConeError> {
    if x.iter().chain(y).any(|v| *v <= F::zero()) {
        return Err(ConeError::ZeroVector);
    }
    let ratios = x.iter().zip(y).map(|(&p, &q)| p / q);
    let (lo, hi) = ratios.fold((F::infinity(), F::zero()), |(lo, hi), r| {
        (lo.min(r), hi.max(r))
    });
    Ok((hi / lo).ln())
}

/// Birkhoff's contraction in the Hilbert metric: a positive matrix whose
/// row and column ratios are bounded by δ contracts by at least
/// `tanh(ln(δ^2) / 4)`, since its image has Hilbert diameter at most
/// `2 ln δ`. Needs positive `u` and `v`.
pub fn birkhoff_check<F: Float + Scalar>(
    b: &Matrix<F>,
    delta: F,
    u: &[F],
    v: &[F],
) -> Result<VeechCheck<F>, ConeError> {
    let (bu, bv) = (positive_image(b, u)?, positive_image(b, v)?);
    let d = hilbert_distance(u, v)?;
    let lhs = hilbert_distance(&bu, &bv)?;
    let two = F::one() + F::one();
    let rhs = (two * delta.ln() / (two * two)).tanh() * d;
    let tol = F::from(VEECH_TOL).unwrap() * F::one().max(rhs.abs());
    Ok(VeechCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
    })
}

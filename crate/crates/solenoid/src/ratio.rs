//! Exact rationals as `"p/q"` strings, the on-disk form for every length,
//! position and weight.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Always `p/q`, even for integers, so files are uniform.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let d: BigInt = d.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::new(n, d))
}

pub fn is_positive(r: &Rational) -> bool {
    *r > Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `#[serde(with = "crate::ratio::serde_str")]`
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Same, for vectors of rationals.
pub mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for r in [rat(1, 2), rat(-3, 7), int(5), rat(0, 1)] {
            assert_eq!(parse(&format(&r)).unwrap(), r);
        }
        assert_eq!(format(&int(3)), "3/1");
        assert_eq!(parse("4").unwrap(), int(4));
        assert!(parse("1/0").is_err());
        assert!(parse("x/2").is_err());
    }
}

//! Exact rational coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` text form; integers print without a denominator.
pub fn to_text(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_text(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => text.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Best rational approximation of `x` with denominator at most `max_denom`,
/// by continued-fraction convergents and semiconvergents.
pub fn approximate(x: f64, max_denom: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let negative = x < 0.0;
    let mut value = x.abs();
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (0, 1, 1, 0);
    let max_denom = max_denom as i128;
    for _ in 0..64 {
        let a = value.floor();
        if a > 1e18 {
            break;
        }
        let a = a as i128;
        let q2 = q0 + a * q1;
        if q2 > max_denom {
            // Largest admissible semiconvergent.
            let k = (max_denom - q0) / q1;
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            let semi = ps as f64 / qs as f64;
            let conv = p1 as f64 / q1 as f64;
            let (p, q) = if (semi - x.abs()).abs() < (conv - x.abs()).abs() {
                (ps, qs)
            } else {
                (p1, q1)
            };
            return Some(signed(p, q, negative));
        }
        let p2 = p0 + a * p1;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = value - a as f64;
        if frac < 1e-15 {
            break;
        }
        value = 1.0 / frac;
    }
    Some(signed(p1, q1, negative))
}

fn signed(p: i128, q: i128, negative: bool) -> Rational {
    let r = Rational::new(BigInt::from(p), BigInt::from(q));
    if negative {
        -r
    } else {
        r
    }
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

/// Serde adapter storing a rational as its `p/q` text.
pub mod serde_text {
    use super::{parse_text, to_text, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_text(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_text(&text).ok_or_else(|| D::Error::custom(format!("bad rational `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for q in [rat(-3, 2), int(4), rat(1, 36), int(0)] {
            assert_eq!(parse_text(&to_text(&q)), Some(q));
        }
        assert_eq!(parse_text("1/0"), None);
    }

    #[test]
    fn approximates_simple_ratios() {
        assert_eq!(approximate(-1.0, 10_000), Some(int(-1)));
        assert_eq!(approximate(1.0 / 3.0 + 1e-12, 10_000), Some(rat(1, 3)));
        assert_eq!(approximate(-0.125, 10_000), Some(rat(-1, 8)));
        assert_eq!(approximate(std::f64::consts::PI, 100), Some(rat(311, 99)));
    }
}

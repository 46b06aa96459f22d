//! Exact rational arithmetic helpers.
//!
//! All payoffs, transfers, and costs in this crate are `BigRational`; nothing
//! downstream of the parser ever touches floating point. Costs extend the
//! rationals with a single `Infinite` point (an unavailable article), ordered
//! above every finite value.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses the canonical `"p/q"` (or plain integer) form used in environment
/// files. Zero denominators are rejected.
pub fn parse_q(s: &str) -> Result<Q, RationalParseError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(RationalParseError(s.to_string()));
    }
    Q::from_str(t).map_err(|_| RationalParseError(s.to_string()))
}

/// Canonical text form: reduced, `p/q`, or bare `p` when the denominator is 1.
pub fn format_q(x: &Q) -> String {
    x.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?} (expected \"p/q\" or integer)")]
pub struct RationalParseError(pub String);

/// Article presentation cost: finite exact rational or infinite
/// (the article is unavailable in that state).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cost {
    Finite(#[serde(with = "q_string")] Q),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Q::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Q> {
        match self {
            Cost::Finite(x) => Some(x),
            Cost::Infinite => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self, RationalParseError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            Ok(Cost::Infinite)
        } else {
            let v = parse_q(t)?;
            if v.is_negative() {
                return Err(RationalParseError(s.to_string()));
            }
            Ok(Cost::Finite(v))
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(x) => write!(f, "{x}"),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}

impl Add<&Cost> for &Cost {
    type Output = Cost;
    fn add(self, rhs: &Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

/// Challenge-reward internals compare cost differences of the shape
/// `c(E,s) - c(E*,s)`. Rearranged as sums, `inf - inf` never arises; the
/// comparison `a + d < b + c` is total on extended costs.
pub fn diff_lt(a: &Cost, b: &Cost, c: &Cost, d: &Cost) -> bool {
    // a - b < c - d  ⟺  a + d < c + b  (b, d finite in every call site)
    let lhs = a + d;
    let rhs = c + b;
    lhs < rhs
}

pub mod q_string {
    //! serde adaptor serializing rationals as canonical strings.
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let raw = String::deserialize(d)?;
        parse_q(&raw).map_err(serde::de::Error::custom)
    }
}

/// Uniform rational in `[0,1)` with denominator at most `max_denom`:
/// the denominator is drawn uniformly from `1..=max_denom`, the numerator
/// uniformly from `0..denom`.
pub fn sample_unit_q<R: rand::Rng>(rng: &mut R, max_denom: u32) -> Q {
    let d = rng.random_range(1..=max_denom.max(1)) as i64;
    let n = rng.random_range(0..d);
    q(n, d)
}

pub fn half() -> Q {
    q(1, 2)
}

pub fn one() -> Q {
    Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/10", "0", "2", "33/2", "7/18"] {
            let v = parse_q(s).unwrap();
            assert_eq!(format_q(&v), s);
        }
        assert_eq!(format_q(&parse_q("2/4").unwrap()), "1/2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("").is_err());
    }

    #[test]
    fn cost_ordering_puts_infinite_on_top() {
        let fin = Cost::Finite(q(1_000_000, 1));
        assert!(fin < Cost::Infinite);
        assert!(Cost::parse("inf").unwrap() == Cost::Infinite);
        assert!(Cost::parse("-1/2").is_err());
    }

    #[test]
    fn diff_lt_handles_infinities() {
        let z = Cost::zero();
        let c = |n, d| Cost::Finite(q(n, d));
        // 0 - 0 < 1/10 - 0
        assert!(diff_lt(&z, &z, &c(1, 10), &z));
        // inf - 0 < 1 - 0 is false
        assert!(!diff_lt(&Cost::Infinite, &z, &c(1, 1), &z));
        // 1 - 0 < inf - 0
        assert!(diff_lt(&c(1, 1), &z, &Cost::Infinite, &z));
        // inf on both sides of <: false
        assert!(!diff_lt(&Cost::Infinite, &z, &Cost::Infinite, &z));
    }

    #[test]
    fn sampled_units_stay_in_range() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let v = sample_unit_q(&mut rng, 128);
            assert!(v >= Q::zero() && v < Q::one());
            assert!(v.denom() <= &num_bigint::BigInt::from(128));
        }
    }
}

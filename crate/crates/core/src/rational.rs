//! Exact rational arithmetic helpers.
//!
//! Every quantity in this crate that is not a plain count lives in
//! [`Rational`]. Densities, potentials, and competitive thresholds are
//! compared with margins well below what `f64` can resolve, so nothing
//! here is ever routed through floating point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number used throughout the crate.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Shorthand for `num/den` as a [`Rational`].
pub fn ratio(num: i64, den: i64) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer `n` as a [`Rational`].
pub fn integer(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `p/q`, or a decimal literal like `5.2` into an exact rational.
///
/// Decimal literals are read digit-for-digit (`5.2` becomes `26/5`), never
/// through binary floating point.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let p: BigInt = num
            .trim()
            .parse()
            .map_err(|_| RationalParseError::Invalid(s.to_string()))?;
        let q: BigInt = den
            .trim()
            .parse()
            .map_err(|_| RationalParseError::Invalid(s.to_string()))?;
        if q.is_zero() {
            return Err(RationalParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_digits = if int_part.is_empty() { "0" } else { int_part };
        let p: BigInt = int_digits
            .parse()
            .map_err(|_| RationalParseError::Invalid(s.to_string()))?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::Invalid(s.to_string()));
        }
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| RationalParseError::Invalid(s.to_string()))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac_rat = Rational::new(frac, scale);
        let int_rat = Rational::from_integer(p);
        return Ok(if negative {
            int_rat - frac_rat
        } else {
            int_rat + frac_rat
        });
    }
    let p: BigInt = s
        .parse()
        .map_err(|_| RationalParseError::Invalid(s.to_string()))?;
    Ok(Rational::from_integer(p))
}

/// Formats a rational as `p` when integral, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed-point decimal rendering with `digits` fractional places
/// (round-half-away-from-zero), for human-readable reports.
pub fn decimal_string(r: &Rational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let abs_num = r.numer().abs();
    let den = r.denom();
    let rounded = (&abs_num * &scale * 2u8 + den).div_floor(&(den * 2u8));
    let sign = if r.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    let (int_part, frac_part) = rounded.div_rem(&scale);
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!(
            "{sign}{int_part}.{frac:0>width$}",
            frac = frac_part,
            width = digits as usize
        )
    }
}

/// `⌈r⌉` as `u64`; panics if `r` is negative or the ceiling exceeds `u64`.
pub fn ceil_u64(r: &Rational) -> u64 {
    assert!(!r.is_negative(), "ceiling of negative rational");
    r.ceil()
        .to_integer()
        .to_u64()
        .expect("ceiling exceeds u64 range")
}

/// `⌊r⌋` as `u64`; panics if `r` is negative or the floor exceeds `u64`.
pub fn floor_u64(r: &Rational) -> u64 {
    assert!(!r.is_negative(), "floor of negative rational");
    r.floor()
        .to_integer()
        .to_u64()
        .expect("floor exceeds u64 range")
}

/// `⌈(c * num) / den⌉` for integer `num/den`, computed exactly.
pub fn ceil_scaled(c: &Rational, num: u64, den: u64) -> u64 {
    assert!(den > 0);
    ceil_u64(&(c * Rational::new(BigInt::from(num), BigInt::from(den))))
}

/// True when `r` equals the integer `n`.
pub fn equals_u64(r: &Rational, n: u64) -> bool {
    r.is_integer() && r.numer() == &BigInt::from(n)
}

/// Exact rational one. Convenience for call sites that read better with it.
pub fn one() -> Rational {
    Rational::one()
}

//! Coefficient scalars for forms: `f64` for the numeric path and
//! `BigRational` for the exact path.
//!
//! The trait deliberately stays small: ring/field ops via the std operator
//! traits, conversion to/from the JSON coefficient-string representation,
//! and a couple of helpers (`powu`, `abs`) the polynomial code needs. All
//! coefficient strings in the JSON schemas are decimal ("-1.5", "3"); the
//! rational parser reads those exactly and additionally accepts "p/q".

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Scalar usable as a form coefficient.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_u64(v: u64) -> Self;
    fn from_u128(v: u128) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Parse the JSON coefficient-string representation.
    fn parse_coef(s: &str) -> Result<Self>;
    /// Render for the JSON coefficient-string representation.
    fn format_coef(&self) -> String;

    /// Small non-negative integer power by repeated multiplication.
    fn powu(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Coeff for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_u128(v: u128) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn parse_coef(s: &str) -> Result<Self> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Input(format!("bad coefficient {s:?}: {e}")))
    }

    fn format_coef(&self) -> String {
        format!("{self}")
    }

    fn powu(&self, e: u32) -> Self {
        self.powi(e as i32)
    }
}

impl Coeff for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_u128(v: u128) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn parse_coef(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn format_coef(&self) -> String {
        format_rational(self)
    }
}

/// Parse "p/q", "-12.5", "3", or "1e-3" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Input(format!("bad rational coefficient {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    // Decimal with optional exponent: [sign] digits [. digits] [e [sign] digits]
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let negative = int_part.starts_with('-');
    let digits: String = int_part
        .trim_start_matches(['+', '-'])
        .chars()
        .chain(frac_part.chars())
        .collect();
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let mut numer: BigInt = digits.parse().map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    if shift >= 0 {
        Ok(BigRational::from_integer(
            numer * ten.pow(shift as u32),
        ))
    } else {
        Ok(BigRational::new(numer, ten.pow((-shift) as u32)))
    }
}

/// Render a rational as an exact decimal when the denominator is 2^a·5^b,
/// otherwise as "p/q".
pub fn format_rational(r: &BigRational) -> String {
    let r = r.clone().reduced();
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    let mut den = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    // denominator is 2^twos · 5^fives: scale to 10^k and place the point
    let k = twos.max(fives);
    let scaled: BigInt =
        r.numer() * BigInt::from(2).pow(k - twos) * BigInt::from(5).pow(k - fives);
    let negative = scaled.is_negative();
    let mut digits = scaled.magnitude().to_string();
    while digits.len() <= k as usize {
        digits.insert(0, '0');
    }
    digits.insert(digits.len() - k as usize, '.');
    if negative {
        digits.insert(0, '-');
    }
    digits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_decimal_strings_exactly() {
        assert_eq!(rat("1"), BigRational::from_integer(1.into()));
        assert_eq!(rat("-3"), BigRational::from_integer((-3).into()));
        assert_eq!(rat("0.375"), BigRational::new(3.into(), 8.into()));
        assert_eq!(rat("-12.5"), BigRational::new((-25).into(), 2.into()));
        assert_eq!(rat("2/6"), BigRational::new(1.into(), 3.into()));
        assert_eq!(rat("1e-3"), BigRational::new(1.into(), 1000.into()));
        assert_eq!(rat("2.5e2"), BigRational::from_integer(250.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["0.375", "-12.5", "3", "1/3", "-7/12"] {
            let r = rat(s);
            assert_eq!(rat(&r.format_coef()), r, "round trip through {s}");
        }
        assert_eq!(rat("3/8").format_coef(), "0.375");
        assert_eq!(rat("1/3").format_coef(), "1/3");
        assert_eq!(rat("-1/2").format_coef(), "-0.5");
    }

    #[test]
    fn f64_coef_round_trip() {
        for v in [0.1, -3.25, 1e-9, 12345.678] {
            assert_eq!(f64::parse_coef(&v.format_coef()).unwrap(), v);
        }
    }

    #[test]
    fn powu_matches_powi() {
        assert_eq!(Coeff::powu(&1.5f64, 4), 1.5f64.powi(4));
        assert_eq!(rat("1/2").powu(3), rat("1/8"));
        assert_eq!(rat("2").powu(0), rat("1"));
    }
}

//! File formats, experiments, rendering and the command line.

pub mod cli;
pub mod experiment;
pub mod format;
pub mod svg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("cannot read {0:?} as a rational (use p/q or a decimal)")]
pub struct RationalParseError(pub String);

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.05"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let mantissa: BigInt = format!("{whole}{frac}").parse().map_err(|_| err())?;
    let value = BigRational::new(mantissa, BigInt::from(10).pow(frac.len() as u32));
    Ok(if negative { -value } else { value })
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Comma-separated list of rationals.
pub fn parse_rational_list(text: &str) -> Result<Vec<BigRational>, RationalParseError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_rational)
        .collect()
}

pub(crate) fn is_open_unit(value: &BigRational) -> bool {
    value.is_positive() && *value < BigRational::from_integer(1.into())
}

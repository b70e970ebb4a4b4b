//! Exact edge costs.
//!
//! Costs are rationals so that verdicts and ratio checks never depend on
//! floating point. Only the LP works in `f64`.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Cost = Ratio<i64>;

const MAX_FRACTION_DIGITS: usize = 9;

pub fn cost_from_int(v: i64) -> Cost {
    Cost::from_integer(v)
}

pub fn cost_to_f64(c: &Cost) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}

/// Parses `"3"`, `"2.75"` or `"7/3"` exactly.
pub fn parse_cost(text: &str) -> Result<Cost> {
    let t = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a decimal or fraction"));
    if let Some((num, den)) = t.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Cost::new(num, den));
    }
    let (negative, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > MAX_FRACTION_DIGITS {
        return Err(Error::Parse(format!(
            "`{text}` has more than {MAX_FRACTION_DIGITS} fractional digits"
        )));
    }
    let scale = 10i64.pow(frac_part.len() as u32);
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let num = int_val
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac_val))
        .ok_or_else(bad)?;
    let value = Cost::new(num, scale);
    Ok(if negative { -value } else { value })
}

/// Canonical text form: integers and terminating decimals print as decimals,
/// everything else as `num/den`.
pub fn format_cost(c: &Cost) -> String {
    if c.is_integer() {
        return c.to_integer().to_string();
    }
    let den = *c.denom();
    let mut rest = den;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    let digits = twos.max(fives);
    if rest != 1 || digits as usize > MAX_FRACTION_DIGITS {
        return format!("{}/{}", c.numer(), den);
    }
    let scale = 10i64.pow(digits);
    let scaled = (*c * Cost::from_integer(scale)).to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.abs();
    let frac = format!("{:0width$}", abs % scale, width = digits as usize);
    format!("{sign}{}.{}", abs / scale, frac.trim_end_matches('0'))
}

pub fn is_nonnegative(c: &Cost) -> bool {
    *c >= Cost::zero()
}

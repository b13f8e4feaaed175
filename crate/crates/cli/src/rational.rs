//! Exact parsing of numeric parameters: `p/q`, decimals and scientific
//! notation.

use microset_core::Rational;

use crate::error::{CliError, Result};

fn bad(input: &str, reason: impl Into<String>) -> CliError {
    CliError::Number {
        input: input.into(),
        reason: reason.into(),
    }
}

/// Parses a non-negative rational written as `p/q`, an integer or a finite
/// decimal such as `0.125`.
pub fn parse_ratio(input: &str) -> Result<Rational> {
    let s = input.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p
            .trim()
            .parse()
            .map_err(|_| bad(input, "numerator is not an unsigned integer"))?;
        let q: u64 = q
            .trim()
            .parse()
            .map_err(|_| bad(input, "denominator is not an unsigned integer"))?;
        if q == 0 {
            return Err(bad(input, "zero denominator"));
        }
        return Ok(Rational::new(p, q));
    }
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if whole.is_empty() && frac.is_empty() || !(whole.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return Err(bad(input, "expected p/q or a plain decimal"));
    }
    let scale = 10u64
        .checked_pow(frac.len() as u32)
        .ok_or_else(|| bad(input, "too many decimal places"))?;
    let digits = format!("{whole}{frac}");
    let numer: u64 = digits
        .parse()
        .map_err(|_| bad(input, "value does not fit in 64 bits"))?;
    Ok(Rational::new(numer, scale))
}

/// Parses a real parameter. `p/q` is divided once, so `1/3` is the nearest
/// double to one third; anything else goes through the standard float parser.
pub fn parse_real(input: &str) -> Result<f64> {
    let s = input.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad(input, "numerator is not a number"))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| bad(input, "denominator is not a number"))?;
            if q == 0.0 {
                return Err(bad(input, "zero denominator"));
            }
            p / q
        }
        None => s.parse().map_err(|_| bad(input, "not a number"))?,
    };
    if !value.is_finite() {
        return Err(bad(input, "not finite"));
    }
    Ok(value)
}

/// Clap adapter for [`parse_real`].
pub fn real_arg(input: &str) -> std::result::Result<f64, String> {
    parse_real(input).map_err(|e| e.to_string())
}

/// Clap adapter for [`parse_ratio`].
pub fn ratio_arg(input: &str) -> std::result::Result<Rational, String> {
    parse_ratio(input).map_err(|e| e.to_string())
}

/// `p/q` when `x` is exactly such a fraction with a small denominator,
/// otherwise the shortest decimal that reads back as `x`.
pub fn format_real(x: f64) -> String {
    for q in 1..=1024u32 {
        let p = (x * f64::from(q)).round();
        if p.abs() < 1e15 && p / f64::from(q) == x {
            return if q == 1 { format!("{p}") } else { format!("{p}/{q}") };
        }
    }
    format!("{x}")
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

//! Unit-suffixed scalar parsing for config files.
//!
//! Values such as `"45ns"`, `"-10pm"`, `"3dBm"` or `"17ps/nm/km"` are
//! normalized to SI. Bare numbers are taken as already being in SI.

use crate::error::{Error, Result};

/// Physical dimension expected by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Length,
    Frequency,
    Power,
    Bitrate,
    Dispersion,
    Angle,
    Dimensionless,
}

/// Decimal exponent of an SI prefix.
fn prefix(p: &str) -> Option<i32> {
    Some(match p {
        "" => 0,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        "T" => 12,
        _ => return None,
    })
}

/// `value · 10^exp`, correctly rounded (so "4.5ns" is exactly 4.5e-9).
fn shift_decimal(value: f64, exp: i32) -> f64 {
    let text = format!("{value:e}");
    let (mant, e) = text.split_once('e').expect("LowerExp has an exponent");
    let e: i32 = e.parse().expect("LowerExp exponent is an integer");
    format!("{mant}e{}", e + exp).parse().unwrap_or(value * 10f64.powi(exp))
}

fn split_number(text: &str) -> Option<(f64, &str)> {
    let text = text.trim();
    let end = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && text[i + 1..]
                        .chars()
                        .next()
                        .map_or(false, |n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let value: f64 = text[..end].parse().ok()?;
    Some((value, text[end..].trim()))
}

/// Parse `text` as a quantity of the given dimension and return its SI value.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let bad = || Error::invalid(format!("cannot parse `{text}` as {dim:?}"));
    let (value, unit) = split_number(text).ok_or_else(bad)?;
    if unit.is_empty() {
        return Ok(value);
    }
    let scaled = match dim {
        Dimension::Power if unit == "dBm" => 1e-3 * 10f64.powf(value / 10.0),
        Dimension::Dispersion => match unit {
            "ps/nm/km" | "ps/(nm*km)" | "ps/(nm km)" => value * 1e-12 / (1e-9 * 1e3),
            "s/m2" | "s/m^2" => value,
            _ => return Err(bad()),
        },
        Dimension::Angle => match unit {
            "rad" => value,
            "pi" => value * std::f64::consts::PI,
            "deg" => value.to_radians(),
            _ => return Err(bad()),
        },
        Dimension::Dimensionless => return Err(bad()),
        _ => {
            let base = match dim {
                Dimension::Time => "s",
                Dimension::Length => "m",
                Dimension::Frequency => "Hz",
                Dimension::Power => "W",
                Dimension::Bitrate => "bps",
                _ => unreachable!(),
            };
            let p = unit.strip_suffix(base).ok_or_else(bad)?;
            shift_decimal(value, prefix(p).ok_or_else(bad)?)
        }
    };
    Ok(scaled)
}

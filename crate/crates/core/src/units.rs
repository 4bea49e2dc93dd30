//! Quantities with explicit unit suffixes ("4.5 nm", "30 us", "2.87 GHz").

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    /// Stored in nanometres.
    Length,
    /// Stored in seconds.
    Time,
    /// Stored in hertz.
    Frequency,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

impl Dimension {
    /// Unit a bare number is interpreted in, and the unit used in output headers.
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Length => "nm",
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::Dimensionless => "1",
        }
    }
}

enum Scale {
    /// Multiply by 10^n.
    Pow10(i32),
    Factor(f64),
}

fn unit_scale(unit: &str) -> Option<(Dimension, Scale)> {
    use Dimension::*;
    use Scale::*;
    let v = match unit {
        "m" => (Length, Pow10(9)),
        "mm" => (Length, Pow10(6)),
        "um" | "µm" | "μm" => (Length, Pow10(3)),
        "nm" => (Length, Pow10(0)),
        "pm" => (Length, Pow10(-3)),
        "A" | "Å" => (Length, Pow10(-1)),
        "s" => (Time, Pow10(0)),
        "ms" => (Time, Pow10(-3)),
        "us" | "µs" | "μs" => (Time, Pow10(-6)),
        "ns" => (Time, Pow10(-9)),
        "ps" => (Time, Pow10(-12)),
        "h" => (Time, Factor(3600.0)),
        "Hz" => (Frequency, Pow10(0)),
        "kHz" => (Frequency, Pow10(3)),
        "MHz" => (Frequency, Pow10(6)),
        "GHz" => (Frequency, Pow10(9)),
        _ => return None,
    };
    Some(v)
}

/// Shift the decimal exponent of `num` by `n` and parse, so "8.4" with
/// n = -6 gives the double nearest to 8.4e-6.
fn parse_shifted(num: &str, n: i32) -> Option<f64> {
    let (mantissa, exp) = match num.find(['e', 'E']) {
        Some(i) => (&num[..i], num[i + 1..].parse::<i32>().ok()?),
        None => (num, 0),
    };
    format!("{mantissa}e{}", exp + n).parse().ok()
}

/// Parse `"<number> <unit>"` (space optional) into the canonical unit of
/// `expected`. A bare number is taken to already be canonical.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-'
                || ((c == 'e' || c == 'E') && i > 0 && t[i + c.len_utf8()..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let num = num.trim();
    let bad_number = || format!("cannot parse number in {text:?}");
    let unit = unit.trim();
    if unit.is_empty() {
        return num.parse().map_err(|_| bad_number());
    }
    match unit_scale(unit) {
        Some((dim, scale)) if dim == expected => match scale {
            Scale::Pow10(n) => parse_shifted(num, n).ok_or_else(bad_number),
            Scale::Factor(f) => num.parse::<f64>().map(|v| v * f).map_err(|_| bad_number()),
        },
        Some((dim, _)) => Err(format!("expected a {expected} but {unit:?} is a {dim}")),
        None => Err(format!("unknown unit {unit:?}")),
    }
}

/// Either a bare number (canonical unit) or a string with a unit suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn resolve(&self, expected: Dimension) -> Result<f64, String> {
        let v = match self {
            Quantity::Number(v) => *v,
            Quantity::Text(s) => parse_quantity(s, expected)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err("must be finite".into())
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Text(s.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_quantity("4.5 nm", Dimension::Length).unwrap(), 4.5);
        assert!((parse_quantity("30us", Dimension::Time).unwrap() - 30e-6).abs() < 1e-18);
        assert!((parse_quantity("8.4 µs", Dimension::Time).unwrap() - 8.4e-6).abs() < 1e-18);
        assert_eq!(parse_quantity("2.87 GHz", Dimension::Frequency).unwrap(), 2.87e9);
        assert_eq!(parse_quantity("1e-3", Dimension::Time).unwrap(), 1e-3);
        assert_eq!(parse_quantity("1.5e3 Hz", Dimension::Frequency).unwrap(), 1500.0);
        assert_eq!(parse_quantity("0.35ns", Dimension::Time).unwrap(), 0.35e-9);
    }

    #[test]
    fn dimension_mismatch_and_unknown_unit() {
        assert!(parse_quantity("3 nm", Dimension::Time).unwrap_err().contains("length"));
        assert!(parse_quantity("3 furlong", Dimension::Length).unwrap_err().contains("unknown"));
        assert!(parse_quantity("abc", Dimension::Length).is_err());
    }

    #[test]
    fn suffixes_give_the_nearest_double() {
        assert_eq!(parse_quantity("8.4 us", Dimension::Time).unwrap(), 8.4e-6);
        assert_eq!(parse_quantity("30us", Dimension::Time).unwrap(), 3e-5);
        assert_eq!(parse_quantity("0.35 ns", Dimension::Time).unwrap(), 0.35e-9);
        assert_eq!(parse_quantity("2.5e2 ms", Dimension::Time).unwrap(), 0.25);
        assert_eq!(parse_quantity("1.5 h", Dimension::Time).unwrap(), 5400.0);
    }
}

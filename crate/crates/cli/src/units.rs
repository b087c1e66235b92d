//! Unit-suffixed quantities: "120 km", "4 urad", "0.7 dB".

use qnet_core::scenarios::Dim;

/// Accepted unit symbols and their factor to the stored unit.
fn table(dim: Dim) -> &'static [(&'static str, f64)] {
    match dim {
        Dim::Length | Dim::LengthList => &[
            ("m", 1.0),
            ("km", 1e3),
            ("cm", 1e-2),
            ("mm", 1e-3),
            ("um", 1e-6),
            ("µm", 1e-6),
            ("nm", 1e-9),
        ],
        Dim::Angle => &[
            ("rad", 1.0),
            ("mrad", 1e-3),
            ("urad", 1e-6),
            ("µrad", 1e-6),
            ("nrad", 1e-9),
            ("deg", std::f64::consts::PI / 180.0),
        ],
        Dim::Degrees => &[("deg", 1.0), ("rad", 180.0 / std::f64::consts::PI)],
        Dim::Time => &[
            ("s", 1.0),
            ("ms", 1e-3),
            ("us", 1e-6),
            ("µs", 1e-6),
            ("ns", 1e-9),
            ("ps", 1e-12),
            ("min", 60.0),
            ("h", 3600.0),
        ],
        Dim::Frequency => &[
            ("Hz", 1.0),
            ("kHz", 1e3),
            ("MHz", 1e6),
            ("GHz", 1e9),
            ("/s", 1.0),
        ],
        Dim::Decibel => &[("dB", 1.0)],
        Dim::Fraction => &[("%", 1e-2)],
        _ => &[],
    }
}

/// Canonical unit written by the serializer.
pub fn canonical_unit(dim: Dim) -> Option<&'static str> {
    match dim {
        Dim::Length | Dim::LengthList => Some("m"),
        Dim::Angle => Some("rad"),
        Dim::Degrees => Some("deg"),
        Dim::Time => Some("s"),
        Dim::Frequency => Some("Hz"),
        Dim::Decibel => Some("dB"),
        _ => None,
    }
}

pub fn dim_name(dim: Dim) -> &'static str {
    match dim {
        Dim::Length => "a length (m, km, cm, mm, um, nm)",
        Dim::LengthList => "a list of lengths",
        Dim::Angle => "an angle (rad, mrad, urad, nrad, deg)",
        Dim::Degrees => "an angle (deg, rad)",
        Dim::Time => "a duration (s, ms, us, ns, ps, min, h)",
        Dim::Frequency => "a frequency (Hz, kHz, MHz, GHz)",
        Dim::Decibel => "a loss in dB",
        Dim::Fraction => "a fraction (plain number or %)",
        Dim::Count => "a non-negative integer",
        Dim::Seed => "an unsigned 64-bit integer",
        Dim::Number => "a number",
        Dim::NumberList => "a list of numbers",
        Dim::Text => "a string",
        Dim::Table => "a table of wavelength = loss",
    }
}

/// Why a quantity string was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitProblem {
    /// Number could not be read.
    Malformed,
    /// A unit is required but none was given.
    Missing,
    /// Unit belongs to another dimension or is unknown.
    Wrong(String),
}

/// Parses `"<number> <unit>"` into the stored unit of `dim`.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, UnitProblem> {
    let t = text.trim();
    let number = |s: &str| s.trim().replace('_', "").parse::<f64>().ok();
    for (u, f) in table(dim) {
        if let Some(v) = t.strip_suffix(u).and_then(number) {
            return Ok(v * f);
        }
    }
    if let Some(v) = number(t) {
        return match dim {
            Dim::Fraction | Dim::Number | Dim::Count | Dim::Seed | Dim::NumberList => Ok(v),
            _ => Err(UnitProblem::Missing),
        };
    }
    let unit = t
        .trim_start_matches(|c: char| c.is_ascii_digit() || "+-._".contains(c))
        .trim_start_matches(|c: char| c == 'e' || c == 'E')
        .trim_start_matches(|c: char| c.is_ascii_digit() || "+-".contains(c))
        .trim();
    match number(&t[..t.len() - unit.len()]) {
        Some(_) if !unit.is_empty() => Err(UnitProblem::Wrong(unit.to_string())),
        _ => Err(UnitProblem::Malformed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(parse_quantity("120 km", Dim::Length), Ok(1.2e5));
        assert_eq!(parse_quantity("60cm", Dim::Length), Ok(0.6));
        assert_eq!(parse_quantity("1.5e3 m", Dim::Length), Ok(1500.0));
        assert_eq!(parse_quantity("-1 m", Dim::Length), Ok(-1.0));
        assert_eq!(parse_quantity("inf m", Dim::Length), Ok(f64::INFINITY));
        assert_eq!(parse_quantity("-inf m", Dim::Length), Ok(f64::NEG_INFINITY));
    }

    #[test]
    fn rejects() {
        assert_eq!(
            parse_quantity("120", Dim::Length),
            Err(UnitProblem::Missing)
        );
        assert_eq!(
            parse_quantity("3 dB", Dim::Length),
            Err(UnitProblem::Wrong("dB".into()))
        );
        assert_eq!(
            parse_quantity("km", Dim::Length),
            Err(UnitProblem::Malformed)
        );
    }

    #[test]
    fn others() {
        assert_eq!(parse_quantity("10 %", Dim::Fraction), Ok(0.1));
        assert_eq!(parse_quantity("0.98", Dim::Fraction), Ok(0.98));
        assert!((parse_quantity("4 urad", Dim::Angle).unwrap() - 4e-6).abs() < 1e-20);
        assert_eq!(parse_quantity("1 GHz", Dim::Frequency), Ok(1e9));
        assert_eq!(parse_quantity("240 s", Dim::Time), Ok(240.0));
        assert_eq!(parse_quantity("1e-7 dB", Dim::Decibel), Ok(1e-7));
    }
}

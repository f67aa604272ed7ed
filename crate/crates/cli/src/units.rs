//! Physical quantities as they appear in config files: a number followed by
//! a mandatory unit suffix, e.g. `"1 um"`, `"100 uK"`, `"20 ms"`.
//!
//! Parsing is strict. A bare number or an unknown suffix is an error, never
//! a silent default. Values are written back in whichever unit gives the
//! shortest text that parses to the identical value.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("{text:?} has no unit; write it as e.g. \"{example}\" (allowed units: {allowed})")]
    Missing {
        text: String,
        example: &'static str,
        allowed: String,
    },
    #[error("unknown unit {unit:?} in {text:?} (allowed units: {allowed})")]
    Unknown {
        text: String,
        unit: String,
        allowed: String,
    },
    #[error("{0:?} does not start with a finite number")]
    Number(String),
}

/// Split `"1.5e-3 mm"` into `("1.5e-3", "mm")`.
fn split_number(text: &str) -> (&str, &str) {
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let exp_ok = (c == b'e' || c == b'E')
            && i > 0
            && b.get(i + 1)
                .is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'+' || exp_ok {
            i += 1;
        } else {
            break;
        }
    }
    (&text[..i], text[i..].trim())
}

fn parse_with(text: &str, units: &[(&str, f64)], example: &'static str) -> Result<f64, UnitError> {
    let allowed = || units.iter().map(|u| u.0).collect::<Vec<_>>().join(", ");
    let trimmed = text.trim();
    let (num, unit) = split_number(trimmed);
    if unit.is_empty() {
        return Err(UnitError::Missing {
            text: text.to_string(),
            example,
            allowed: allowed(),
        });
    }
    let value: f64 = num.parse().map_err(|_| UnitError::Number(text.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::Number(text.to_string()));
    }
    let scale = units
        .iter()
        .find(|u| u.0 == unit)
        .map(|u| u.1)
        .ok_or_else(|| UnitError::Unknown {
            text: text.to_string(),
            unit: unit.to_string(),
            allowed: allowed(),
        })?;
    Ok(value * scale)
}

/// Shortest `"<number> <unit>"` that parses back to exactly `v`.
fn format_exact(v: f64, units: &[(&str, f64)]) -> String {
    let mut best: Option<String> = None;
    for &(unit, scale) in units.iter().filter(|u| u.0.is_ascii()) {
        for digits in 0..17 {
            let x: f64 = format!("{:.*e}", digits, v / scale).parse().unwrap_or(f64::NAN);
            if x * scale == v {
                let text = format!("{x} {unit}");
                // Shortest first; on a tie prefer a whole number ("100 uK" over "0.1 mK").
                let key = |t: &str| (t.len(), t.contains('.'));
                if best.as_ref().is_none_or(|b| key(&text) < key(b)) {
                    best = Some(text);
                }
                break;
            }
        }
    }
    best.unwrap_or_else(|| format!("{v:e} {}", units[0].0))
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $example:literal, [$(($u:literal, $s:expr)),+ $(,)?]) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
        pub struct $name(f64);

        impl $name {
            pub const UNITS: &'static [(&'static str, f64)] = &[$(($u, $s)),+];

            pub fn from_si(v: f64) -> Self {
                $name(v)
            }

            pub fn si(self) -> f64 {
                self.0
            }
        }

        impl FromStr for $name {
            type Err = UnitError;
            fn from_str(s: &str) -> Result<Self, UnitError> {
                parse_with(s, Self::UNITS, $example).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&format_exact(self.0, Self::UNITS))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl Visitor<'_> for V {
                    type Value = $name;
                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        write!(f, "a string with a unit, e.g. \"{}\"", $example)
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$name, E> {
                        v.parse().map_err(E::custom)
                    }
                }
                d.deserialize_str(V)
            }
        }
    };
}

quantity!(
    /// Length, stored in metres.
    Length, "1 um",
    [("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("μm", 1e-6), ("nm", 1e-9)]
);

quantity!(
    /// Temperature, stored in kelvin. Trap depths are given as `U0 / k_B`.
    Temperature, "100 uK",
    [("K", 1.0), ("mK", 1e-3), ("uK", 1e-6), ("µK", 1e-6), ("μK", 1e-6), ("nK", 1e-9)]
);

quantity!(
    /// Time interval, stored in seconds.
    Duration, "20 ms",
    [("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("μs", 1e-6), ("ns", 1e-9)]
);

quantity!(
    /// Acceleration, stored in m/s^2.
    Acceleration, "1 m/s2",
    [("m/s2", 1.0), ("m/s^2", 1.0)]
);

//! Unit-tagged quantities and sweep grids as written in configs and flags.
//!
//! Frequencies carry an explicit unit: `Hz`, `kHz`, `MHz`, `GHz` are cyclic
//! and get multiplied by 2π, `rad/s` (or `/s`) is taken as is. A leading
//! `2π×`, `2π*`, `2pi*` or `2pi×` may mark a cyclic value as angular; it does
//! not change the number.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const CYCLIC: [(&str, f64); 4] = [("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)];
const ANGULAR: [&str; 2] = ["rad/s", "/s"];
const TWO_PI_PREFIXES: [&str; 4] = ["2π×", "2π*", "2pi×", "2pi*"];

/// Parses a unit-tagged frequency into rad/s.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    let s = text.trim();
    let (marked, s) = match TWO_PI_PREFIXES.iter().find_map(|p| s.strip_prefix(p)) {
        Some(rest) => (true, rest.trim_start()),
        None => (false, s),
    };
    let number = |n: &str| -> Result<f64, String> {
        let v: f64 = n
            .trim()
            .parse()
            .map_err(|_| format!("`{text}` does not start with a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{text}` is not finite"))
        }
    };
    for (unit, scale) in CYCLIC {
        if let Some(n) = s.strip_suffix(unit) {
            return Ok(2.0 * PI * scale * number(n)?);
        }
    }
    for unit in ANGULAR {
        if let Some(n) = s.strip_suffix(unit) {
            if marked {
                return Err(format!("`{text}`: the 2π marker only applies to Hz units"));
            }
            return number(n);
        }
    }
    Err(format!("`{text}` needs a unit tag (Hz, kHz, MHz, GHz or rad/s)"))
}

/// Exact, re-parseable rendering of a value in rad/s.
pub fn format_frequency(rad_per_s: f64) -> String {
    format!("{rad_per_s:e}rad/s")
}

/// A frequency in rad/s that reads and writes as a unit-tagged string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Freq(pub f64);

impl Serialize for Freq {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_frequency(self.0))
    }
}

impl<'de> Deserialize<'de> for Freq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Freq;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a unit-tagged frequency such as \"10MHz\" or \"6.28e7rad/s\"")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Freq, E> {
                parse_frequency(v).map(Freq).map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

/// RF angles in degrees: `start:stop:step` (inclusive) or an explicit list.
#[derive(Clone, Debug, PartialEq)]
pub enum AngleGrid {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl AngleGrid {
    pub fn parse(text: &str) -> Result<AngleGrid, String> {
        if text.contains(':') {
            let parts = split3(text)?;
            let num = |p: &str| -> Result<f64, String> {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{p}` is not an angle in degrees"))
            };
            let grid = AngleGrid::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                step: num(parts[2])?,
            };
            grid.values()?;
            Ok(grid)
        } else {
            let list = text
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("`{p}` is not an angle in degrees"))
                })
                .collect::<Result<Vec<f64>, String>>()?;
            AngleGrid::from_list(list)
        }
    }

    pub fn from_list(list: Vec<f64>) -> Result<AngleGrid, String> {
        if list.is_empty() {
            return Err("angle list is empty".into());
        }
        if list.iter().any(|x| !x.is_finite()) {
            return Err("angles must be finite".into());
        }
        Ok(AngleGrid::List(list))
    }

    pub fn values(&self) -> Result<Vec<f64>, String> {
        match *self {
            AngleGrid::List(ref v) => Ok(v.clone()),
            AngleGrid::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
                    return Err(format!(
                        "`{start}:{stop}:{step}` needs start <= stop and a positive step"
                    ));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|k| start + k as f64 * step).collect())
            }
        }
    }

    pub fn to_spec(&self) -> GridSpec {
        match self {
            AngleGrid::Range { start, stop, step } => GridSpec::Text(format!("{start:e}:{stop:e}:{step:e}")),
            AngleGrid::List(v) => GridSpec::Angles(v.clone()),
        }
    }
}

/// Coupling detunings: `start:stop:count` with unit-tagged endpoints, or an
/// explicit list of unit-tagged values.
#[derive(Clone, Debug, PartialEq)]
pub enum DetuningGrid {
    Range { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl DetuningGrid {
    pub fn parse(text: &str) -> Result<DetuningGrid, String> {
        if text.contains(':') {
            let parts = split3(text)?;
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a point count", parts[2]))?;
            let grid = DetuningGrid::Range {
                start: parse_frequency(parts[0])?,
                stop: parse_frequency(parts[1])?,
                count,
            };
            grid.values()?;
            Ok(grid)
        } else {
            DetuningGrid::from_list(text.split(',').map(str::to_owned).collect())
        }
    }

    pub fn from_list(items: Vec<String>) -> Result<DetuningGrid, String> {
        if items.is_empty() {
            return Err("detuning list is empty".into());
        }
        Ok(DetuningGrid::List(
            items.iter().map(|s| parse_frequency(s)).collect::<Result<_, _>>()?,
        ))
    }

    pub fn values(&self) -> Result<Vec<f64>, String> {
        match *self {
            DetuningGrid::List(ref v) => Ok(v.clone()),
            DetuningGrid::Range { start, stop, count } => match count {
                0 => Err("detuning grid needs at least one point".into()),
                1 if start == stop => Ok(vec![start]),
                1 => Err("a one-point detuning grid needs start = stop".into()),
                _ => {
                    let step = (stop - start) / (count - 1) as f64;
                    Ok((0..count)
                        .map(|k| if k + 1 == count { stop } else { start + k as f64 * step })
                        .collect())
                }
            },
        }
    }

    pub fn to_spec(&self) -> GridSpec {
        match self {
            DetuningGrid::Range { start, stop, count } => GridSpec::Text(format!(
                "{}:{}:{count}",
                format_frequency(*start),
                format_frequency(*stop)
            )),
            DetuningGrid::List(v) => GridSpec::Frequencies(v.iter().map(|&x| format_frequency(x)).collect()),
        }
    }
}

fn split3(text: &str) -> Result<[&str; 3], String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("`{text}` should have the form start:stop:step")),
    }
}

/// A grid as written in a config file, before parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    Angles(Vec<f64>),
    Frequencies(Vec<String>),
}

#[cfg(test)]
mod tests {
    use super::*;

    const MHZ: f64 = 2.0 * PI * 1e6;

    #[test]
    fn frequency_tags() {
        assert_eq!(parse_frequency("10MHz").unwrap(), 10.0 * MHZ);
        assert_eq!(parse_frequency("2π×10MHz").unwrap(), 10.0 * MHZ);
        assert_eq!(parse_frequency("2pi*10 MHz").unwrap(), 10.0 * MHZ);
        assert_eq!(parse_frequency("-60MHz").unwrap(), -60.0 * MHZ);
        assert_eq!(parse_frequency("50kHz").unwrap(), 2.0 * PI * 5e4);
        assert_eq!(parse_frequency("1.5e7rad/s").unwrap(), 1.5e7);
        assert_eq!(parse_frequency("3e2/s").unwrap(), 300.0);
        assert!(parse_frequency("10").is_err());
        assert!(parse_frequency("MHz").is_err());
        assert!(parse_frequency("10mhz").is_err());
        assert!(parse_frequency("2π×5rad/s").is_err());
        assert!(parse_frequency("infMHz").is_err());
    }

    #[test]
    fn formatted_frequencies_round_trip() {
        for x in [0.0, -1.0, 62831853.07179586, 1e-300, 6.02e23, PI] {
            assert_eq!(parse_frequency(&format_frequency(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn angle_grids() {
        let g = AngleGrid::parse("0:355:5").unwrap().values().unwrap();
        assert_eq!(g.len(), 72);
        assert_eq!(g[71], 355.0);
        assert_eq!(
            AngleGrid::parse("0, 45,90").unwrap().values().unwrap(),
            vec![0.0, 45.0, 90.0]
        );
        assert_eq!(AngleGrid::parse("10:10:1").unwrap().values().unwrap(), vec![10.0]);
        assert!(AngleGrid::parse("0:355:0").is_err());
        assert!(AngleGrid::parse("90:0:5").is_err());
        assert!(AngleGrid::parse("0:5").is_err());
        assert!(AngleGrid::parse("a,b").is_err());
    }

    #[test]
    fn detuning_grids() {
        let g = DetuningGrid::parse("-60MHz:60MHz:201").unwrap().values().unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], -60.0 * MHZ);
        assert_eq!(g[100], 0.0);
        assert_eq!(g[200], 60.0 * MHZ);
        let l = DetuningGrid::parse("-1MHz,0Hz").unwrap().values().unwrap();
        assert_eq!(l, vec![-MHZ, 0.0]);
        assert!(DetuningGrid::parse("-60MHz:60MHz:0").is_err());
        assert!(DetuningGrid::parse("-60:60:201").is_err());
    }

    #[test]
    fn grid_specs_round_trip() {
        let a = AngleGrid::parse("0:355:5").unwrap();
        let GridSpec::Text(t) = a.to_spec() else { panic!() };
        assert_eq!(AngleGrid::parse(&t).unwrap().values().unwrap(), a.values().unwrap());
        let d = DetuningGrid::parse("-60MHz:60MHz:201").unwrap();
        let GridSpec::Text(t) = d.to_spec() else { panic!() };
        assert_eq!(DetuningGrid::parse(&t).unwrap(), d);
    }
}

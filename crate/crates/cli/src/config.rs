use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer};

/// Slack used when deciding whether a range endpoint is hit.
const RANGE_SLACK: f64 = 1e-12;

/// A list of values written as `start:end:step` ranges and single numbers,
/// separated by commas, e.g. `0:1:0.25,2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(format!("range `{s}` must have the form start:end:step"));
    };
    let (start, end, step) = (
        parse_number(start)?,
        parse_number(end)?,
        parse_number(step)?,
    );
    if !(step > 0.0) {
        return Err(format!("range `{s}` needs a positive step"));
    }
    if end < start {
        return Err(format!("range `{s}` ends before it starts"));
    }
    let slack = RANGE_SLACK * start.abs().max(end.abs()).max(1.0);
    let span = (end - start) / step;
    let mut count = span.floor() as usize;
    let nearest = span.round();
    let hits_end = (start + nearest * step - end).abs() <= slack;
    if hits_end {
        count = nearest as usize;
    }
    if count > 10_000_000 {
        return Err(format!("range `{s}` has too many points"));
    }
    let mut out: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
    if hits_end {
        *out.last_mut().expect("at least the start") = end;
    }
    Ok(out)
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',') {
            if item.contains(':') {
                out.extend(parse_range(item)?);
            } else {
                out.push(parse_number(item)?);
            }
        }
        Ok(Self(out))
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            One(f64),
            Many(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::One(v) => Ok(Self(vec![v])),
            Raw::Many(v) => Ok(Self(v)),
        }
    }
}

impl Grid {
    /// Values that must be positive integers, such as atom numbers.
    pub fn counts(&self, what: &str) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    bail!("{what} must be positive integers, got {v}")
                }
            })
            .collect()
    }
}

/// Starting state of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialSpec {
    FullyExcited,
    Ground,
    /// Doubled `(J0, M0)`.
    Dicke(u32, i32),
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "fully_excited" => Ok(Self::FullyExcited),
            "ground" => Ok(Self::Ground),
            other => {
                let bad = || {
                    format!("initial state `{other}` must be fully_excited, ground or dicke:2J,2M")
                };
                let rest = other.strip_prefix("dicke:").ok_or_else(bad)?;
                let (j, m) = rest.split_once(',').ok_or_else(bad)?;
                Ok(Self::Dicke(
                    j.trim().parse().map_err(|_| bad())?,
                    m.trim().parse().map_err(|_| bad())?,
                ))
            }
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FullyExcited => write!(f, "fully_excited"),
            Self::Ground => write!(f, "ground"),
            Self::Dicke(j, m) => write!(f, "dicke:{j},{m}"),
        }
    }
}

impl<'de> Deserialize<'de> for InitialSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Read a JSON config file whose keys are the long flag names.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Fail early if the output file could not be created later.
pub fn check_output(path: Option<&PathBuf>) -> Result<()> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                bail!("output directory {} does not exist", dir.display());
            }
        }
        if p.is_dir() {
            bail!("output path {} is a directory", p.display());
        }
    }
    Ok(())
}

/// `dgamma` from whichever of `gamma` / `dgamma` is given (flags first, then the file).
pub fn resolve_dgamma(
    flags: (Option<f64>, Option<f64>),
    file: (Option<f64>, Option<f64>),
    default: f64,
) -> Result<f64> {
    let (gamma, dgamma) = if flags.0.is_some() || flags.1.is_some() {
        flags
    } else {
        file
    };
    match (gamma, dgamma) {
        (Some(_), Some(_)) => bail!("give either gamma or dgamma, not both"),
        (Some(g), None) => Ok(1.0 - g),
        (None, Some(dg)) => Ok(dg),
        (None, None) => Ok(default),
    }
}

/// Take each option from the flags when present, otherwise from the config file.
macro_rules! merge {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $( $flags.$field = $flags.$field.take().or($file.$field.take()); )*
    };
}
pub(crate) use merge;

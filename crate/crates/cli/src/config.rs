//! Settings resolution: flags, then the `--config` file, then defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub trait Overlay {
    /// Fill every unset field of `self` from `lower`.
    fn overlay(self, lower: Self) -> Self;
}

macro_rules! overlay_fields {
    ($t:ty; $($f:ident),+ $(,)?) => {
        impl $crate::config::Overlay for $t {
            fn overlay(mut self, lower: Self) -> Self {
                $(
                    if self.$f.is_none() {
                        self.$f = lower.$f;
                    }
                )+
                self
            }
        }
    };
}
pub(crate) use overlay_fields;

/// Settings for `command` from a JSON file: its `command` section if there is
/// one, otherwise the whole object.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let err = |e: &dyn fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| err(&e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(&e))?;
    if let Some(section) = value.get_mut(command).filter(|s| s.is_object()) {
        value = section.take();
    }
    serde_json::from_value(value).map_err(|e| err(&e))
}

/// Output header recording the resolved settings.
pub fn header<T: Serialize>(command: &str, settings: &T) -> CliResult<String> {
    Ok(format!(
        "# sbc {} {command}\n# config {}\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(settings)?
    ))
}

/// List of `α` values, written `a,b,c` or `start:stop:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AlphaSource")]
pub struct AlphaList(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum AlphaSource {
    List(Vec<f64>),
    Number(f64),
    Text(String),
}

impl From<AlphaSource> for AlphaList {
    fn from(s: AlphaSource) -> Self {
        match s {
            AlphaSource::List(v) => Self(v),
            AlphaSource::Number(a) => Self(vec![a]),
            // Invalid text yields an empty list, rejected at resolution.
            AlphaSource::Text(t) => t.parse().unwrap_or(Self(Vec::new())),
        }
    }
}

/// Round to 12 decimals so grid points such as `1` come out exact.
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl FromStr for AlphaList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad alpha {t:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [start, stop, step] => {
                let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
                if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(format!("bad alpha range {s:?}"));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                Ok(Self((0..=n).map(|k| snap(a + k as f64 * h)).collect()))
            }
            [_] => s.split(',').map(num).collect::<Result<_, _>>().map(Self),
            _ => Err(format!("alphas must be a list or start:stop:step, got {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_hit_round_values() {
        let a: AlphaList = "0.99:1.01:0.002".parse().unwrap();
        assert_eq!(a.0.len(), 11);
        assert_eq!(a.0[5], 1.0);
        assert_eq!(a.0[6], 1.002);
        assert_eq!(a.0[10], 1.01);
        let b: AlphaList = "0.9,1.1".parse().unwrap();
        assert_eq!(b.0, vec![0.9, 1.1]);
        assert!("1:0:0.1".parse::<AlphaList>().is_err());
        assert!("x".parse::<AlphaList>().is_err());
    }

    #[test]
    fn file_values_accept_text_lists_and_numbers() {
        let a: AlphaList = serde_json::from_str("\"1:1.004:0.002\"").unwrap();
        assert_eq!(a.0, vec![1.0, 1.002, 1.004]);
        let b: AlphaList = serde_json::from_str("[0.99, 1]").unwrap();
        assert_eq!(b.0, vec![0.99, 1.0]);
        let c: AlphaList = serde_json::from_str("1.06").unwrap();
        assert_eq!(c.0, vec![1.06]);
    }
}

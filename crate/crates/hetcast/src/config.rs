//! JSON scenario and degree-distribution files.
//!
//! Fractions may be written as JSON numbers, decimal strings or `"a/b"`
//! strings, so a demand reads naturally as `"15/16"`.
//!
//! A scenario file:
//!
//! ```json
//! { "N": 1024, "payload_bytes": 32,
//!   "users": [ { "z": "15/16", "eps": 0.1, "label": "near" },
//!              { "z": "9/16",  "eps": 0.5 } ] }
//! ```
//!
//! A distribution file holds a `degrees` entry, either an object keyed by
//! degree or a list of `[degree, probability]` pairs. A bare object or list
//! is accepted too, which also makes the output of `hetcast optimize`
//! loadable as is.

use std::path::Path;

use hetcast_core::{DegreeDistribution, Scenario, User};
use serde_json::Value;

/// Payload size used when a scenario file omits it.
pub const DEFAULT_PAYLOAD_BYTES: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    /// A specific field is missing or has an unusable value.
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

/// Parses `"0.25"`, `"1/4"` or `" 3 / 16 "`.
pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {s:?}"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            a / b
        }
        None => s
            .parse()
            .map_err(|_| format!("{s:?} is not a number or a/b fraction"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn fraction_value(v: &Value, field: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ConfigError::field(field, "number out of range")),
        Value::String(s) => parse_fraction(s).map_err(|m| ConfigError::field(field, m)),
        other => Err(ConfigError::field(
            field,
            format!(
                "expected a number or fraction string, found {}",
                kind(other)
            ),
        )),
    }
}

fn count_value(v: &Value, field: &str) -> Result<usize, ConfigError> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| {
            ConfigError::field(field, format!("expected a nonnegative integer, found {v}"))
        })
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    /// One entry per user; unlabeled users get `None`.
    pub labels: Vec<Option<String>>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_value(&read_json(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let v = serde_json::from_str(text).map_err(|source| ConfigError::Json {
            path: "<string>".into(),
            source,
        })?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, ConfigError> {
        let obj = v.as_object().ok_or_else(|| {
            ConfigError::field("<root>", format!("expected an object, found {}", kind(v)))
        })?;
        let (n_key, n_val) = ["N", "n"]
            .iter()
            .find_map(|k| obj.get(*k).map(|v| (*k, v)))
            .ok_or_else(|| ConfigError::field("N", "missing"))?;
        let n = count_value(n_val, n_key)?;
        if n == 0 {
            return Err(ConfigError::field(n_key, "must be at least 1"));
        }
        let payload_bytes = match obj.get("payload_bytes") {
            Some(v) => count_value(v, "payload_bytes")?,
            None => DEFAULT_PAYLOAD_BYTES,
        };
        let users_val = obj
            .get("users")
            .ok_or_else(|| ConfigError::field("users", "missing"))?;
        let list = users_val.as_array().ok_or_else(|| {
            ConfigError::field(
                "users",
                format!("expected an array, found {}", kind(users_val)),
            )
        })?;
        if list.is_empty() {
            return Err(ConfigError::field("users", "empty"));
        }
        let mut users = Vec::with_capacity(list.len());
        let mut labels = Vec::with_capacity(list.len());
        for (i, u) in list.iter().enumerate() {
            let at = |f: &str| format!("users[{i}].{f}");
            let uo = u.as_object().ok_or_else(|| {
                ConfigError::field(
                    format!("users[{i}]"),
                    format!("expected an object, found {}", kind(u)),
                )
            })?;
            let z_val = uo
                .get("z")
                .ok_or_else(|| ConfigError::field(at("z"), "missing"))?;
            let z = fraction_value(z_val, &at("z"))?;
            if !(z > 0.0 && z <= 1.0) {
                return Err(ConfigError::field(
                    at("z"),
                    format!("demand {z} outside (0, 1]"),
                ));
            }
            let eps_val = uo
                .get("eps")
                .ok_or_else(|| ConfigError::field(at("eps"), "missing"))?;
            let eps = fraction_value(eps_val, &at("eps"))?;
            if !(0.0..=1.0).contains(&eps) {
                return Err(ConfigError::field(
                    at("eps"),
                    format!("erasure rate {eps} outside [0, 1]"),
                ));
            }
            let label = match uo.get("label") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(other) => {
                    return Err(ConfigError::field(
                        at("label"),
                        format!("expected a string, found {}", kind(other)),
                    ))
                }
            };
            users.push(User::new(z, eps));
            labels.push(label);
        }
        let scenario = Scenario::new(n, payload_bytes, users)
            .map_err(|e| ConfigError::field("<root>", e.to_string()))?;
        Ok(Self { scenario, labels })
    }
}

/// Loads a degree distribution file.
pub fn load_distribution(path: &Path) -> Result<DegreeDistribution, ConfigError> {
    distribution_from_value(&read_json(path)?)
}

pub fn distribution_from_value(v: &Value) -> Result<DegreeDistribution, ConfigError> {
    let (body, field) = match v.get("degrees") {
        Some(inner) => (inner, "degrees"),
        None => (v, "<root>"),
    };
    let mut pairs = Vec::new();
    match body {
        Value::Object(map) => {
            for (k, p) in map {
                let at = format!("{field}.{k}");
                let d: usize = k
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError::field(&at, "degree key is not a positive integer"))?;
                pairs.push((d, fraction_value(p, &at)?));
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                let at = format!("{field}[{i}]");
                let pair = item.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    ConfigError::field(&at, "expected a [degree, probability] pair")
                })?;
                pairs.push((count_value(&pair[0], &at)?, fraction_value(&pair[1], &at)?));
            }
        }
        other => {
            return Err(ConfigError::field(
                field,
                format!(
                    "expected an object or array of pairs, found {}",
                    kind(other)
                ),
            ))
        }
    }
    if pairs.is_empty() {
        return Err(ConfigError::field(field, "no degrees"));
    }
    DegreeDistribution::from_pairs(&pairs).map_err(|e| ConfigError::field(field, e.to_string()))
}

/// JSON form of a distribution, keyed by degree, omitting zero entries.
pub fn distribution_to_value(dist: &DegreeDistribution) -> Value {
    let map = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| ((i + 1).to_string(), Value::from(*p)))
        .collect::<serde_json::Map<_, _>>();
    Value::Object(map)
}

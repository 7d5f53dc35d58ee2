//! Experiment parameters: schema, defaults, JSON config files and flag overrides.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Float,
    Int,
    /// Comma-separated reals.
    FloatList,
    /// Comma-separated `a:b:theta` triples.
    TripleList,
    Text,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Float => "real",
            Kind::Int => "integer",
            Kind::FloatList => "comma-separated reals",
            Kind::TripleList => "comma-separated a:b:theta triples",
            Kind::Text => "text",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub doc: &'static str,
}

/// Resolved parameter values, kept in their textual form so that every
/// source (defaults, file, flags) goes through the same parser.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}

fn parse_float(key: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().or_else(|_| usage(format!("--{key}: '{s}' is not a real number")))
}

fn parse_int(key: &str, s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    // Accept `1e6` style counts.
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 => Ok(v as u64),
        _ => usage(format!("--{key}: '{s}' is not a nonnegative integer")),
    }
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    let out = s.split(',').map(|p| parse_float(key, p)).collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return usage(format!("--{key}: empty list"));
    }
    Ok(out)
}

fn parse_triples(key: &str, s: &str) -> Result<Vec<(f64, f64, f64)>> {
    s.split(',')
        .map(|t| {
            let parts = t.split(':').map(|p| parse_float(key, p)).collect::<Result<Vec<_>>>()?;
            match parts[..] {
                [a, b, theta] => Ok((a, b, theta)),
                _ => usage(format!("--{key}: '{t}' is not an a:b:theta triple")),
            }
        })
        .collect()
}

fn validate(spec: &ParamSpec, s: &str) -> Result<()> {
    match spec.kind {
        Kind::Float => parse_float(spec.key, s).map(drop),
        Kind::Int => parse_int(spec.key, s).map(drop),
        Kind::FloatList => parse_list(spec.key, s).map(drop),
        Kind::TripleList => parse_triples(spec.key, s).map(drop),
        Kind::Text => Ok(()),
    }
}

fn json_to_text(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Array(items) => {
            let parts = items.iter().map(|i| json_to_text(key, i)).collect::<Result<Vec<_>>>()?;
            Ok(parts.join(","))
        }
        _ => usage(format!("config key '{key}': expected a number, string or array")),
    }
}

impl Params {
    /// Defaults from `schema`, then `file` entries, then `flags`; later
    /// sources win. Unknown keys and malformed values are usage errors.
    pub fn resolve(schema: &[ParamSpec], file: &Map<String, Value>, flags: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            schema.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect();
        let mut set = |key: &str, text: String| -> Result<()> {
            let Some(spec) = schema.iter().find(|p| p.key == key) else {
                return usage(format!("unknown parameter '{key}'"));
            };
            validate(spec, &text)?;
            values.insert(key.to_string(), text);
            Ok(())
        };
        for (k, v) in file {
            set(k, json_to_text(k, v)?)?;
        }
        for (k, v) in flags {
            set(k, v.clone())?;
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).unwrap_or_else(|| panic!("parameter '{key}' missing from schema"))
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        parse_float(key, self.raw(key))
    }

    pub fn int(&self, key: &str) -> Result<u64> {
        parse_int(key, self.raw(key))
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.raw(key))
    }

    pub fn triples(&self, key: &str) -> Result<Vec<(f64, f64, f64)>> {
        parse_triples(key, self.raw(key))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Reads a flat JSON object of parameter values.
pub fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str::<Value>(&text)? {
        Value::Object(map) => Ok(map),
        _ => usage(format!("{}: config must be a JSON object", path.display())),
    }
}

/// Human-readable schema listing.
pub fn schema_text(name: &str, schema: &[ParamSpec]) -> String {
    let mut out = format!("parameters of '{name}':\n");
    for p in schema {
        let _ = writeln!(out, "  --{:<14} {:<34} default {:<22} {}", p.key.replace('_', "-"), p.kind.describe(), p.default, p.doc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[ParamSpec] = &[
        ParamSpec { key: "z", kind: Kind::FloatList, default: "1.5", doc: "" },
        ParamSpec { key: "n", kind: Kind::Int, default: "1000", doc: "" },
        ParamSpec { key: "points", kind: Kind::TripleList, default: "0:0:1", doc: "" },
    ];

    #[test]
    fn flags_override_file_override_defaults() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"z": [3, 4], "n": 50}"#).unwrap();
        let p = Params::resolve(SCHEMA, &file, &[("n".into(), "1e6".into())]).unwrap();
        assert_eq!(p.floats("z").unwrap(), vec![3.0, 4.0]);
        assert_eq!(p.int("n").unwrap(), 1_000_000);
        assert_eq!(p.triples("points").unwrap(), vec![(0.0, 0.0, 1.0)]);
    }

    #[test]
    fn bad_input_is_a_usage_error() {
        let empty = Map::new();
        for flags in [[("q".to_string(), "1".to_string())], [("n".to_string(), "-3".to_string())], [("points".to_string(), "1:2".to_string())]] {
            assert!(matches!(Params::resolve(SCHEMA, &empty, &flags), Err(Error::Usage(_))));
        }
    }
}

//! Flat-key scenario configuration: defaults, then the TOML file, then
//! command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;
use crate::scenarios::{find, ScenarioDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    FloatList,
    IntList,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Float => "float",
            Kind::Int => "integer",
            Kind::FloatList => "list of floats",
            Kind::IntList => "list of integers",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    Int(i64),
    FloatList(Vec<f64>),
    IntList(Vec<i64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::FloatList(v) => write!(f, "{v:?}"),
            Value::IntList(v) => write!(f, "{v:?}"),
        }
    }
}

/// One configurable parameter of a scenario.
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: fn() -> Value,
    pub help: &'static str,
}

/// Converts a TOML value to `kind`; integers are accepted where floats are
/// expected, and a scalar where a list is expected.
fn coerce(kind: Kind, v: &toml::Value) -> Option<Value> {
    let float = |v: &toml::Value| match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    let int = |v: &toml::Value| v.as_integer();
    match (kind, v) {
        (Kind::Float, v) => float(v).map(Value::Float),
        (Kind::Int, v) => int(v).map(Value::Int),
        (Kind::FloatList, toml::Value::Array(a)) => a.iter().map(float).collect::<Option<_>>().map(Value::FloatList),
        (Kind::IntList, toml::Value::Array(a)) => a.iter().map(int).collect::<Option<_>>().map(Value::IntList),
        (Kind::FloatList, v) => float(v).map(|x| Value::FloatList(vec![x])),
        (Kind::IntList, v) => int(v).map(|x| Value::IntList(vec![x])),
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub scenario: String,
    pub output_dir: PathBuf,
    pub params: BTreeMap<String, Value>,
}

impl Config {
    pub fn float(&self, key: &str) -> f64 {
        match self.params.get(key) {
            Some(Value::Float(v)) => *v,
            other => panic!("parameter {key} is not a float: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.params.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("parameter {key} is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        match self.params.get(key) {
            Some(Value::FloatList(v)) => v.clone(),
            other => panic!("parameter {key} is not a float list: {other:?}"),
        }
    }

    pub fn usizes(&self, key: &str) -> Vec<usize> {
        match self.params.get(key) {
            Some(Value::IntList(v)) => v.iter().map(|&x| x as usize).collect(),
            other => panic!("parameter {key} is not an integer list: {other:?}"),
        }
    }
}

/// Raw key/value pairs before resolution.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub values: BTreeMap<String, toml::Value>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::validation(format!("config: {e}")))?;
        let mut raw = RawConfig::default();
        for (key, value) in table {
            match key.as_str() {
                "scenario" => {
                    let s = value
                        .as_str()
                        .ok_or_else(|| CliError::validation("config: scenario must be a string"))?;
                    raw.scenario = Some(s.to_string());
                }
                "output_dir" => {
                    let s = value
                        .as_str()
                        .ok_or_else(|| CliError::validation("config: output_dir must be a string"))?;
                    raw.output_dir = Some(PathBuf::from(s));
                }
                _ => {
                    if value.is_table() {
                        return Err(CliError::validation(format!(
                            "config: {key}: nested tables are not allowed"
                        )));
                    }
                    raw.values.insert(key, value);
                }
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("config: cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `--key value` / `--key=value` pairs on top of the file values.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(flag) = arg.strip_prefix("--") else {
                return Err(CliError::validation(format!("unexpected argument '{arg}'")));
            };
            let (key, text) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = args
                        .get(i + 1)
                        .ok_or_else(|| CliError::validation(format!("--{flag} needs a value")))?;
                    i += 1;
                    (flag.to_string(), v.clone())
                }
            };
            i += 1;
            match key.as_str() {
                "scenario" => self.scenario = Some(text),
                "output_dir" | "out" => self.output_dir = Some(PathBuf::from(text)),
                _ => {
                    self.values.insert(key, parse_literal(&text));
                }
            }
        }
        Ok(())
    }

    /// Fills defaults and checks every key and type against the scenario.
    pub fn resolve(&self, scenario: &str) -> Result<Config, CliError> {
        let def: &ScenarioDef = find(scenario)
            .ok_or_else(|| CliError::validation(format!("unknown scenario '{scenario}' (see `kzchain list`)")))?;
        if let Some(s) = &self.scenario {
            if s != scenario {
                return Err(CliError::validation(format!(
                    "config is for scenario '{s}', not '{scenario}'"
                )));
            }
        }
        for key in self.values.keys() {
            if !def.params.iter().any(|p| p.key == key) {
                return Err(CliError::validation(format!("{scenario}: unknown parameter '{key}'")));
            }
        }
        let mut params = BTreeMap::new();
        for p in def.params {
            let v = match self.values.get(p.key) {
                Some(raw) => coerce(p.kind, raw).ok_or_else(|| {
                    CliError::validation(format!(
                        "{scenario}: parameter '{}' must be a {}, got {raw}",
                        p.key, p.kind
                    ))
                })?,
                None => (p.default)(),
            };
            params.insert(p.key.to_string(), v);
        }
        let config = Config {
            scenario: scenario.to_string(),
            output_dir: self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(scenario)),
            params,
        };
        (def.check)(&config).map_err(|m| CliError::validation(format!("{scenario}: {m}")))?;
        Ok(config)
    }
}

/// A command-line value read as a TOML literal, or a string if it is not one.
fn parse_literal(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

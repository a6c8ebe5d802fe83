//! Flat `key = value` experiment configuration with typed access.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A recognised key, its default, and a one-line description.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(key: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, default, help }
}

/// Resolved configuration: every key of the schema has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// All defaults for a schema.
    pub fn defaults(experiment: &str, schema: &[KeySpec]) -> Self {
        Self {
            experiment: experiment.to_string(),
            values: schema
                .iter()
                .map(|k| (k.key.to_string(), k.default.to_string()))
                .collect(),
        }
    }

    /// Parses `key = value` lines (blank lines and `#` comments allowed).
    /// A line `experiment = name` must match when present.
    pub fn parse(experiment: &str, schema: &[KeySpec], text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment, schema);
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{origin}:{}: expected `key = value`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "experiment" {
                if v != experiment {
                    return Err(Error::Config(format!(
                        "{origin}:{}: config is for `{v}`, not `{experiment}`",
                        no + 1
                    )));
                }
                continue;
            }
            cfg.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{origin}:{}: {msg}", no + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(experiment: &str, schema: &[KeySpec], path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(experiment, schema, &text, &path.display().to_string())
    }

    /// Overrides one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown key `{key}` for experiment `{}`",
                self.experiment
            ))),
        }
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("`{key}` = `{v}` is not {what}")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parsed(key, "a nonnegative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parsed(key, "a nonnegative integer")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parsed(key, "a number")?;
        if !v.is_finite() {
            return Err(Error::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parsed(key, "true or false")
    }

    pub fn string(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.to_string())
    }

    /// `None` for `auto`, otherwise a number.
    pub fn f64_or_auto(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key)? == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Vec<T>> {
        let v = self.raw(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: `{s}` is not {what}")))
            })
            .collect()
    }

    /// Comma list; `a..b` expands to the inclusive integer range.
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.raw(key)?;
        if let Some((a, b)) = v.split_once("..") {
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("`{key}`: bad range `{v}`")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(Error::Config(format!("`{key}`: empty range `{v}`")));
            }
            return Ok((a..=b).collect());
        }
        self.list(key, "a nonnegative integer")
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key, "a number")
    }

    /// Canonical text: sorted keys, one per line, after the experiment id.
    pub fn to_text(&self) -> String {
        let mut s = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Help text listing every key of a schema.
pub fn schema_help(schema: &[KeySpec]) -> String {
    let width = schema.iter().map(|k| k.key.len()).max().unwrap_or(0);
    let mut s = String::new();
    for k in schema {
        let _ = writeln!(s, "  {:width$}  {} (default: {})", k.key, k.help, k.default);
    }
    s
}

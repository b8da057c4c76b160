//! Flat-key TOML configuration with `key=value` overrides.
//!
//! Every value a command reads is recorded together with where it came
//! from, so outputs can echo the fully resolved configuration. Keys that are
//! unknown, or known but unused by the command, are errors.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimators::{Method, DEFAULT_BUDGET};
use crate::experiments::{linear_grid, ExperimentConfig};
use crate::model::{Family, ModelSpec};

pub const KNOWN_KEYS: &[&str] = &[
    "family",
    "mu_hat",
    "sigma_hat",
    "M",
    "N",
    "k",
    "h",
    "m",
    "seed",
    "trials",
    "gamma",
    "gamma_min",
    "gamma_max",
    "steps",
    "gamma_grid",
    "sizes",
    "n",
    "estimator",
    "budget",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    File,
    Override,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::File => "file",
            Source::Override => "override",
            Source::Default => "default",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub key: String,
    pub value: Value,
    pub source: Source,
}

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, (Value, Source)>,
    used: RefCell<BTreeMap<String, Resolved>>,
}

impl Config {
    /// Reads `path` (if any) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut config = Config::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            config.merge_str(&text, Source::File)?;
        }
        for item in overrides {
            config.set_override(item)?;
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut config = Config::default();
        config.merge_str(text, Source::File)?;
        Ok(config)
    }

    fn merge_str(&mut self, text: &str, source: Source) -> Result<()> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        for (key, value) in table {
            self.insert(key, value, source)?;
        }
        Ok(())
    }

    fn insert(&mut self, key: String, value: Value, source: Source) -> Result<()> {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::config(key, "unknown key"));
        }
        if matches!(value, Value::Table(_)) {
            return Err(Error::config(key, "nested tables are not allowed"));
        }
        self.values.insert(key, (value, source));
        Ok(())
    }

    /// Applies one `key=value` override. Values are read as TOML, falling
    /// back to a bare string.
    pub fn set_override(&mut self, item: &str) -> Result<()> {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item, "override must look like key=value"))?;
        let key = key.trim().to_string();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        self.insert(key, value, Source::Override)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        let (value, source) = self.values.get(key)?;
        self.used.borrow_mut().insert(
            key.to_string(),
            Resolved {
                key: key.to_string(),
                value: value.clone(),
                source: *source,
            },
        );
        Some(value)
    }

    fn record_default(&self, key: &str, value: Value) {
        self.used.borrow_mut().entry(key.to_string()).or_insert(Resolved {
            key: key.to_string(),
            value,
            source: Source::Default,
        });
    }

    fn require(&self, key: &str) -> Result<&Value> {
        self.lookup(key).ok_or_else(|| Error::config(key, "missing required key"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        as_f64(key, self.require(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.lookup(key) {
            Some(v) => as_f64(key, v),
            None => {
                self.record_default(key, Value::Float(default));
                Ok(default)
            }
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        as_u64(key, self.require(key)?)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.lookup(key) {
            Some(v) => as_u64(key, v),
            None => {
                self.record_default(key, Value::Integer(default as i64));
                Ok(default)
            }
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        match self.require(key)? {
            Value::String(s) => Ok(s),
            other => Err(Error::config(key, format!("expected a string, got {}", other.type_str()))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.require(key)? {
            Value::Array(items) => items.iter().map(|v| as_f64(key, v)).collect(),
            other => Err(Error::config(key, format!("expected an array, got {}", other.type_str()))),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        match self.require(key)? {
            Value::Array(items) => items.iter().map(|v| as_u64(key, v).map(|x| x as usize)).collect(),
            other => Err(Error::config(key, format!("expected an array, got {}", other.type_str()))),
        }
    }

    /// Fails on the first supplied key that the command never read.
    pub fn finish(&self, command: &str) -> Result<()> {
        let used = self.used.borrow();
        match self.values.iter().find(|(key, (_, source))| {
            *source != Source::Default && !used.contains_key(key.as_str())
        }) {
            Some((key, _)) => Err(Error::config(key.as_str(), format!("not used by `{command}`"))),
            None => Ok(()),
        }
    }

    /// Every value read so far, in key order.
    pub fn resolved(&self) -> Vec<Resolved> {
        self.used.borrow().values().cloned().collect()
    }

    /// `key = value  # source` lines for the resolved configuration.
    pub fn echo(&self) -> Vec<String> {
        self.resolved()
            .iter()
            .map(|r| format!("{} = {}  # {}", r.key, r.value, r.source))
            .collect()
    }

    /// Short SHA-256 digest of the resolved keys and values.
    pub fn hash(&self) -> String {
        let canonical: String = self
            .resolved()
            .iter()
            .map(|r| format!("{}={}\n", r.key, r.value))
            .collect();
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn family(&self) -> Result<Family> {
        self.str("family")?
            .parse()
            .map_err(|_| Error::config("family", "expected prem, wsbm or hwsbm"))
    }

    /// Size key for `family`: `M` for the energy model, `N` otherwise.
    fn size_key(family: Family) -> &'static str {
        match family {
            Family::Prem => "M",
            _ => "N",
        }
    }

    /// Family and sizes: `(family, size, k, h)`.
    pub fn shape(&self) -> Result<(Family, usize, usize, Option<usize>)> {
        let family = self.family()?;
        let size = self.usize(Self::size_key(family))?;
        let k = self.usize("k")?;
        if k < 1 {
            return Err(Error::config("k", "must be at least 1"));
        }
        let h = match family {
            Family::Prem => None,
            Family::Wsbm => {
                if let Some(v) = self.lookup("h") {
                    if as_u64("h", v)? != 2 {
                        return Err(Error::config("h", "wsbm has h = 2"));
                    }
                }
                Some(2)
            }
            Family::Hwsbm => Some(self.usize("h")?),
        };
        if let Some(h) = h {
            if h < 1 {
                return Err(Error::config("h", "must be at least 1"));
            }
            if h > k {
                return Err(Error::config("h", format!("h = {h} exceeds k = {k}")));
            }
            if k >= size {
                return Err(Error::config("k", format!("k = {k} must be below N = {size}")));
            }
        }
        Ok((family, size, k, h))
    }

    fn sigma_hat(&self) -> Result<f64> {
        let sigma_hat = self.f64_or("sigma_hat", 1.0)?;
        if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
            return Err(Error::config("sigma_hat", "must be positive"));
        }
        Ok(sigma_hat)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let (family, size, k, h) = self.shape()?;
        let sigma_hat = self.sigma_hat()?;
        let mu_hat = self.f64("mu_hat")?;
        ModelSpec {
            family,
            mu_hat,
            sigma_hat,
            size,
            k,
            h,
        }
        .validated()
        .map_err(|e| Error::config(Self::size_key(family), e.to_string()))
    }

    pub fn estimator(&self, family: Family) -> Result<Method> {
        match self.lookup("estimator") {
            Some(Value::String(s)) => s.parse().map_err(|_| Error::config("estimator", "expected topk, exhaustive or bnb")),
            Some(other) => Err(Error::config("estimator", format!("expected a string, got {}", other.type_str()))),
            None => {
                let method = if family == Family::Prem { Method::TopK } else { Method::Exhaustive };
                self.record_default("estimator", Value::String(method.as_str().into()));
                Ok(method)
            }
        }
    }

    pub fn budget(&self) -> Result<u128> {
        self.u64_or("budget", DEFAULT_BUDGET as u64).map(u128::from)
    }

    pub fn gamma_grid(&self) -> Result<Vec<f64>> {
        if self.contains("gamma_grid") {
            for key in ["gamma_min", "gamma_max", "steps"] {
                if self.contains(key) {
                    return Err(Error::config(key, "conflicts with gamma_grid"));
                }
            }
            return self.f64_list("gamma_grid");
        }
        let lo = self.f64("gamma_min")?;
        let hi = self.f64("gamma_max")?;
        let steps = self.usize("steps")?;
        if steps < 1 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if steps > 1 && !(hi > lo) {
            return Err(Error::config("gamma_max", "must exceed gamma_min"));
        }
        Ok(linear_grid(lo, hi, steps))
    }

    /// Experiment over an SNR grid (`sweep`).
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let (family, size, k, h) = self.shape()?;
        let sigma_hat = self.sigma_hat()?;
        let config = ExperimentConfig {
            family,
            sigma_hat,
            size,
            k,
            h,
            gamma_grid: self.gamma_grid()?,
            trials: self.u64("trials")?,
            master_seed: self.u64("seed")?,
            estimator: self.estimator(family)?,
            budget: self.budget()?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Experiment at one SNR over several sizes (`exponent`).
    pub fn exponent_experiment(&self) -> Result<(ExperimentConfig, f64, Vec<usize>)> {
        let family = self.family()?;
        let size_key = Self::size_key(family);
        let sizes = self.usize_list("sizes")?;
        let first = *sizes.first().ok_or_else(|| Error::config("sizes", "must not be empty"))?;
        let gamma = self.f64("gamma")?;
        if !(gamma > 0.0) {
            return Err(Error::config("gamma", "must be positive"));
        }
        let k = self.usize("k")?;
        let h = match family {
            Family::Prem => None,
            Family::Wsbm => Some(2),
            Family::Hwsbm => Some(self.usize("h")?),
        };
        if h.is_some_and(|h| h > k) {
            return Err(Error::config("h", "exceeds k"));
        }
        let config = ExperimentConfig {
            family,
            sigma_hat: self.sigma_hat()?,
            size: first,
            k,
            h,
            gamma_grid: vec![gamma],
            trials: self.u64("trials")?,
            master_seed: self.u64("seed")?,
            estimator: self.estimator(family)?,
            budget: self.budget()?,
        };
        for &size in &sizes {
            ExperimentConfig { size, ..config.clone() }
                .validate()
                .map_err(|e| Error::config(size_key, format!("size {size}: {e}")))?;
        }
        Ok((config, gamma, sizes))
    }
}

fn as_f64(key: &str, value: &Value) -> Result<f64> {
    match value {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn as_u64(key: &str, value: &Value) -> Result<u64> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(Error::config(key, format!("expected a non-negative integer, got {i}"))),
        other => Err(Error::config(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

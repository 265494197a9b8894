//! Run configuration: every sampler hyperparameter plus dataset paths.
//!
//! A configuration file is either a JSON object or `key = value` lines (with
//! `#` comments). Keys missing from the file keep their defaults, which are
//! the political-books settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::block_chain::BChainConfig;
use crate::error::{Error, Result};
use crate::mala::ThetaChainConfig;
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub categorical: Option<PathBuf>,

    #[serde(rename = "B")]
    pub num_blocks: usize,
    /// Fraction of vertices in the training set.
    pub f: f64,
    pub sigma: f64,

    #[serde(rename = "T_b")]
    pub b_iterations: usize,
    pub kappa_b: f64,
    pub lambda_b: usize,
    pub epsilon: f64,
    pub init_restarts: usize,

    #[serde(rename = "T_theta")]
    pub theta_iterations: usize,
    pub kappa_theta: f64,
    pub lambda_theta: usize,
    /// Step-size scaling `s`.
    pub s: f64,

    /// Standard-deviation multiplier of the feature screen.
    pub k: Option<f64>,
    #[serde(rename = "D_prime")]
    pub reduced_dim: Option<usize>,
    #[serde(rename = "T_theta_reduced")]
    pub reduced_iterations: Option<usize>,
    pub kappa_theta_reduced: Option<f64>,
    pub lambda_theta_reduced: Option<usize>,
    pub s_reduced: Option<f64>,

    /// Number of independent repetitions.
    pub n: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            edges: None,
            features: None,
            categorical: None,
            num_blocks: 3,
            f: 0.7,
            sigma: 1.0,
            b_iterations: 1000,
            kappa_b: 0.2,
            lambda_b: 5,
            epsilon: 1.0,
            init_restarts: 10,
            theta_iterations: 10_000,
            kappa_theta: 0.4,
            lambda_theta: 10,
            s: 0.05,
            k: None,
            reduced_dim: None,
            reduced_iterations: None,
            kappa_theta_reduced: None,
            lambda_theta_reduced: None,
            s_reduced: None,
            n: 10,
            seed: 0,
        }
    }
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()))
}

/// `key = value` lines into a JSON object.
fn key_values(text: &str, source: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("{source}:{}", lineno + 1), format!("expected `key = value`, got {line:?}")))?;
        map.insert(key.trim().to_owned(), parse_value(value));
    }
    Ok(map)
}

impl RunConfig {
    /// Applies `overrides` on top of `self`, rejecting unknown keys.
    pub fn merged(&self, overrides: Map<String, Value>) -> Result<Self> {
        let mut base = match serde_json::to_value(self)? {
            Value::Object(m) => m,
            _ => unreachable!("RunConfig serializes to an object"),
        };
        for (key, value) in overrides {
            if !base.contains_key(&key) {
                return Err(Error::invalid(format!("unknown configuration key {key:?}")));
            }
            base.insert(key, value);
        }
        serde_json::from_value(Value::Object(base)).map_err(|e| Error::invalid(format!("bad configuration value: {e}")))
    }

    /// One `key=value` override.
    pub fn with_override(&self, assignment: &str) -> Result<Self> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got {assignment:?}")))?;
        let mut map = Map::new();
        map.insert(key.trim().to_owned(), parse_value(value));
        self.merged(map)
    }

    /// Parses a configuration text; relative paths resolve against `base_dir`.
    pub fn from_str_in(text: &str, base_dir: &Path, source: &str) -> Result<Self> {
        let map = if text.trim_start().starts_with('{') {
            match serde_json::from_str::<Value>(text).map_err(|e| Error::parse(source, e.to_string()))? {
                Value::Object(m) => m,
                _ => return Err(Error::parse(source, "configuration must be a JSON object")),
            }
        } else {
            key_values(text, source)?
        };
        let mut cfg = Self::default().merged(map)?;
        for p in [&mut cfg.edges, &mut cfg.features, &mut cfg.categorical].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_str_in(&text, dir, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 {
            return Err(Error::invalid("B must be at least 1"));
        }
        if !(self.f > 0.0 && self.f < 1.0) {
            return Err(Error::invalid(format!("f must lie in (0, 1), got {}", self.f)));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        self.block_chain(0).validate()?;
        self.theta_chain(0).validate()?;
        if let Some(r) = self.reduced_theta_chain(0) {
            r.validate()?;
        }
        if self.k.is_some() != self.reduced_dim.is_some() {
            return Err(Error::invalid("k and D_prime must be given together"));
        }
        if let Some(k) = self.k {
            if !(k > 0.0) {
                return Err(Error::invalid(format!("k must be positive, got {k}")));
            }
        }
        Ok(())
    }

    pub fn block_chain(&self, repetition: u64) -> BChainConfig {
        BChainConfig {
            iterations: self.b_iterations,
            burn_in: self.kappa_b,
            thinning: self.lambda_b,
            epsilon: self.epsilon,
            init_restarts: self.init_restarts,
            seed: derive_seed(self.seed, Stream::BlockChain, repetition),
        }
    }

    pub fn theta_chain(&self, repetition: u64) -> ThetaChainConfig {
        ThetaChainConfig {
            iterations: self.theta_iterations,
            burn_in: self.kappa_theta,
            thinning: self.lambda_theta,
            sigma: self.sigma,
            step_scale: self.s,
            seed: derive_seed(self.seed, Stream::ThetaChain, repetition),
        }
    }

    /// Settings of the retrained chain; unset keys fall back to the main chain.
    pub fn reduced_theta_chain(&self, repetition: u64) -> Option<ThetaChainConfig> {
        self.reduced_dim?;
        Some(ThetaChainConfig {
            iterations: self.reduced_iterations.unwrap_or(self.theta_iterations),
            burn_in: self.kappa_theta_reduced.unwrap_or(self.kappa_theta),
            thinning: self.lambda_theta_reduced.unwrap_or(self.lambda_theta),
            sigma: self.sigma,
            step_scale: self.s_reduced.unwrap_or(self.s),
            seed: derive_seed(self.seed, Stream::ReducedThetaChain, repetition),
        })
    }

    pub fn split_seed(&self, repetition: u64) -> u64 {
        derive_seed(self.seed, Stream::Split, repetition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_political_books_row() {
        let c = RunConfig::default();
        assert_eq!((c.num_blocks, c.f, c.sigma), (3, 0.7, 1.0));
        assert_eq!((c.b_iterations, c.kappa_b, c.lambda_b), (1000, 0.2, 5));
        assert_eq!((c.theta_iterations, c.kappa_theta, c.lambda_theta, c.s), (10_000, 0.4, 10, 0.05));
        assert_eq!(c.n, 10);
        assert!(c.reduced_theta_chain(0).is_none());
        c.validate().unwrap();
    }

    #[test]
    fn key_value_and_json_agree() {
        let kv = "# school\nB = 10\ns=0.2\nk = 1\nD_prime = 10\nedges = data/e.txt\n";
        let js = r#"{"B": 10, "s": 0.2, "k": 1, "D_prime": 10, "edges": "data/e.txt"}"#;
        let a = RunConfig::from_str_in(kv, Path::new("/base"), "kv").unwrap();
        let b = RunConfig::from_str_in(js, Path::new("/base"), "js").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges.as_deref(), Some(Path::new("/base/data/e.txt")));
        let r = a.reduced_theta_chain(0).unwrap();
        assert_eq!((r.iterations, r.step_scale), (10_000, 0.2));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_str_in("bogus = 1", Path::new("."), "x").is_err());
        assert!(RunConfig::from_str_in("B = three", Path::new("."), "x").is_err());
        assert!(RunConfig::from_str_in("B 3", Path::new("."), "x").is_err());
        assert!(RunConfig::default().with_override("f=1.5").unwrap().validate().is_err());
        assert!(RunConfig::default().with_override("k=1").unwrap().validate().is_err());
    }

    #[test]
    fn substreams_depend_on_repetition() {
        let c = RunConfig::default();
        assert_ne!(c.block_chain(0).seed, c.block_chain(1).seed);
        assert_ne!(c.block_chain(0).seed, c.theta_chain(0).seed);
    }
}

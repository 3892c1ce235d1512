//! Run configuration: defaults overridden by a key=value config file, then
//! QNLS_* environment variables, then command-line flags.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dim: usize,
    pub p: f64,
    pub c: f64,
    pub mu0: f64,
    pub mu_min: f64,
    pub mu_factor: f64,
    pub grid_n: usize,
    pub r_max: f64,
    pub kind: String,
    pub jobs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub lambda: f64,
    pub cpn: Option<f64>,
    pub grad_tol: f64,
    pub q_tol: f64,
    pub max_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            p: 3.0,
            c: 1.0,
            mu0: 0.1,
            mu_min: 1e-6,
            mu_factor: 0.1,
            grid_n: 2000,
            r_max: 40.0,
            kind: "global-min".into(),
            jobs: 0,
            seed: 12345,
            out: PathBuf::from("qnls-out"),
            lambda: 0.0,
            cpn: None,
            grad_tol: 1e-7,
            q_tol: 1e-3,
            max_iters: 30_000,
        }
    }
}

/// Keys accepted in config files and (uppercased, dashes to underscores) as
/// QNLS_* environment variables.
const KEYS: &[&str] = &[
    "N", "p", "c", "mu0", "mu-min", "mu-factor", "grid-n", "r-max", "kind", "jobs", "seed",
    "out", "lambda", "cpn", "grad-tol", "q-tol", "max-iters",
];

pub fn parse_kv_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {} is not key=value: `{line}`", i + 1);
        };
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("unknown config key `{k}` on line {}", i + 1);
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn env_overrides() -> HashMap<String, String> {
    let mut map = HashMap::new();
    for key in KEYS {
        let env_key = format!("QNLS_{}", key.replace('-', "_").to_uppercase());
        if let Ok(v) = std::env::var(&env_key) {
            map.insert(key.to_string(), v);
        }
    }
    map
}

impl RunConfig {
    /// defaults <- config file <- environment. CLI flags are applied by the
    /// caller afterwards.
    pub fn load(config_file: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = config_file {
            cfg.apply_map(&parse_kv_file(path)?)?;
        }
        cfg.apply_map(&env_overrides())?;
        Ok(cfg)
    }

    pub fn apply_map(&mut self, map: &HashMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "N" => self.dim = v.parse().context("N")?,
                "p" => self.p = v.parse().context("p")?,
                "c" => self.c = v.parse().context("c")?,
                "mu0" => self.mu0 = v.parse().context("mu0")?,
                "mu-min" => self.mu_min = v.parse().context("mu-min")?,
                "mu-factor" => self.mu_factor = v.parse().context("mu-factor")?,
                "grid-n" => self.grid_n = v.parse().context("grid-n")?,
                "r-max" => self.r_max = v.parse().context("r-max")?,
                "kind" => self.kind = v.clone(),
                "jobs" => self.jobs = v.parse().context("jobs")?,
                "seed" => self.seed = v.parse().context("seed")?,
                "out" => self.out = PathBuf::from(v),
                "lambda" => self.lambda = v.parse().context("lambda")?,
                "cpn" => self.cpn = Some(v.parse().context("cpn")?),
                "grad-tol" => self.grad_tol = v.parse().context("grad-tol")?,
                "q-tol" => self.q_tol = v.parse().context("q-tol")?,
                "max-iters" => self.max_iters = v.parse().context("max-iters")?,
                _ => unreachable!("key list is checked at parse time"),
            }
        }
        Ok(())
    }

    pub fn flow_config(&self) -> qnls_core::flow::FlowConfig {
        qnls_core::flow::FlowConfig {
            grad_tol: self.grad_tol,
            q_tol: self.q_tol,
            max_iters: self.max_iters,
            seed: self.seed,
            ..qnls_core::flow::FlowConfig::default()
        }
    }
}

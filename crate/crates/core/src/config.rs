//! Experiment configuration and its plain-text key–value format.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Lists are comma separated. See `docs/config.md` for every key.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::{ExplorationConfig, FimEstimator};
use crate::dynamics::{DynamicsModel, Model, ParamSpace};
use crate::estimation::{CemConfig, ParamBelief};
use crate::objectives::ObjectiveKind;
use crate::{Error, Result};

/// Everything a bench, sweep or verify run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    /// Parameter bounds `(lo, hi)`; empty keeps the model's defaults.
    pub bounds: Vec<(f64, f64)>,
    /// Noise standard deviation of every state dimension.
    pub sigma: f64,
    /// Parameters of the hidden system.
    pub true_phi: Vec<f64>,
    /// Prior mean; empty means the centre of the parameter box.
    pub prior_mean: Vec<f64>,
    pub prior_std: Vec<f64>,
    pub methods: Vec<ObjectiveKind>,
    pub seeds: Vec<u64>,
    pub exploration: ExplorationConfig,
    pub estimation: CemConfig,
    /// Seed of the held-out evaluation sequences.
    pub eval_seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "nuisance-coupled".into(),
            bounds: Vec::new(),
            sigma: 0.05,
            true_phi: vec![1.2, 0.8, 0.9, -0.7],
            prior_mean: Vec::new(),
            prior_std: vec![0.5, 0.5, 1.0, 1.0],
            methods: ObjectiveKind::ALL.to_vec(),
            seeds: (0..25).collect(),
            exploration: ExplorationConfig::default(),
            estimation: CemConfig::default(),
            eval_seed: 12345,
            out: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_num(key, x)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true/false, got `{v}`"))),
    }
}

/// `lo:hi, lo:hi, …`
fn parse_bounds(v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("`bounds`: expected lo:hi, got `{}`", pair.trim())))?;
            let (lo, hi): (f64, f64) = (parse_num("bounds", lo)?, parse_num("bounds", hi)?);
            if !(lo < hi) {
                return Err(Error::Config(format!("`bounds`: need lo < hi, got {lo}:{hi}")));
            }
            Ok((lo, hi))
        })
        .collect()
}

/// `a..b` (half-open), or a comma list.
fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (parse_num("seeds", a)?, parse_num("seeds", b)?);
        return Ok((a..b).collect());
    }
    parse_list("seeds", v)
}

impl ExperimentConfig {
    /// Parses the key–value format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e.to_string().trim_start_matches("config error: "))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a single `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let e = &mut self.exploration;
        match key {
            "model" => self.model = v.to_string(),
            "bounds" => self.bounds = parse_bounds(v)?,
            "sigma" => self.sigma = parse_num(key, v)?,
            "true_phi" => self.true_phi = parse_list(key, v)?,
            "prior_mean" => self.prior_mean = parse_list(key, v)?,
            "prior_std" => self.prior_std = parse_list(key, v)?,
            "methods" => self.methods = parse_list(key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "eval_seed" => self.eval_seed = parse_num(key, v)?,
            "eval_sequences" => e.eval_sequences = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "delta_eig" => e.bonus.delta_eig = parse_num(key, v)?,
            "alpha_eig" => e.bonus.alpha_eig = parse_num(key, v)?,
            "delta_cos" => e.bonus.delta_cos = parse_num(key, v)?,
            "eps_logdet" => e.bonus.eps_logdet = parse_num(key, v)?,
            "eps" => e.bonus.eps = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "budget" => e.bonus.budget = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "alpha" => e.alpha = parse_num(key, v)?,
            "horizon_seconds" => e.horizon_seconds = parse_num(key, v)?,
            "dt" => e.dt = parse_num(key, v)?,
            "gamma" => e.gamma = parse_num(key, v)?,
            "delta_var" => e.delta_var = parse_num(key, v)?,
            "delta_dyn" => e.delta_dyn = parse_num(key, v)?,
            "max_rounds" => e.max_rounds = parse_num(key, v)?,
            "bonus_samples" => e.bonus_samples = parse_num(key, v)?,
            "average_over_belief" => e.average_over_belief = parse_bool(key, v)?,
            "fim_estimator" => {
                e.fim_estimator = match v {
                    "scores" => FimEstimator::Scores,
                    "conditional" => FimEstimator::Conditional,
                    _ => return Err(Error::Config(format!("`{key}`: expected scores|conditional, got `{v}`"))),
                }
            }
            "reward_weight" => e.reward_weight = parse_num(key, v)?,
            "hold_steps" => e.hold_steps = parse_num(key, v)?,
            "design.iterations" => e.design_search.iterations = parse_num(key, v)?,
            "design.samples" => e.design_search.samples_per_iter = parse_num(key, v)?,
            "design.elite_fraction" => e.design_search.elite_fraction = parse_num(key, v)?,
            "estimation.iterations" => self.estimation.iterations = parse_num(key, v)?,
            "estimation.samples" => self.estimation.samples_per_iter = parse_num(key, v)?,
            "estimation.elite_fraction" => self.estimation.elite_fraction = parse_num(key, v)?,
            "estimation.rollouts" => self.estimation.rollouts = parse_num(key, v)?,
            "estimation.variance_floor" => self.estimation.variance_floor = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let b = &self.exploration.bonus;
        for (name, x) in [
            ("delta_eig", b.delta_eig),
            ("alpha_eig", b.alpha_eig),
            ("delta_cos", b.delta_cos),
            ("eps_logdet", b.eps_logdet),
            ("sigma", self.sigma),
        ] {
            if !(x > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if b.delta_cos > 1.0 {
            return Err(Error::Config(format!("delta_cos must be ≤ 1, got {}", b.delta_cos)));
        }
        if let Some(eps) = b.eps {
            if !(eps > 0.0) {
                return Err(Error::Config(format!("eps must be positive, got {eps}")));
            }
        }
        self.exploration.validate()?;
        self.estimation
            .validate()
            .map_err(|e| Error::Config(format!("estimation: {e}")))?;
        self.exploration
            .design_search
            .validate()
            .map_err(|e| Error::Config(format!("design search: {e}")))?;
        let model = self.build_model()?;
        let m = model.param_dim();
        for (name, len) in [("true_phi", self.true_phi.len()), ("prior_std", self.prior_std.len())] {
            if len != m {
                return Err(Error::Config(format!("{name} needs {m} entries, got {len}")));
            }
        }
        if !self.prior_mean.is_empty() && self.prior_mean.len() != m {
            return Err(Error::Config(format!("prior_mean needs {m} entries, got {}", self.prior_mean.len())));
        }
        model
            .params()
            .check(&DVector::from_column_slice(&self.true_phi))
            .map_err(|e| Error::Config(format!("true_phi: {e}")))?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<Model> {
        let model = Model::by_name(&self.model, self.sigma)?;
        if self.bounds.is_empty() {
            return Ok(model);
        }
        let names = model.params().names.clone();
        if names.len() != self.bounds.len() {
            return Err(Error::Config(format!("bounds needs {} entries, got {}", names.len(), self.bounds.len())));
        }
        let entries: Vec<(&str, f64, f64)> = names.iter().zip(&self.bounds).map(|(n, &(lo, hi))| (n.as_str(), lo, hi)).collect();
        model.with_params(ParamSpace::new(&entries))
    }

    pub fn true_phi(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.true_phi)
    }

    pub fn prior(&self, model: &Model) -> Result<ParamBelief> {
        let mean = if self.prior_mean.is_empty() {
            model.params().center()
        } else {
            DVector::from_column_slice(&self.prior_mean)
        };
        ParamBelief::diagonal(mean, &self.prior_std).map_err(|e| Error::Config(format!("prior: {e}")))
    }
}

/// Command-line overrides layered on a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub method: Option<ObjectiveKind>,
    pub out: Option<PathBuf>,
    pub delta_eig: Option<f64>,
    pub alpha_eig: Option<f64>,
    pub delta_cos: Option<f64>,
    pub eps: Option<f64>,
    pub max_rounds: Option<usize>,
}

impl Overrides {
    /// `seed` picks the first seed and `seeds` the count; either alone keeps
    /// the other from the configuration.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if self.seed.is_some() || self.seeds.is_some() {
            let start = self.seed.unwrap_or_else(|| cfg.seeds.first().copied().unwrap_or(0));
            let count = self.seeds.unwrap_or(if self.seed.is_some() { 1 } else { cfg.seeds.len() as u64 });
            cfg.seeds = (start..start + count).collect();
        }
        if let Some(m) = self.method {
            cfg.methods = vec![m];
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        let b = &mut cfg.exploration.bonus;
        if let Some(x) = self.delta_eig {
            b.delta_eig = x;
        }
        if let Some(x) = self.alpha_eig {
            b.alpha_eig = x;
        }
        if let Some(x) = self.delta_cos {
            b.delta_cos = x;
        }
        if let Some(x) = self.eps {
            b.eps = Some(x);
        }
        if let Some(x) = self.max_rounds {
            cfg.exploration.max_rounds = x;
        }
        cfg.validate()
    }
}

//! Open-loop experiment design and the explore–estimate–update loop.
//!
//! A design is a fixed action sequence. It is scored by expected discounted
//! task reward plus `α` times an information bonus, and optimized with a
//! diagonal-Gaussian cross-entropy search over the flattened sequence.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DynamicsModel, Trajectory};
use crate::estimation::{self, BoxGaussian, CemConfig, ParamBelief};
use crate::fisher::{self, FisherMatrix, ScoreSample};
use crate::objectives::{self, BonusConfig, ObjectiveKind, QuasiOptConstants};
use crate::{Error, Result};

/// How the design bonus estimates the Fisher matrix from simulated
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FimEstimator {
    /// Mean outer product of trajectory scores.
    Scores,
    /// Conditional expectation of the score outer product given the visited
    /// states, `Σ_t J_tᵀ Σ⁻¹ J_t`, averaged over trajectories. Same mean as
    /// `Scores` with much lower variance.
    #[default]
    Conditional,
}

/// Loop and objective settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationConfig {
    /// Reward/bonus trade-off.
    pub alpha: f64,
    pub horizon_seconds: f64,
    pub dt: f64,
    /// Discount of the per-step reward.
    pub gamma: f64,
    /// Stop once `tr(Σ)` falls below this ...
    pub delta_var: f64,
    /// ... and the held-out rollout RMSE below this.
    pub delta_dyn: f64,
    pub max_rounds: usize,
    /// Monte-Carlo trajectories per design evaluation.
    pub bonus_samples: usize,
    /// Score at sampled parameters instead of the belief mean.
    pub average_over_belief: bool,
    pub fim_estimator: FimEstimator,
    /// Weight of the quadratic state cost in the task reward.
    pub reward_weight: f64,
    pub bonus: BonusConfig,
    /// Each searched action is held for this many steps (zero-order hold);
    /// the search dimension is `ceil(H_steps / hold_steps) · d_a`.
    pub hold_steps: usize,
    /// Search over action sequences (the rollout count is unused).
    pub design_search: CemConfig,
    /// Held-out (initial state, action sequence) pairs for prediction error.
    pub eval_sequences: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            horizon_seconds: 2.0,
            dt: 0.05,
            gamma: 1.0,
            delta_var: 0.05 * 0.05,
            delta_dyn: 1.0,
            max_rounds: 3,
            bonus_samples: 8,
            average_over_belief: false,
            fim_estimator: FimEstimator::default(),
            reward_weight: 1.0,
            bonus: BonusConfig::default(),
            hold_steps: 4,
            design_search: CemConfig {
                iterations: 5,
                samples_per_iter: 2048,
                elite_fraction: 0.1,
                variance_floor: 1e-6,
                rollouts: 1,
            },
            eval_sequences: 16,
        }
    }
}

impl ExplorationConfig {
    /// `round(horizon_seconds / dt)`.
    pub fn horizon_steps(&self) -> usize {
        (self.horizon_seconds / self.dt).round().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("horizon_seconds", self.horizon_seconds),
            ("dt", self.dt),
            ("gamma", self.gamma),
            ("delta_var", self.delta_var),
            ("delta_dyn", self.delta_dyn),
        ];
        for (name, v) in positive {
            // alpha = 0 disables the bonus and is allowed
            if !(v > 0.0 || (name == "alpha" && v == 0.0)) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma > 1.0 {
            return Err(Error::Config(format!("gamma must be ≤ 1, got {}", self.gamma)));
        }
        if self.max_rounds == 0 || self.bonus_samples == 0 || self.hold_steps == 0 {
            return Err(Error::Config("max_rounds, bonus_samples and hold_steps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// An evaluated open-loop design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub actions: Vec<DVector<f64>>,
    pub objective_value: f64,
    pub objective_kind: ObjectiveKind,
    /// Best objective after each search iteration; non-decreasing.
    pub search_path: Vec<f64>,
}

/// Parts of a design evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignValue {
    pub total: f64,
    pub reward: f64,
    pub bonus: f64,
    pub selected: Vec<usize>,
}

fn check_actions<M: DynamicsModel + ?Sized>(model: &M, actions: &[DVector<f64>]) -> Result<()> {
    let bounds = model.action_bounds();
    for a in actions {
        if a.len() != model.action_dim() {
            return Err(Error::DimMismatch {
                expected: model.action_dim(),
                found: a.len(),
            });
        }
        for (i, &x) in a.iter().enumerate() {
            let (lo, hi) = bounds[i];
            if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "action component {i} = {x} outside [{lo}, {hi}]"
                )));
            }
        }
    }
    Ok(())
}

fn draw_param<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    sampler: &BoxGaussian,
    rng: &mut R,
) -> DVector<f64> {
    let p = model.params();
    sampler.sample(&p.lower, &p.upper, rng)
}

/// Negative quadratic state cost summed with discount over a trajectory.
pub fn discounted_reward(traj: &Trajectory, gamma: f64, weight: f64) -> f64 {
    discounted_states_reward(&traj.states, gamma, weight)
}

fn discounted_states_reward(states: &[DVector<f64>], gamma: f64, weight: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for s in states.iter().skip(1) {
        total -= discount * weight * s.norm_squared();
        discount *= gamma;
    }
    total
}

/// Expected discounted reward plus `α` times the `kind` bonus.
///
/// Reward rollouts draw `φ` from the belief. The bonus follows the score
/// pipeline at the belief mean: trajectories are simulated there and their
/// scores averaged into a Fisher matrix (or, with `average_over_belief`, both
/// use the sampled `φ`). Deterministic given the RNG state.
pub fn evaluate_design<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    belief: &ParamBelief,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
    kind: ObjectiveKind,
    cfg: &ExplorationConfig,
    rng: &mut R,
) -> Result<DesignValue> {
    check_actions(model, actions)?;
    if s0.len() != model.state_dim() {
        return Err(Error::DimMismatch {
            expected: model.state_dim(),
            found: s0.len(),
        });
    }
    if cfg.alpha > 0.0 {
        dynamics::positive_noise(model)?;
    }
    let space = model.params();
    let center = space.clamp(&belief.mean);
    let sampler = BoxGaussian::new(center.clone(), &belief.covariance)?;
    let n = cfg.bonus_samples.max(1);
    let mut reward = 0.0;
    let mut scores = Vec::with_capacity(n);
    let mut info = DMatrix::zeros(model.param_dim(), model.param_dim());
    for _ in 0..n {
        let phi = draw_param(model, &sampler, rng);
        let states = dynamics::rollout_states(model, &phi, s0, actions, rng);
        reward += discounted_states_reward(&states, cfg.gamma, cfg.reward_weight);
        if cfg.alpha > 0.0 {
            let at = if cfg.average_over_belief { &phi } else { &center };
            let states = dynamics::rollout_states(model, at, s0, actions, rng);
            match cfg.fim_estimator {
                FimEstimator::Scores => {
                    let traj = Trajectory::new(states, actions.to_vec())?;
                    scores.push(dynamics::trajectory_score(model, &traj, at)?)
                }
                FimEstimator::Conditional => info += dynamics::states_information(model, &states, actions, at),
            }
        }
    }
    reward /= n as f64;
    let (bonus, selected) = if cfg.alpha > 0.0 {
        let fim = match cfg.fim_estimator {
            FimEstimator::Scores => fisher::estimate_fim(&scores)?,
            FimEstimator::Conditional => FisherMatrix::closed_form(info / n as f64)?,
        };
        let out = objectives::bonus_from_fim(fim, kind, &cfg.bonus)?;
        (out.bonus, out.selected())
    } else {
        (0.0, Vec::new())
    };
    Ok(DesignValue {
        total: reward + cfg.alpha * bonus,
        reward,
        bonus,
        selected,
    })
}

fn unflatten(x: &DVector<f64>, d_a: usize, hold: usize, steps: usize) -> Vec<DVector<f64>> {
    x.as_slice()
        .chunks(d_a)
        .flat_map(|a| std::iter::repeat_n(DVector::from_column_slice(a), hold))
        .take(steps)
        .collect()
}

/// Cross-entropy search over the flattened (held) action sequence, maximizing
/// [`evaluate_design`]. Every candidate is evaluated with the same random
/// stream and the best sequence so far is kept in each population, so the
/// returned search path is non-decreasing.
pub fn optimize_design<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    belief: &ParamBelief,
    s0: &DVector<f64>,
    kind: ObjectiveKind,
    cfg: &ExplorationConfig,
    rng: &mut R,
) -> Result<DesignCandidate> {
    let steps = cfg.horizon_steps();
    if steps == 0 {
        return Err(Error::EmptyHorizon);
    }
    let search = &cfg.design_search;
    search.validate()?;
    let d_a = model.action_dim();
    let bounds = model.action_bounds();
    let hold = cfg.hold_steps.max(1);
    let dim = steps.div_ceil(hold) * d_a;
    let lower: Vec<f64> = (0..dim).map(|i| bounds[i % d_a].0).collect();
    let upper: Vec<f64> = (0..dim).map(|i| bounds[i % d_a].1).collect();
    let mut mean = DVector::from_iterator(dim, (0..dim).map(|i| 0.5 * (lower[i] + upper[i])));
    let mut std = DVector::from_iterator(dim, (0..dim).map(|i| 0.5 * (upper[i] - lower[i])));
    let eval_seed: u64 = rng.random();
    let n_elite = search.elite_count();

    let mut incumbent: Option<(DVector<f64>, f64)> = None;
    let mut path = Vec::with_capacity(search.iterations);
    for _ in 0..search.iterations {
        let mut pop: Vec<DVector<f64>> = (0..search.samples_per_iter)
            .map(|_| {
                DVector::from_iterator(
                    dim,
                    (0..dim).map(|i| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        (mean[i] + std[i] * z).clamp(lower[i], upper[i])
                    }),
                )
            })
            .collect();
        if let Some((best, _)) = &incumbent {
            pop[0] = best.clone();
        }
        let values = pop
            .par_iter()
            .map(|x| {
                let mut crn = ChaCha8Rng::seed_from_u64(eval_seed);
                evaluate_design(model, belief, s0, &unflatten(x, d_a, hold, steps), kind, cfg, &mut crn).map(|v| v.total)
            })
            .collect::<Result<Vec<f64>>>()?;
        // maximize: rank the negated values
        let neg: Vec<f64> = values.iter().map(|v| -v).collect();
        let order = estimation::rank(&neg);
        let best = order[0];
        if incumbent.as_ref().map_or(true, |(_, v)| values[best] >= *v) {
            incumbent = Some((pop[best].clone(), values[best]));
        }
        path.push(incumbent.as_ref().map(|(_, v)| *v).unwrap_or(f64::NEG_INFINITY));
        for i in 0..dim {
            let (mut m, mut v) = (0.0, 0.0);
            for &e in order.iter().take(n_elite) {
                m += pop[e][i];
            }
            m /= n_elite as f64;
            for &e in order.iter().take(n_elite) {
                v += (pop[e][i] - m).powi(2);
            }
            v = v / n_elite as f64 + search.variance_floor;
            mean[i] = m;
            std[i] = v.sqrt();
        }
    }
    let (best, value) = incumbent.expect("at least one iteration");
    Ok(DesignCandidate {
        actions: unflatten(&best, d_a, hold, steps),
        objective_value: value,
        objective_kind: kind,
        search_path: path,
    })
}

/// Held-out initial states and action sequences for prediction error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    pub sequences: Vec<(DVector<f64>, Vec<DVector<f64>>)>,
}

impl EvalSet {
    /// Uniformly random actions within the model's bounds from its default
    /// initial state.
    pub fn random<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(model: &M, count: usize, steps: usize, rng: &mut R) -> Self {
        let bounds = model.action_bounds();
        let sequences = (0..count)
            .map(|_| {
                let actions = (0..steps)
                    .map(|_| DVector::from_iterator(bounds.len(), bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi))))
                    .collect();
                (model.initial_state(), actions)
            })
            .collect();
        Self { sequences }
    }
}

/// RMSE between noiseless rollouts under the true and the estimated
/// parameters, over every state of every held-out sequence (unscaled).
pub fn dynamics_prediction_rmse<M: DynamicsModel + ?Sized>(
    model: &M,
    true_phi: &DVector<f64>,
    phi_hat: &DVector<f64>,
    eval: &EvalSet,
) -> f64 {
    let (mut sq, mut count) = (0.0, 0usize);
    for (s0, actions) in &eval.sequences {
        let truth = dynamics::mean_rollout(model, true_phi, s0, actions);
        let pred = dynamics::mean_rollout(model, phi_hat, s0, actions);
        for (a, b) in truth.iter().zip(&pred).skip(1) {
            sq += (a - b).norm_squared();
            count += a.len();
        }
    }
    if count == 0 {
        0.0
    } else {
        (sq / count as f64).sqrt()
    }
}

/// Root-mean-square parameter error (unscaled).
pub fn param_rmse(true_phi: &DVector<f64>, phi_hat: &DVector<f64>) -> f64 {
    ((true_phi - phi_hat).norm_squared() / true_phi.len().max(1) as f64).sqrt()
}

/// The hidden system being explored.
#[derive(Debug, Clone)]
pub struct TrueSystem<'a, M: ?Sized> {
    pub model: &'a M,
    pub phi: DVector<f64>,
}

/// Per-round record of an exploration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub phi_hat: Vec<f64>,
    pub belief_trace: f64,
    /// Bonus of the executed design, as predicted when it was chosen.
    pub bonus: f64,
    /// Objectives of the information actually collected this round.
    pub boed: f64,
    pub agnostic: f64,
    pub qoed: f64,
    pub selected: Vec<usize>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub param_rmse_x100: f64,
    pub rmse_x100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub method: ObjectiveKind,
    pub rounds: Vec<RoundRecord>,
    /// Both termination thresholds were met before `max_rounds`.
    pub converged: bool,
    pub final_phi: Vec<f64>,
    pub final_covariance_trace: f64,
}

impl ExplorationReport {
    pub fn last(&self) -> &RoundRecord {
        self.rounds.last().expect("at least one round")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Explore–estimate–update loop.
///
/// Each round: optimize a design under the current belief, execute it on the
/// hidden system, estimate `φ̂` from all data gathered so far, fold the
/// information of the new trajectory at `φ̂` into the belief and move its
/// mean to `φ̂`. Stops when `tr(Σ) < δ_var` and the held-out prediction RMSE
/// is below `δ_dyn`, or after `max_rounds`.
pub fn run_exploration<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    truth: &TrueSystem<'_, M>,
    model: &M,
    prior: &ParamBelief,
    kind: ObjectiveKind,
    cfg: &ExplorationConfig,
    estimation_cfg: &CemConfig,
    eval: &EvalSet,
    rng: &mut R,
) -> Result<ExplorationReport> {
    cfg.validate()?;
    truth.model.params().check(&truth.phi)?;
    let s0 = model.initial_state();
    let mut belief = prior.clone();
    let mut data: Vec<Trajectory> = Vec::new();
    let mut rounds = Vec::new();
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        let design = optimize_design(model, &belief, &s0, kind, cfg, rng)?;
        let predicted = {
            let mut crn = ChaCha8Rng::seed_from_u64(rng.random());
            evaluate_design(model, &belief, &s0, &design.actions, kind, cfg, &mut crn)?
        };
        let traj = dynamics::simulate_trajectory(truth.model, &truth.phi, &s0, &design.actions, rng)?;
        data.push(traj);

        let search_start = ParamBelief {
            mean: belief.mean.clone(),
            covariance: prior.covariance.clone(),
        };
        let estimate = estimation::cem_estimate_many(model, &data, &search_start, estimation_cfg, rng)?;
        let phi_hat = estimate.phi;

        let info = dynamics::trajectory_fim(model, data.last().expect("pushed"), &phi_hat)?;
        belief = estimation::belief_update(&belief, &info)?.with_mean(phi_hat.clone());

        let summary = summarize_information(&info, &cfg.bonus)?;
        let rmse = dynamics_prediction_rmse(model, &truth.phi, &phi_hat, eval);
        rounds.push(RoundRecord {
            round,
            phi_hat: phi_hat.iter().cloned().collect(),
            belief_trace: belief.trace(),
            bonus: predicted.bonus,
            boed: summary.boed,
            agnostic: summary.agnostic,
            qoed: summary.qoed,
            selected: summary.selected,
            eta: summary.constants.map(|c| c.eta),
            beta: summary.constants.map(|c| c.beta),
            rho: summary.constants.map(|c| c.rho),
            param_rmse_x100: 100.0 * param_rmse(&truth.phi, &phi_hat),
            rmse_x100: 100.0 * rmse,
        });
        if belief.trace() < cfg.delta_var && rmse < cfg.delta_dyn {
            converged = true;
            break;
        }
    }
    Ok(ExplorationReport {
        method: kind,
        final_phi: belief.mean.iter().cloned().collect(),
        final_covariance_trace: belief.trace(),
        rounds,
        converged,
    })
}

/// All three objectives of one information matrix, with coordinates chosen
/// from the matrix itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InformationSummary {
    pub boed: f64,
    pub agnostic: f64,
    pub qoed: f64,
    pub selected: Vec<usize>,
    pub constants: Option<QuasiOptConstants>,
}

pub fn summarize_information(f: &FisherMatrix, cfg: &BonusConfig) -> Result<InformationSummary> {
    let eps = cfg.eps.unwrap_or_else(|| objectives::default_eps(f));
    let (_, _, selection) = objectives::identify(f, cfg)?;
    let k = selection.sorted();
    Ok(InformationSummary {
        boed: objectives::boed_objective(f),
        agnostic: objectives::agnostic_objective(f, &k)?,
        qoed: objectives::qoed_objective(f, &k, eps)?,
        constants: objectives::quasiopt_constants(f, &k).ok(),
        selected: k,
    })
}

/// Scores of `n` trajectories simulated at `phi` under a fixed design.
pub fn design_scores<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    phi: &DVector<f64>,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
    n: usize,
    rng: &mut R,
) -> Result<Vec<ScoreSample>> {
    (0..n)
        .map(|_| {
            let traj = dynamics::simulate_trajectory(model, phi, s0, actions, rng)?;
            dynamics::trajectory_score(model, &traj, phi)
        })
        .collect()
}

/// Index of the best entry of `values` (first on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Mean and sample standard deviation.
pub fn sample_mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

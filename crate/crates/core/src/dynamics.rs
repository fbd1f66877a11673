//! Parametric stochastic dynamics with exact Gaussian transition densities.
//!
//! Every model has the form `s' = f(s, a, φ) + w`, `w ~ N(0, diag(σ²))`, so
//! the per-step score is `Jᵀ diag(σ⁻²) (s' − f)` with `J = ∂f/∂φ`, and the
//! conditional information of one step is `Jᵀ diag(σ⁻²) J`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::fisher::{FisherMatrix, ScoreSample};
use crate::{Error, Result};

/// Named, box-bounded parameter coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamSpace {
    pub fn new(entries: &[(&str, f64, f64)]) -> Self {
        Self {
            names: entries.iter().map(|e| e.0.to_string()).collect(),
            lower: entries.iter().map(|e| e.1).collect(),
            upper: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn check(&self, phi: &DVector<f64>) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: phi.len(),
            });
        }
        for (i, &v) in phi.iter().enumerate() {
            if !(v >= self.lower[i] && v <= self.upper[i]) {
                return Err(Error::PhiOutOfBounds {
                    index: i,
                    value: v,
                    lo: self.lower[i],
                    hi: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, phi: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            phi.len(),
            phi.iter().enumerate().map(|(i, &v)| v.clamp(self.lower[i], self.upper[i])),
        )
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|i| 0.5 * (self.lower[i] + self.upper[i])))
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }
}

/// Alternating state/action record, `len(states) = len(actions) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub actions: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(states: Vec<DVector<f64>>, actions: Vec<DVector<f64>>) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(Error::DimMismatch {
                expected: actions.len() + 1,
                found: states.len(),
            });
        }
        Ok(Self { states, actions })
    }

    pub fn start(s0: DVector<f64>) -> Self {
        Self {
            states: vec![s0],
            actions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Transitions `(s_t, a_t, s_{t+1})`.
    pub fn transitions(&self) -> impl Iterator<Item = (&DVector<f64>, &DVector<f64>, &DVector<f64>)> {
        self.actions
            .iter()
            .enumerate()
            .map(move |(t, a)| (&self.states[t], a, &self.states[t + 1]))
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        let last = self.states.last().expect("trajectory has a state");
        if (last - &other.states[0]).norm() > 0.0 {
            return Err(Error::InvalidArgument("trajectories do not join".into()));
        }
        let mut out = self.clone();
        out.states.extend(other.states.iter().skip(1).cloned());
        out.actions.extend(other.actions.iter().cloned());
        Ok(out)
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has a state")
    }
}

/// Gaussian-transition dynamics: mean map and its parameter Jacobian.
pub trait DynamicsModel: Send + Sync {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn params(&self) -> &ParamSpace;
    /// Per-dimension noise standard deviation.
    fn noise(&self) -> &[f64];
    /// Per-dimension action limits `(lo, hi)`.
    fn action_bounds(&self) -> Vec<(f64, f64)>;
    /// Mean next state `f(s, a, φ)`.
    fn mean(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64>;
    /// `∂f/∂φ`, a `d_s × m` matrix.
    fn jacobian(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DMatrix<f64>;

    fn param_dim(&self) -> usize {
        self.params().dim()
    }

    /// Default initial state.
    fn initial_state(&self) -> DVector<f64> {
        DVector::zeros(self.state_dim())
    }
}

fn check_step<M: DynamicsModel + ?Sized>(model: &M, s: &DVector<f64>, a: &DVector<f64>) -> Result<()> {
    if s.len() != model.state_dim() {
        return Err(Error::DimMismatch {
            expected: model.state_dim(),
            found: s.len(),
        });
    }
    if a.len() != model.action_dim() {
        return Err(Error::DimMismatch {
            expected: model.action_dim(),
            found: a.len(),
        });
    }
    Ok(())
}

pub(crate) fn positive_noise<M: DynamicsModel + ?Sized>(model: &M) -> Result<&[f64]> {
    let sigma = model.noise();
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(
            "likelihood needs strictly positive noise".into(),
        ));
    }
    Ok(sigma)
}

/// Draws `s' = f(s, a, φ) + w`. Parameters outside the box are an error.
pub fn step_sample<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    s: &DVector<f64>,
    a: &DVector<f64>,
    phi: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_step(model, s, a)?;
    model.params().check(phi)?;
    Ok(sample_unchecked(model, s, a, phi, rng))
}

pub(crate) fn sample_unchecked<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    s: &DVector<f64>,
    a: &DVector<f64>,
    phi: &DVector<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let mut next = model.mean(s, a, phi);
    for (x, &sigma) in next.iter_mut().zip(model.noise()) {
        let z: f64 = rng.sample(StandardNormal);
        *x += sigma * z;
    }
    next
}

/// Exact Gaussian log-density of `s_next`.
pub fn step_loglik<M: DynamicsModel + ?Sized>(
    model: &M,
    s: &DVector<f64>,
    a: &DVector<f64>,
    phi: &DVector<f64>,
    s_next: &DVector<f64>,
) -> Result<f64> {
    check_step(model, s, a)?;
    model.params().check(phi)?;
    let sigma = positive_noise(model)?;
    let mu = model.mean(s, a, phi);
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    Ok(sigma
        .iter()
        .enumerate()
        .map(|(i, &sd)| {
            let z = (s_next[i] - mu[i]) / sd;
            -0.5 * ln_2pi - sd.ln() - 0.5 * z * z
        })
        .sum())
}

/// `∇_φ log p(s_next | s, a, φ) = Jᵀ diag(σ⁻²) (s_next − f)`.
pub fn step_score<M: DynamicsModel + ?Sized>(
    model: &M,
    s: &DVector<f64>,
    a: &DVector<f64>,
    phi: &DVector<f64>,
    s_next: &DVector<f64>,
) -> Result<ScoreSample> {
    check_step(model, s, a)?;
    model.params().check(phi)?;
    let sigma = positive_noise(model)?;
    let mu = model.mean(s, a, phi);
    let j = model.jacobian(s, a, phi);
    let weighted = DVector::from_iterator(
        sigma.len(),
        sigma.iter().enumerate().map(|(i, &sd)| (s_next[i] - mu[i]) / (sd * sd)),
    );
    ScoreSample::new(j.transpose() * weighted)
}

/// Rolls the model forward from `s0` under fixed actions.
pub fn simulate_trajectory<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    phi: &DVector<f64>,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
    rng: &mut R,
) -> Result<Trajectory> {
    model.params().check(phi)?;
    for a in actions {
        check_step(model, s0, a)?;
    }
    Trajectory::new(rollout_states(model, phi, s0, actions, rng), actions.to_vec())
}

/// States of a simulated rollout; inputs are assumed checked.
pub(crate) fn rollout_states<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    phi: &DVector<f64>,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(s0.clone());
    for a in actions {
        let next = sample_unchecked(model, states.last().expect("nonempty"), a, phi, rng);
        states.push(next);
    }
    states
}

/// Noise-free rollout (each state is the mean of the next transition).
pub fn mean_rollout<M: DynamicsModel + ?Sized>(
    model: &M,
    phi: &DVector<f64>,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(s0.clone());
    for a in actions {
        let next = model.mean(states.last().expect("nonempty"), a, phi);
        states.push(next);
    }
    states
}

/// Sum of the per-step scores. The policy and initial-state terms of the
/// trajectory log-likelihood do not depend on `φ` and drop out.
pub fn trajectory_score<M: DynamicsModel + ?Sized>(
    model: &M,
    traj: &Trajectory,
    phi: &DVector<f64>,
) -> Result<ScoreSample> {
    let mut total = ScoreSample::zeros(model.param_dim());
    for (s, a, s_next) in traj.transitions() {
        total = total + step_score(model, s, a, phi, s_next)?;
    }
    Ok(total)
}

pub fn trajectory_loglik<M: DynamicsModel + ?Sized>(
    model: &M,
    traj: &Trajectory,
    phi: &DVector<f64>,
) -> Result<f64> {
    traj.transitions()
        .map(|(s, a, s_next)| step_loglik(model, s, a, phi, s_next))
        .sum()
}

/// Conditional information of one transition, `Jᵀ diag(σ⁻²) J`.
pub fn closed_form_fim<M: DynamicsModel + ?Sized>(
    model: &M,
    s: &DVector<f64>,
    a: &DVector<f64>,
    phi: &DVector<f64>,
) -> Result<FisherMatrix> {
    check_step(model, s, a)?;
    model.params().check(phi)?;
    let sigma = positive_noise(model)?;
    let mut j = model.jacobian(s, a, phi);
    for (i, &sd) in sigma.iter().enumerate() {
        j.row_mut(i).scale_mut(1.0 / sd);
    }
    FisherMatrix::closed_form(j.transpose() * j)
}

/// Information carried by a recorded trajectory: the per-step conditional
/// matrices summed along its visited states.
pub fn trajectory_fim<M: DynamicsModel + ?Sized>(
    model: &M,
    traj: &Trajectory,
    phi: &DVector<f64>,
) -> Result<FisherMatrix> {
    model.params().check(phi)?;
    positive_noise(model)?;
    for (s, a, _) in traj.transitions() {
        check_step(model, s, a)?;
    }
    FisherMatrix::closed_form(states_information(model, &traj.states, &traj.actions, phi))
}

/// `Σ_t J_tᵀ diag(σ⁻²) J_t` over the visited states; inputs are assumed
/// checked and the noise positive.
pub(crate) fn states_information<M: DynamicsModel + ?Sized>(
    model: &M,
    states: &[DVector<f64>],
    actions: &[DVector<f64>],
    phi: &DVector<f64>,
) -> DMatrix<f64> {
    let m = model.param_dim();
    let precision: Vec<f64> = model.noise().iter().map(|sd| 1.0 / (sd * sd)).collect();
    let d = precision.len();
    let mut acc = vec![0.0; m * m];
    let mut row = vec![0.0; m];
    for (s, a) in states.iter().zip(actions) {
        let j = model.jacobian(s, a, phi);
        let cols = j.as_slice();
        for (i, &w) in precision.iter().enumerate() {
            for (p, r) in row.iter_mut().enumerate() {
                *r = cols[p * d + i];
            }
            for (p, &jp) in row.iter().enumerate() {
                if jp == 0.0 {
                    continue;
                }
                let wp = w * jp;
                for (q, &jq) in row.iter().enumerate().skip(p) {
                    acc[p * m + q] += wp * jq;
                }
            }
        }
    }
    DMatrix::from_fn(m, m, |p, q| if p <= q { acc[p * m + q] } else { acc[q * m + p] })
}

/// Expected trajectory information: per-step matrices are exact, the state
/// distribution is averaged over `n_paths` simulated paths.
pub fn expected_trajectory_fim<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    phi: &DVector<f64>,
    s0: &DVector<f64>,
    actions: &[DVector<f64>],
    n_paths: usize,
    rng: &mut R,
) -> Result<FisherMatrix> {
    let m = model.param_dim();
    let n_paths = n_paths.max(1);
    let mut acc = DMatrix::zeros(m, m);
    for _ in 0..n_paths {
        let traj = simulate_trajectory(model, phi, s0, actions, rng)?;
        acc += trajectory_fim(model, &traj, phi)?.matrix();
    }
    FisherMatrix::closed_form(acc / n_paths as f64)
}

/// `s' = φ₀ s + φ₁ a + w` (gain, input gain).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearGaussian1D {
    pub params: ParamSpace,
    pub sigma: f64,
    #[serde(skip)]
    noise: Vec<f64>,
}

impl LinearGaussian1D {
    pub fn new(sigma: f64) -> Self {
        Self::with_params(ParamSpace::new(&[("gain", -1.5, 1.5), ("input_gain", -1.0, 1.0)]), sigma)
    }

    pub fn with_params(params: ParamSpace, sigma: f64) -> Self {
        Self {
            params,
            sigma,
            noise: vec![sigma],
        }
    }
}

impl DynamicsModel for LinearGaussian1D {
    fn name(&self) -> &str {
        "linear-gaussian-1d"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn params(&self) -> &ParamSpace {
        &self.params
    }
    fn noise(&self) -> &[f64] {
        &self.noise
    }
    fn action_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0)]
    }
    fn initial_state(&self) -> DVector<f64> {
        DVector::from_element(1, 1.0)
    }
    fn mean(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, phi[0] * s[0] + phi[1] * a[0])
    }
    fn jacobian(&self, s: &DVector<f64>, a: &DVector<f64>, _phi: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[s[0], a[0]])
    }
}

/// Planar box push: state `(position, velocity)`, action force, parameters
/// mass and Coulomb friction coefficient (friction smoothed with `tanh`).
///
/// `v' = v + dt (F/m − μ g tanh(k v))`, `x' = x + dt v'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Push2D {
    pub params: ParamSpace,
    pub sigma: [f64; 2],
    pub dt: f64,
    pub max_force: f64,
    pub slope: f64,
    #[serde(skip)]
    noise: Vec<f64>,
}

const GRAVITY: f64 = 9.81;

impl Push2D {
    pub fn new(sigma: [f64; 2], dt: f64) -> Self {
        Self::with_params(ParamSpace::new(&[("mass", 0.5, 5.0), ("friction", 0.0, 1.0)]), sigma, dt)
    }

    pub fn with_params(params: ParamSpace, sigma: [f64; 2], dt: f64) -> Self {
        Self {
            params,
            sigma,
            dt,
            max_force: 20.0,
            slope: 100.0,
            noise: sigma.to_vec(),
        }
    }

    fn accel_terms(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> (f64, f64) {
        let push = a[0] / phi[0];
        let drag = GRAVITY * (self.slope * s[1]).tanh();
        (push, drag)
    }
}

impl DynamicsModel for Push2D {
    fn name(&self) -> &str {
        "push-2d"
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn params(&self) -> &ParamSpace {
        &self.params
    }
    fn noise(&self) -> &[f64] {
        &self.noise
    }
    fn action_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.max_force, self.max_force)]
    }
    fn mean(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        let (push, drag) = self.accel_terms(s, a, phi);
        let v = s[1] + self.dt * (push - phi[1] * drag);
        DVector::from_column_slice(&[s[0] + self.dt * v, v])
    }
    fn jacobian(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DMatrix<f64> {
        let (push, drag) = self.accel_terms(s, a, phi);
        let dv_dmass = -self.dt * push / phi[0];
        let dv_dfric = -self.dt * drag;
        DMatrix::from_row_slice(
            2,
            2,
            &[self.dt * dv_dmass, self.dt * dv_dfric, dv_dmass, dv_dfric],
        )
    }
}

/// Two actuated channels whose gains are the critical parameters, each with a
/// slow actuator-drift state that also feeds a nuisance parameter.
///
/// State `(x, y, c, d)`, actions `(u, v)`:
///
/// ```text
/// c' = κ c + (1 − κ) u            d' = κ d + (1 − κ) v
/// x' = ρ x + φ₀ (u + γ c) + ε φ₂ c
/// y' = ρ y + φ₁ (v + γ d) + ε φ₃ d
/// ```
///
/// Sustained one-signed actuation builds the drift states, which inflates the
/// information on `φ₀, φ₁` but makes their scores nearly collinear with the
/// nuisance scores. Sign-alternating actuation keeps the drift near zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuisanceCoupled {
    pub params: ParamSpace,
    pub sigma: f64,
    /// Output-state retention `ρ`.
    pub retention: f64,
    /// Drift-state retention `κ`.
    pub drift_retention: f64,
    /// Drift amplification of the critical gain `γ`.
    pub drift_gain: f64,
    /// Scale of the nuisance loading `ε`.
    pub coupling: f64,
    #[serde(skip)]
    noise: Vec<f64>,
}

impl NuisanceCoupled {
    pub fn new(sigma: f64) -> Self {
        Self::with_params(
            ParamSpace::new(&[
                ("gain_u", 0.2, 2.0),
                ("gain_v", 0.2, 2.0),
                ("drift_u", -2.0, 2.0),
                ("drift_v", -2.0, 2.0),
            ]),
            sigma,
        )
    }

    pub fn with_params(params: ParamSpace, sigma: f64) -> Self {
        Self {
            params,
            sigma,
            retention: 0.5,
            drift_retention: 0.9,
            drift_gain: 1.0,
            coupling: 0.1,
            noise: vec![sigma; 4],
        }
    }
}

impl DynamicsModel for NuisanceCoupled {
    fn name(&self) -> &str {
        "nuisance-coupled"
    }
    fn state_dim(&self) -> usize {
        4
    }
    fn action_dim(&self) -> usize {
        2
    }
    fn params(&self) -> &ParamSpace {
        &self.params
    }
    fn noise(&self) -> &[f64] {
        &self.noise
    }
    fn action_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0), (-1.0, 1.0)]
    }
    fn mean(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        let (rho, kappa, gamma, eps) = (self.retention, self.drift_retention, self.drift_gain, self.coupling);
        DVector::from_column_slice(&[
            rho * s[0] + phi[0] * (a[0] + gamma * s[2]) + eps * phi[2] * s[2],
            rho * s[1] + phi[1] * (a[1] + gamma * s[3]) + eps * phi[3] * s[3],
            kappa * s[2] + (1.0 - kappa) * a[0],
            kappa * s[3] + (1.0 - kappa) * a[1],
        ])
    }
    fn jacobian(&self, s: &DVector<f64>, a: &DVector<f64>, _phi: &DVector<f64>) -> DMatrix<f64> {
        let (gamma, eps) = (self.drift_gain, self.coupling);
        let mut j = DMatrix::zeros(4, 4);
        j[(0, 0)] = a[0] + gamma * s[2];
        j[(0, 2)] = eps * s[2];
        j[(1, 1)] = a[1] + gamma * s[3];
        j[(1, 3)] = eps * s[3];
        j
    }
}

/// The shipped models behind one type, for configuration-driven use.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Model {
    LinearGaussian1D(LinearGaussian1D),
    Push2D(Push2D),
    NuisanceCoupled(NuisanceCoupled),
}

impl Model {
    pub const NAMES: [&'static str; 3] = ["linear-gaussian-1d", "push-2d", "nuisance-coupled"];

    /// Builds a shipped model with default bounds and the given noise scale.
    pub fn by_name(name: &str, sigma: f64) -> Result<Model> {
        match name {
            "linear-gaussian-1d" => Ok(Model::LinearGaussian1D(LinearGaussian1D::new(sigma))),
            "push-2d" => Ok(Model::Push2D(Push2D::new([sigma, sigma], 0.05))),
            "nuisance-coupled" => Ok(Model::NuisanceCoupled(NuisanceCoupled::new(sigma))),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }

    /// Same model with replaced parameter bounds.
    pub fn with_params(&self, params: ParamSpace) -> Result<Model> {
        if params.dim() != self.param_dim() {
            return Err(Error::DimMismatch {
                expected: self.param_dim(),
                found: params.dim(),
            });
        }
        Ok(match self {
            Model::LinearGaussian1D(m) => Model::LinearGaussian1D(LinearGaussian1D::with_params(params, m.sigma)),
            Model::Push2D(m) => Model::Push2D(Push2D {
                params,
                ..m.clone()
            }),
            Model::NuisanceCoupled(m) => Model::NuisanceCoupled(NuisanceCoupled {
                params,
                ..m.clone()
            }),
        })
    }

    fn inner(&self) -> &dyn DynamicsModel {
        match self {
            Model::LinearGaussian1D(m) => m,
            Model::Push2D(m) => m,
            Model::NuisanceCoupled(m) => m,
        }
    }
}

impl DynamicsModel for Model {
    fn name(&self) -> &str {
        self.inner().name()
    }
    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }
    fn action_dim(&self) -> usize {
        self.inner().action_dim()
    }
    fn params(&self) -> &ParamSpace {
        self.inner().params()
    }
    fn noise(&self) -> &[f64] {
        self.inner().noise()
    }
    fn action_bounds(&self) -> Vec<(f64, f64)> {
        self.inner().action_bounds()
    }
    fn mean(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        self.inner().mean(s, a, phi)
    }
    fn jacobian(&self, s: &DVector<f64>, a: &DVector<f64>, phi: &DVector<f64>) -> DMatrix<f64> {
        self.inner().jacobian(s, a, phi)
    }
    fn initial_state(&self) -> DVector<f64> {
        self.inner().initial_state()
    }
}

/// Designs of the two-design family on which the coordinate-restricted
/// objective fails to track the full trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CounterexampleDesign {
    A,
    B,
}

/// `A ↦ diag(1 + δ, 0)`, `B ↦ diag(1, M)` with `δ > 0` and `M > δ`.
pub fn counterexample_family(delta: f64, big_m: f64) -> Result<BTreeMap<CounterexampleDesign, FisherMatrix>> {
    if !(delta > 0.0) || !(big_m > delta) {
        return Err(Error::InvalidArgument(format!(
            "need delta > 0 and M > delta (delta={delta}, M={big_m})"
        )));
    }
    let mut out = BTreeMap::new();
    out.insert(CounterexampleDesign::A, FisherMatrix::from_diagonal(&[1.0 + delta, 0.0])?);
    out.insert(CounterexampleDesign::B, FisherMatrix::from_diagonal(&[1.0, big_m])?);
    Ok(out)
}

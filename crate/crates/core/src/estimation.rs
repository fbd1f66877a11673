//! Derivative-free parameter estimation and Gaussian belief maintenance.
//!
//! [`cem_estimate`] minimizes the expected squared deviation between observed
//! trajectories and model rollouts under the same actions, using the
//! cross-entropy method. [`belief_update`] folds a Fisher information matrix
//! into a Gaussian belief, `Σ ← (F + Σ⁻¹)⁻¹`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsModel, Trajectory};
use crate::fisher::FisherMatrix;
use crate::linalg;
use crate::{Error, Result};

/// Smallest admissible covariance eigenvalue.
pub const MIN_COVARIANCE_EIGENVALUE: f64 = 1e-12;

/// Gaussian belief over the hidden parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBelief {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl ParamBelief {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::DimMismatch {
                expected: mean.len(),
                found: covariance.nrows(),
            });
        }
        let covariance = linalg::symmetrize(&covariance);
        check_pd(&covariance)?;
        Ok(Self { mean, covariance })
    }

    /// Independent coordinates with the given standard deviations.
    pub fn diagonal(mean: DVector<f64>, std: &[f64]) -> Result<Self> {
        let var = DVector::from_iterator(std.len(), std.iter().map(|s| s * s));
        Self::new(mean, DMatrix::from_diagonal(&var))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn trace(&self) -> f64 {
        belief_trace(self)
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Self {
        self.mean = mean;
        self
    }
}

fn check_pd(cov: &DMatrix<f64>) -> Result<()> {
    if cov.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadPrior);
    }
    let min = cov.clone().symmetric_eigen().eigenvalues.min();
    if min < MIN_COVARIANCE_EIGENVALUE {
        return Err(Error::BadPrior);
    }
    Ok(())
}

/// Cross-entropy search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    pub iterations: usize,
    pub samples_per_iter: usize,
    pub elite_fraction: f64,
    /// Added to every diagonal entry of the refitted covariance.
    pub variance_floor: f64,
    /// Noisy rollouts per candidate for the expected deviation.
    pub rollouts: usize,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            samples_per_iter: 2048,
            elite_fraction: 0.1,
            variance_floor: 1e-8,
            rollouts: 8,
        }
    }
}

impl CemConfig {
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.samples_per_iter as f64).ceil() as usize).clamp(2, self.samples_per_iter.max(2))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.samples_per_iter < 2 || self.rollouts == 0 {
            return Err(Error::InvalidArgument(
                "cem needs ≥1 iteration, ≥2 samples and ≥1 rollout".into(),
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(Error::InvalidArgument("elite fraction must lie in (0, 1)".into()));
        }
        if !(self.variance_floor >= 0.0) {
            return Err(Error::InvalidArgument("variance floor must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Result of a CEM run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CemEstimate {
    /// Mean of the final elite set.
    pub phi: DVector<f64>,
    /// Best objective value seen up to each iteration; non-increasing.
    pub best_objective: Vec<f64>,
    /// Lowest-objective candidate found.
    pub best_candidate: DVector<f64>,
}

/// Multivariate Gaussian sampler over a box; samples are clamped.
pub(crate) struct BoxGaussian {
    pub mean: DVector<f64>,
    pub chol: DMatrix<f64>,
}

impl BoxGaussian {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov.clone().cholesky().ok_or(Error::CollapsedSearch)?.l();
        Ok(Self { mean, chol })
    }

    pub fn sample<R: Rng + ?Sized>(&self, lower: &[f64], upper: &[f64], rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(self.mean.len(), (0..self.mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut x = &self.mean + &self.chol * z;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(lower[i], upper[i]);
        }
        x
    }
}

/// Mean and covariance of `elites` plus `floor` on the diagonal.
pub(crate) fn refit(elites: &[&DVector<f64>], floor: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = elites[0].len();
    let n = elites.len() as f64;
    let mut mean = DVector::zeros(d);
    for e in elites {
        mean += *e;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for e in elites {
        let c = *e - &mean;
        cov += &c * c.transpose();
    }
    cov /= n;
    for i in 0..d {
        cov[(i, i)] += floor;
    }
    (mean, linalg::symmetrize(&cov))
}

/// Sorts candidate indices by objective, ties by index.
pub(crate) fn rank(objectives: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| objectives[a].total_cmp(&objectives[b]).then(a.cmp(&b)));
    order
}

/// Standard-normal draws shared by every candidate: `[rollout][trajectory][step]`.
struct CommonNoise(Vec<Vec<Vec<DVector<f64>>>>);

impl CommonNoise {
    fn draw<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
        model: &M,
        observed: &[Trajectory],
        rollouts: usize,
        rng: &mut R,
    ) -> Self {
        let d = model.state_dim();
        let scaled = |rng: &mut R| {
            DVector::from_iterator(d, model.noise().iter().map(|&s| s * rng.sample::<f64, _>(StandardNormal)))
        };
        CommonNoise(
            (0..rollouts)
                .map(|_| {
                    observed
                        .iter()
                        .map(|traj| (0..traj.len()).map(|_| scaled(rng)).collect())
                        .collect()
                })
                .collect(),
        )
    }
}

/// Expected squared deviation of rollouts from the observations.
fn deviation<M: DynamicsModel + ?Sized>(
    model: &M,
    observed: &[Trajectory],
    phi: &DVector<f64>,
    noise: &CommonNoise,
) -> f64 {
    let mut total = 0.0;
    for paths in &noise.0 {
        for (traj, steps) in observed.iter().zip(paths) {
            let mut s = traj.states[0].clone();
            for (t, a) in traj.actions.iter().enumerate() {
                s = model.mean(&s, a, phi);
                s += &steps[t];
                total += traj.states[t + 1].iter().zip(s.iter()).map(|(o, x)| (o - x) * (o - x)).sum::<f64>();
            }
        }
    }
    total / noise.0.len() as f64
}

/// Estimates `φ` from one observed trajectory.
pub fn cem_estimate<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    observed: &Trajectory,
    belief: &ParamBelief,
    cfg: &CemConfig,
    rng: &mut R,
) -> Result<CemEstimate> {
    cem_estimate_many(model, std::slice::from_ref(observed), belief, cfg, rng)
}

/// Estimates `φ` from several independent trajectories (deviations add up).
///
/// The search starts at the belief. All iterations share one set of rollout
/// noise draws, and the best candidate so far is carried into every later
/// population, so the best objective never increases.
pub fn cem_estimate_many<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    observed: &[Trajectory],
    belief: &ParamBelief,
    cfg: &CemConfig,
    rng: &mut R,
) -> Result<CemEstimate> {
    cfg.validate()?;
    if observed.iter().all(|t| t.is_empty()) {
        return Err(Error::InvalidArgument(
            "observed data has no transitions".into(),
        ));
    }
    let space = model.params();
    if belief.dim() != space.dim() {
        return Err(Error::DimMismatch {
            expected: space.dim(),
            found: belief.dim(),
        });
    }
    let deterministic = model.noise().iter().all(|&s| s == 0.0);
    let rollouts = if deterministic { 1 } else { cfg.rollouts };
    let noise = CommonNoise::draw(model, observed, rollouts, rng);

    let mut search = BoxGaussian::new(space.clamp(&belief.mean), &belief.covariance)?;
    let mut incumbent: Option<(DVector<f64>, f64)> = None;
    let mut best_path = Vec::with_capacity(cfg.iterations);
    let mut elite_mean = search.mean.clone();
    let n_elite = cfg.elite_count();

    for _ in 0..cfg.iterations {
        let mut candidates: Vec<DVector<f64>> = (0..cfg.samples_per_iter)
            .map(|_| search.sample(&space.lower, &space.upper, rng))
            .collect();
        if let Some((best, _)) = &incumbent {
            candidates[0] = best.clone();
        }
        let objectives: Vec<f64> = candidates.par_iter().map(|phi| deviation(model, observed, phi, &noise)).collect();
        let order = rank(&objectives);
        let best = order[0];
        if incumbent.as_ref().map_or(true, |(_, v)| objectives[best] <= *v) {
            incumbent = Some((candidates[best].clone(), objectives[best]));
        }
        best_path.push(incumbent.as_ref().map(|(_, v)| *v).unwrap_or(f64::INFINITY));

        let elites: Vec<&DVector<f64>> = order.iter().take(n_elite).map(|&i| &candidates[i]).collect();
        let (mean, cov) = refit(&elites, cfg.variance_floor);
        elite_mean = mean.clone();
        search = BoxGaussian::new(mean, &cov)?;
    }

    let (best_candidate, _) = incumbent.expect("at least one iteration");
    Ok(CemEstimate {
        phi: space.clamp(&elite_mean),
        best_objective: best_path,
        best_candidate,
    })
}

/// Information-form covariance update, `Σ ← (F + Σ⁻¹)⁻¹`, computed as
/// `L (I + Lᵀ F L)⁻¹ Lᵀ` with `Σ = L Lᵀ`. The mean is left to the caller.
pub fn belief_update(belief: &ParamBelief, f: &FisherMatrix) -> Result<ParamBelief> {
    if f.dim() != belief.dim() {
        return Err(Error::DimMismatch {
            expected: belief.dim(),
            found: f.dim(),
        });
    }
    let l = belief.covariance.clone().cholesky().ok_or(Error::BadPrior)?.l();
    let m = belief.dim();
    let inner = DMatrix::identity(m, m) + l.transpose() * f.matrix() * &l;
    let inner_inv = inner
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("information update is not positive definite".into()))?
        .inverse();
    let covariance = linalg::symmetrize(&(&l * inner_inv * l.transpose()));
    Ok(ParamBelief {
        mean: belief.mean.clone(),
        covariance,
    })
}

pub fn belief_trace(belief: &ParamBelief) -> f64 {
    linalg::trace(&belief.covariance)
}

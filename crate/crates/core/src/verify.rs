//! Identity, bound and consistency checks behind the `verify` command.
//!
//! Every check runs on seeded random instances and reports the worst
//! measured error against its tolerance. `docs/traceability.md` maps each
//! check name to the property it covers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::{self, EvalSet, ExplorationConfig, TrueSystem};
use crate::dynamics::{self, DynamicsModel, LinearGaussian1D, NuisanceCoupled, Push2D};
use crate::estimation::{self, CemConfig, ParamBelief};
use crate::fisher::{self, FisherMatrix, ScoreSample};
use crate::objectives::{self, BonusConfig, ObjectiveKind};
use crate::subspace;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub module: String,
    pub passed: bool,
    /// Worst observed error (or violation count, see `detail`).
    pub measured: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!(
                "{} {:<32} {:<12} measured {:.3e} tol {:.1e} ({} cases){}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.module,
                c.measured,
                c.tolerance,
                c.cases,
                if c.detail.is_empty() { String::new() } else { format!(" {}", c.detail) }
            );
        }
        s
    }
}

fn check(name: &str, module: &str, measured: f64, tolerance: f64, cases: usize, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        module: module.into(),
        passed: measured <= tolerance,
        measured,
        tolerance,
        cases,
        detail,
    }
}

/// Random PSD matrix `A Aᵀ` with `A` of shape `m × rank` and columns scaled
/// over four decades.
pub fn random_psd<R: Rng + ?Sized>(m: usize, rank: usize, rng: &mut R) -> FisherMatrix {
    let a = DMatrix::from_fn(m, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scales = DMatrix::from_diagonal(&DVector::from_fn(rank, |_, _| 10f64.powf(rng.random_range(-2.0..2.0))));
    let a = a * scales;
    FisherMatrix::closed_form(&a * a.transpose()).expect("outer product is PSD")
}

/// Random estimated FIM from `n` Gaussian score samples.
pub fn random_estimated_fim<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> FisherMatrix {
    let mix = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scores: Vec<ScoreSample> = (0..n)
        .map(|_| {
            let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            ScoreSample::new(&mix * z).expect("finite")
        })
        .collect();
    fisher::estimate_fim(&scores).expect("nonempty")
}

fn random_k<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<usize> {
    let size = rng.random_range(1..m);
    let mut idx: Vec<usize> = (0..m).collect();
    for i in 0..size {
        let j = rng.random_range(i..m);
        idx.swap(i, j);
    }
    let mut k = idx[..size].to_vec();
    k.sort_unstable();
    k
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn fisher_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=12);
        let f = random_estimated_fim(m, rng.random_range(1..3 * m + 2), rng);
        let d = fisher::eigendecompose(&f);
        for i in 0..m {
            let w = d.eigenvectors.column(i).into_owned();
            let di = fisher::directional_information(&f, &w)?;
            worst = worst.max((di - d.eigenvalues[i]).abs() / (1.0 + d.largest()));
        }
    }
    out.push(check("directional-information", "fisher", worst, 1e-8, 100, String::new()));

    let (mut trace_err, mut kyfan, mut perm) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = rng.random_range(2..=10);
        let f = random_psd(m, rng.random_range(1..=m), rng);
        let d = fisher::eigendecompose(&f);
        trace_err = trace_err.max(rel(f.trace(), d.eigenvalues.sum()));
        for size in 1..m {
            let k = random_k(m, rng);
            let k = &k[..k.len().min(size)];
            let tail: f64 = d.eigenvalues.iter().skip(k.len()).sum();
            let gap = f.trace() - fisher::principal_submatrix_trace(&f, k)?;
            kyfan = kyfan.max(tail - gap);
        }
        let scores: Vec<ScoreSample> = (0..20)
            .map(|_| ScoreSample::new(DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))).expect("finite"))
            .collect();
        let mut shuffled = scores.clone();
        shuffled.reverse();
        shuffled.rotate_left(7);
        let a = fisher::estimate_fim(&scores)?;
        let b = fisher::estimate_fim(&shuffled)?;
        perm = perm.max((a.matrix() - b.matrix()).amax());
    }
    out.push(check("trace-equals-eigensum", "fisher", trace_err, 1e-10, 200, String::new()));
    out.push(check("ky-fan-truncation", "fisher", kyfan, 1e-8, 200, "max violation".into()));
    out.push(check("permutation-invariance", "fisher", perm, 1e-12, 200, String::new()));

    // linear-Gaussian: per-step information from one (s, a) pair
    let model = LinearGaussian1D::new(0.2);
    let phi = DVector::from_vec(vec![0.7, -0.4]);
    let (s, a) = (DVector::from_element(1, 0.8), DVector::from_element(1, -0.5));
    let exact = dynamics::closed_form_fim(&model, &s, &a, &phi)?;
    let mut errs = Vec::new();
    for n in [1_000usize, 100_000] {
        let scores: Vec<ScoreSample> = (0..n)
            .map(|_| {
                let next = dynamics::step_sample(&model, &s, &a, &phi, rng)?;
                dynamics::step_score(&model, &s, &a, &phi, &next)
            })
            .collect::<Result<_>>()?;
        let est = fisher::estimate_fim(&scores)?;
        errs.push((est.matrix() - exact.matrix()).norm() / exact.matrix().norm());
    }
    let decreasing = if errs[1] <= errs[0] { "decreasing" } else { "NOT decreasing" };
    let mut c = check("mc-fim-convergence", "fisher", errs[1], 0.05, 2, format!("N=1e3: {:.3e}, {decreasing}", errs[0]));
    c.passed &= errs[1] <= errs[0];
    out.push(c);
    Ok(())
}

fn brute_force_best(basis: &DMatrix<f64>, budget: usize, eps: f64) -> f64 {
    let m = basis.nrows();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != budget {
            continue;
        }
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let w = DMatrix::from_fn(rows.len(), basis.ncols(), |r, c| basis[(rows[r], c)]);
        let g = &w * w.transpose() / eps + DMatrix::identity(rows.len(), rows.len());
        if let Some(ch) = g.cholesky() {
            let ld: f64 = ch.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
            best = best.max(ld);
        }
    }
    best
}

fn subspace_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let (mut violations, mut monotone, mut dichotomy, mut lazy_plain) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..500 {
        let m = rng.random_range(2..=10);
        let f = random_psd(m, rng.random_range(1..=m), rng);
        let d = fisher::eigendecompose(&f);
        let split = subspace::split_observable(&d, 0.1, 0.01)?;
        let mut seen = vec![0u8; m];
        for &i in split.observable.iter().chain(&split.weak) {
            seen[i] += 1;
        }
        let ok = seen.iter().all(|&c| c == 1)
            && split.observable.iter().all(|&i| d.eigenvalues[i] >= split.threshold_used)
            && split.weak.iter().all(|&i| d.eigenvalues[i] < split.threshold_used);
        dichotomy += usize::from(!ok);
        if split.rank() == 0 {
            continue;
        }
        let delta_cos = rng.random_range(0.5..0.99);
        let sel = subspace::select_identifiable(&split.basis, split.rank(), delta_cos, 1e-9)?;
        let plain = subspace::select_identifiable_plain(&split.basis, split.rank(), delta_cos, 1e-9)?;
        lazy_plain += usize::from(sel.selected != plain.selected);
        monotone += usize::from(sel.gain_path.windows(2).any(|w| w[1] < w[0]));
        for (x, &i) in sel.selected.iter().enumerate() {
            for &j in &sel.selected[x + 1..] {
                let ri = split.basis.row(i).transpose();
                let rj = split.basis.row(j).transpose();
                violations += usize::from(subspace::cosine_rows(&ri, &rj)?.abs() > delta_cos);
            }
        }
    }
    out.push(check("cosine-constraint", "subspace", violations as f64, 0.0, 500, "violations".into()));
    out.push(check("greedy-monotone", "subspace", monotone as f64, 0.0, 500, "violations".into()));
    out.push(check("threshold-dichotomy", "subspace", dichotomy as f64, 0.0, 500, "violations".into()));
    out.push(check("lazy-equals-plain", "subspace", lazy_plain as f64, 0.0, 500, "mismatches".into()));

    let mut dup = 0usize;
    for _ in 0..100 {
        let m = rng.random_range(3..=8);
        let r = rng.random_range(1..m);
        let mut b = DMatrix::from_fn(m, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (i, j) = (0, rng.random_range(1..m));
        let row = b.row(i).into_owned();
        b.set_row(j, &row);
        let sel = subspace::select_identifiable(&b, r.min(m), 0.95, 1e-9)?;
        dup += usize::from(sel.selected.contains(&i) && sel.selected.contains(&j));
    }
    out.push(check("duplicate-rows", "subspace", dup as f64, 0.0, 100, "both copies selected".into()));

    let (mut worst, mut mismatch) = (0.0f64, 0usize);
    let mut cases = 0;
    for m in 1..=10 {
        for _ in 0..5 {
            // orthonormal rows: a random orthogonal matrix's leading columns
            let q = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
            let n = rng.random_range(1..=m);
            let basis = q.rows(0, n).into_owned();
            let budget = rng.random_range(1..=n);
            let eps = 1e-9;
            let sel = subspace::select_identifiable(&basis, budget, 0.95, eps)?;
            let best = brute_force_best(&basis, budget.min(n), eps);
            let got = *sel.gain_path.last().unwrap_or(&0.0);
            mismatch += usize::from(sel.selected.len() != budget.min(n));
            worst = worst.max(rel(got, best));
            let expected = sel.selected.len() as f64 * eps.ln_1p();
            worst = worst.max((sel.objective_value - expected).abs());
            cases += 1;
        }
    }
    let mut c = check("orthonormal-brute-force", "subspace", worst, 1e-9, cases, format!("{mismatch} size mismatches"));
    c.passed &= mismatch == 0;
    out.push(c);
    Ok(())
}

fn objective_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let (mut sandwich, mut oracle, mut beta_excess, mut eps_mono, mut proj, mut forms) = (0usize, 0.0f64, 0.0f64, 0usize, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = rng.random_range(2..=12);
        let rank = rng.random_range(1..=m);
        let f = random_psd(m, rank, rng);
        let k = random_k(m, rng);
        let eps = objectives::default_eps(&f);
        let q = objectives::qoed_objective(&f, &k, eps)?;
        let a = objectives::agnostic_objective(&f, &k)?;
        let b = objectives::boed_objective(&f);
        let slack = 1e-10 * (1.0 + b);
        sandwich += usize::from(!(q >= -slack && q <= a + slack && a <= b + slack));
        let blocks = objectives::block_partition(&f, &k)?;
        oracle = oracle.max(rel(q, objectives::residual_regression_trace(&blocks, eps)?));
        let q2 = objectives::qoed_objective(&f, &k, 10.0 * eps)?;
        eps_mono += usize::from(q2 < q - 1e-12 * (1.0 + q.abs()));
        // β ≤ 1 needs positive-definite blocks
        if rank == m {
            beta_excess = beta_excess.max(objectives::quasiopt_constants(&f, &k)?.beta - 1.0);
        }
        let d = fisher::eigendecompose(&f);
        let r = rng.random_range(0..=m);
        let o: Vec<usize> = (0..r).collect();
        let tail: f64 = d.eigenvalues.iter().skip(r).sum();
        let got = objectives::projection_residual_with(&f, &d, &o)?;
        proj = proj.max((got - tail).abs() / (1.0 + f.trace()));
        let via_eigen = fisher::principal_trace_from_eigen(&d, &k)?;
        forms = forms.max((via_eigen - fisher::principal_submatrix_trace(&f, &k)?).abs() / (1.0 + f.trace()));
    }
    out.push(check("sandwich", "objectives", sandwich as f64, 0.0, 1000, "violations".into()));
    out.push(check("schur-oracle", "objectives", oracle, 1e-8, 1000, "relative".into()));
    out.push(check("beta-at-most-one", "objectives", beta_excess.max(0.0), 1e-8, 1000, String::new()));
    out.push(check("eps-monotone", "objectives", eps_mono as f64, 0.0, 1000, "violations".into()));
    out.push(check("projection-identity", "objectives", proj, 1e-10, 1000, String::new()));
    out.push(check("trace-forms", "objectives", forms, 1e-8, 1000, String::new()));

    let (fixed, adaptive) = bound_families(rng, 200)?;
    out.push(check("bound-fixed-k", "objectives", fixed as f64, 0.0, 200, "violations".into()));
    out.push(check("bound-adaptive-k", "objectives", adaptive as f64, 0.0, 200, "violations".into()));

    let fam = dynamics::counterexample_family(0.1, 100.0)?;
    let (fa, fb) = (&fam[&dynamics::CounterexampleDesign::A], &fam[&dynamics::CounterexampleDesign::B]);
    let agn_a = objectives::agnostic_objective(fa, &[0])?;
    let agn_b = objectives::agnostic_objective(fb, &[0])?;
    let ratio = fa.trace() / fb.trace();
    let mut c = check("counterexample", "objectives", (ratio - 1.1 / 101.0).abs(), 1e-12, 1, format!("ratio {ratio:.5}"));
    c.passed &= agn_a > agn_b && ratio < 0.5;
    out.push(c);

    let tuples = [(0.0011, 0.0008, 0.9981), (0.0012, 0.2784, 0.7207), (0.0162, 0.1421, 0.8442)];
    let worst = tuples
        .iter()
        .map(|&(eta, beta, rho)| (objectives::quasiopt_factor(eta, beta) - rho).abs())
        .fold(0.0, f64::max);
    out.push(check("quasiopt-factor-tuples", "objectives", worst, 5e-4, tuples.len(), String::new()));
    Ok(())
}

/// Counts violations of the quasi-optimality bound over random families of
/// full-rank FIMs, with a shared `k` and with each member's own selection.
pub fn bound_families(rng: &mut ChaCha8Rng, families: usize) -> Result<(usize, usize)> {
    let (mut fixed, mut adaptive) = (0, 0);
    let cfg = BonusConfig::default();
    for _ in 0..families {
        let m = rng.random_range(2..=8);
        let size = rng.random_range(5..=20);
        let fims: Vec<FisherMatrix> = (0..size).map(|_| random_psd(m, m, rng)).collect();
        let k = random_k(m, rng);
        fixed += usize::from(!bound_holds(&fims, |_| Ok(k.clone()))?);
        adaptive += usize::from(!bound_holds(&fims, |f| {
            let (_, _, sel) = objectives::identify(f, &cfg)?;
            Ok(sel.sorted())
        })?);
    }
    Ok((fixed, adaptive))
}

/// `tr(F^π̂) ≥ (1 − max β)/(1 + max η) · max_π tr(F^π)` for the QOED argmax.
pub fn bound_holds(fims: &[FisherMatrix], pick_k: impl Fn(&FisherMatrix) -> Result<Vec<usize>>) -> Result<bool> {
    let mut qoed = Vec::with_capacity(fims.len());
    let (mut eta, mut beta) = (0.0f64, 0.0f64);
    for f in fims {
        let k = pick_k(f)?;
        if k.is_empty() {
            return Ok(true);
        }
        qoed.push(objectives::qoed_objective(f, &k, objectives::default_eps(f))?);
        let c = objectives::quasiopt_constants(f, &k)?;
        eta = eta.max(c.eta);
        beta = beta.max(c.beta);
    }
    if beta >= 1.0 {
        return Ok(true);
    }
    let chosen = design::argmax(&qoed).expect("nonempty family");
    let best = fims.iter().map(|f| f.trace()).fold(f64::NEG_INFINITY, f64::max);
    Ok(fims[chosen].trace() >= objectives::quasiopt_factor(eta, beta) * best)
}

/// Largest `|score − central difference of the log-likelihood|` over random
/// transitions of `model`.
pub fn score_fd_error<M: DynamicsModel + ?Sized, R: Rng + ?Sized>(model: &M, tuples: usize, rng: &mut R) -> Result<f64> {
    let space = model.params();
    let bounds = model.action_bounds();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let phi = DVector::from_fn(space.dim(), |i, _| {
            let margin = 0.05 * space.width(i);
            rng.random_range(space.lower[i] + margin..space.upper[i] - margin)
        });
        let s = DVector::from_fn(model.state_dim(), |_, _| rng.random_range(-1.0..1.0));
        let a = DVector::from_iterator(bounds.len(), bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)));
        let next = dynamics::step_sample(model, &s, &a, &phi, rng)?;
        let score = dynamics::step_score(model, &s, &a, &phi, &next)?;
        for i in 0..space.dim() {
            let (mut up, mut dn) = (phi.clone(), phi.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (dynamics::step_loglik(model, &s, &a, &up, &next)? - dynamics::step_loglik(model, &s, &a, &dn, &next)?) / (2.0 * h);
            worst = worst.max((fd - score.as_vector()[i]).abs());
        }
    }
    Ok(worst)
}

fn dynamics_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let models: [(&str, Box<dyn DynamicsModel>); 3] = [
        ("linear-gaussian-1d", Box::new(LinearGaussian1D::new(0.1))),
        ("push-2d", Box::new(Push2D::new([0.01, 0.02], 0.05))),
        ("nuisance-coupled", Box::new(NuisanceCoupled::new(0.1))),
    ];
    for (name, model) in &models {
        let err = score_fd_error(model.as_ref(), 1000, rng)?;
        out.push(check(&format!("score-fd/{name}"), "dynamics", err, 1e-5, 1000, String::new()));
    }

    let model = NuisanceCoupled::new(0.1);
    let phi = DVector::from_vec(vec![1.2, 0.8, 0.9, -0.7]);
    let s = DVector::from_vec(vec![0.3, -0.2, 0.5, -0.4]);
    let a = DVector::from_vec(vec![0.6, -0.9]);
    let n = 100_000;
    let mut sum = DVector::zeros(4);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let next = dynamics::step_sample(&model, &s, &a, &phi, rng)?;
        let sc = dynamics::step_score(&model, &s, &a, &phi, &next)?;
        sum += sc.as_vector();
        scores.push(sc);
    }
    let exact = dynamics::closed_form_fim(&model, &s, &a, &phi)?;
    // |mean_i| / (σ_i/√N), σ_i² = F_ii
    let zmax = (0..4)
        .filter(|&i| exact.matrix()[(i, i)] > 0.0)
        .map(|i| (sum[i] / n as f64).abs() / (exact.matrix()[(i, i)] / n as f64).sqrt())
        .fold(0.0, f64::max);
    out.push(check("score-mean-zero", "dynamics", zmax, 3.0, n, "in standard errors".into()));
    let est = fisher::estimate_fim(&scores)?;
    let err = (est.matrix() - exact.matrix()).norm() / exact.matrix().norm();
    out.push(check("fim-consistency", "dynamics", err, 0.05, n, "relative Frobenius".into()));

    let actions: Vec<DVector<f64>> = (0..30).map(|t| DVector::from_vec(vec![(t as f64 * 0.3).sin(), -0.5])).collect();
    let t1 = dynamics::simulate_trajectory(&model, &phi, &s, &actions, &mut ChaCha8Rng::seed_from_u64(9))?;
    let t2 = dynamics::simulate_trajectory(&model, &phi, &s, &actions, &mut ChaCha8Rng::seed_from_u64(9))?;
    out.push(check("determinism", "dynamics", f64::from(u8::from(t1 != t2)), 0.0, 1, String::new()));
    Ok(())
}

fn estimation_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut excess = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=8);
        let sigma = random_psd(m, m, rng).matrix() + DMatrix::identity(m, m) * 1e-3;
        let belief = ParamBelief::new(DVector::zeros(m), sigma)?;
        let f = random_psd(m, rng.random_range(1..=m), rng);
        let post = estimation::belief_update(&belief, &f)?;
        // Σ_post ⪯ Σ: the largest eigenvalue of Σ_post − Σ is ≤ 0
        let diff = &post.covariance - &belief.covariance;
        let top = diff.symmetric_eigen().eigenvalues.max();
        excess = excess.max(top / (1.0 + belief.trace()));
    }
    out.push(check("belief-contraction", "estimation", excess.max(0.0), 1e-10, 200, String::new()));

    let model = LinearGaussian1D::new(0.0);
    let truth = DVector::from_vec(vec![0.8, -0.6]);
    let actions: Vec<DVector<f64>> = (0..20).map(|t| DVector::from_element(1, if t % 3 == 0 { 1.0 } else { -0.5 })).collect();
    let obs = dynamics::simulate_trajectory(&model, &truth, &model.initial_state(), &actions, rng)?;
    let prior = ParamBelief::diagonal(model.params().center(), &[0.75, 0.5])?;
    let (mut mono, mut errs) = (0usize, Vec::new());
    for samples in [64usize, 2048] {
        let mut err = 0.0;
        for seed in 0..5 {
            let cfg = CemConfig {
                samples_per_iter: samples,
                ..CemConfig::default()
            };
            let est = estimation::cem_estimate(&model, &obs, &prior, &cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
            mono += usize::from(est.best_objective.windows(2).any(|w| w[1] > w[0]));
            err += (&est.phi - &truth).amax() / 5.0;
        }
        errs.push(err);
    }
    out.push(check("cem-monotone", "estimation", mono as f64, 0.0, 10, "violations".into()));
    out.push(check(
        "cem-consistency",
        "estimation",
        errs[1],
        errs[0].max(1e-12),
        10,
        format!("mean error {:.2e} at 64 samples, {:.2e} at 2048", errs[0], errs[1]),
    ));
    Ok(())
}

fn design_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let model = NuisanceCoupled::new(0.05);
    let phi = DVector::from_vec(vec![1.2, 0.8, 0.9, -0.7]);
    let s0 = model.initial_state();
    let cfg = BonusConfig::default();
    let mut sandwich = 0usize;
    let mut fims = Vec::new();
    for _ in 0..40 {
        let eval = EvalSet::random(&model, 1, 40, rng);
        let actions = &eval.sequences[0].1;
        let f = dynamics::expected_trajectory_fim(&model, &phi, &s0, actions, 4, rng)?;
        let s = design::summarize_information(&f, &cfg)?;
        let slack = 1e-10 * (1.0 + s.boed);
        sandwich += usize::from(!(s.qoed <= s.agnostic + slack && s.agnostic <= s.boed + slack));
        fims.push(f);
    }
    out.push(check("design-sandwich", "design", sandwich as f64, 0.0, 40, "violations".into()));
    let ok = bound_holds(&fims, |f| Ok(objectives::identify(f, &cfg)?.2.sorted()))?;
    out.push(check("design-bound", "design", f64::from(u8::from(!ok)), 0.0, fims.len(), String::new()));

    let mut ecfg = ExplorationConfig {
        max_rounds: 3,
        bonus_samples: 2,
        eval_sequences: 2,
        ..ExplorationConfig::default()
    };
    ecfg.design_search.iterations = 2;
    ecfg.design_search.samples_per_iter = 16;
    let est = CemConfig {
        iterations: 3,
        samples_per_iter: 128,
        rollouts: 2,
        ..CemConfig::default()
    };
    let prior = ParamBelief::diagonal(model.params().center(), &[0.5, 0.5, 1.0, 1.0])?;
    let eval = EvalSet::random(&model, 2, ecfg.horizon_steps(), rng);
    let truth = TrueSystem { model: &model, phi };
    let seed: u64 = rng.random();
    let run = |kind| design::run_exploration(&truth, &model, &prior, kind, &ecfg, &est, &eval, &mut ChaCha8Rng::seed_from_u64(seed));
    let report = run(ObjectiveKind::Qoed)?;
    out.push(check(
        "termination",
        "design",
        f64::from(u8::from(report.rounds.len() > ecfg.max_rounds)),
        0.0,
        1,
        format!("{} rounds", report.rounds.len()),
    ));
    let mut traces = vec![prior.trace()];
    traces.extend(report.rounds.iter().map(|r| r.belief_trace));
    let rise = traces.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    out.push(check("belief-trace-monotone", "design", rise, 1e-12, traces.len(), String::new()));

    let again = run(ObjectiveKind::Qoed)?;
    out.push(check("reproducibility", "bench", f64::from(u8::from(report != again)), 0.0, 1, String::new()));
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).map_err(|e| crate::Error::Io(e.to_string()))?;
    let keys = [
        "round", "phi_hat", "belief_trace", "bonus", "boed", "agnostic", "qoed", "eta", "beta", "rho", "rmse_x100",
    ];
    let missing = json["rounds"]
        .as_array()
        .map(|rounds| rounds.iter().map(|r| keys.iter().filter(|k| r.get(**k).is_none()).count()).sum::<usize>())
        .unwrap_or(keys.len());
    out.push(check("report-schema", "bench", missing as f64, 0.0, 1, "missing keys".into()));
    Ok(())
}

/// Runs every check with a stream seeded by `seed`.
pub fn cmd_verify(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    fisher_checks(&mut rng, &mut checks)?;
    subspace_checks(&mut rng, &mut checks)?;
    objective_checks(&mut rng, &mut checks)?;
    dynamics_checks(&mut rng, &mut checks)?;
    estimation_checks(&mut rng, &mut checks)?;
    design_checks(&mut rng, &mut checks)?;
    Ok(VerifyReport { checks })
}

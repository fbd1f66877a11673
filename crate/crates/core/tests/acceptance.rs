//! Acceptance suite: one line per criterion, nonzero exit on an unexpected
//! failure. Oracles are computed here, independently of the library paths
//! they check.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use qoed::bench::{self, sweep_grid};
use qoed::config::ExperimentConfig;
use qoed::dynamics::{self, counterexample_family, CounterexampleDesign, DynamicsModel, LinearGaussian1D, NuisanceCoupled, Push2D};
use qoed::estimation::{cem_estimate, CemConfig, ParamBelief};
use qoed::fisher::{self, FisherMatrix, ScoreSample};
use qoed::objectives::{self, BonusConfig, ObjectiveKind};
use qoed::subspace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Criteria whose failure is analysed in the README rather than treated as a
/// regression.
const DOCUMENTED_GAPS: &[u32] = &[12];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn psd(m: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, rank, |_, _| gaussian(rng) * 10f64.powf(rng.random_range(-1.5..1.5)));
    &a * a.transpose()
}

/// Eigenvalues (descending) and matching eigenvectors from nalgebra directly.
fn eig_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(a.clone());
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn subset(m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let k: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        if !k.is_empty() && k.len() < m {
            return k;
        }
    }
}

fn block(a: &DMatrix<f64>, r: &[usize], c: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])])
}

fn complement(k: &[usize], m: usize) -> Vec<usize> {
    (0..m).filter(|i| !k.contains(i)).collect()
}

fn c1_directional() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut eig_mismatch = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=12);
        let n = rng.random_range(m..4 * m + 4);
        let mix = DMatrix::from_fn(m, m, |_, _| gaussian(&mut rng));
        let scores: Vec<ScoreSample> = (0..n)
            .map(|_| ScoreSample::new(&mix * DVector::from_fn(m, |_, _| gaussian(&mut rng))).unwrap())
            .collect();
        let f = fisher::estimate_fim(&scores).unwrap();
        let d = fisher::eigendecompose(&f);
        let (oracle_vals, _) = eig_desc(f.matrix());
        let lam1 = d.largest();
        for i in 0..m {
            let w = d.eigenvectors.column(i).into_owned();
            let info = fisher::directional_information(&f, &w).unwrap();
            worst = worst.max((info - d.eigenvalues[i]).abs() / (1.0 + lam1));
            eig_mismatch = eig_mismatch.max((d.eigenvalues[i] - oracle_vals[i].max(0.0)).abs() / (1.0 + lam1));
        }
    }
    outcome(
        worst <= 1e-8 && eig_mismatch <= 1e-8,
        format!("max |wᵀFw − λ|/(1+λ₁) = {worst:.2e}, eigenvalues vs nalgebra {eig_mismatch:.2e} (tol 1e-8)"),
    )
}

fn c2_schur_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    // rank-deficient instances make the objective a cancellation of terms of
    // size tr(F_kk), so the gap is measured against that scale; full-rank
    // instances are also reported relative to the value itself
    let (mut worst, mut worst_full) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = rng.random_range(2..=12);
        let rank = rng.random_range(1..=m);
        let f = FisherMatrix::closed_form(psd(m, rank, &mut rng)).unwrap();
        let k = subset(m, &mut rng);
        let eps = objectives::default_eps(&f);
        let q = objectives::qoed_objective(&f, &k, eps).unwrap();
        let r = objectives::residual_regression_trace(&objectives::block_partition(&f, &k).unwrap(), eps).unwrap();
        let kk = fisher::principal_submatrix_trace(&f, &k).unwrap();
        worst = worst.max((q - r).abs() / kk.max(f64::MIN_POSITIVE));
        if rank == m {
            worst_full = worst_full.max((q - r).abs() / q.abs().max(f64::MIN_POSITIVE));
        }
    }
    outcome(
        worst <= 1e-8 && worst_full <= 1e-8,
        format!("max |Δ|/tr(F_kk) {worst:.2e}; full-rank max |Δ|/value {worst_full:.2e} (tol 1e-8, 1000 instances)"),
    )
}

fn c3_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=12);
        let a = psd(m, rng.random_range(1..=m), &mut rng);
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let r = rng.random_range(0..=m);
        let o: Vec<usize> = (0..r).collect();
        let (vals, _) = eig_desc(&a);
        let tail: f64 = vals[r..].iter().sum();
        let got = objectives::projection_residual(&f, &o).unwrap();
        worst = worst.max((got - tail).abs() / a.trace().max(f64::MIN_POSITIVE));
    }
    outcome(worst <= 1e-10, format!("max |tr((I−P_o)F) − tail|/tr(F) = {worst:.2e} (tol 1e-10)"))
}

fn c4_trace_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst, mut kyfan) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = rng.random_range(2..=12);
        let a = psd(m, rng.random_range(1..=m), &mut rng);
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let k = subset(m, &mut rng);
        let (vals, vecs) = eig_desc(&a);
        let form: f64 = (0..m)
            .map(|i| vals[i] * k.iter().map(|&r| vecs[(r, i)].powi(2)).sum::<f64>())
            .sum();
        let tr_kk = fisher::principal_submatrix_trace(&f, &k).unwrap();
        worst = worst.max((tr_kk - form).abs() / (1.0 + a.trace()));
        let tail: f64 = vals[k.len()..].iter().sum();
        kyfan = kyfan.max(tail - (f.trace() - tr_kk));
    }
    outcome(
        worst <= 1e-8 && kyfan <= 1e-8,
        format!("trace-form gap {worst:.2e} (tol 1e-8), worst Ky Fan violation {kyfan:.2e} (tol 1e-8)"),
    )
}

fn inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| 1.0 / x.sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// `(η, β)` from the definitions, for positive-definite blocks.
fn eta_beta(a: &DMatrix<f64>, k: &[usize]) -> (f64, f64) {
    let kb = complement(k, a.nrows());
    if kb.is_empty() {
        return (0.0, 0.0);
    }
    let (fkk, fbb, fkb) = (block(a, k, k), block(a, &kb, &kb), block(a, k, &kb));
    let c = inv_sqrt(&fkk) * fkb * inv_sqrt(&fbb);
    let beta = c.singular_values().max().powi(2);
    (fbb.trace() / fkk.trace(), beta)
}

fn bound_violated(fams: &[DMatrix<f64>], ks: &[Vec<usize>]) -> bool {
    let (mut eta, mut beta) = (0.0f64, 0.0f64);
    let mut best_q = (f64::NEG_INFINITY, 0);
    for (i, (a, k)) in fams.iter().zip(ks).enumerate() {
        let (e, b) = eta_beta(a, k);
        eta = eta.max(e);
        beta = beta.max(b);
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let q = objectives::qoed_objective(&f, k, objectives::default_eps(&f)).unwrap();
        if q > best_q.0 {
            best_q = (q, i);
        }
    }
    assert!(beta < 1.0, "family constructed with β < 1");
    let opt = fams.iter().map(|a| a.trace()).fold(f64::NEG_INFINITY, f64::max);
    fams[best_q.1].trace() < (1.0 - beta) / (1.0 + eta) * opt
}

fn c5_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut fixed, mut adaptive) = (0usize, 0usize);
    let cfg = BonusConfig::default();
    for _ in 0..200 {
        let m = rng.random_range(2..=8);
        let n = rng.random_range(5..=20);
        // full rank keeps every block positive definite, hence β < 1
        let fams: Vec<DMatrix<f64>> = (0..n).map(|_| psd(m, m + 2, &mut rng)).collect();
        let k = subset(m, &mut rng);
        fixed += usize::from(bound_violated(&fams, &vec![k; n]));
        let ks: Vec<Vec<usize>> = fams
            .iter()
            .map(|a| {
                let f = FisherMatrix::closed_form(a.clone()).unwrap();
                objectives::identify(&f, &cfg).unwrap().2.sorted()
            })
            .collect();
        adaptive += usize::from(bound_violated(&fams, &ks));
    }
    let tuples = [(0.0011, 0.0008, 0.9981), (0.0012, 0.2784, 0.7207), (0.0162, 0.1421, 0.8442)];
    let factor_err = tuples
        .iter()
        .map(|&(e, b, r)| (objectives::quasiopt_factor(e, b) - r).abs())
        .fold(0.0, f64::max);
    outcome(
        fixed == 0 && adaptive == 0 && factor_err <= 5e-4,
        format!("violations: fixed k {fixed}/200, adaptive k {adaptive}/200; published tuples max factor error {factor_err:.1e} (tol 5e-4)"),
    )
}

fn c6_counterexample() -> Outcome {
    let (delta, big_m) = (0.1, 100.0);
    let fam = counterexample_family(delta, big_m).unwrap();
    let (a, b) = (&fam[&CounterexampleDesign::A], &fam[&CounterexampleDesign::B]);
    let agn_a = objectives::agnostic_objective(a, &[0]).unwrap();
    let agn_b = objectives::agnostic_objective(b, &[0]).unwrap();
    let pick_a = agn_a > agn_b;
    let achieved = if pick_a { a.trace() } else { b.trace() };
    let ratio = achieved / a.trace().max(b.trace());
    let err = (ratio - 1.1 / 101.0).abs();
    let rule_rho = ratio * 1.01; // any ρ above the achieved ratio
    let m_rule = (1.0 + delta) / rule_rho - 1.0;
    outcome(
        pick_a && err <= 1e-12 && ratio < 0.5 && big_m > m_rule - 1e-9,
        format!("agnostic picks {}; ratio {ratio:.6} (|Δ| {err:.1e} vs 1.1/101); M=100 > (1+δ)/ρ−1 = {m_rule:.2} for ρ={rule_rho:.4}", if pick_a { "A" } else { "B" }),
    )
}

fn fd_error<M: DynamicsModel>(model: &M, rng: &mut ChaCha8Rng) -> f64 {
    let space = model.params().clone();
    let bounds = model.action_bounds();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let phi = DVector::from_fn(space.dim(), |i, _| {
            let w = space.upper[i] - space.lower[i];
            rng.random_range(space.lower[i] + 0.05 * w..space.upper[i] - 0.05 * w)
        });
        let s = DVector::from_fn(model.state_dim(), |_, _| rng.random_range(-1.0..1.0));
        let a = DVector::from_iterator(bounds.len(), bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)));
        let next = dynamics::step_sample(model, &s, &a, &phi, rng).unwrap();
        let score = dynamics::step_score(model, &s, &a, &phi, &next).unwrap();
        for i in 0..space.dim() {
            let (mut up, mut dn) = (phi.clone(), phi.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (dynamics::step_loglik(model, &s, &a, &up, &next).unwrap()
                - dynamics::step_loglik(model, &s, &a, &dn, &next).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - score.as_vector()[i]).abs());
        }
    }
    worst
}

fn c7_scores() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let e1 = fd_error(&LinearGaussian1D::new(0.1), &mut rng);
    let e2 = fd_error(&Push2D::new([0.01, 0.02], 0.05), &mut rng);
    let e3 = fd_error(&NuisanceCoupled::new(0.1), &mut rng);
    let worst = e1.max(e2).max(e3);
    outcome(
        worst <= 1e-5,
        format!("max |score − FD| linear {e1:.1e}, push {e2:.1e}, nuisance {e3:.1e} (tol 1e-5, 1000 tuples each)"),
    )
}

fn c8_fim_convergence() -> Outcome {
    // s, a ~ U(-1, 1) independent: E[x xᵀ]/σ² with x = (s, a) is I/(3σ²)
    let sigma = 0.2;
    let model = LinearGaussian1D::new(sigma);
    let phi = DVector::from_vec(vec![0.6, -0.3]);
    let oracle = DMatrix::identity(2, 2) / (3.0 * sigma * sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let n = 100_000;
    let scores: Vec<ScoreSample> = (0..n)
        .map(|_| {
            let s = DVector::from_element(1, rng.random_range(-1.0..1.0));
            let a = DVector::from_element(1, rng.random_range(-1.0..1.0));
            let next = dynamics::step_sample(&model, &s, &a, &phi, &mut rng).unwrap();
            dynamics::step_score(&model, &s, &a, &phi, &next).unwrap()
        })
        .collect();
    let est = fisher::estimate_fim(&scores).unwrap();
    let err = (est.matrix() - &oracle).norm() / oracle.norm();
    outcome(err <= 0.05, format!("relative Frobenius error {err:.4} at N = 1e5 (tol 0.05)"))
}

fn brute_force(basis: &DMatrix<f64>, size: usize, eps: f64) -> f64 {
    let n = basis.nrows();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let rows: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let w = block(basis, &rows, &(0..basis.ncols()).collect::<Vec<_>>());
        let g = DMatrix::identity(size, size) + &w * w.transpose() / eps;
        best = best.max(g.determinant().ln());
    }
    best
}

fn c9_greedy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let eps = 1e-9;
    let (mut mismatch, mut cases) = (0usize, 0usize);
    for m in 1..=10 {
        for _ in 0..10 {
            let q = DMatrix::from_fn(m, m, |_, _| gaussian(&mut rng)).qr().q();
            let n = rng.random_range(1..=m);
            let basis = q.rows(0, n).into_owned();
            let budget = rng.random_range(1..=n);
            let sel = subspace::select_identifiable(&basis, budget, 0.95, eps).unwrap();
            let got = *sel.gain_path.last().unwrap();
            let best = brute_force(&basis, budget, eps);
            mismatch += usize::from(sel.selected.len() != budget || (got - best).abs() > 1e-8 * best.abs());
            cases += 1;
        }
    }
    let mut violations = 0usize;
    for _ in 0..500 {
        let m = rng.random_range(2..=10);
        let r = rng.random_range(1..=m);
        let mut basis = DMatrix::from_fn(m, r, |_, _| gaussian(&mut rng));
        // plant near-duplicates so the constraint binds
        if m > 2 && rng.random_bool(0.5) {
            let row = basis.row(0).into_owned() * 1.01 + DMatrix::from_fn(1, r, |_, _| 1e-3 * gaussian(&mut rng));
            basis.set_row(m - 1, &row);
        }
        let delta_cos = rng.random_range(0.5..0.99);
        let sel = subspace::select_identifiable(&basis, r, delta_cos, eps).unwrap();
        for (x, &i) in sel.selected.iter().enumerate() {
            for &j in &sel.selected[x + 1..] {
                let (a, b) = (basis.row(i), basis.row(j));
                let cos = a.dot(&b) / (a.norm() * b.norm());
                violations += usize::from(cos.abs() > delta_cos);
            }
        }
    }
    outcome(
        mismatch == 0 && violations == 0,
        format!("brute-force mismatches {mismatch}/{cases} (orthonormal rows, m ≤ 10); cosine violations {violations} over 500 instances"),
    )
}

fn c10_estimation() -> Outcome {
    let model = LinearGaussian1D::new(0.0);
    let truth = DVector::from_vec(vec![0.9, 0.2]);
    let actions: Vec<DVector<f64>> = (0..40).map(|t| DVector::from_element(1, (0.7 * t as f64).sin())).collect();
    let obs = dynamics::mean_rollout(&model, &truth, &model.initial_state(), &actions);
    let obs = dynamics::Trajectory::new(obs, actions).unwrap();
    let prior = ParamBelief::diagonal(model.params().center(), &[0.75, 0.5]).unwrap();
    let cfg = CemConfig::default();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..25 {
        let est = cem_estimate(&model, &obs, &prior, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let err = (&est.phi - &truth).amax();
        worst = worst.max(err);
        hits += usize::from(err <= 1e-2);
    }
    outcome(
        hits >= 24,
        format!("{hits}/25 seeds within 1e-2 per coordinate (5 × 2048), worst error {worst:.1e}"),
    )
}

fn c11_trend() -> Outcome {
    let cfg = ExperimentConfig::default();
    let t = Instant::now();
    let out = bench::cmd_bench(&cfg).unwrap();
    let elapsed = t.elapsed();
    let mean = |m| out.table.summary_for(m).unwrap().dyn_rmse_x100_mean;
    let std = |m| out.table.summary_for(m).unwrap().dyn_rmse_x100_std;
    let (q, a, b) = (mean(ObjectiveKind::Qoed), mean(ObjectiveKind::Agnostic), mean(ObjectiveKind::Boed));
    let imp = |x: f64| 100.0 * (x - q) / x;
    outcome(
        q < a && q < b && elapsed < Duration::from_secs(15 * 60),
        format!(
            "dyn RMSE x100 over {} seeds: QOED {q:.3}±{:.3}, Agnostic {a:.3}±{:.3}, BOED {b:.3}±{:.3}; improvement vs Agnostic {:.1}% (published 21.98%), vs BOED {:.1}% (published 35.23%); {:.0}s",
            cfg.seeds.len(),
            std(ObjectiveKind::Qoed),
            std(ObjectiveKind::Agnostic),
            std(ObjectiveKind::Boed),
            imp(a),
            imp(b),
            elapsed.as_secs_f64()
        ),
    )
}

/// Reduced budgets so the 2 × 1000 grid runs fit on one core.
fn sweep_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seeds = vec![1000];
    cfg.exploration.max_rounds = 1;
    cfg.exploration.bonus_samples = 2;
    cfg.exploration.design_search.samples_per_iter = 128;
    cfg.estimation.samples_per_iter = 256;
    cfg.estimation.rollouts = 2;
    cfg
}

fn c12_sweep() -> Outcome {
    let cfg = sweep_config();
    let t = Instant::now();
    let table = bench::cmd_sweep(&cfg, None).unwrap();
    let (qm, qs) = table.dyn_spread(ObjectiveKind::Qoed).unwrap();
    let (am, as_) = table.dyn_spread(ObjectiveKind::Agnostic).unwrap();
    let distinct = |m: ObjectiveKind| {
        let mut v: Vec<String> = table
            .rows
            .iter()
            .filter(|r| r.method == m)
            .map(|r| format!("{:.9}", r.dyn_rmse_x100))
            .collect();
        v.sort();
        v.dedup();
        v.len()
    };
    outcome(
        qs < as_,
        format!(
            "{} cells: QOED {qm:.3}±{qs:.2e}, Agnostic {am:.3}±{as_:.2e} (published 2.42±0.11 vs 4.77±2.51); distinct cell values QOED {}, Agnostic {}; {:.0}s",
            sweep_grid().len(),
            distinct(ObjectiveKind::Qoed),
            distinct(ObjectiveKind::Agnostic),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; a filter argument selects criteria
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "directional information", c1_directional),
        (2, "schur oracle", c2_schur_oracle),
        (3, "projection identity", c3_projection),
        (4, "trace forms / Ky Fan", c4_trace_forms),
        (5, "quasi-optimality bound", c5_bound),
        (6, "counterexample", c6_counterexample),
        (7, "score correctness", c7_scores),
        (8, "FIM convergence", c8_fim_convergence),
        (9, "greedy selection", c9_greedy),
        (10, "estimation", c10_estimation),
        (11, "trend reproduction", c11_trend),
        (12, "sweep robustness", c12_sweep),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let status = match (o.passed, DOCUMENTED_GAPS.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented gap)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id:>2} [{name}]: {status} - {} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

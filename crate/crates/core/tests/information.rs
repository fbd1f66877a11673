use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qoed::fisher::{self, FisherMatrix, ScoreSample};
use qoed::objectives::{self, BonusConfig, ObjectiveKind};
use qoed::subspace::{self, RejectReason};
use qoed::Error;

/// A `m × m` PSD matrix of rank at most `r` built from raw entries.
fn psd_from(m: usize, r: usize, raw: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, r, |i, j| raw[(i * r + j) % raw.len()]);
    &a * a.transpose()
}

fn psd_strategy() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=8, 1usize..=8, prop::collection::vec(-3.0f64..3.0, 64))
        .prop_map(|(m, r, raw)| psd_from(m, r.min(m + 1), &raw))
}

fn nonempty_proper(m: usize, mask: u32) -> Vec<usize> {
    let mut k: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
    if k.is_empty() {
        k.push(0);
    }
    if k.len() == m {
        k.pop();
    }
    k
}

proptest! {
    #[test]
    fn estimate_is_symmetric_psd(raw in prop::collection::vec(-5.0f64..5.0, 3..60)) {
        let scores: Vec<ScoreSample> = raw.chunks_exact(3).map(|c| ScoreSample::from_slice(c).unwrap()).collect();
        let f = fisher::estimate_fim(&scores).unwrap();
        let m = f.matrix();
        prop_assert_eq!(m.clone(), m.transpose());
        let d = fisher::eigendecompose(&f);
        prop_assert!(d.eigenvalues.iter().all(|&l| l >= 0.0));
        prop_assert_eq!(f.sample_count(), scores.len());
    }

    #[test]
    fn eigen_reconstruction_and_trace(a in psd_strategy()) {
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let d = fisher::eigendecompose(&f);
        let scale = 1.0 + a.norm();
        prop_assert!((d.reconstruct() - &a).norm() <= 1e-8 * scale);
        let sum: f64 = d.eigenvalues.iter().sum();
        prop_assert!((sum - f.trace()).abs() <= 1e-10 * scale);
        prop_assert!(d.eigenvalues.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn principal_trace_two_ways(a in psd_strategy(), mask in any::<u32>()) {
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let k = nonempty_proper(a.nrows(), mask);
        let d = fisher::eigendecompose(&f);
        let direct = fisher::principal_submatrix_trace(&f, &k).unwrap();
        let via = fisher::principal_trace_from_eigen(&d, &k).unwrap();
        prop_assert!((direct - via).abs() <= 1e-8 * (1.0 + f.trace()));
    }

    #[test]
    fn objective_ordering(a in psd_strategy(), mask in any::<u32>()) {
        // 0 ≤ Schur trace ≤ tr F_kk ≤ tr F
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let k = nonempty_proper(a.nrows(), mask);
        let eps = objectives::default_eps(&f);
        let q = objectives::qoed_objective(&f, &k, eps).unwrap();
        let ag = objectives::agnostic_objective(&f, &k).unwrap();
        let b = objectives::boed_objective(&f);
        let tol = 1e-9 * (1.0 + b);
        prop_assert!(q >= -tol && q <= ag + tol && ag <= b + tol);
    }

    #[test]
    fn schur_shrinks_as_eps_falls(a in psd_strategy(), mask in any::<u32>()) {
        let f = FisherMatrix::closed_form(a.clone()).unwrap();
        let k = nonempty_proper(a.nrows(), mask);
        let lo = objectives::qoed_objective(&f, &k, 1e-6).unwrap();
        let hi = objectives::qoed_objective(&f, &k, 1e-2).unwrap();
        prop_assert!(lo <= hi + 1e-9 * (1.0 + f.trace()));
    }

    #[test]
    fn lazy_and_plain_greedy_agree(
        (n, r, raw) in (1usize..=9, 1usize..=5, prop::collection::vec(-1.0f64..1.0, 45)),
        budget in 1usize..=9,
        delta_cos in 0.3f64..0.999,
    ) {
        let basis = DMatrix::from_fn(n, r, |i, j| raw[i * 5 + j]);
        let budget = budget.min(n.min(r));
        let lazy = subspace::select_identifiable(&basis, budget, delta_cos, 1e-9).unwrap();
        let plain = subspace::select_identifiable_plain(&basis, budget, delta_cos, 1e-9).unwrap();
        prop_assert_eq!(&lazy.selected, &plain.selected);
        prop_assert!(lazy.selected.len() <= budget);
        prop_assert!(lazy.gain_path.windows(2).all(|w| w[1] >= w[0]));
        for (x, &i) in lazy.selected.iter().enumerate() {
            for &j in &lazy.selected[x + 1..] {
                let c = subspace::cosine_rows(&basis.row(i).transpose(), &basis.row(j).transpose()).unwrap();
                prop_assert!(c.abs() <= delta_cos);
            }
        }
    }

    #[test]
    fn bonus_is_invariant_to_score_sign(raw in prop::collection::vec(-2.0f64..2.0, 12..48)) {
        let pos: Vec<ScoreSample> = raw.chunks_exact(4).map(|c| ScoreSample::from_slice(c).unwrap()).collect();
        let neg: Vec<ScoreSample> = raw.chunks_exact(4).map(|c| {
            ScoreSample::from_slice(&c.iter().map(|x| -x).collect::<Vec<_>>()).unwrap()
        }).collect();
        let cfg = BonusConfig::default();
        let a = objectives::qoed_bonus(&pos, &cfg).unwrap();
        let b = objectives::qoed_bonus(&neg, &cfg).unwrap();
        prop_assert!((a.bonus - b.bonus).abs() <= 1e-9 * (1.0 + a.bonus.abs()));
    }
}

#[test]
fn directional_information_of_axes() {
    let f = FisherMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
    let d = fisher::eigendecompose(&f);
    assert_relative_eq!(d.eigenvalues[0], 4.0);
    let w = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
    assert_relative_eq!(fisher::directional_information(&f, &w).unwrap(), 2.5, epsilon = 1e-12);
    let bad = DVector::from_vec(vec![1.0, 1.0]);
    assert!(matches!(fisher::directional_information(&f, &bad), Err(Error::NotNormalized { .. })));
}

#[test]
fn estimate_rejects_bad_input() {
    assert!(matches!(fisher::estimate_fim(&[]), Err(Error::NoSamples)));
    assert!(ScoreSample::from_slice(&[1.0, f64::NAN]).is_err());
    let mixed = [ScoreSample::from_slice(&[1.0]).unwrap(), ScoreSample::from_slice(&[1.0, 2.0]).unwrap()];
    assert!(matches!(fisher::estimate_fim(&mixed), Err(Error::DimMismatch { .. })));
}

#[test]
fn crlb_of_diagonal() {
    let f = FisherMatrix::from_diagonal(&[4.0, 0.5]).unwrap();
    assert_relative_eq!(fisher::crlb_trace(&f, 1e-12).unwrap(), 0.25 + 2.0, epsilon = 1e-9);
    assert!(fisher::crlb_trace(&f, 0.0).is_err());
}

#[test]
fn observable_threshold_takes_the_larger_rule() {
    let f = FisherMatrix::from_diagonal(&[100.0, 0.5]).unwrap();
    let split = subspace::split_observable(&fisher::eigendecompose(&f), 0.1, 0.01).unwrap();
    assert_eq!(split.rank(), 1);
    let split = subspace::split_observable(&fisher::eigendecompose(&f), 0.1, 0.001).unwrap();
    assert_eq!(split.rank(), 2);
}

#[test]
fn duplicate_rows_are_rejected_by_cosine() {
    let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1e-4, 0.0, 1.0]);
    let sel = subspace::select_identifiable(&basis, 2, 0.9, 1e-9).unwrap();
    assert_eq!(sel.sorted(), vec![0, 2]);
    assert!(sel.rejected.iter().any(|&(i, r)| i == 1 && r == RejectReason::Cosine));
}

#[test]
fn schur_of_a_two_by_two() {
    // [[a, c], [c, b]] with k = {0}: a − c²/(b + ε)
    let f = FisherMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
    let q = objectives::qoed_objective(&f, &[0], 1e-12).unwrap();
    assert_relative_eq!(q, 2.5, epsilon = 1e-9);
    let c = objectives::quasiopt_constants(&f, &[0]).unwrap();
    assert_relative_eq!(c.eta, 2.0 / 3.0, epsilon = 1e-12);
    assert_relative_eq!(c.beta, 1.0 / 6.0, epsilon = 1e-12);
    assert_relative_eq!(c.rho, (1.0 - 1.0 / 6.0) / (1.0 + 2.0 / 3.0), epsilon = 1e-12);
}

#[test]
fn projection_residual_drops_the_head() {
    let f = FisherMatrix::from_diagonal(&[5.0, 3.0, 1.0]).unwrap();
    assert_relative_eq!(objectives::projection_residual(&f, &[0]).unwrap(), 4.0, epsilon = 1e-12);
    assert_relative_eq!(objectives::projection_residual(&f, &[]).unwrap(), 9.0, epsilon = 1e-12);
}

#[test]
fn bonus_kinds_on_coupled_information() {
    let f = FisherMatrix::from_row_slice(2, &[10.0, 6.0, 6.0, 4.0]).unwrap();
    let cfg = BonusConfig { alpha_eig: 1e-6, delta_eig: 1e-3, budget: Some(1), ..BonusConfig::default() };
    let boed = objectives::bonus_from_fim(f.clone(), ObjectiveKind::Boed, &cfg).unwrap();
    let qoed = objectives::bonus_from_fim(f, ObjectiveKind::Qoed, &cfg).unwrap();
    assert_relative_eq!(boed.bonus, 14.0, epsilon = 1e-12);
    assert!(qoed.bonus < boed.bonus);
}

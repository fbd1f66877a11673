//! Scalar information objectives and the quantities that relate them.
//!
//! * BOED: `tr(F)`.
//! * Agnostic: `tr(F_kk)`, information on the selected coordinates only.
//! * QOED: `tr(F_kk − F_kk̄ (F_k̄k̄ + εI)⁻¹ F_k̄k)`, information on the selected
//!   coordinates that cannot be linearly predicted from the nuisance scores.
//!
//! For every PSD `F` and proper index set, `0 ≤ QOED ≤ Agnostic ≤ BOED`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fisher::{self, eigendecompose, EigenDecomp, FisherMatrix, ScoreSample};
use crate::linalg;
use crate::subspace::{self, EigenSplit, SelectionResult};
use crate::{Error, Result};

/// Which information summary a design is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Boed,
    Agnostic,
    Qoed,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::Boed, ObjectiveKind::Agnostic, ObjectiveKind::Qoed];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Boed => "boed",
            ObjectiveKind::Agnostic => "agnostic",
            ObjectiveKind::Qoed => "qoed",
        }
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boed" => Ok(ObjectiveKind::Boed),
            "agnostic" => Ok(ObjectiveKind::Agnostic),
            "qoed" => Ok(ObjectiveKind::Qoed),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Blocks of `F` under the permutation that puts `k` first.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    pub k: Vec<usize>,
    pub kbar: Vec<usize>,
    pub kk: DMatrix<f64>,
    pub k_kbar: DMatrix<f64>,
    pub kbar_k: DMatrix<f64>,
    pub kbar_kbar: DMatrix<f64>,
}

impl FimBlocks {
    /// Reassembles the full matrix in the original coordinate order.
    pub fn reassemble(&self) -> DMatrix<f64> {
        let m = self.k.len() + self.kbar.len();
        let mut out = DMatrix::zeros(m, m);
        for (a, &i) in self.k.iter().enumerate() {
            for (b, &j) in self.k.iter().enumerate() {
                out[(i, j)] = self.kk[(a, b)];
            }
            for (b, &j) in self.kbar.iter().enumerate() {
                out[(i, j)] = self.k_kbar[(a, b)];
                out[(j, i)] = self.kbar_k[(b, a)];
            }
        }
        for (a, &i) in self.kbar.iter().enumerate() {
            for (b, &j) in self.kbar.iter().enumerate() {
                out[(i, j)] = self.kbar_kbar[(a, b)];
            }
        }
        out
    }
}

/// Constants of the quasi-optimality guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiOptConstants {
    /// Nuisance-to-critical information mass, `tr(F_k̄k̄)/tr(F_kk)`.
    pub eta: f64,
    /// Squared spectral norm of the whitened cross block.
    pub beta: f64,
    /// `(1 − β)/(1 + η)`.
    pub rho: f64,
}

impl QuasiOptConstants {
    pub fn from_parts(eta: f64, beta: f64) -> Self {
        Self {
            eta,
            beta,
            rho: quasiopt_factor(eta, beta),
        }
    }

    /// Worst case over a family: maxima of η and β, then the factor.
    pub fn worst_case<I: IntoIterator<Item = QuasiOptConstants>>(items: I) -> Option<Self> {
        let mut it = items.into_iter();
        let first = it.next()?;
        let (eta, beta) = it.fold((first.eta, first.beta), |(e, b), c| (e.max(c.eta), b.max(c.beta)));
        Some(Self::from_parts(eta, beta))
    }
}

/// `(1 − β)/(1 + η)`.
pub fn quasiopt_factor(eta: f64, beta: f64) -> f64 {
    (1.0 - beta) / (1.0 + eta)
}

/// Scale-aware stabilization, `1e-8 · max(1, tr(F)/m)`.
pub fn default_eps(f: &FisherMatrix) -> f64 {
    let m = f.dim().max(1) as f64;
    1e-8 * (f.trace() / m).max(1.0)
}

/// Partitions `F` into the `k`/`k̄` blocks. `k` must be a nonempty proper subset.
pub fn block_partition(f: &FisherMatrix, k: &[usize]) -> Result<FimBlocks> {
    let m = f.dim();
    linalg::check_indices(k, m)?;
    if k.is_empty() || k.len() == m {
        return Err(Error::DegeneratePartition);
    }
    let kbar = linalg::complement(k, m);
    let a = f.matrix();
    Ok(FimBlocks {
        kk: linalg::select(a, k, k),
        k_kbar: linalg::select(a, k, &kbar),
        kbar_k: linalg::select(a, &kbar, k),
        kbar_kbar: linalg::select(a, &kbar, &kbar),
        k: k.to_vec(),
        kbar,
    })
}

/// Nuisance-adjusted information `F_kk − F_kk̄ (F_k̄k̄ + εI)⁻¹ F_k̄k`, symmetrized.
pub fn schur_complement(blocks: &FimBlocks, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let solved = linalg::solve_shifted(&blocks.kbar_kbar, eps, &blocks.kbar_k)
        .ok_or_else(|| Error::InvalidArgument("nuisance block is singular".into()))?;
    let s = &blocks.kk - &blocks.k_kbar * solved;
    Ok(linalg::symmetrize(&s))
}

pub fn boed_objective(f: &FisherMatrix) -> f64 {
    f.trace()
}

pub fn agnostic_objective(f: &FisherMatrix, k: &[usize]) -> Result<f64> {
    fisher::principal_submatrix_trace(f, k)
}

/// Trace of the Schur complement. `k = ∅` gives 0 and `k` = all coordinates
/// gives the full trace.
pub fn qoed_objective(f: &FisherMatrix, k: &[usize], eps: f64) -> Result<f64> {
    linalg::check_indices(k, f.dim())?;
    if k.is_empty() {
        return Ok(0.0);
    }
    if k.len() == f.dim() {
        return Ok(boed_objective(f));
    }
    let blocks = block_partition(f, k)?;
    Ok(linalg::trace(&schur_complement(&blocks, eps)?))
}

/// `min_A tr(F_kk − A F_k̄k − F_kk̄ Aᵀ + A (F_k̄k̄ + εI) Aᵀ)`: the residual energy
/// of the critical score after the best ridge-regularized linear prediction
/// from the nuisance score.
///
/// Evaluated with an explicit regression matrix from an LU solve, so it checks
/// [`qoed_objective`] along an independent algebraic route.
pub fn residual_regression_trace(blocks: &FimBlocks, eps: f64) -> Result<f64> {
    let shifted = linalg::shifted(&blocks.kbar_kbar, eps);
    // A = F_kk̄ (F_k̄k̄ + εI)⁻¹, i.e. Aᵀ solves (F_k̄k̄ + εI) Aᵀ = F_k̄k
    let a_t = shifted
        .clone()
        .lu()
        .solve(&blocks.kbar_k)
        .ok_or_else(|| Error::InvalidArgument("nuisance block is singular".into()))?;
    let a = a_t.transpose();
    let expr = &blocks.kk - &a * &blocks.kbar_k - &blocks.k_kbar * &a_t + &a * shifted * &a_t;
    Ok(expr.trace())
}

/// `η`, `β` and `ρ` for one information matrix and coordinate set.
///
/// `k` covering every coordinate gives `η = β = 0`. Eigenvalues of the blocks
/// below `1e-12 · λ_max` are floored before the inverse square roots.
pub fn quasiopt_constants(f: &FisherMatrix, k: &[usize]) -> Result<QuasiOptConstants> {
    let m = f.dim();
    linalg::check_indices(k, m)?;
    if k.is_empty() {
        return Err(Error::DegenerateCriticalBlock);
    }
    let kk_trace = fisher::principal_submatrix_trace(f, k)?;
    if !(kk_trace > 0.0) {
        return Err(Error::DegenerateCriticalBlock);
    }
    if k.len() == m {
        return Ok(QuasiOptConstants::from_parts(0.0, 0.0));
    }
    let blocks = block_partition(f, k)?;
    let eta = linalg::trace(&blocks.kbar_kbar) / kk_trace;
    let left = linalg::inv_sqrt_psd(&blocks.kk, 1e-12);
    let right = linalg::inv_sqrt_psd(&blocks.kbar_kbar, 1e-12);
    let whitened = left * &blocks.k_kbar * right;
    let beta = linalg::spectral_norm(&whitened).powi(2);
    Ok(QuasiOptConstants::from_parts(eta, beta))
}

/// `tr((I − W_o W_oᵀ) F)` for an eigen-index set `o`.
pub fn projection_residual(f: &FisherMatrix, o: &[usize]) -> Result<f64> {
    projection_residual_with(f, &eigendecompose(f), o)
}

pub fn projection_residual_with(f: &FisherMatrix, decomp: &EigenDecomp, o: &[usize]) -> Result<f64> {
    let m = f.dim();
    linalg::check_indices(o, m)?;
    let w_o = DMatrix::from_fn(m, o.len(), |r, c| decomp.eigenvectors[(r, o[c])]);
    let residual = DMatrix::identity(m, m) - &w_o * w_o.transpose();
    Ok((residual * f.matrix()).trace())
}

/// Thresholds of the bonus pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusConfig {
    pub delta_eig: f64,
    pub alpha_eig: f64,
    pub delta_cos: f64,
    pub eps_logdet: f64,
    /// Schur stabilization; `None` uses [`default_eps`].
    pub eps: Option<f64>,
    /// Selection budget; `None` uses the observable rank.
    pub budget: Option<usize>,
}

impl Default for BonusConfig {
    fn default() -> Self {
        Self {
            delta_eig: 0.1,
            alpha_eig: 0.01,
            delta_cos: 0.95,
            eps_logdet: subspace::DEFAULT_EPS_LOGDET,
            eps: None,
            budget: None,
        }
    }
}

/// Everything the bonus pipeline computed along the way.
#[derive(Debug, Clone, Serialize)]
pub struct BonusOutcome {
    pub bonus: f64,
    pub kind: ObjectiveKind,
    pub fim: FisherMatrix,
    pub decomp: EigenDecomp,
    pub split: EigenSplit,
    pub selection: SelectionResult,
    pub eps: f64,
}

impl BonusOutcome {
    pub fn selected(&self) -> Vec<usize> {
        self.selection.sorted()
    }
}

/// Eigen-split and coordinate selection for an information matrix.
pub fn identify(f: &FisherMatrix, cfg: &BonusConfig) -> Result<(EigenDecomp, EigenSplit, SelectionResult)> {
    let decomp = eigendecompose(f);
    let split = subspace::split_observable(&decomp, cfg.delta_eig, cfg.alpha_eig)?;
    if split.rank() == 0 {
        return Ok((decomp, split, SelectionResult::empty()));
    }
    let budget = cfg.budget.unwrap_or(split.rank()).clamp(1, split.rank());
    let selection = subspace::select_identifiable(&split.basis, budget, cfg.delta_cos, cfg.eps_logdet)?;
    Ok((decomp, split, selection))
}

/// Value of `kind` for an information matrix, with coordinates selected from
/// the matrix itself. An empty observable subspace scores 0 for the coordinate
/// objectives.
pub fn bonus_from_fim(f: FisherMatrix, kind: ObjectiveKind, cfg: &BonusConfig) -> Result<BonusOutcome> {
    let eps = cfg.eps.unwrap_or_else(|| default_eps(&f));
    let (decomp, split, selection) = identify(&f, cfg)?;
    let k = selection.sorted();
    let bonus = match kind {
        ObjectiveKind::Boed => boed_objective(&f),
        ObjectiveKind::Agnostic => agnostic_objective(&f, &k)?,
        ObjectiveKind::Qoed => qoed_objective(&f, &k, eps)?,
    };
    Ok(BonusOutcome {
        bonus,
        kind,
        fim: f,
        decomp,
        split,
        selection,
        eps,
    })
}

/// Full information-bonus pipeline on score samples: empirical FIM, eigen
/// split, identifiable coordinates, nuisance-adjusted trace.
pub fn qoed_bonus(scores: &[ScoreSample], cfg: &BonusConfig) -> Result<BonusOutcome> {
    let f = fisher::estimate_fim(scores)?;
    bonus_from_fim(f, ObjectiveKind::Qoed, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_by_two() -> FisherMatrix {
        FisherMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn partition_two_by_two() {
        let b = block_partition(&two_by_two(), &[0]).unwrap();
        assert_eq!(b.kk[(0, 0)], 2.0);
        assert_eq!(b.k_kbar[(0, 0)], 1.0);
        assert_eq!(b.kbar_kbar[(0, 0)], 1.0);
        assert_eq!(b.reassemble(), two_by_two().matrix().clone());
    }

    #[test]
    fn partition_rejects_degenerate_sets() {
        let f = two_by_two();
        assert_eq!(block_partition(&f, &[]).unwrap_err().code(), "degenerate-partition");
        assert_eq!(block_partition(&f, &[0, 1]).unwrap_err().code(), "degenerate-partition");
        assert_eq!(block_partition(&f, &[5]).unwrap_err().code(), "bad-index");
    }

    #[test]
    fn schur_two_by_two() {
        let b = block_partition(&two_by_two(), &[0]).unwrap();
        let s = schur_complement(&b, 1e-14).unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(qoed_objective(&two_by_two(), &[0], 1e-14).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(residual_regression_trace(&b, 1e-14).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn block_diagonal_has_no_adjustment() {
        let f = FisherMatrix::from_row_slice(
            4,
            &[2.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 1.0, 0.0, 0.0, 1.0, 2.0],
        )
        .unwrap();
        let b = block_partition(&f, &[0, 1]).unwrap();
        assert!(b.k_kbar.iter().all(|&x| x == 0.0));
        let s = schur_complement(&b, 1e-8).unwrap();
        assert_eq!(s, b.kk);
        assert_eq!(qoed_objective(&f, &[0, 1], 1e-8).unwrap(), 3.0);
        assert_eq!(agnostic_objective(&f, &[0, 1]).unwrap(), 3.0);
        assert_eq!(residual_regression_trace(&b, 1e-8).unwrap(), 3.0);
    }

    #[test]
    fn perfectly_predictable_score_has_no_adjusted_information() {
        // g_k = 2 g_k̄: F = [[4, 2], [2, 1]]
        let f = FisherMatrix::from_row_slice(2, &[4.0, 2.0, 2.0, 1.0]).unwrap();
        let q = qoed_objective(&f, &[0], 1e-10).unwrap();
        assert!(q.abs() < 1e-8, "{q}");
        let b = block_partition(&f, &[0]).unwrap();
        assert!(residual_regression_trace(&b, 1e-10).unwrap().abs() < 1e-8);
    }

    #[test]
    fn boed_and_agnostic_values() {
        assert_eq!(boed_objective(&FisherMatrix::closed_form(DMatrix::identity(3, 3)).unwrap()), 3.0);
        let a = FisherMatrix::from_diagonal(&[1.1, 0.0]).unwrap();
        let b = FisherMatrix::from_diagonal(&[1.0, 100.0]).unwrap();
        assert_eq!(boed_objective(&a), 1.1);
        assert_eq!(boed_objective(&b), 101.0);
        assert_eq!(agnostic_objective(&a, &[0]).unwrap(), 1.1);
        assert_eq!(agnostic_objective(&b, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn qoed_edge_index_sets() {
        let f = two_by_two();
        assert_eq!(qoed_objective(&f, &[], 1e-8).unwrap(), 0.0);
        assert_eq!(qoed_objective(&f, &[0, 1], 1e-8).unwrap(), 3.0);
    }

    #[test]
    fn quasiopt_two_by_two() {
        let c = quasiopt_constants(&two_by_two(), &[0]).unwrap();
        assert_relative_eq!(c.eta, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.beta, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.rho, 1.0 / 3.0, epsilon = 1e-12);
        let z = FisherMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(quasiopt_constants(&z, &[0]).unwrap_err().code(), "degenerate-critical-block");
    }

    #[test]
    fn factor_matches_reported_tuples() {
        for (eta, beta, rho) in [(0.0011, 0.0008, 0.9981), (0.0012, 0.2784, 0.7207), (0.0162, 0.1421, 0.8442)] {
            assert!((quasiopt_factor(eta, beta) - rho).abs() < 5e-4);
        }
    }

    #[test]
    fn projection_residual_examples() {
        let f = FisherMatrix::from_diagonal(&[3.0, 2.0, 1.0]).unwrap();
        assert_relative_eq!(projection_residual(&f, &[0]).unwrap(), 3.0, epsilon = 1e-14);
        assert!(projection_residual(&f, &[0, 1, 2]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn bonus_of_zero_scores() {
        let scores = vec![ScoreSample::zeros(3); 4];
        let out = qoed_bonus(&scores, &BonusConfig::default()).unwrap();
        assert_eq!(out.bonus, 0.0);
        assert!(out.selection.selected.is_empty());
    }

    #[test]
    fn bonus_of_single_coordinate_scores() {
        let scores: Vec<_> = [1.0, -2.0, 3.0, 0.5]
            .iter()
            .map(|&x| ScoreSample::from_slice(&[x, 0.0]).unwrap())
            .collect();
        let out = qoed_bonus(&scores, &BonusConfig::default()).unwrap();
        assert_eq!(out.selected(), vec![0]);
        let expected = (1.0 + 4.0 + 9.0 + 0.25) / 4.0;
        assert_relative_eq!(out.bonus, expected, max_relative = 1e-12);
    }
}

//! Observable-subspace split and identifiable-coordinate selection.
//!
//! Eigen-directions whose information clears `max(δ_eig, α_eig·λ₁)` form the
//! observable basis `W_o`. Parameter coordinates are then chosen greedily by
//! the volume their rows of `W_o` span, subject to a pairwise cosine limit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fisher::EigenDecomp;
use crate::{Error, Result};

/// Regularizer added to the selected Gram matrix.
pub const DEFAULT_EPS_LOGDET: f64 = 1e-9;

/// Rows shorter than this carry no loading on the observable subspace.
pub const ZERO_ROW_NORM: f64 = 1e-10;

/// Residual energy (relative to the row's own squared norm) below which a
/// candidate counts as linearly dependent on the selection.
pub const DEPENDENT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSplit {
    /// Eigen-indices with `λ ≥ threshold_used`.
    pub observable: Vec<usize>,
    pub weak: Vec<usize>,
    /// `m × n` matrix of observable eigenvectors (`W_o`).
    pub basis: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub threshold_used: f64,
}

impl EigenSplit {
    pub fn rank(&self) -> usize {
        self.observable.len()
    }
}

/// Why a coordinate was left out of the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// Too collinear with an already-selected row.
    Cosine,
    /// No loading on the observable subspace.
    ZeroRow,
    /// Budget exhausted before it was picked.
    Budget,
    /// Linearly dependent on the selected rows.
    NoGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected coordinates in pick order.
    pub selected: Vec<usize>,
    /// `log det(W_ko W_koᵀ + eps I)` of the final selection.
    pub objective_value: f64,
    /// `log det(I + W_ko W_koᵀ / eps)` after each pick; non-decreasing.
    pub gain_path: Vec<f64>,
    pub rejected: Vec<(usize, RejectReason)>,
}

impl SelectionResult {
    pub fn empty() -> Self {
        Self {
            selected: Vec::new(),
            objective_value: 0.0,
            gain_path: Vec::new(),
            rejected: Vec::new(),
        }
    }

    /// Selected coordinates in ascending order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut k = self.selected.clone();
        k.sort_unstable();
        k
    }
}

/// Splits eigenpairs at `max(delta_eig, alpha_eig · λ₁)`.
pub fn split_observable(decomp: &EigenDecomp, delta_eig: f64, alpha_eig: f64) -> Result<EigenSplit> {
    if !(delta_eig > 0.0) || !(alpha_eig > 0.0) {
        return Err(Error::InvalidArgument(
            "eigenvalue thresholds must be positive".into(),
        ));
    }
    let threshold = delta_eig.max(alpha_eig * decomp.largest());
    let (observable, weak): (Vec<usize>, Vec<usize>) =
        (0..decomp.dim()).partition(|&i| decomp.eigenvalues[i] >= threshold);
    let m = decomp.dim();
    let basis = DMatrix::from_fn(m, observable.len(), |r, c| decomp.eigenvectors[(r, observable[c])]);
    let eigenvalues = DVector::from_iterator(observable.len(), observable.iter().map(|&i| decomp.eigenvalues[i]));
    Ok(EigenSplit {
        observable,
        weak,
        basis,
        eigenvalues,
        threshold_used: threshold,
    })
}

/// Cosine of the angle between two rows.
pub fn cosine_rows(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    cosine_checked(a, b, 0, 1)
}

fn cosine_checked(a: &DVector<f64>, b: &DVector<f64>, ia: usize, ib: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-12 {
        return Err(Error::ZeroRow(ia));
    }
    if nb < 1e-12 {
        return Err(Error::ZeroRow(ib));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Incremental state of a greedy selection: Cholesky-style orthogonalized rows
/// let each marginal gain be computed in `O(n·|k|)`.
struct GreedyState<'a> {
    rows: Vec<DVector<f64>>,
    eps: f64,
    delta_cos: f64,
    selected: Vec<usize>,
    /// Orthonormal basis of the span of selected rows (Gram–Schmidt).
    span: Vec<DVector<f64>>,
    gain_path: Vec<f64>,
    total_gain: f64,
    _basis: &'a DMatrix<f64>,
}

impl<'a> GreedyState<'a> {
    fn new(basis: &'a DMatrix<f64>, eps: f64, delta_cos: f64) -> Self {
        let rows = (0..basis.nrows()).map(|r| basis.row(r).transpose()).collect();
        Self {
            rows,
            eps,
            delta_cos,
            selected: Vec::new(),
            span: Vec::new(),
            gain_path: Vec::new(),
            total_gain: 0.0,
            _basis: basis,
        }
    }

    fn residual(&self, j: usize) -> DVector<f64> {
        let mut r = self.rows[j].clone();
        for q in &self.span {
            let c = q.dot(&r);
            r.axpy(-c, q, 1.0);
        }
        r
    }

    /// `log(1 + residual²/eps)`, the increase of `log det(I + G/eps)`; `None`
    /// when the row is numerically dependent on the selection.
    fn gain(&self, j: usize) -> Option<f64> {
        let r2 = self.residual(j).norm_squared();
        if r2 <= DEPENDENT_RESIDUAL * self.rows[j].norm_squared() {
            return None;
        }
        Some((r2 / self.eps).ln_1p())
    }

    fn feasible(&self, j: usize) -> bool {
        self.selected.iter().all(|&i| {
            cosine_checked(&self.rows[i], &self.rows[j], i, j)
                .map(|c| c.abs() <= self.delta_cos)
                .unwrap_or(false)
        })
    }

    fn push(&mut self, j: usize, gain: f64) {
        let r = self.residual(j);
        self.span.push(r.normalize());
        self.selected.push(j);
        self.total_gain += gain;
        self.gain_path.push(self.total_gain);
    }

    /// `leftover` are candidates never examined against the final selection.
    fn finish(self, mut rejected: Vec<(usize, RejectReason)>, leftover: Vec<usize>) -> SelectionResult {
        for j in leftover {
            let reason = if self.feasible(j) {
                RejectReason::Budget
            } else {
                RejectReason::Cosine
            };
            rejected.push((j, reason));
        }
        let k = self.selected.len();
        let gram = DMatrix::from_fn(k, k, |a, b| self.rows[self.selected[a]].dot(&self.rows[self.selected[b]]));
        let objective_value = crate::linalg::log_det_spd(&crate::linalg::shifted(&gram, self.eps))
            .unwrap_or(f64::NEG_INFINITY);
        rejected.sort_by_key(|&(i, _)| i);
        SelectionResult {
            selected: self.selected,
            objective_value,
            gain_path: self.gain_path,
            rejected,
        }
    }
}

fn check_selection_args(basis: &DMatrix<f64>, budget: usize, delta_cos: f64, eps: f64) -> Result<()> {
    if basis.ncols() == 0 || basis.nrows() == 0 {
        return Err(Error::NoObservableSubspace);
    }
    if budget == 0 || budget > basis.ncols() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} outside [1, {}]",
            basis.ncols()
        )));
    }
    if !(delta_cos > 0.0 && delta_cos <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta_cos {delta_cos} outside (0, 1]")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps_logdet must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    gain: f64,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // larger gain first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy-greedy maximization of `log det(W_ko W_koᵀ + eps I)` over rows of
/// `basis` (the observable eigenvector block), subject to
/// `|cos(r_i, r_j)| ≤ delta_cos` for every selected pair.
///
/// Each step adds the feasible row with the largest marginal gain, ties going
/// to the smaller index. Stops at `budget` or when every remaining feasible
/// row is linearly dependent on the selection. The result is identical to
/// [`select_identifiable_plain`].
pub fn select_identifiable(
    basis: &DMatrix<f64>,
    budget: usize,
    delta_cos: f64,
    eps_logdet: f64,
) -> Result<SelectionResult> {
    check_selection_args(basis, budget, delta_cos, eps_logdet)?;
    let mut state = GreedyState::new(basis, eps_logdet, delta_cos);
    let mut rejected = Vec::new();
    let mut heap = BinaryHeap::new();
    for j in 0..basis.nrows() {
        if state.rows[j].norm() < ZERO_ROW_NORM {
            rejected.push((j, RejectReason::ZeroRow));
        } else {
            // gains only shrink as the selection grows, so the empty-set gain
            // is a valid upper bound
            match state.gain(j) {
                Some(g) => heap.push(HeapEntry { gain: g, index: j }),
                None => rejected.push((j, RejectReason::NoGain)),
            }
        }
    }

    while state.selected.len() < budget {
        let Some(top) = heap.pop() else { break };
        if !state.feasible(top.index) {
            rejected.push((top.index, RejectReason::Cosine));
            continue;
        }
        let Some(fresh) = state.gain(top.index) else {
            rejected.push((top.index, RejectReason::NoGain));
            continue;
        };
        let candidate = HeapEntry { gain: fresh, index: top.index };
        match heap.peek() {
            Some(next) if *next > candidate => heap.push(candidate),
            _ => state.push(top.index, fresh),
        }
    }
    let leftover: Vec<usize> = heap.into_iter().map(|e| e.index).collect();
    Ok(state.finish(rejected, leftover))
}

/// Plain greedy: re-evaluates every candidate at every step. Reference for
/// the lazy variant.
pub fn select_identifiable_plain(
    basis: &DMatrix<f64>,
    budget: usize,
    delta_cos: f64,
    eps_logdet: f64,
) -> Result<SelectionResult> {
    check_selection_args(basis, budget, delta_cos, eps_logdet)?;
    let mut state = GreedyState::new(basis, eps_logdet, delta_cos);
    let mut rejected = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for j in 0..basis.nrows() {
        if state.rows[j].norm() < ZERO_ROW_NORM {
            rejected.push((j, RejectReason::ZeroRow));
        } else {
            open.push(j);
        }
    }
    while state.selected.len() < budget {
        let mut best: Option<HeapEntry> = None;
        let mut still_open = Vec::with_capacity(open.len());
        for &j in &open {
            if !state.feasible(j) {
                rejected.push((j, RejectReason::Cosine));
                continue;
            }
            match state.gain(j) {
                None => rejected.push((j, RejectReason::NoGain)),
                Some(g) => {
                    still_open.push(j);
                    let e = HeapEntry { gain: g, index: j };
                    if best.map_or(true, |b| e > b) {
                        best = Some(e);
                    }
                }
            }
        }
        open = still_open;
        let Some(b) = best else { break };
        state.push(b.index, b.gain);
        open.retain(|&j| j != b.index);
    }
    Ok(state.finish(rejected, open))
}

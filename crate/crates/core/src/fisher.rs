//! Fisher information matrices built from trajectory score samples.
//!
//! The empirical matrix is the average outer product of the score,
//! `F ≈ (1/N) Σ g gᵀ`. Construction symmetrizes and rejects matrices that are
//! not positive semidefinite beyond a trace-relative tolerance, so every
//! [`FisherMatrix`] can be decomposed without further checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CompensatedSum};
use crate::{Error, Result};

/// Relative tolerance (against the trace) for negative eigenvalues.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest one are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Default Monte-Carlo sample count for score-based estimates.
pub const DEFAULT_SAMPLE_COUNT: usize = 4096;

/// Gradient of a trajectory log-likelihood with respect to the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample(DVector<f64>);

impl ScoreSample {
    pub fn new(g: DVector<f64>) -> Result<Self> {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(g))
    }

    pub fn from_slice(g: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(g))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Add for ScoreSample {
    type Output = ScoreSample;
    fn add(self, rhs: ScoreSample) -> ScoreSample {
        ScoreSample(self.0 + rhs.0)
    }
}

/// Symmetric positive semidefinite information matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    matrix: DMatrix<f64>,
    /// Number of score samples averaged; zero for analytic matrices.
    sample_count: usize,
}

impl FisherMatrix {
    /// Wraps an analytic (closed-form) matrix.
    pub fn closed_form(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_samples(matrix, 0)
    }

    pub fn with_samples(matrix: DMatrix<f64>, sample_count: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let matrix = linalg::symmetrize(&matrix);
        let tr = linalg::trace(&matrix);
        if matrix.nrows() > 0 {
            let min_eig = matrix.clone().symmetric_eigen().eigenvalues.min();
            if min_eig < -PSD_TOLERANCE * tr.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::NotPsd { min_eig });
            }
        }
        Ok(Self { matrix, sample_count })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::closed_form(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Self::closed_form(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
            sample_count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn is_closed_form(&self) -> bool {
        self.sample_count == 0
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix)
    }

    /// Sum of two information matrices (information from independent data adds).
    pub fn accumulate(&self, other: &FisherMatrix) -> Result<FisherMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(FisherMatrix {
            matrix: &self.matrix + &other.matrix,
            sample_count: self.sample_count + other.sample_count,
        })
    }

    pub fn scaled(&self, factor: f64) -> FisherMatrix {
        FisherMatrix {
            matrix: &self.matrix * factor,
            sample_count: self.sample_count,
        }
    }
}

/// Sorted eigenpairs `F = W Λ Wᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomp {
    /// Descending, clamped to be nonnegative.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues) * self.eigenvectors.transpose()
    }

    pub fn largest(&self) -> f64 {
        if self.eigenvalues.is_empty() {
            0.0
        } else {
            self.eigenvalues[0]
        }
    }
}

/// Averages `g gᵀ` over the samples with compensated summation, so the result
/// does not depend on sample order beyond the last rounding step.
pub fn estimate_fim(scores: &[ScoreSample]) -> Result<FisherMatrix> {
    let first = scores.first().ok_or(Error::NoSamples)?;
    let m = first.dim();
    if let Some(bad) = scores.iter().find(|g| g.dim() != m) {
        return Err(Error::DimMismatch {
            expected: m,
            found: bad.dim(),
        });
    }
    let mut acc = vec![CompensatedSum::default(); m * (m + 1) / 2];
    for g in scores {
        let v = g.as_vector();
        let mut slot = 0;
        for i in 0..m {
            for j in i..m {
                acc[slot].add(v[i] * v[j]);
                slot += 1;
            }
        }
    }
    let n = scores.len() as f64;
    let mut matrix = DMatrix::zeros(m, m);
    let mut slot = 0;
    for i in 0..m {
        for j in i..m {
            let value = acc[slot].value() / n;
            matrix[(i, j)] = value;
            matrix[(j, i)] = value;
            slot += 1;
        }
    }
    FisherMatrix::with_samples(matrix, scores.len())
}

/// Eigen-decomposition with descending eigenvalues, stable tie order and a
/// fixed sign convention (first nonzero component of each vector positive).
pub fn eigendecompose(f: &FisherMatrix) -> EigenDecomp {
    let (mut values, vectors) = linalg::sym_eigen_sorted(f.matrix());
    let top = values.iter().cloned().fold(0.0_f64, f64::max);
    for v in values.iter_mut() {
        if *v < EIGEN_CLAMP * top || *v < 0.0 {
            *v = 0.0;
        }
    }
    EigenDecomp {
        eigenvalues: values,
        eigenvectors: vectors,
    }
}

/// Fisher information along a unit direction, `wᵀ F w`.
pub fn directional_information(f: &FisherMatrix, w: &DVector<f64>) -> Result<f64> {
    if w.len() != f.dim() {
        return Err(Error::DimMismatch {
            expected: f.dim(),
            found: w.len(),
        });
    }
    let norm = w.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(w.dot(&(f.matrix() * w)).max(0.0))
}

/// `tr((F + eps I)⁻¹)`: a lower-bound proxy on the total mean squared error of
/// any unbiased estimator. Unidentifiable directions contribute `~1/eps`.
pub fn crlb_trace(f: &FisherMatrix, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let m = f.dim();
    let inv = linalg::solve_shifted(f.matrix(), eps, &DMatrix::identity(m, m))
        .ok_or_else(|| Error::InvalidArgument("shifted matrix is singular".into()))?;
    Ok(linalg::trace(&inv))
}

/// `tr(F[k, k])` for a coordinate index set. The empty set yields zero.
pub fn principal_submatrix_trace(f: &FisherMatrix, k: &[usize]) -> Result<f64> {
    linalg::check_indices(k, f.dim())?;
    let mut s = CompensatedSum::default();
    for &i in k {
        s.add(f.matrix()[(i, i)]);
    }
    Ok(s.value())
}

/// `Σ_i λ_i ‖W[k, i]‖²`, the eigen-side form of [`principal_submatrix_trace`].
pub fn principal_trace_from_eigen(decomp: &EigenDecomp, k: &[usize]) -> Result<f64> {
    linalg::check_indices(k, decomp.dim())?;
    let mut s = CompensatedSum::default();
    for i in 0..decomp.dim() {
        let loading: f64 = k.iter().map(|&r| decomp.eigenvectors[(r, i)].powi(2)).sum();
        s.add(decomp.eigenvalues[i] * loading);
    }
    Ok(s.value())
}

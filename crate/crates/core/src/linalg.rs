//! Small dense helpers shared by the information and selection modules.

use nalgebra::{DMatrix, DVector};

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
///
/// Ties keep the solver's original order. Each eigenvector is oriented so its
/// first component with magnitude above 1e-12 is positive.
pub(crate) fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: equal eigenvalues keep their original relative order
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub(crate) fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub(crate) fn shifted(m: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += eps;
    }
    out
}

/// Solves `(a + eps I) x = rhs`; Cholesky first, LU if the shifted matrix is not
/// numerically positive definite.
pub(crate) fn solve_shifted(a: &DMatrix<f64>, eps: f64, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let s = shifted(a, eps);
    if let Some(ch) = s.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    s.lu().solve(rhs)
}

/// Symmetric inverse square root of a PSD matrix. Eigenvalues below
/// `floor_rel * max(λ_max, tiny)` are raised to that floor first.
pub(crate) fn inv_sqrt_psd(a: &DMatrix<f64>, floor_rel: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_sorted(a);
    let top = vals.iter().cloned().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let floor = floor_rel * top;
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&l| 1.0 / l.max(floor).sqrt()));
    &vecs * DMatrix::from_diagonal(&d) * vecs.transpose()
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `log det(a)` for a symmetric positive definite matrix; `None` otherwise.
pub(crate) fn log_det_spd(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 {
        return Some(0.0);
    }
    let ch = a.clone().cholesky()?;
    let l = ch.l_dirty();
    Some((0..a.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub(crate) fn trace(m: &DMatrix<f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for i in 0..m.nrows().min(m.ncols()) {
        s.add(m[(i, i)]);
    }
    s.value()
}

/// Validates an index set against `dim`: in range and free of duplicates.
pub(crate) fn check_indices(idx: &[usize], dim: usize) -> crate::Result<()> {
    let mut seen = vec![false; dim];
    for &i in idx {
        if i >= dim || seen[i] {
            return Err(crate::Error::BadIndex { index: i, dim });
        }
        seen[i] = true;
    }
    Ok(())
}

pub(crate) fn complement(idx: &[usize], dim: usize) -> Vec<usize> {
    let mut keep = vec![true; dim];
    for &i in idx {
        keep[i] = false;
    }
    (0..dim).filter(|&i| keep[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn eigen_sign_and_order() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let (vals, vecs) = sym_eigen_sorted(&m);
        assert_eq!(vals.as_slice(), &[3.0, 1.0]);
        assert!(vecs[(1, 0)] > 0.0 && vecs[(0, 1)] > 0.0);
    }

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = inv_sqrt_psd(&m, 1e-12);
        assert!((r[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
    }
}

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Result, SimError};

pub(crate) const PIVOT_TOL: f64 = 1e-12;

/// Cholesky factor of a real symmetric positive-definite matrix, applied to complex vectors
/// by solving the real and imaginary parts separately.
#[derive(Clone, Debug)]
pub(crate) struct CovFactor {
    chol: Option<Cholesky<f64, Dyn>>,
    pub logdet: f64,
    pub dim: usize,
}

impl CovFactor {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        if dim == 0 {
            return Ok(Self { chol: None, logdet: 0.0, dim });
        }
        let chol = Cholesky::new(m.clone())
            .ok_or_else(|| SimError::NotPositiveDefinite("factorization failed".into()))?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for i in 0..dim {
            let pivot = l[(i, i)] * l[(i, i)];
            if !(pivot >= PIVOT_TOL) {
                return Err(SimError::NotPositiveDefinite(format!("pivot {pivot:.3e}")));
            }
            logdet += pivot.ln();
        }
        Ok(Self { chol: Some(chol), logdet, dim })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let Some(chol) = &self.chol else { return Vec::new() };
        let re = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|z| z.re)));
        let im = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|z| z.im)));
        re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    /// `bᵀ M⁻¹ b` without conjugation (analytic continuation of the real quadratic form).
    pub fn quad(&self, b: &[Complex64]) -> Complex64 {
        self.solve(b).iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// `log det(2π M)`.
    pub fn logdet_2pi(&self) -> f64 {
        self.logdet + self.dim as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

pub(crate) fn mat_cvec(m: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| v[j] * m[(i, j)]).sum())
        .collect()
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

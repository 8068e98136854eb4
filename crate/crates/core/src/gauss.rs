//! Gaussian-state entanglement from covariance matrices.
//!
//! Ordering is `(q_1..q_N, p_1..p_N)` and ħ = 1, so the vacuum has
//! `σ = ½·I` and symplectic eigenvalue `ν = ½`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::vn_entropy_term;

/// Relative symmetry tolerance.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed negativity of `σ + iΩ/2`.
pub const UNCERTAINTY_TOL: f64 = 1e-10;
/// Symplectic eigenvalues this far below ½ signal an invalid state.
pub const SYMPLECTIC_FLOOR_TOL: f64 = 1e-8;
/// Symplectic eigenvalues within this distance of ½ are clamped to ½.
pub const VACUUM_CLAMP: f64 = 1e-10;

/// Symplectic form `Ω = [[0, I], [−I, 0]]`.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let m = 2 * modes;
    DMatrix::from_fn(m, m, |i, j| {
        if j == i + modes {
            1.0
        } else if i == j + modes {
            -1.0
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape, symmetry and the uncertainty bound, then stores the
    /// symmetric part.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let cov = Self::unchecked(entries)?;
        let margin = cov.uncertainty_margin();
        if margin < -UNCERTAINTY_TOL {
            return Err(Error::Uncertainty(format!("min eigenvalue of σ + iΩ/2 is {margin:e}")));
        }
        Ok(cov)
    }

    /// Shape and symmetry checks only.
    pub fn unchecked(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || !n.is_multiple_of(2) || entries.ncols() != n {
            return Err(Error::InvalidCovariance(format!("shape {}x{} is not 2N x 2N", n, entries.ncols())));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let asym = (&entries - entries.transpose()).amax() / scale;
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidCovariance(format!("asymmetry {asym:e}")));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(Self { modes: n / 2, entries })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// Smallest eigenvalue of the Hermitian matrix `σ + iΩ/2`.
    pub fn uncertainty_margin(&self) -> f64 {
        let w = omega(self.modes);
        let h = DMatrix::from_fn(2 * self.modes, 2 * self.modes, |i, j| {
            Complex64::new(self.entries[(i, j)], 0.5 * w[(i, j)])
        });
        h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// Keeps the `q` and `p` rows/columns of `modes`, in the given order.
    pub fn reduce(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("empty mode subset".into()));
        }
        for (i, &m) in modes.iter().enumerate() {
            if m >= self.modes {
                return Err(Error::ModeOutOfRange { mode: m, modes: self.modes });
            }
            if modes[..i].contains(&m) {
                return Err(Error::InvalidArgument(format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|m| m + self.modes)).collect();
        let k = idx.len();
        Ok(Self { modes: modes.len(), entries: DMatrix::from_fn(k, k, |i, j| self.entries[(idx[i], idx[j])]) })
    }
}

/// Symplectic eigenvalues, ascending, one per mode.
///
/// Computed as the spectrum of the Hermitian `σ^{1/2} (iΩ) σ^{1/2}`, which
/// is similar to `iΩσ`.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<Vec<f64>> {
    let n = cov.modes;
    let eig = SymmetricEigen::new(cov.entries.clone());
    if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidCovariance("covariance is not positive definite".into()));
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let w = omega(n);
    let rc = root.map(|x| Complex64::new(x, 0.0));
    let iw = w.map(|x| Complex64::new(0.0, x));
    let m = &rc * iw * &rc;
    let mut mags: Vec<f64> = m.symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let nu: Vec<f64> = mags.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
    if let Some(bad) = nu.iter().find(|&&v| v < 0.5 - SYMPLECTIC_FLOOR_TOL) {
        return Err(Error::Uncertainty(format!("symplectic eigenvalue {bad} < 1/2")));
    }
    Ok(nu)
}

/// `μ = (½)ⁿ / √det σ`.
pub fn purity(cov: &CovarianceMatrix) -> Result<f64> {
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(Error::InvalidCovariance(format!("determinant {det:e} is not positive")));
    }
    Ok(0.5f64.powi(cov.modes as i32) / det.sqrt())
}

/// `Σ_k S(ν_k)` with ν within [`VACUUM_CLAMP`] of ½ treated as ½.
pub fn von_neumann_entropy(cov: &CovarianceMatrix) -> Result<f64> {
    Ok(entropy_from_symplectic(&symplectic_eigenvalues(cov)?))
}

pub fn entropy_from_symplectic(nu: &[f64]) -> f64 {
    nu.iter()
        .map(|&v| if (v - 0.5).abs() <= VACUUM_CLAMP || v < 0.5 { 0.5 } else { v })
        .map(vn_entropy_term)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d))).unwrap()
    }

    #[test]
    fn vacuum() {
        let v = diag(&[0.5, 0.5]);
        assert_eq!(symplectic_eigenvalues(&v).unwrap().len(), 1);
        assert!((symplectic_eigenvalues(&v).unwrap()[0] - 0.5).abs() < 1e-12);
        assert!((purity(&v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(von_neumann_entropy(&v).unwrap(), 0.0);
    }

    #[test]
    fn thermal_scaling() {
        let s = 3.0;
        let t = diag(&[s / 2.0, s / 2.0]);
        assert!((symplectic_eigenvalues(&t).unwrap()[0] - s / 2.0).abs() < 1e-12);
        assert!((purity(&t).unwrap() - 1.0 / s).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_is_pure() {
        let r: f64 = 0.7;
        let sq = diag(&[0.5 * (2.0 * r).exp(), 0.5 * (-2.0 * r).exp()]);
        assert!((symplectic_eigenvalues(&sq).unwrap()[0] - 0.5).abs() < 1e-12);
        assert!(von_neumann_entropy(&sq).unwrap().abs() < 1e-10);
    }

    #[test]
    fn rejects_violations() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[0.1, 0.1]));
        assert!(matches!(CovarianceMatrix::new(m), Err(Error::Uncertainty(_))));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(CovarianceMatrix::new(a), Err(Error::InvalidCovariance(_))));
        assert!(CovarianceMatrix::new(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn reduction() {
        let full = diag(&[1.0, 2.0, 3.0, 4.0]);
        let r = full.reduce(&[1]).unwrap();
        assert_eq!(r.entries(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]));
        assert_eq!(full.reduce(&[0, 1]).unwrap(), full);
        assert!(full.reduce(&[]).is_err());
        assert!(full.reduce(&[2]).is_err());
    }
}

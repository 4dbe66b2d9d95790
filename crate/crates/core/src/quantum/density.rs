use nalgebra::SymmetricEigen;

use super::ops::{hermiticity_error, projector};
use super::{CMatrix, C64, HERMITIAN_TOL, MAX_DIM, POSITIVITY_TOL, TRACE_TOL};
use crate::{Error, Result};

/// Hermitian, unit-trace, positive semidefinite matrix over 2–4 levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Validates all three invariants. Eigenvalues in `[-1e-8, 0)` are
    /// accepted and clamped.
    pub fn new(rho: CMatrix) -> Result<Self> {
        let dim = rho.nrows();
        if rho.ncols() != dim {
            return Err(Error::usage("density matrix must be square"));
        }
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::usage(format!("dimension {dim} outside 2..={MAX_DIM}")));
        }
        let herm = hermiticity_error(&rho);
        if herm > HERMITIAN_TOL {
            return Err(Error::usage(format!("matrix is not Hermitian (error {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::usage(format!("trace {tr} differs from 1")));
        }
        let sym = symmetrize(&rho);
        match guard_positivity(sym) {
            Ok(rho) => Ok(Self { rho }),
            Err(min) => Err(Error::usage(format!("matrix has negative eigenvalue {min:.3e}"))),
        }
    }

    /// |i⟩⟨i|.
    pub fn pure_level(dim: usize, level: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim) && level < dim);
        Self { rho: projector(dim, level) }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) ket.
    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::usage("zero ket"));
        }
        let v = nalgebra::DVector::from_iterator(ket.len(), ket.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        let diag = nalgebra::DVector::from_iterator(pops.len(), pops.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut rho = CMatrix::identity(dim, dim);
        rho /= C64::new(dim as f64, 0.0);
        Self { rho }
    }

    pub(crate) fn from_raw(rho: CMatrix) -> Self {
        Self { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn population(&self, level: usize) -> f64 {
        self.rho[(level, level)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn coherence(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.rho.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Purity Tr ρ².
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Clamp eigenvalues in `[-POSITIVITY_TOL, 0)` to zero and renormalise the
/// trace. Returns the offending eigenvalue when it is more negative.
pub(crate) fn guard_positivity(rho: CMatrix) -> std::result::Result<CMatrix, f64> {
    let eig = SymmetricEigen::new(rho.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Ok(rho);
    }
    if min < -POSITIVITY_TOL {
        return Err(min);
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clamped.iter().sum();
    let diag = CMatrix::from_diagonal(&clamped.map(|l| C64::new(l / total, 0.0)));
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * diag * v.adjoint())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_bad_trace_and_negative_states() {
        assert!(DensityMatrix::from_populations(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::from_populations(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn clamps_tiny_negative_eigenvalue() {
        let rho = DensityMatrix::from_populations(&[1.0 + 5e-9, -5e-9]).unwrap();
        assert!(rho.min_eigenvalue() >= 0.0);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_ket_has_unit_purity() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::from_ket(&[C64::new(s, 0.0), C64::new(0.0, s)]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!((rho.coherence(0, 1) - C64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn dimension_limits() {
        assert!(DensityMatrix::new(CMatrix::identity(5, 5) / C64::new(5.0, 0.0)).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(1, 1)).is_err());
    }
}

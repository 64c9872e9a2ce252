use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{hermitian_eigenvalues, max_abs, CMatrix, C_ONE, C_ZERO};

pub type CVector = DVector<Complex64>;

/// Tolerance on the normalisation and Hermiticity invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted by [`QuantumState::check_positivity`].
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

/// Borrowed view used by observers during integration.
#[derive(Debug, Clone, Copy)]
pub enum StateView<'a> {
    Pure(&'a CVector),
    Mixed(&'a CMatrix),
}

impl QuantumState {
    pub fn pure(psi: CVector) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(
                "state",
                format!("pure state has norm {n}, expected 1"),
            ));
        }
        Ok(QuantumState::Pure(psi))
    }

    /// Normalises `psi`; fails on the zero vector.
    pub fn pure_normalized(psi: CVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::validation(
                "state",
                "cannot normalise a zero amplitude vector",
            ));
        }
        Ok(QuantumState::Pure(psi / Complex64::new(n, 0.0)))
    }

    pub fn mixed(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Dimension {
                context: "density matrix",
                expected: rho.nrows(),
                got: rho.ncols(),
            });
        }
        let herm = max_abs(&(&rho - rho.adjoint()));
        if herm > STATE_TOL {
            return Err(Error::validation(
                "state",
                format!("density matrix not Hermitian ({herm:e})"),
            ));
        }
        let tr = rho.trace();
        if (tr - C_ONE).norm() > STATE_TOL {
            return Err(Error::validation(
                "state",
                format!("density matrix has trace {tr}"),
            ));
        }
        Ok(QuantumState::Mixed(rho))
    }

    pub fn basis(dim: usize, b: usize) -> Result<Self> {
        if b >= dim {
            return Err(Error::validation(
                "state",
                format!("basis index {b} out of range for D = {dim}"),
            ));
        }
        let mut v = CVector::zeros(dim);
        v[b] = C_ONE;
        Ok(QuantumState::Pure(v))
    }

    /// Normalised superposition `Σ c_b |b⟩`.
    pub fn superposition(dim: usize, terms: &[(usize, Complex64)]) -> Result<Self> {
        let mut v = CVector::zeros(dim);
        for &(b, c) in terms {
            if b >= dim {
                return Err(Error::validation(
                    "state",
                    format!("basis index {b} out of range for D = {dim}"),
                ));
            }
            v[b] += c;
        }
        Self::pure_normalized(v)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        QuantumState::Mixed(CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn dimension(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure_kind(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn view(&self) -> StateView<'_> {
        match self {
            QuantumState::Pure(v) => StateView::Pure(v),
            QuantumState::Mixed(m) => StateView::Mixed(m),
        }
    }

    pub fn density(&self) -> CMatrix {
        self.view().density()
    }

    pub fn into_density(self) -> CMatrix {
        match self {
            QuantumState::Pure(v) => &v * v.adjoint(),
            QuantumState::Mixed(m) => m,
        }
    }

    /// Fails when the smallest eigenvalue of a mixed state is below
    /// `−POSITIVITY_TOL`; returns that eigenvalue.
    pub fn check_positivity(&self) -> Result<f64> {
        match self {
            QuantumState::Pure(_) => Ok(0.0),
            QuantumState::Mixed(m) => {
                let min = min_eigenvalue(m);
                if min < -POSITIVITY_TOL {
                    return Err(Error::validation(
                        "state",
                        format!("density matrix has eigenvalue {min:e}"),
                    ));
                }
                Ok(min)
            }
        }
    }
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

impl StateView<'_> {
    pub fn dimension(&self) -> usize {
        match self {
            StateView::Pure(v) => v.len(),
            StateView::Mixed(m) => m.nrows(),
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            StateView::Pure(v) => *v * v.adjoint(),
            StateView::Mixed(m) => (*m).clone(),
        }
    }

    /// Position-basis populations `⟨b|ρ|b⟩`.
    pub fn population(&self, b: usize) -> f64 {
        match self {
            StateView::Pure(v) => v[b].norm_sqr(),
            StateView::Mixed(m) => m[(b, b)].re,
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dimension()).map(|b| self.population(b)).collect()
    }

    /// `tr(Xρ)` for a real diagonal `X`.
    pub fn expect_diagonal(&self, diag: &[f64]) -> f64 {
        match self {
            StateView::Pure(v) => v.iter().zip(diag).map(|(z, d)| z.norm_sqr() * d).sum(),
            StateView::Mixed(m) => diag.iter().enumerate().map(|(b, d)| m[(b, b)].re * d).sum(),
        }
    }

    /// `⟨b|ρ|c⟩`.
    pub fn element(&self, b: usize, c: usize) -> Complex64 {
        match self {
            StateView::Pure(v) => v[b] * v[c].conj(),
            StateView::Mixed(m) => m[(b, c)],
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            StateView::Pure(v) => v.norm_squared(),
            StateView::Mixed(m) => m.trace().re,
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            StateView::Pure(v) => v.norm_squared().powi(2),
            StateView::Mixed(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn fidelity_with(&self, phi: &CVector) -> f64 {
        match self {
            StateView::Pure(v) => phi.dotc(v).norm_sqr(),
            StateView::Mixed(m) => phi.dotc(&(*m * phi)).re,
        }
    }

    pub fn to_owned(&self) -> QuantumState {
        match self {
            StateView::Pure(v) => QuantumState::Pure((*v).clone()),
            StateView::Mixed(m) => QuantumState::Mixed((*m).clone()),
        }
    }
}

/// Accumulate `ρ` into `acc` without forming an intermediate matrix.
pub(crate) fn add_density(acc: &mut CMatrix, state: StateView<'_>) {
    match state {
        StateView::Pure(v) => {
            let d = v.len();
            for c in 0..d {
                let vc = v[c].conj();
                if vc == C_ZERO {
                    continue;
                }
                for r in 0..d {
                    acc[(r, c)] += v[r] * vc;
                }
            }
        }
        StateView::Mixed(m) => *acc += m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(QuantumState::pure(CVector::from_element(2, C_ONE)).is_err());
        let s = QuantumState::superposition(4, &[(1, C_ONE), (2, C_ONE)]).unwrap();
        assert!((s.view().population(1) - 0.5).abs() < 1e-15);
        assert!(QuantumState::superposition(4, &[(5, C_ONE)]).is_err());
        assert!(QuantumState::basis(3, 3).is_err());
        let m = QuantumState::maximally_mixed(4);
        assert!((m.view().purity() - 0.25).abs() < 1e-15);
        assert!(m.check_positivity().is_ok());
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(QuantumState::mixed(bad.clone()).is_err());
        bad[(0, 0)] = Complex64::new(1.5, 0.0);
        bad[(1, 1)] = Complex64::new(-0.5, 0.0);
        bad[(0, 1)] = C_ZERO;
        assert!(QuantumState::mixed(bad)
            .unwrap()
            .check_positivity()
            .is_err());
    }

    #[test]
    fn pure_and_mixed_views_agree() {
        let psi = QuantumState::superposition(
            3,
            &[
                (0, Complex64::new(1.0, 1.0)),
                (2, Complex64::new(0.5, -2.0)),
            ],
        )
        .unwrap();
        let rho = QuantumState::mixed(psi.density()).unwrap();
        let (p, m) = (psi.view(), rho.view());
        let diag = [0.3, -1.0, 2.0];
        assert!((p.expect_diagonal(&diag) - m.expect_diagonal(&diag)).abs() < 1e-15);
        assert!((p.element(0, 2) - m.element(0, 2)).norm() < 1e-15);
        assert!((p.purity() - m.purity()).abs() < 1e-14);
        let QuantumState::Pure(v) = &psi else {
            unreachable!()
        };
        assert!((p.fidelity_with(v) - 1.0).abs() < 1e-14);
        assert!((m.fidelity_with(v) - 1.0).abs() < 1e-14);
        let mut acc = CMatrix::zeros(3, 3);
        add_density(&mut acc, p);
        assert!(max_abs(&(acc - rho.density())) < 1e-15);
    }
}

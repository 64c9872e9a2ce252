use nalgebra::DVector;
use num_complex::Complex64;

use super::{Kernel, SpectralDecomposition};
use crate::error::{Error, Result};

/// Both sides of the representer identity `⟨φ̌, ψ̌⟩ = ⟨φ, ψ⟩_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkhsPairing {
    /// `⟨φ̌, ψ̌⟩` with `φ̌ = S √w φ` and `S` the matrix square root.
    pub lhs: Complex64,
    /// `Σ_jk w_j w_k φ_j* g_jk ψ_k` on the repaired kernel.
    pub rhs: Complex64,
    pub deviation: f64,
}

/// Discrete γ-transform `φ̌ = S √w φ`.
pub fn gamma_transform(
    phi: &[Complex64],
    kernel: &Kernel,
    decomp: &SpectralDecomposition,
) -> DVector<Complex64> {
    let sw = kernel.grid().cell_weight().sqrt();
    let s = decomp.sqrt_matrix().map(|v| Complex64::new(v, 0.0));
    let v = DVector::from_iterator(phi.len(), phi.iter().map(|z| z * sw));
    s * v
}

pub fn rkhs_pairing_check(
    phi: &[Complex64],
    psi: &[Complex64],
    kernel: &Kernel,
    decomp: &SpectralDecomposition,
) -> Result<RkhsPairing> {
    let n = kernel.len();
    for (name, v) in [("phi", phi), ("psi", psi)] {
        if v.len() != n {
            return Err(Error::Dimension {
                context: if name == "phi" {
                    "rkhs phi"
                } else {
                    "rkhs psi"
                },
                expected: n,
                got: v.len(),
            });
        }
    }
    if decomp.n_sites() != n {
        return Err(Error::Dimension {
            context: "rkhs decomposition",
            expected: n,
            got: decomp.n_sites(),
        });
    }
    let a = gamma_transform(phi, kernel, decomp);
    let b = gamma_transform(psi, kernel, decomp);
    let lhs = a.dotc(&b);

    let w = kernel.grid().cell_weight();
    let g = kernel.weighted().map(|v| Complex64::new(v * w, 0.0));
    let p = DVector::from_column_slice(phi);
    let q = DVector::from_column_slice(psi);
    // weighted() already carries one factor of w
    let rhs = p.dotc(&(g * q));
    Ok(RkhsPairing {
        lhs,
        rhs,
        deviation: (lhs - rhs).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{
        build_grid, build_kernel, spectral_decompose, DecomposeOptions, KernelFamily,
        PhysicalConstants,
    };

    #[test]
    fn eigenvector_cases_on_unit_weight_grid() {
        let grid = build_grid(1, 6, 3.0).unwrap();
        let k = build_kernel(
            &grid,
            KernelFamily::Exponential { length: 1.5 },
            PhysicalConstants::default(),
        )
        .unwrap();
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        let col = |a: usize| -> Vec<Complex64> {
            d.eigenvectors()
                .column(a)
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect()
        };
        let top = rkhs_pairing_check(&col(0), &col(0), &k, &d).unwrap();
        assert!((top.lhs.re - d.eigenvalues()[0]).abs() < 1e-12);
        assert!((top.rhs.re - d.eigenvalues()[0]).abs() < 1e-12);
        let orth = rkhs_pairing_check(&col(0), &col(1), &k, &d).unwrap();
        assert!(orth.lhs.norm() < 1e-12 && orth.rhs.norm() < 1e-12);
    }

    #[test]
    fn shape_mismatch_errors() {
        let grid = build_grid(1, 4, 2.0).unwrap();
        let k = build_kernel(
            &grid,
            KernelFamily::Gaussian { length: 1.0 },
            PhysicalConstants::default(),
        )
        .unwrap();
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        let z = vec![Complex64::new(1.0, 0.0); 3];
        assert!(rkhs_pairing_check(&z, &z, &k, &d).is_err());
    }
}

//! Spatial grids, decoherence kernels and their Mercer expansion.
//!
//! Every spatial integral is discretized as `Σ_j w_j`. Downstream code works
//! with the symmetrically weighted kernel `G̃_jk = √w_j g_jk √w_k`, whose
//! eigenvectors are orthonormal in the plain Euclidean sense.

mod constants;
mod family;
mod grid;
mod noise;
mod rkhs;
mod spectral;
mod sqrt_check;

pub use constants::PhysicalConstants;
pub use family::{build_kernel, self_energy, Kernel, KernelFamily, SYMMETRY_TOL};
pub use grid::{build_grid, build_grid_capped, GridSpec, SpatialGrid, DEFAULT_SITE_CAP};
pub use noise::{channel_increments, sample_noise_field, sites_from_channels, NoiseIncrement};
pub use rkhs::{gamma_transform, rkhs_pairing_check, RkhsPairing};
pub use spectral::{
    spectral_decompose, DecomposeOptions, SpectralDecomposition, DEFAULT_RANK_TOL_REL,
    STRICT_CLIP_TOL_REL,
};
pub use sqrt_check::{
    gamma_square_root_check, near_bounds, QuadratureSpec, SqrtCheckReport, SqrtResidual,
    QUARTER_PI_SQ,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::f17;

/// JSON interchange form of a kernel and its decomposition.
///
/// `matrix` is the raw `g_jk` row-major; `eigenvectors` is `rank × n`
/// row-major, so `eigenvectors[a * n + j] = e_j(a)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelExport {
    pub grid: GridSpec,
    pub family: KernelFamily,
    pub constants: PhysicalConstants,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub matrix: Vec<f64>,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub eigenvalues: Vec<f64>,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub eigenvectors: Vec<f64>,
    #[serde(serialize_with = "f17::serialize")]
    pub clipped_mass: f64,
}

impl KernelExport {
    pub fn new(kernel: &Kernel, decomp: &SpectralDecomposition) -> Self {
        let n = kernel.len();
        let m = kernel.matrix();
        let e = decomp.eigenvectors();
        KernelExport {
            grid: kernel.grid().spec(),
            family: kernel.family().clone(),
            constants: kernel.constants(),
            matrix: (0..n * n).map(|i| m[(i / n, i % n)]).collect(),
            eigenvalues: decomp.eigenvalues().to_vec(),
            eigenvectors: (0..decomp.rank() * n).map(|i| e[(i % n, i / n)]).collect(),
            clipped_mass: decomp.clipped_mass(),
        }
    }

    /// Rebuild the kernel from its grid and family, then check that the
    /// stored matrix and decomposition agree with it.
    pub fn into_parts(self) -> Result<(Kernel, SpectralDecomposition)> {
        let grid = build_grid(self.grid.dim, self.grid.n_per_axis, self.grid.extent)?;
        let kernel = build_kernel(&grid, self.family, self.constants)?;
        let n = kernel.len();
        if self.matrix.len() != n * n {
            return Err(Error::Dimension {
                context: "kernel export matrix",
                expected: n * n,
                got: self.matrix.len(),
            });
        }
        let stored = DMatrix::from_row_slice(n, n, &self.matrix);
        let scale = kernel.matrix().amax().max(f64::MIN_POSITIVE);
        if (&stored - kernel.matrix()).amax() > 1e-12 * scale {
            return Err(Error::validation(
                "matrix",
                "does not match grid and family",
            ));
        }
        let rank = self.eigenvalues.len();
        if self.eigenvectors.len() != rank * n {
            return Err(Error::Dimension {
                context: "kernel export eigenvectors",
                expected: rank * n,
                got: self.eigenvectors.len(),
            });
        }
        let vectors = DMatrix::from_fn(n, rank, |j, a| self.eigenvectors[a * n + j]);
        let decomp =
            SpectralDecomposition::from_parts(self.eigenvalues, vectors, self.clipped_mass)?;
        let err = decomp.reconstruction_error(&kernel);
        let tol = kernel.weighted().amax() * 1e-10
            + kernel.weighted().amax() * DEFAULT_RANK_TOL_REL * n as f64;
        if err > tol {
            return Err(Error::validation(
                "eigenvalues",
                format!("decomposition does not reconstruct the kernel (error {err:e})"),
            ));
        }
        Ok((kernel, decomp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn export_round_trip() {
        let grid = build_grid(1, 5, 2.0).unwrap();
        let k = build_kernel(
            &grid,
            KernelFamily::NewtonianMollified { sigma: 0.4 },
            PhysicalConstants::new(0.5, 1.0).unwrap(),
        )
        .unwrap();
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        let json = serde_json::to_string(&KernelExport::new(&k, &d)).unwrap();
        assert!(json.starts_with(r#"{"grid":{"dim":1,"n_per_axis":5,"extent":"#));
        let back: KernelExport = serde_json::from_str(&json).unwrap();
        let (k2, d2) = back.into_parts().unwrap();
        assert_eq!(k2.matrix(), k.matrix());
        assert_eq!(d2.eigenvalues(), d.eigenvalues());
        assert_eq!(d2.eigenvectors(), d.eigenvectors());
    }

    #[test]
    fn tampered_export_is_rejected() {
        let grid = build_grid(1, 3, 1.5).unwrap();
        let k = build_kernel(
            &grid,
            KernelFamily::Gaussian { length: 1.0 },
            PhysicalConstants::default(),
        )
        .unwrap();
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        let mut ex = KernelExport::new(&k, &d);
        ex.eigenvalues[0] *= 1.01;
        assert!(ex.into_parts().is_err());
    }
}

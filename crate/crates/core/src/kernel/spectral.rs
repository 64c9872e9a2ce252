use nalgebra::DMatrix;

use super::family::reconstruct;
use super::Kernel;
use crate::error::{Error, Result};

/// Relative rank cut-off applied when none is given: `1e-12 · λ_max`.
pub const DEFAULT_RANK_TOL_REL: f64 = 1e-12;
/// Clipped negative spectrum allowed in strict mode, relative to the trace.
pub const STRICT_CLIP_TOL_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default)]
pub struct DecomposeOptions {
    /// Absolute eigenvalue cut-off; `None` means `1e-12 · λ_max`.
    pub rank_tol: Option<f64>,
    /// Turn the clipped-spectrum warning into an error.
    pub strict: bool,
}

/// Truncated Mercer expansion of the weighted kernel,
/// `G̃ ≈ Σ_a λ_a e(a) e(a)ᵀ`, with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// n × R, column `a` is `e(a)`.
    eigenvectors: DMatrix<f64>,
    clipped_mass: f64,
    truncated_mass: f64,
    id: u64,
}

pub fn spectral_decompose(
    kernel: &Kernel,
    opts: DecomposeOptions,
) -> Result<SpectralDecomposition> {
    let trace = kernel.trace();
    let clipped = kernel.clipped_mass();
    if clipped > STRICT_CLIP_TOL_REL * trace.abs() {
        let msg = format!(
            "PSD repair clipped {clipped:e}, more than {STRICT_CLIP_TOL_REL:e} of the trace {trace:e}"
        );
        if opts.strict {
            return Err(Error::Numerical {
                context: "spectral_decompose",
                reason: msg,
            });
        }
        log::warn!("{msg}");
    }
    let (values, vectors) = kernel.spectrum();
    let lam_max = values.first().copied().unwrap_or(0.0);
    let tol = match opts.rank_tol {
        Some(t) if t < 0.0 || !t.is_finite() => {
            return Err(Error::validation(
                "rank_tol",
                format!("must be non-negative, got {t}"),
            ))
        }
        Some(t) => t,
        None => DEFAULT_RANK_TOL_REL * lam_max,
    };
    let rank = values.iter().take_while(|&&v| v > tol).count();
    let mut d = SpectralDecomposition::from_parts(
        values[..rank].to_vec(),
        vectors.columns(0, rank).into_owned(),
        clipped,
    )?;
    d.truncated_mass = values[rank..].iter().sum();
    Ok(d)
}

impl SpectralDecomposition {
    /// Assemble a decomposition from eigenpairs, checking ordering,
    /// non-negativity and orthonormality.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        clipped_mass: f64,
    ) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::Dimension {
                context: "spectral decomposition eigenvectors",
                expected: eigenvalues.len(),
                got: eigenvectors.ncols(),
            });
        }
        if eigenvalues.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::validation("eigenvalues", "must be non-negative"));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::validation(
                "eigenvalues",
                "must be in descending order",
            ));
        }
        let d = SpectralDecomposition {
            id: fingerprint(&eigenvalues, &eigenvectors),
            eigenvalues,
            eigenvectors,
            clipped_mass,
            truncated_mass: 0.0,
        };
        let err = d.orthonormality_error();
        if err > 1e-10 {
            return Err(Error::validation(
                "eigenvectors",
                format!("not orthonormal, max |EᵀE - I| = {err:e}"),
            ));
        }
        Ok(d)
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_sites(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    /// Sum of the non-negative eigenvalues dropped by the rank cut.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Content fingerprint, used to tie collapse sets back to their source.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// `Σ_a λ_a e(a) e(a)ᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct(&self.eigenvalues, &self.eigenvectors)
    }

    /// Max-norm distance between the expansion and the repaired kernel.
    pub fn reconstruction_error(&self, kernel: &Kernel) -> f64 {
        (self.reconstruct() - kernel.weighted()).amax()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rank();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::<f64>::identity(r, r)).amax()
    }

    /// Matrix square root `Σ_a √λ_a e(a) e(a)ᵀ` of the retained spectrum.
    pub fn sqrt_matrix(&self) -> DMatrix<f64> {
        let roots: Vec<f64> = self.eigenvalues.iter().map(|v| v.sqrt()).collect();
        reconstruct(&roots, &self.eigenvectors)
    }
}

// FNV-1a over the bit patterns of the eigenpairs.
fn fingerprint(values: &[f64], vectors: &DMatrix<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in values.iter().chain(vectors.iter()) {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

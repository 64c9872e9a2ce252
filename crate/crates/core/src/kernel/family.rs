use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::{PhysicalConstants, SpatialGrid};
use crate::error::{Error, Result};

/// Relative asymmetry tolerated in a user-supplied kernel matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Pairwise decoherence kernel families.
///
/// The built-in families scale with `G`; a custom matrix is used verbatim
/// as `g_jk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFamily {
    /// `G erf(r / 2σ) / r`, the Newtonian kernel smeared by a Gaussian of
    /// width σ at each end; the diagonal is `G / (σ √π)`.
    NewtonianMollified {
        sigma: f64,
    },
    /// `G exp(-r² / 2ℓ²)`.
    Gaussian {
        length: f64,
    },
    /// `G exp(-r / ℓ)`.
    Exponential {
        length: f64,
    },
    Custom {
        matrix: Vec<Vec<f64>>,
    },
}

impl KernelFamily {
    fn validate(&self, n: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(
                    format!("kernel.{name}"),
                    format!("must be positive, got {v}"),
                ))
            }
        };
        match self {
            KernelFamily::NewtonianMollified { sigma } => positive("sigma", *sigma),
            KernelFamily::Gaussian { length } | KernelFamily::Exponential { length } => {
                positive("length", *length)
            }
            KernelFamily::Custom { matrix } => {
                if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::validation(
                        "kernel.matrix",
                        format!("must be a square {n}x{n} matrix matching the grid"),
                    ));
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::validation("kernel.matrix", "entries must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Kernel value at separation `r` for the built-in families.
    pub fn pair_value(&self, r: f64, g: f64) -> Option<f64> {
        Some(match *self {
            KernelFamily::NewtonianMollified { sigma } => {
                if r == 0.0 {
                    g / (sigma * std::f64::consts::PI.sqrt())
                } else {
                    g * erf(r / (2.0 * sigma)) / r
                }
            }
            KernelFamily::Gaussian { length } => g * (-(r * r) / (2.0 * length * length)).exp(),
            KernelFamily::Exponential { length } => g * (-r / length).exp(),
            KernelFamily::Custom { .. } => return None,
        })
    }
}

/// A sampled decoherence kernel together with its PSD-repaired,
/// symmetrically weighted operator form `√w_j g_jk √w_k`.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: SpatialGrid,
    family: KernelFamily,
    constants: PhysicalConstants,
    matrix: DMatrix<f64>,
    weighted: DMatrix<f64>,
    // full spectrum of the repaired weighted matrix, descending
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    clipped_mass: f64,
    raw_min_eigenvalue: f64,
}

pub fn build_kernel(
    grid: &SpatialGrid,
    family: KernelFamily,
    constants: PhysicalConstants,
) -> Result<Kernel> {
    let n = grid.len();
    family.validate(n)?;
    let matrix = match &family {
        KernelFamily::Custom { matrix } => {
            let m = DMatrix::from_fn(n, n, |j, k| matrix[j][k]);
            let scale = m.amax();
            let asym = (&m - m.transpose()).amax();
            if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::validation(
                    "kernel.matrix",
                    format!("not symmetric: max |g_jk - g_kj| = {asym:e}"),
                ));
            }
            (&m + m.transpose()) * 0.5
        }
        fam => DMatrix::from_fn(n, n, |j, k| {
            fam.pair_value(grid.distance(j, k), constants.g())
                .expect("built-in family")
        }),
    };

    let w = grid.cell_weight();
    let raw_weighted = &matrix * w;
    let (values, vectors) = sorted_eigen(raw_weighted.clone());
    let raw_min_eigenvalue = values.last().copied().unwrap_or(0.0);
    let clipped_mass: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum::<f64>() + 0.0;
    let eigenvalues: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let weighted = if clipped_mass > 0.0 {
        reconstruct(&eigenvalues, &vectors)
    } else {
        raw_weighted
    };
    if clipped_mass > 0.0 {
        log::debug!("kernel PSD repair clipped {clipped_mass:e} of negative spectrum");
    }

    Ok(Kernel {
        grid: grid.clone(),
        family,
        constants,
        matrix,
        weighted,
        eigenvalues,
        eigenvectors: vectors,
        clipped_mass,
        raw_min_eigenvalue,
    })
}

/// Symmetric eigendecomposition sorted by descending eigenvalue, with each
/// eigenvector's sign fixed so its largest-magnitude entry is positive.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub(crate) fn reconstruct(values: &[f64], vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (a, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let e = vectors.column(a);
        out += lam * e * e.transpose();
    }
    out
}

impl Kernel {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Raw sampled kernel `g_jk`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Operator-level kernel `√w_j g_jk √w_k` after PSD repair.
    pub fn weighted(&self) -> &DMatrix<f64> {
        &self.weighted
    }

    /// Sum of the magnitudes of negative eigenvalues removed by the repair.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    /// Smallest eigenvalue of the weighted matrix before repair.
    pub fn raw_min_eigenvalue(&self) -> f64 {
        self.raw_min_eigenvalue
    }

    /// Trace of the weighted matrix before repair.
    pub fn trace(&self) -> f64 {
        self.matrix.trace() * self.grid.cell_weight()
    }

    pub(crate) fn spectrum(&self) -> (&[f64], &DMatrix<f64>) {
        (&self.eigenvalues, &self.eigenvectors)
    }
}

/// Self-energy `Γ = Σ_jk w_j w_k μ_j g_jk μ_k` of a classical mass
/// distribution sampled on the kernel's grid, using the repaired kernel.
pub fn self_energy(mass: &[f64], kernel: &Kernel) -> Result<f64> {
    if mass.len() != kernel.len() {
        return Err(Error::Dimension {
            context: "self_energy mass vector",
            expected: kernel.len(),
            got: mass.len(),
        });
    }
    let sw = kernel.grid.cell_weight().sqrt();
    let v = DVector::from_iterator(mass.len(), mass.iter().map(|m| m * sw));
    Ok(v.dot(&(kernel.weighted() * &v)))
}

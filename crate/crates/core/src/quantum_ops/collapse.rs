use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MassDensityFamily, Operator};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, PhysicalConstants, SpectralDecomposition};

/// Relative tolerance of the build-time kernel-contraction check.
pub const CONTRACTION_TOL_REL: f64 = 1e-10;

/// Hermitian, position-diagonal collapse channels
/// `L_a = √(λ_a/ħ) Σ_j √w e_j(a) μ̂_j`.
///
/// Only the diagonals `ℓ_a(b)` are stored.
#[derive(Debug, Clone)]
pub struct CollapseSet {
    /// `[channel][basis]`
    diagonals: Vec<Vec<f64>>,
    dimension: usize,
    decomposition_id: Option<u64>,
    hbar: f64,
    /// `Λ_bc = ½ Σ_a (ℓ_a(b) − ℓ_a(c))²`, row-major D×D.
    dephasing: DMatrix<f64>,
    /// `Σ_a ℓ_a(b)²`
    intensity: Vec<f64>,
}

pub fn collapse_set(
    family: &MassDensityFamily,
    kernel: &Kernel,
    decomp: &SpectralDecomposition,
    constants: PhysicalConstants,
) -> Result<CollapseSet> {
    let n = family.n_sites();
    if decomp.n_sites() != n || kernel.len() != n {
        return Err(Error::Dimension {
            context: "collapse set sites",
            expected: n,
            got: decomp.n_sites(),
        });
    }
    if decomp.rank() == 0 {
        return Err(Error::validation(
            "decomposition",
            "rank 0 gives no decoherence channels",
        ));
    }
    let hbar = constants.hbar();
    let sw = kernel.grid().cell_weight().sqrt();
    let d = family.dimension();
    let e = decomp.eigenvectors();
    let diagonals: Vec<Vec<f64>> = decomp
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(a, &lam)| {
            let scale = (lam / hbar).sqrt() * sw;
            let mut diag = vec![0.0; d];
            for j in 0..n {
                let c = scale * e[(j, a)];
                for (x, mu) in diag.iter_mut().zip(family.site_diagonal(j)) {
                    *x += c * mu;
                }
            }
            diag
        })
        .collect();
    let set = CollapseSet::assemble(diagonals, d, Some(decomp.id()), hbar);
    verify_contraction(&set, family, kernel, decomp)?;
    Ok(set)
}

/// Checks `Σ_a L_a X L_a = (1/ħ) Σ_jk w² g_jk μ̂_j X μ̂_k` on three random
/// diagonal `X`. Both sides are diagonal, so the comparison is entrywise.
fn verify_contraction(
    set: &CollapseSet,
    family: &MassDensityFamily,
    kernel: &Kernel,
    decomp: &SpectralDecomposition,
) -> Result<()> {
    let w = kernel.grid().cell_weight();
    let g = kernel.matrix();
    let n = family.n_sites();
    let d = set.dimension;
    // q_b = Σ_jk w² g_jk μ_j(b) μ_k(b)
    let v = DMatrix::from_fn(n, d, |j, b| w * family.site_diagonal(j)[b]);
    let gv = g * &v;
    let q: Vec<f64> = (0..d)
        .map(|b| v.column(b).dot(&gv.column(b)) / set.hbar)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6d62_6461);
    let scale = q
        .iter()
        .chain(&set.intensity)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..3 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in 0..d {
            let lhs = set.intensity[b] * x[b];
            let rhs = q[b] * x[b];
            // dropped and clipped spectrum bound the difference by (mass)·‖√w μ_b‖²
            let vb2 = v.column(b).norm_squared() / w;
            let allowance = (decomp.truncated_mass() + kernel.clipped_mass()) * vb2 / set.hbar;
            let tol = CONTRACTION_TOL_REL * scale + allowance * x[b].abs();
            if (lhs - rhs).abs() > tol {
                return Err(Error::Numerical {
                    context: "collapse_set",
                    reason: format!(
                        "channel contraction disagrees with the kernel double sum at basis state {b}: {lhs:e} vs {rhs:e}"
                    ),
                });
            }
        }
    }
    Ok(())
}

impl CollapseSet {
    /// Channels given directly by their real diagonals.
    pub fn from_diagonals(diagonals: Vec<Vec<f64>>, hbar: f64) -> Result<Self> {
        let Some(first) = diagonals.first() else {
            return Err(Error::validation(
                "collapse operators",
                "at least one channel is required",
            ));
        };
        let d = first.len();
        if let Some(bad) = diagonals.iter().find(|c| c.len() != d) {
            return Err(Error::Dimension {
                context: "collapse operator diagonal",
                expected: d,
                got: bad.len(),
            });
        }
        if diagonals.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "collapse operators",
                "entries must be finite",
            ));
        }
        if !(hbar > 0.0) {
            return Err(Error::validation("hbar", "must be positive"));
        }
        Ok(CollapseSet::assemble(diagonals, d, None, hbar))
    }

    fn assemble(
        diagonals: Vec<Vec<f64>>,
        d: usize,
        decomposition_id: Option<u64>,
        hbar: f64,
    ) -> Self {
        let dephasing = DMatrix::from_fn(d, d, |b, c| {
            0.5 * diagonals.iter().map(|l| (l[b] - l[c]).powi(2)).sum::<f64>()
        });
        let intensity = (0..d)
            .map(|b| diagonals.iter().map(|l| l[b] * l[b]).sum())
            .collect();
        CollapseSet {
            diagonals,
            dimension: d,
            decomposition_id,
            hbar,
            dephasing,
            intensity,
        }
    }

    pub fn rank(&self) -> usize {
        self.diagonals.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Fingerprint of the decomposition the channels were built from.
    pub fn decomposition_id(&self) -> Option<u64> {
        self.decomposition_id
    }

    /// Diagonal `ℓ_a(b)` of channel `a`.
    pub fn diagonal(&self, a: usize) -> &[f64] {
        &self.diagonals[a]
    }

    pub fn diagonals(&self) -> &[Vec<f64>] {
        &self.diagonals
    }

    pub fn operator(&self, a: usize) -> Operator {
        Operator::from_real_diagonal(&self.diagonals[a])
    }

    /// Off-diagonal decay rates `Λ_bc`.
    pub fn dephasing_matrix(&self) -> &DMatrix<f64> {
        &self.dephasing
    }

    pub fn dephasing_rate(&self, b: usize, c: usize) -> f64 {
        self.dephasing[(b, c)]
    }

    /// Diagonal of `Σ_a L_a†L_a`.
    pub fn total_intensity(&self) -> &[f64] {
        &self.intensity
    }

    /// `max_b Σ_a ℓ_a(b)²`, the stiffness entering the step-size check.
    pub fn max_intensity(&self) -> f64 {
        self.intensity.iter().fold(0.0, |m, &x| m.max(x))
    }

    /// Same channels with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> CollapseSet {
        let diagonals = self
            .diagonals
            .iter()
            .map(|l| l.iter().map(|x| x * s).collect())
            .collect();
        CollapseSet::assemble(diagonals, self.dimension, self.decomposition_id, self.hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{
        build_grid, build_kernel, spectral_decompose, DecomposeOptions, KernelFamily,
    };
    use crate::quantum_ops::{build_space, mass_density_family, ParticleSpec, DEFAULT_DIM_CAP};

    fn setup(
        g: f64,
    ) -> (
        MassDensityFamily,
        Kernel,
        SpectralDecomposition,
        PhysicalConstants,
    ) {
        let grid = build_grid(1, 6, 3.0).unwrap();
        let space = build_space(
            vec![ParticleSpec {
                mass: 1.0,
                grid: grid.clone(),
            }],
            DEFAULT_DIM_CAP,
        )
        .unwrap();
        let fam = mass_density_family(&space, &grid, 1.0).unwrap();
        let c = PhysicalConstants::new(g, 1.0).unwrap();
        let k = build_kernel(&grid, KernelFamily::NewtonianMollified { sigma: 0.5 }, c).unwrap();
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        (fam, k, d, c)
    }

    #[test]
    fn channels_are_built_and_checked() {
        let (fam, k, d, c) = setup(1.0);
        let cs = collapse_set(&fam, &k, &d, c).unwrap();
        assert_eq!(cs.rank(), d.rank());
        assert_eq!(cs.dimension(), 6);
        assert_eq!(cs.decomposition_id(), Some(d.id()));
        for a in 0..cs.rank() {
            assert!(cs.operator(a).is_diagonal());
        }
        for b in 0..6 {
            assert_eq!(cs.dephasing_rate(b, b), 0.0);
        }
    }

    #[test]
    fn doubling_g_scales_channels_by_sqrt2() {
        let (fam, k1, d1, c1) = setup(1.0);
        let (_, k2, d2, c2) = setup(2.0);
        let a = collapse_set(&fam, &k1, &d1, c1).unwrap();
        let b = collapse_set(&fam, &k2, &d2, c2).unwrap();
        for ch in 0..a.rank() {
            for (x, y) in a.diagonal(ch).iter().zip(b.diagonal(ch)) {
                assert!((y - std::f64::consts::SQRT_2 * x).abs() < 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn custom_diagonals() {
        let cs = CollapseSet::from_diagonals(vec![vec![0.0, 1.0, 2.0, 3.0]], 1.0).unwrap();
        assert_eq!(cs.dephasing_rate(0, 3), 4.5);
        assert_eq!(cs.total_intensity(), &[0.0, 1.0, 4.0, 9.0]);
        assert!(CollapseSet::from_diagonals(vec![], 1.0).is_err());
        assert!(CollapseSet::from_diagonals(vec![vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
    }
}

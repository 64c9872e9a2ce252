use statrs::function::erf::erfc;

use super::HilbertSpace;
use crate::error::{Error, Result};
use crate::kernel::SpatialGrid;

/// Mass-density observables `μ̂_j = Σ_i m_i φ_σ(x_j − x̂_i)` on the sites of
/// a field grid. Each `μ̂_j` is diagonal in the position basis, so it is
/// stored as one real vector over basis states.
#[derive(Debug, Clone)]
pub struct MassDensityFamily {
    grid: SpatialGrid,
    sigma: f64,
    dimension: usize,
    /// `[site][basis]`
    diagonals: Vec<Vec<f64>>,
    total_mass: f64,
    leakage_measured: f64,
    leakage_bound: f64,
}

/// Normalised isotropic Gaussian in `dim` dimensions.
pub fn mollifier(r2: f64, sigma: f64, dim: usize) -> f64 {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-(dim as f64) / 2.0);
    norm * (-r2 / (2.0 * sigma * sigma)).exp()
}

pub fn mass_density_family(
    space: &HilbertSpace,
    grid: &SpatialGrid,
    sigma: f64,
) -> Result<MassDensityFamily> {
    let h = grid.spacing();
    if !(sigma.is_finite() && sigma >= 0.5 * h) {
        return Err(Error::validation(
            "mollifier_sigma",
            format!(
                "σ = {sigma} cannot be resolved by lattice spacing {h}; need σ ≥ {}",
                0.5 * h
            ),
        ));
    }
    for (i, p) in space.particles().iter().enumerate() {
        if p.grid.dim() != grid.dim() {
            return Err(Error::validation(
                format!("particles[{i}].grid"),
                format!(
                    "dimension {} does not match field grid dimension {}",
                    p.grid.dim(),
                    grid.dim()
                ),
            ));
        }
    }
    let d = space.dimension();
    let n = grid.len();
    let w = grid.cell_weight();
    let mut diagonals = vec![vec![0.0; d]; n];
    let mut leakage_measured: f64 = 0.0;
    let mut leakage_bound: f64 = 0.0;
    for b in 0..d {
        let label = space.label(b);
        let mut bound_b = 0.0;
        for (p, &site) in space.particles().iter().zip(&label) {
            let x = p.grid.position(site);
            for (j, diag) in diagonals.iter_mut().enumerate() {
                let y = grid.position(j);
                let r2 = (0..3).map(|k| (y[k] - x[k]).powi(2)).sum::<f64>();
                diag[b] += p.mass * mollifier(r2, sigma, grid.dim());
            }
            bound_b += p.mass * normalization_bound(grid, x, sigma);
        }
        let integrated: f64 = diagonals.iter().map(|diag| w * diag[b]).sum();
        leakage_measured = leakage_measured.max((integrated - space.total_mass()).abs());
        leakage_bound = leakage_bound.max(bound_b);
    }
    // the bound is analytic; allow for rounding in the lattice sums
    let slack = 1e-12 * space.total_mass().max(1.0);
    if leakage_measured > leakage_bound + slack {
        return Err(Error::Numerical {
            context: "mass_density_family",
            reason: format!(
                "mass leakage {leakage_measured:e} exceeds its bound {leakage_bound:e}"
            ),
        });
    }
    Ok(MassDensityFamily {
        grid: grid.clone(),
        sigma,
        dimension: d,
        diagonals,
        total_mass: space.total_mass(),
        leakage_measured,
        leakage_bound,
    })
}

/// Bound on `|Σ_j w φ_σ(x_j − x) − 1|` for a single unit mass at `x`.
///
/// Per axis the infinite lattice sum differs from 1 by at most the Poisson
/// aliasing term `ε = 2 Σ_{k≥1} exp(−2π²σ²k²/h²)`, and the part of the
/// lattice missing beyond each edge is bounded by the Gaussian tail past
/// the outermost site. The axes multiply.
fn normalization_bound(grid: &SpatialGrid, x: [f64; 3], sigma: f64) -> f64 {
    let h = grid.spacing();
    let a = 2.0 * (std::f64::consts::PI * sigma / h).powi(2);
    let q = (-a).exp();
    let alias = 2.0 * q / (1.0 - q);
    let first = -grid.extent() + 0.5 * h;
    let last = grid.extent() - 0.5 * h;
    let tail = |gap: f64| {
        if gap < 0.0 {
            1.0
        } else {
            0.5 * erfc(gap / (sigma * std::f64::consts::SQRT_2))
        }
    };
    let mut prod = 1.0;
    for &xk in x.iter().take(grid.dim()) {
        prod *= 1.0 + alias + tail(xk - first) + tail(last - xk);
    }
    prod - 1.0
}

impl MassDensityFamily {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_sites(&self) -> usize {
        self.diagonals.len()
    }

    /// Diagonal of `μ̂_j` over basis states.
    pub fn site_diagonal(&self, site: usize) -> &[f64] {
        &self.diagonals[site]
    }

    /// Classical mass distribution `μ_b` of basis configuration `b`.
    pub fn configuration(&self, b: usize) -> Vec<f64> {
        self.diagonals.iter().map(|d| d[b]).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Largest `|Σ_j w μ_j(b) − M|` over basis states.
    pub fn leakage_measured(&self) -> f64 {
        self.leakage_measured
    }

    /// Analytic bound on the leakage, already multiplied by the masses.
    pub fn leakage_bound(&self) -> f64 {
        self.leakage_bound
    }
}

use rand::Rng;
use rand_distr::StandardNormal;

use super::{SpatialGrid, SpectralDecomposition};
use crate::error::{Error, Result};

/// One time step of the correlated noise field.
///
/// `channel_values[a] = √dt ξ_a` with independent standard normals, and
/// `site_values[j] = Σ_a √λ_a e_j(a) channel_values[a]`, so that
/// `E[site_j site_k] = G̃_jk dt` for the weighted kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub site_values: Vec<f64>,
    pub channel_values: Vec<f64>,
    pub dt: f64,
}

impl NoiseIncrement {
    /// Field increments `W(x_j, dt) = site_j / √w`, whose covariance is the
    /// raw kernel `g_jk dt`.
    pub fn field_values(&self, grid: &SpatialGrid) -> Vec<f64> {
        let s = grid.cell_weight().sqrt();
        self.site_values.iter().map(|v| v / s).collect()
    }
}

/// Fill `out` with independent `N(0, dt)` channel increments, consuming one
/// normal per channel in channel order.
pub fn channel_increments<R: Rng + ?Sized>(rng: &mut R, dt: f64, out: &mut [f64]) {
    let sd = dt.sqrt();
    for v in out.iter_mut() {
        let xi: f64 = rng.sample(StandardNormal);
        *v = sd * xi;
    }
}

/// Map channel increments onto lattice sites.
pub fn sites_from_channels(decomp: &SpectralDecomposition, channels: &[f64]) -> Vec<f64> {
    let e = decomp.eigenvectors();
    let mut out = vec![0.0; decomp.n_sites()];
    for (a, (&lam, &dw)) in decomp.eigenvalues().iter().zip(channels).enumerate() {
        let c = lam.sqrt() * dw;
        for (j, o) in out.iter_mut().enumerate() {
            *o += c * e[(j, a)];
        }
    }
    out
}

pub fn sample_noise_field<R: Rng + ?Sized>(
    decomp: &SpectralDecomposition,
    dt: f64,
    rng: &mut R,
) -> Result<NoiseIncrement> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(
            "dt",
            format!("must be positive, got {dt}"),
        ));
    }
    let mut channel_values = vec![0.0; decomp.rank()];
    channel_increments(rng, dt, &mut channel_values);
    let site_values = sites_from_channels(decomp, &channel_values);
    Ok(NoiseIncrement {
        site_values,
        channel_values,
        dt,
    })
}

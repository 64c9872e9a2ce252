use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ObservableSet;
use crate::error::{Error, Result};
use crate::numeric::CMatrix;
use crate::quantum_ops::CollapseSet;

/// `dt · max_b Σ_a ℓ_a(b)²` above which a coarse-step warning is logged.
pub const STABILITY_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyamaRenorm,
    MasterRk4,
}

/// Update rule of the density-matrix homodyne filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterForm {
    /// `ρ ← KρK†/tr` with `K = 1 + (−iH/ħ − ½Σ(L−m)²)dt + Σ(L−m)dI`; agrees
    /// with the additive form to Itô order, keeps ρ positive and reproduces
    /// the pure-state step exactly for pure input.
    #[default]
    Factored,
    /// `ρ + ℒ*(ρ)dt + Σ(Lρ + ρL − 2mρ)dI`, then Hermitian part and trace.
    Additive,
}

/// What an integrator keeps besides the observable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retain {
    /// Copies of the state at every recorded step.
    pub states: bool,
    /// The full measurement record.
    pub record: bool,
}

impl Default for Retain {
    fn default() -> Self {
        Retain {
            states: true,
            record: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub trajectory_index: u64,
    /// States and observables are recorded every `record_stride` steps,
    /// starting at `t = 0`.
    pub record_stride: usize,
    pub observables: ObservableSet,
    pub retain: Retain,
    pub filter_form: FilterForm,
}

impl IntegrationConfig {
    pub fn new(dt: f64, n_steps: usize, scheme: Scheme) -> Self {
        IntegrationConfig {
            dt,
            n_steps,
            scheme,
            seed: 0,
            trajectory_index: 0,
            record_stride: 1,
            observables: ObservableSet::default(),
            retain: Retain::default(),
            filter_form: FilterForm::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64, trajectory_index: u64) -> Self {
        self.seed = seed;
        self.trajectory_index = trajectory_index;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_observables(mut self, observables: ObservableSet) -> Self {
        self.observables = observables;
        self
    }

    pub fn with_retain(mut self, retain: Retain) -> Self {
        self.retain = retain;
        self
    }

    pub fn with_filter_form(mut self, form: FilterForm) -> Self {
        self.filter_form = form;
        self
    }

    pub fn validate(&self, expected: Scheme) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation(
                "run.dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::validation("run.record_stride", "must be at least 1"));
        }
        if self.scheme != expected {
            return Err(Error::validation(
                "run.scheme",
                format!(
                    "{:?} requested, this integrator uses {expected:?}",
                    self.scheme
                ),
            ));
        }
        Ok(())
    }

    /// Logs a warning when the step is coarse compared with the fastest
    /// dissipative or unitary time scale; returns the dissipative ratio.
    pub fn stability_check(&self, h: &CMatrix, cs: &CollapseSet) -> f64 {
        let ratio = self.dt * cs.max_intensity();
        if ratio > STABILITY_WARN {
            log::warn!(
                "dt · max Σ_a ℓ_a² = {ratio:.3e} exceeds {STABILITY_WARN}; the integrator may be inaccurate"
            );
        }
        // row-sum bound on the spectral radius of H
        let h_norm = (0..h.nrows())
            .map(|r| h.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let unitary = self.dt * h_norm / cs.hbar();
        if unitary > STABILITY_WARN {
            log::warn!("dt · ‖H‖/ħ = {unitary:.3e} exceeds {STABILITY_WARN}; the integrator may be inaccurate");
        }
        ratio
    }

    /// Time of step `s`.
    pub fn time(&self, s: usize) -> f64 {
        s as f64 * self.dt
    }

    pub fn rng(&self) -> ChaCha8Rng {
        trajectory_rng(self.seed, self.trajectory_index)
    }
}

/// Independent stream for trajectory `index`: the ChaCha8 key is derived
/// from `seed` and the 64-bit stream id is `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

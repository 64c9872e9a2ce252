//! Miniature acceptance suite with fixed seeds.

use std::fmt::Write as _;

use dpfilter_core::diagnostics::EnsembleSummary;
use dpfilter_core::dynamics::{
    filter_homodyne, homodyne_trajectory, master_evolve, run_ensemble, IntegrationConfig,
    QuantumState, RecordSource, Retain, Scheme, Unraveling,
};
use dpfilter_core::kernel::{
    build_grid, build_kernel, gamma_square_root_check, spectral_decompose, DecomposeOptions,
    Kernel, KernelFamily, PhysicalConstants, QuadratureSpec, SpatialGrid,
};
use dpfilter_core::numeric::{f17, trace_distance, CMatrix, C_ONE};
use dpfilter_core::quantum_ops::{
    build_space, collapse_set, dissipation_double_sum, hamiltonian, ito_correction_check,
    mass_density_family, CollapseSet, HamiltonianKind, HilbertSpace, MassDensityFamily, Operator,
    ParticleSpec, DEFAULT_DIM_CAP,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Deliberate defects for exercising the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the gravitational kernel in the dissipation check.
    GSign,
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "g-sign" => Ok(Fault::GSign),
            _ => Err(format!("unknown fault `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    #[serde(serialize_with = "f17::serialize")]
    pub value: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub threshold: f64,
    /// `le` when the value must not exceed the threshold, `ge` otherwise.
    pub comparison: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let op = if c.comparison == "le" { "<=" } else { ">=" };
            let _ = writeln!(
                s,
                "{:<6} {:<24} {:>12.4e} {op} {:e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "{} checks, {failed} failed", self.checks.len());
        s
    }
}

fn le(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name,
        value,
        threshold,
        comparison: "le",
        passed: value <= threshold,
    }
}

fn ge(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name,
        value,
        threshold,
        comparison: "ge",
        passed: value >= threshold,
    }
}

struct Line {
    space: HilbertSpace,
    space_family: MassDensityFamily,
    kernel: Kernel,
    cs: CollapseSet,
    constants: PhysicalConstants,
}

fn line(
    grid: &SpatialGrid,
    masses: &[f64],
    constants: PhysicalConstants,
) -> dpfilter_core::Result<Line> {
    let sigma = grid.spacing();
    let particles = masses
        .iter()
        .map(|&mass| ParticleSpec {
            mass,
            grid: grid.clone(),
        })
        .collect();
    let space = build_space(particles, DEFAULT_DIM_CAP)?;
    let family = mass_density_family(&space, grid, sigma)?;
    let kernel = build_kernel(grid, KernelFamily::NewtonianMollified { sigma }, constants)?;
    let decomp = spectral_decompose(&kernel, DecomposeOptions::default())?;
    let cs = collapse_set(&family, &kernel, &decomp, constants)?;
    Ok(Line {
        space,
        space_family: family,
        kernel,
        cs,
        constants,
    })
}

pub fn run_selftest(fault: Option<Fault>) -> dpfilter_core::Result<SelftestReport> {
    let mut checks = Vec::new();
    let constants = PhysicalConstants::new(1.0, 1.0)?;

    let sqrt = gamma_square_root_check(constants, &[1.0], QuadratureSpec::default())?;
    checks.push(le("square_root", sqrt.max_residual(), 1e-6));

    // kernel PSD and Mercer reconstruction on a 1D lattice
    let grid = build_grid(1, 16, 4.0)?;
    let families = [
        KernelFamily::NewtonianMollified {
            sigma: grid.spacing(),
        },
        KernelFamily::Gaussian { length: 1.0 },
        KernelFamily::Exponential { length: 1.0 },
    ];
    let mut min_eig = f64::INFINITY;
    let mut clip: f64 = 0.0;
    let mut mercer: f64 = 0.0;
    for fam in families {
        let k = build_kernel(&grid, fam, constants)?;
        let d = spectral_decompose(&k, DecomposeOptions::default())?;
        min_eig = d.eigenvalues().iter().copied().fold(min_eig, f64::min);
        clip = clip.max(k.clipped_mass() / k.trace());
        mercer = mercer.max(d.reconstruction_error(&k) / (grid.cell_weight() * k.matrix().amax()));
    }
    checks.push(ge("kernel_psd", min_eig, 0.0));
    checks.push(le("kernel_clipped_mass", clip, 1e-6));
    checks.push(le("mercer_reconstruction", mercer, 1e-10));

    // dissipation positivity from the double sum over the kernel
    let small = build_grid(1, 6, 3.0)?;
    let s = line(&small, &[1.0], constants)?;
    let site_matrix = match fault {
        Some(Fault::GSign) => -s.kernel.weighted(),
        None => s.kernel.weighted().clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let m = CMatrix::from_fn(6, 6, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let dis = dissipation_double_sum(
            &Operator::new(m)?,
            &s.space_family,
            &site_matrix,
            s.constants,
        )?;
        worst = worst.min(dis.min_eigenvalue);
    }
    checks.push(ge("dissipation_psd", worst, -1e-10));

    // Itô correction on two particles
    let pair = line(&build_grid(1, 6, 3.0)?, &[1.0, 0.7], constants)?;
    let ito = ito_correction_check(&pair.cs, &pair.space_family, &pair.kernel, constants)?;
    checks.push(le("ito_identity", ito.relative_deviation(), 1e-10));

    // pure state and density filter on shared noise
    let s = line(
        &build_grid(1, 5, 2.5)?,
        &[1.0],
        PhysicalConstants::new(2.0, 1.0)?,
    )?;
    let h = hamiltonian(
        &s.space,
        &HamiltonianKind::Free {
            hopping: 0.5,
            periodic: false,
        },
    )?;
    let psi =
        QuantumState::superposition(5, &[(0, C_ONE), (2, C_ONE), (4, Complex64::new(0.3, 0.4))])?;
    let cfg = IntegrationConfig::new(1e-3, 500, Scheme::EulerMaruyamaRenorm).with_seed(5, 0);
    let pure = homodyne_trajectory(&psi, &h, &s.cs, &cfg)?;
    let mixed = filter_homodyne(
        &QuantumState::Mixed(psi.density()),
        RecordSource::FreshNoise,
        &h,
        &s.cs,
        &cfg,
    )?;
    let gap = pure
        .states
        .iter()
        .zip(&mixed.states)
        .map(|(a, b)| trace_distance(&a.density(), &b.density()))
        .fold(0.0, f64::max);
    checks.push(le("pure_density_equivalence", gap, 1e-8));

    // small-N unravelings against the master equation
    let grid4 = build_grid(1, 4, 2.0)?;
    let s = line(&grid4, &[1.0], PhysicalConstants::new(2.0, 1.0)?)?;
    let h = hamiltonian(
        &s.space,
        &HamiltonianKind::Free {
            hopping: 1.0,
            periodic: false,
        },
    )?;
    let psi = QuantumState::superposition(4, &[(0, C_ONE), (3, C_ONE)])?;
    let cfg = IntegrationConfig::new(1e-3, 500, Scheme::EulerMaruyamaRenorm)
        .with_seed(9, 0)
        .with_stride(50);
    let reference = master_evolve(
        &psi,
        &h,
        &s.cs,
        &IntegrationConfig::new(1e-4, 5000, Scheme::MasterRk4)
            .with_stride(500)
            .with_retain(Retain {
                states: true,
                record: false,
            }),
    )?;
    for (name, kind) in [
        ("unraveling_homodyne", Unraveling::Homodyne),
        ("unraveling_counting", Unraveling::Counting),
    ] {
        let run = run_ensemble(kind, &psi, &h, &s.cs, &cfg, 200, false)?;
        let sum = EnsembleSummary::from_run(&run, Some(&reference))?;
        checks.push(le(name, sum.max_trace_distance(), 0.15));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(SelftestReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_names_parse() {
        assert_eq!("g-sign".parse::<Fault>(), Ok(Fault::GSign));
        assert!("other".parse::<Fault>().is_err());
    }
}

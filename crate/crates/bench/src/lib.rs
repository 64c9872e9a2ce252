//! Shared fixtures for the benchmarks in `benches/`.

use dpfilter_core::dynamics::QuantumState;
use dpfilter_core::kernel::{
    build_grid, build_kernel, spectral_decompose, DecomposeOptions, Kernel, KernelFamily,
    PhysicalConstants, SpatialGrid, SpectralDecomposition,
};
use dpfilter_core::quantum_ops::{
    build_space, collapse_set, hamiltonian, mass_density_family, CollapseSet, HamiltonianKind,
    Operator, ParticleSpec, DEFAULT_DIM_CAP,
};
use dpfilter_core::Result;
use num_complex::Complex64;

/// One particle on a 1D lattice with a mollified Newtonian kernel.
pub struct Setup {
    pub grid: SpatialGrid,
    pub kernel: Kernel,
    pub decomp: SpectralDecomposition,
    pub collapse: CollapseSet,
    pub hamiltonian: Operator,
    pub psi0: QuantumState,
}

pub fn line_kernel(n: usize) -> Result<(SpatialGrid, Kernel)> {
    let grid = build_grid(1, n, n as f64 / 4.0)?;
    let k = build_kernel(
        &grid,
        KernelFamily::NewtonianMollified {
            sigma: grid.spacing(),
        },
        PhysicalConstants::default(),
    )?;
    Ok((grid, k))
}

pub fn line_setup(n: usize) -> Result<Setup> {
    let (grid, kernel) = line_kernel(n)?;
    let decomp = spectral_decompose(&kernel, DecomposeOptions::default())?;
    let space = build_space(
        vec![ParticleSpec {
            mass: 1.0,
            grid: grid.clone(),
        }],
        DEFAULT_DIM_CAP,
    )?;
    let fam = mass_density_family(&space, &grid, grid.spacing())?;
    let collapse = collapse_set(&fam, &kernel, &decomp, PhysicalConstants::default())?;
    let hamiltonian = hamiltonian(
        &space,
        &HamiltonianKind::Free {
            hopping: 0.5,
            periodic: false,
        },
    )?;
    let one = Complex64::new(1.0, 0.0);
    let psi0 = QuantumState::superposition(n, &[(n / 4, one), (3 * n / 4, one)])?;
    Ok(Setup {
        grid,
        kernel,
        decomp,
        collapse,
        hamiltonian,
        psi0,
    })
}

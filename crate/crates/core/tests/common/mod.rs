#![allow(dead_code)]

use dpfilter_core::kernel::{
    build_grid, build_kernel, spectral_decompose, DecomposeOptions, Kernel, KernelFamily,
    PhysicalConstants, SpatialGrid, SpectralDecomposition,
};
use dpfilter_core::numeric::CMatrix;
use dpfilter_core::quantum_ops::{
    build_space, collapse_set, mass_density_family, CollapseSet, HilbertSpace, MassDensityFamily,
    ParticleSpec, DEFAULT_DIM_CAP,
};
use num_complex::Complex64;
use rand::Rng;

pub struct Setup {
    pub grid: SpatialGrid,
    pub space: HilbertSpace,
    pub family: MassDensityFamily,
    pub kernel: Kernel,
    pub decomp: SpectralDecomposition,
    pub cs: CollapseSet,
    pub constants: PhysicalConstants,
}

/// Particles of the given masses on a shared 1D lattice with a mollified
/// Newtonian kernel.
pub fn newtonian_line(
    n: usize,
    extent: f64,
    masses: &[f64],
    sigma: f64,
    constants: PhysicalConstants,
) -> Setup {
    let grid = build_grid(1, n, extent).unwrap();
    setup(
        grid,
        masses,
        sigma,
        KernelFamily::NewtonianMollified { sigma },
        constants,
    )
}

pub fn setup(
    grid: SpatialGrid,
    masses: &[f64],
    sigma: f64,
    family: KernelFamily,
    constants: PhysicalConstants,
) -> Setup {
    let particles = masses
        .iter()
        .map(|&mass| ParticleSpec {
            mass,
            grid: grid.clone(),
        })
        .collect();
    let space = build_space(particles, DEFAULT_DIM_CAP).unwrap();
    let mass = mass_density_family(&space, &grid, sigma).unwrap();
    let kernel = build_kernel(&grid, family, constants).unwrap();
    let decomp = spectral_decompose(&kernel, DecomposeOptions::default()).unwrap();
    let cs = collapse_set(&mass, &kernel, &decomp, constants).unwrap();
    Setup {
        grid,
        space,
        family: mass,
        kernel,
        decomp,
        cs,
        constants,
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let m = random_matrix(rng, d);
    let rho = &m * m.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Dense `Σ_a L_a X L_a`, `Σ_a L_a²` from the channel diagonals.
pub fn dense_channels(cs: &CollapseSet) -> Vec<CMatrix> {
    (0..cs.rank())
        .map(|a| cs.operator(a).matrix().clone())
        .collect()
}

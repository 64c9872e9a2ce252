use dpfilter_core::kernel::{
    build_grid, build_kernel, gamma_square_root_check, rkhs_pairing_check, sample_noise_field,
    self_energy, spectral_decompose, DecomposeOptions, Kernel, KernelFamily, PhysicalConstants,
    QuadratureSpec,
};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

// Potential of two Gaussian blobs of width σ at distance r: the relative
// displacement is Gaussian with variance 2σ² per axis, and the shell
// theorem turns the 3D average of 1/|x| into a radial integral.
fn smeared_newton(r: f64, sigma: f64, g: f64) -> f64 {
    let s2 = 2.0 * sigma * sigma;
    let density = |s: f64| {
        4.0 * std::f64::consts::PI
            * s
            * s
            * (2.0 * std::f64::consts::PI * s2).powf(-1.5)
            * (-s * s / (2.0 * s2)).exp()
    };
    let inner = simpson(|s| density(s) / r, 0.0, r, 4000);
    let outer = simpson(
        |s| if s == 0.0 { 0.0 } else { density(s) / s },
        r,
        r + 40.0 * sigma,
        8000,
    );
    g * (inner + outer)
}

#[test]
fn mollified_newtonian_matches_blob_potential() {
    for &(r, sigma) in &[(0.3, 0.2), (1.0, 0.25), (2.5, 0.4), (0.05, 0.5)] {
        let want = smeared_newton(r, sigma, 1.7);
        let got = KernelFamily::NewtonianMollified { sigma }
            .pair_value(r, 1.7)
            .unwrap();
        assert!(
            ((got - want) / want).abs() < 1e-6,
            "r={r} σ={sigma}: {got} vs {want}"
        );
    }
}

fn families(extent: f64, spacing: f64) -> Vec<KernelFamily> {
    vec![
        KernelFamily::NewtonianMollified { sigma: spacing },
        KernelFamily::Gaussian {
            length: extent / 10.0,
        },
        KernelFamily::Gaussian {
            length: extent / 3.0,
        },
        KernelFamily::Exponential {
            length: extent / 4.0,
        },
    ]
}

fn check_mercer(k: &Kernel) {
    let d = spectral_decompose(k, DecomposeOptions::default()).unwrap();
    let w = k.grid().cell_weight();
    let gmax = k.matrix().amax();
    assert!(d.eigenvalues().iter().all(|&v| v >= 0.0));
    // recomputing the spectrum only adds rounding noise
    let eig = SymmetricEigen::new(k.weighted().clone());
    assert!(eig.eigenvalues.min() >= -1e-13 * k.trace());
    assert!(
        d.reconstruction_error(k) / w <= 1e-10 * gmax,
        "{:?}",
        k.family()
    );
    assert!(k.clipped_mass() <= 1e-6 * k.trace());
    assert!(d.orthonormality_error() < 1e-12);
}

#[test]
fn mercer_expansion_on_line_and_cube() {
    let line = build_grid(1, 32, 4.0).unwrap();
    for fam in families(4.0, line.spacing()) {
        check_mercer(&build_kernel(&line, fam, PhysicalConstants::default()).unwrap());
    }
    let cube = build_grid(3, 5, 2.0).unwrap();
    for fam in families(2.0, cube.spacing()) {
        check_mercer(&build_kernel(&cube, fam, PhysicalConstants::default()).unwrap());
    }
}

#[test]
fn self_energy_equals_eigen_expansion() {
    let grid = build_grid(2, 6, 3.0).unwrap();
    let c = PhysicalConstants::new(2.0, 1.0).unwrap();
    let k = build_kernel(&grid, KernelFamily::NewtonianMollified { sigma: 0.4 }, c).unwrap();
    let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mu: Vec<f64> = (0..grid.len())
        .map(|_| rng.random_range(0.0..2.0))
        .collect();
    let w = grid.cell_weight();
    let n = grid.len();
    let mut direct = 0.0;
    for j in 0..n {
        for l in 0..n {
            direct += w * w * mu[j] * k.matrix()[(j, l)] * mu[l];
        }
    }
    let e = d.eigenvectors();
    let expansion: f64 = (0..d.rank())
        .map(|a| {
            let proj: f64 = (0..n).map(|j| e[(j, a)] * w.sqrt() * mu[j]).sum();
            d.eigenvalues()[a] * proj * proj
        })
        .sum();
    let got = self_energy(&mu, &k).unwrap();
    assert!(((got - direct) / direct).abs() < 1e-12);
    assert!(((got - expansion) / direct).abs() < 1e-10);
}

#[test]
fn sampled_covariance_within_wishart_bounds() {
    let n_draws = 100_000;
    let dt = 0.01;
    let check = |cov: &DMatrix<f64>, samples: &dyn Fn(&mut ChaCha8Rng) -> Vec<f64>, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = cov.nrows();
        let mut acc = DMatrix::<f64>::zeros(m, m);
        for _ in 0..n_draws {
            let x = samples(&mut rng);
            for j in 0..m {
                for l in 0..m {
                    acc[(j, l)] += x[j] * x[l];
                }
            }
        }
        let s = acc / n_draws as f64;
        for j in 0..m {
            for l in 0..m {
                let want = cov[(j, l)] * dt;
                // Wishart: Var(S_jl) = (C_jj C_ll + C_jl²) dt² / N
                let sd = ((cov[(j, j)] * cov[(l, l)] + cov[(j, l)].powi(2)) / n_draws as f64)
                    .sqrt()
                    * dt;
                assert!(
                    (s[(j, l)] - want).abs() <= 5.0 * sd,
                    "({j},{l}): {} vs {want} (sd {sd})",
                    s[(j, l)]
                );
            }
        }
    };
    let g = vec![vec![2.0, 0.6], vec![0.6, 1.0]];
    let cov = DMatrix::from_fn(2, 2, |j, l| g[j][l]);
    // unit cell weight: site values carry g dt directly
    let unit = build_grid(1, 2, 1.0).unwrap();
    assert_eq!(unit.cell_weight(), 1.0);
    let k = build_kernel(
        &unit,
        KernelFamily::Custom { matrix: g.clone() },
        PhysicalConstants::default(),
    )
    .unwrap();
    let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
    check(
        &cov,
        &|rng| sample_noise_field(&d, dt, rng).unwrap().site_values,
        21,
    );
    // on a finer cell the field form keeps the raw covariance
    let fine = build_grid(1, 2, 0.25).unwrap();
    let k = build_kernel(
        &fine,
        KernelFamily::Custom { matrix: g },
        PhysicalConstants::default(),
    )
    .unwrap();
    let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
    check(
        &cov,
        &|rng| sample_noise_field(&d, dt, rng).unwrap().field_values(&fine),
        22,
    );
}

#[test]
fn rkhs_pairing_on_random_vectors() {
    let grid = build_grid(1, 16, 3.0).unwrap();
    let k = build_kernel(
        &grid,
        KernelFamily::NewtonianMollified { sigma: 0.3 },
        PhysicalConstants::default(),
    )
    .unwrap();
    let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut v = || -> Vec<Complex64> {
        (0..16)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let (phi, psi) = (v(), v());
    let p = rkhs_pairing_check(&phi, &psi, &k, &d).unwrap();
    let w = grid.cell_weight();
    let mut want = Complex64::new(0.0, 0.0);
    for j in 0..16 {
        for l in 0..16 {
            want += phi[j].conj() * psi[l] * (w * w * k.matrix()[(j, l)]);
        }
    }
    assert!((p.lhs - want).norm() < 1e-10 * want.norm());
    assert!(p.deviation < 1e-10 * want.norm());
}

#[test]
fn square_root_integrals_at_default_quadrature() {
    let rep = gamma_square_root_check(
        PhysicalConstants::new(3.0, 1.0).unwrap(),
        &[0.5, 1.0, 2.0],
        QuadratureSpec::default(),
    )
    .unwrap();
    assert!(rep.passes(1e-6), "{}", rep.to_table());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernels_are_symmetric_and_psd(n in 4usize..20, extent in 0.5f64..5.0, scale in 0.5f64..4.0, fam in 0usize..3) {
        let grid = build_grid(1, n, extent).unwrap();
        let family = match fam {
            0 => KernelFamily::NewtonianMollified { sigma: grid.spacing() * scale },
            1 => KernelFamily::Gaussian { length: extent / (2.0 * scale) },
            _ => KernelFamily::Exponential { length: extent / scale },
        };
        let k = build_kernel(&grid, family, PhysicalConstants::default()).unwrap();
        let m = k.matrix();
        prop_assert_eq!(m, &m.transpose());
        let d = spectral_decompose(&k, DecomposeOptions::default()).unwrap();
        prop_assert!(d.eigenvalues().iter().all(|&v| v >= 0.0));
        prop_assert!(d.eigenvalues().windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(d.reconstruction_error(&k) <= 1e-10 * k.weighted().amax());
    }
}

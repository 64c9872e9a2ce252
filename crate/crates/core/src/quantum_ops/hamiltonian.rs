use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HilbertSpace, Operator};
use crate::error::{Error, Result};
use crate::numeric::CMatrix;

fn one() -> f64 {
    1.0
}

/// Single-particle Hamiltonians, summed over particles. The kinetic part is
/// the nearest-neighbour lattice Laplacian `−t (shift + shiftᵀ − 2)` along
/// every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianKind {
    Zero,
    Free {
        #[serde(default = "one")]
        hopping: f64,
        #[serde(default)]
        periodic: bool,
    },
    /// Kinetic term plus `½ ω² |x|²`.
    Harmonic {
        omega: f64,
        #[serde(default = "one")]
        hopping: f64,
    },
    /// Kinetic term plus `V₀ ((x₀² − a²)/a²)²` along the first axis, minima
    /// at `x₀ = ±a` with `a = separation / 2`.
    DoubleWell {
        barrier: f64,
        separation: f64,
        #[serde(default = "one")]
        hopping: f64,
    },
}

impl HamiltonianKind {
    fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, strict: bool| {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::validation(
                    format!("hamiltonian.{name}"),
                    format!("invalid value {v}"),
                ))
            }
        };
        match *self {
            HamiltonianKind::Zero => Ok(()),
            HamiltonianKind::Free { hopping, .. } => check("hopping", hopping, false),
            HamiltonianKind::Harmonic { omega, hopping } => {
                check("omega", omega, false)?;
                check("hopping", hopping, false)
            }
            HamiltonianKind::DoubleWell {
                barrier,
                separation,
                hopping,
            } => {
                check("barrier", barrier, false)?;
                check("separation", separation, true)?;
                check("hopping", hopping, false)
            }
        }
    }

    fn hopping(&self) -> (f64, bool) {
        match *self {
            HamiltonianKind::Zero => (0.0, false),
            HamiltonianKind::Free { hopping, periodic } => (hopping, periodic),
            HamiltonianKind::Harmonic { hopping, .. }
            | HamiltonianKind::DoubleWell { hopping, .. } => (hopping, false),
        }
    }

    fn potential(&self, x: [f64; 3]) -> f64 {
        match *self {
            HamiltonianKind::Harmonic { omega, .. } => {
                0.5 * omega * omega * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
            }
            HamiltonianKind::DoubleWell {
                barrier,
                separation,
                ..
            } => {
                let a2 = 0.25 * separation * separation;
                barrier * ((x[0] * x[0] - a2) / a2).powi(2)
            }
            _ => 0.0,
        }
    }
}

pub fn hamiltonian(space: &HilbertSpace, kind: &HamiltonianKind) -> Result<Operator> {
    kind.validate()?;
    let d = space.dimension();
    let mut h = CMatrix::zeros(d, d);
    if matches!(kind, HamiltonianKind::Zero) {
        return Operator::new(h);
    }
    let (t, periodic) = kind.hopping();
    for b in 0..d {
        let label = space.label(b);
        for (i, p) in space.particles().iter().enumerate() {
            let grid = &p.grid;
            let site = label[i];
            let n = grid.n_per_axis();
            let axes = grid.axis_indices(site);
            let mut onsite = kind.potential(grid.position(site));
            for k in 0..grid.dim() {
                // open boundaries drop the missing neighbour's −1 and its +1 on the diagonal
                for step in [-1isize, 1] {
                    let raw = axes[k] as isize + step;
                    let idx = if (0..n as isize).contains(&raw) {
                        raw as usize
                    } else if periodic && n > 2 {
                        raw.rem_euclid(n as isize) as usize
                    } else {
                        continue;
                    };
                    onsite += t;
                    let mut nb = axes;
                    nb[k] = idx;
                    let mut nl = label.clone();
                    nl[i] = grid.site_index(nb);
                    let c = space.index(&nl)?;
                    h[(b, c)] -= Complex64::new(t, 0.0);
                }
            }
            h[(b, b)] += Complex64::new(onsite, 0.0);
        }
    }
    Operator::new(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_grid;
    use crate::quantum_ops::{build_space, ParticleSpec, DEFAULT_DIM_CAP};

    fn space(dim: usize, n: usize, extent: f64, particles: usize) -> HilbertSpace {
        let grid = build_grid(dim, n, extent).unwrap();
        build_space(
            vec![ParticleSpec { mass: 1.0, grid }; particles],
            DEFAULT_DIM_CAP,
        )
        .unwrap()
    }

    fn re(op: &Operator) -> Vec<f64> {
        op.iter().map(|z| z.re).collect()
    }

    #[test]
    fn zero_and_free_stencil() {
        let s = space(1, 4, 2.0, 1);
        assert!(hamiltonian(&s, &HamiltonianKind::Zero)
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
        let h = hamiltonian(
            &s,
            &HamiltonianKind::Free {
                hopping: 1.0,
                periodic: false,
            },
        )
        .unwrap();
        #[rustfmt::skip]
        let want = [
            1.0, -1.0, 0.0, 0.0,
            -1.0, 2.0, -1.0, 0.0,
            0.0, -1.0, 2.0, -1.0,
            0.0, 0.0, -1.0, 1.0,
        ];
        assert_eq!(re(&h), want.to_vec());
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn periodic_ring() {
        let s = space(1, 4, 2.0, 1);
        let h = hamiltonian(
            &s,
            &HamiltonianKind::Free {
                hopping: 0.5,
                periodic: true,
            },
        )
        .unwrap();
        assert_eq!(h[(0, 3)].re, -0.5);
        assert!((0..4).all(|b| h[(b, b)].re == 1.0));
    }

    #[test]
    fn harmonic_adds_potential() {
        let s = space(1, 6, 3.0, 1);
        let free = hamiltonian(
            &s,
            &HamiltonianKind::Free {
                hopping: 1.0,
                periodic: false,
            },
        )
        .unwrap();
        let ho = hamiltonian(
            &s,
            &HamiltonianKind::Harmonic {
                omega: 2.0,
                hopping: 1.0,
            },
        )
        .unwrap();
        let grid = &s.particles()[0].grid;
        for b in 0..6 {
            let x = grid.position(b)[0];
            assert!((ho[(b, b)].re - free[(b, b)].re - 2.0 * x * x).abs() < 1e-14);
            for c in 0..6 {
                if b != c {
                    assert_eq!(ho[(b, c)], free[(b, c)]);
                }
            }
        }
    }

    #[test]
    fn double_well_minima_and_products() {
        let s = space(1, 8, 4.0, 1);
        let h = hamiltonian(
            &s,
            &HamiltonianKind::DoubleWell {
                barrier: 3.0,
                separation: 5.0,
                hopping: 0.0,
            },
        )
        .unwrap();
        // sites at ±2.5 sit in the wells, the origin-adjacent sites are near the barrier
        assert!(h[(1, 1)].re.abs() < 1e-14 && h[(6, 6)].re.abs() < 1e-14);
        assert!(h[(3, 3)].re > 2.0);

        let two = space(1, 3, 1.5, 2);
        let h2 = hamiltonian(
            &two,
            &HamiltonianKind::Free {
                hopping: 1.0,
                periodic: false,
            },
        )
        .unwrap();
        assert!(h2.is_hermitian(1e-12));
        // hopping of the second particle leaves the first untouched
        assert_eq!(h2[(0, 1)].re, -1.0);
        assert_eq!(h2[(0, 3)].re, -1.0);
        assert_eq!(h2[(0, 4)].re, 0.0);
        assert_eq!(h2[(0, 0)].re, 2.0);

        let plane = space(2, 3, 1.5, 1);
        let hp = hamiltonian(
            &plane,
            &HamiltonianKind::Free {
                hopping: 1.0,
                periodic: false,
            },
        )
        .unwrap();
        assert_eq!(hp[(4, 4)].re, 4.0);
        assert_eq!(hp[(0, 0)].re, 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = space(1, 4, 2.0, 1);
        assert!(hamiltonian(
            &s,
            &HamiltonianKind::Harmonic {
                omega: f64::NAN,
                hopping: 1.0
            }
        )
        .is_err());
        assert!(hamiltonian(
            &s,
            &HamiltonianKind::DoubleWell {
                barrier: 1.0,
                separation: 0.0,
                hopping: 1.0
            }
        )
        .is_err());
        let parsed: std::result::Result<HamiltonianKind, _> =
            serde_json::from_str(r#"{"kind":"quartic"}"#);
        assert!(parsed.is_err());
    }
}

use crate::error::{Error, Result};
use crate::kernel::SpatialGrid;

/// Largest Hilbert-space dimension allowed by default.
pub const DEFAULT_DIM_CAP: usize = 1024;

/// A distinguishable particle hopping on its own lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec {
    pub mass: f64,
    pub grid: SpatialGrid,
}

/// Tensor product of single-particle position spaces.
///
/// Basis index `b` is mixed-radix in the particles' site indices, first
/// particle slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertSpace {
    particles: Vec<ParticleSpec>,
    dimension: usize,
}

pub fn build_space(particles: Vec<ParticleSpec>, cap: usize) -> Result<HilbertSpace> {
    if particles.is_empty() {
        return Err(Error::validation(
            "particles",
            "at least one particle is required",
        ));
    }
    for (i, p) in particles.iter().enumerate() {
        if !(p.mass >= 0.0 && p.mass.is_finite()) {
            return Err(Error::validation(
                format!("particles[{i}].mass"),
                format!("must be non-negative, got {}", p.mass),
            ));
        }
    }
    let mut dimension: usize = 1;
    for p in &particles {
        dimension = dimension.saturating_mul(p.grid.len());
    }
    if dimension > cap {
        return Err(Error::Sizing {
            what: "Hilbert space",
            requested: dimension,
            cap,
            hint: "use fewer particles or coarser particle grids",
        });
    }
    Ok(HilbertSpace {
        particles,
        dimension,
    })
}

impl HilbertSpace {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        &self.particles
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    /// Site index of every particle in basis state `b`.
    pub fn label(&self, b: usize) -> Vec<usize> {
        let mut out = vec![0; self.particles.len()];
        let mut rem = b;
        for (i, p) in self.particles.iter().enumerate().rev() {
            out[i] = rem % p.grid.len();
            rem /= p.grid.len();
        }
        out
    }

    pub fn index(&self, label: &[usize]) -> Result<usize> {
        if label.len() != self.particles.len() {
            return Err(Error::Dimension {
                context: "basis label",
                expected: self.particles.len(),
                got: label.len(),
            });
        }
        let mut b = 0;
        for (p, &s) in self.particles.iter().zip(label) {
            if s >= p.grid.len() {
                return Err(Error::validation(
                    "basis label",
                    format!("site {s} out of range"),
                ));
            }
            b = b * p.grid.len() + s;
        }
        Ok(b)
    }

    /// Position of particle `i` in basis state `b`.
    pub fn particle_position(&self, b: usize, i: usize) -> [f64; 3] {
        let label = self.label(b);
        self.particles[i].grid.position(label[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_grid;

    fn particle(n: usize) -> ParticleSpec {
        ParticleSpec {
            mass: 1.0,
            grid: build_grid(1, n, 1.0).unwrap(),
        }
    }

    #[test]
    fn dimensions_and_labels() {
        assert_eq!(
            build_space(vec![particle(8)], DEFAULT_DIM_CAP)
                .unwrap()
                .dimension(),
            8
        );
        let s = build_space(vec![particle(8), particle(4)], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dimension(), 32);
        for b in 0..32 {
            let l = s.label(b);
            assert_eq!(l, vec![b / 4, b % 4]);
            assert_eq!(s.index(&l).unwrap(), b);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_space(vec![particle(40), particle(40)], DEFAULT_DIM_CAP).unwrap_err();
        assert!(matches!(
            err,
            Error::Sizing {
                requested: 1600,
                cap: 1024,
                ..
            }
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_space(vec![], DEFAULT_DIM_CAP).is_err());
        let mut p = particle(4);
        p.mass = -1.0;
        assert!(build_space(vec![p], DEFAULT_DIM_CAP).is_err());
        let s = build_space(vec![particle(4)], DEFAULT_DIM_CAP).unwrap();
        assert!(s.index(&[4]).is_err());
        assert!(s.index(&[0, 0]).is_err());
    }
}

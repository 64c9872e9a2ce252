use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StateView;
use crate::error::{Error, Result};
use crate::quantum_ops::HilbertSpace;

/// Scalar diagnostics recorded along a trajectory.
///
/// The textual form is used in configs and as CSV column names:
/// `trace`, `purity`, `x_mean[:i[:k]]`, `x_var[:i]`, `coherence:b:c`,
/// `population:b`. Particle `i` and axis `k` default to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Observable {
    Trace,
    Purity,
    /// `⟨x_k⟩` of particle `i`.
    PositionMean {
        particle: usize,
        axis: usize,
    },
    /// `Σ_k Var(x_k)` of particle `i`.
    PositionVariance {
        particle: usize,
    },
    /// `|⟨b|ρ|c⟩|`.
    Coherence(usize, usize),
    Population(usize),
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Observable::Trace => write!(f, "trace"),
            Observable::Purity => write!(f, "purity"),
            Observable::PositionMean {
                particle: 0,
                axis: 0,
            } => write!(f, "x_mean"),
            Observable::PositionMean { particle, axis: 0 } => write!(f, "x_mean:{particle}"),
            Observable::PositionMean { particle, axis } => write!(f, "x_mean:{particle}:{axis}"),
            Observable::PositionVariance { particle: 0 } => write!(f, "x_var"),
            Observable::PositionVariance { particle } => write!(f, "x_var:{particle}"),
            Observable::Coherence(b, c) => write!(f, "coherence:{b}:{c}"),
            Observable::Population(b) => write!(f, "population:{b}"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation("outputs.observables", format!("unknown observable `{s}`"));
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("");
        let args: Vec<usize> = parts
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(match (head, args.as_slice()) {
            ("trace", []) => Observable::Trace,
            ("purity", []) => Observable::Purity,
            ("x_mean", []) => Observable::PositionMean {
                particle: 0,
                axis: 0,
            },
            ("x_mean", [i]) => Observable::PositionMean {
                particle: *i,
                axis: 0,
            },
            ("x_mean", [i, k]) => Observable::PositionMean {
                particle: *i,
                axis: *k,
            },
            ("x_var", []) => Observable::PositionVariance { particle: 0 },
            ("x_var", [i]) => Observable::PositionVariance { particle: *i },
            ("coherence", [b, c]) => Observable::Coherence(*b, *c),
            ("population", [b]) => Observable::Population(*b),
            _ => return Err(bad()),
        })
    }
}

impl TryFrom<String> for Observable {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Evaluator {
    Trace,
    Purity,
    Diagonal(Vec<f64>),
    /// per-axis `(x, x²)` diagonals
    Variance(Vec<(Vec<f64>, Vec<f64>)>),
    Coherence(usize, usize),
    Population(usize),
}

/// Observables checked against a Hilbert space and ready to evaluate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSet {
    names: Vec<String>,
    evaluators: Vec<Evaluator>,
}

impl ObservableSet {
    pub fn resolve(list: &[Observable], space: &HilbertSpace) -> Result<Self> {
        let d = space.dimension();
        let n_particles = space.particles().len();
        let check_basis = |b: usize| {
            if b < d {
                Ok(())
            } else {
                Err(Error::validation(
                    "outputs.observables",
                    format!("basis index {b} out of range for D = {d}"),
                ))
            }
        };
        let check_particle = |i: usize| {
            if i < n_particles {
                Ok(())
            } else {
                Err(Error::validation(
                    "outputs.observables",
                    format!("no particle {i}"),
                ))
            }
        };
        let coordinate = |i: usize, k: usize| -> Vec<f64> {
            (0..d).map(|b| space.particle_position(b, i)[k]).collect()
        };
        let mut evaluators = Vec::with_capacity(list.len());
        for o in list {
            evaluators.push(match *o {
                Observable::Trace => Evaluator::Trace,
                Observable::Purity => Evaluator::Purity,
                Observable::PositionMean { particle, axis } => {
                    check_particle(particle)?;
                    if axis >= space.particles()[particle].grid.dim() {
                        return Err(Error::validation(
                            "outputs.observables",
                            format!("axis {axis} out of range"),
                        ));
                    }
                    Evaluator::Diagonal(coordinate(particle, axis))
                }
                Observable::PositionVariance { particle } => {
                    check_particle(particle)?;
                    let axes = (0..space.particles()[particle].grid.dim())
                        .map(|k| {
                            let x = coordinate(particle, k);
                            let x2 = x.iter().map(|v| v * v).collect();
                            (x, x2)
                        })
                        .collect();
                    Evaluator::Variance(axes)
                }
                Observable::Coherence(b, c) => {
                    check_basis(b)?;
                    check_basis(c)?;
                    Evaluator::Coherence(b, c)
                }
                Observable::Population(b) => {
                    check_basis(b)?;
                    Evaluator::Population(b)
                }
            });
        }
        Ok(ObservableSet {
            names: list.iter().map(|o| o.to_string()).collect(),
            evaluators,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn evaluate(&self, state: StateView<'_>, out: &mut Vec<f64>) {
        for e in &self.evaluators {
            out.push(match e {
                Evaluator::Trace => state.trace(),
                Evaluator::Purity => state.purity(),
                Evaluator::Diagonal(x) => state.expect_diagonal(x),
                Evaluator::Variance(axes) => axes
                    .iter()
                    .map(|(x, x2)| state.expect_diagonal(x2) - state.expect_diagonal(x).powi(2))
                    .sum(),
                Evaluator::Coherence(b, c) => state.element(*b, *c).norm(),
                Evaluator::Population(b) => state.population(*b),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::QuantumState;
    use crate::kernel::build_grid;
    use crate::quantum_ops::{build_space, ParticleSpec, DEFAULT_DIM_CAP};
    use proptest::prelude::*;

    #[test]
    fn evaluates_on_superposition() {
        let grid = build_grid(1, 4, 2.0).unwrap();
        let space = build_space(vec![ParticleSpec { mass: 1.0, grid }], DEFAULT_DIM_CAP).unwrap();
        let list: Vec<Observable> = [
            "trace",
            "purity",
            "x_mean",
            "x_var",
            "coherence:0:3",
            "population:3",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
        let set = ObservableSet::resolve(&list, &space).unwrap();
        let one = num_complex::Complex64::new(1.0, 0.0);
        let psi = QuantumState::superposition(4, &[(0, one), (3, one)]).unwrap();
        let mut out = vec![];
        set.evaluate(psi.view(), &mut out);
        let want = [1.0, 1.0, 0.0, 2.25, 0.5, 0.5];
        for (x, y) in out.iter().zip(want) {
            assert!((x - y).abs() < 1e-14, "{out:?}");
        }
        assert!(ObservableSet::resolve(&["population:9".parse().unwrap()], &space).is_err());
        assert!("x_var:1:2:3".parse::<Observable>().is_err());
        assert!("energy".parse::<Observable>().is_err());
    }

    fn any_observable() -> impl Strategy<Value = Observable> {
        prop_oneof![
            Just(Observable::Trace),
            Just(Observable::Purity),
            (0..4usize, 0..3usize)
                .prop_map(|(particle, axis)| Observable::PositionMean { particle, axis }),
            (0..4usize).prop_map(|particle| Observable::PositionVariance { particle }),
            (0..100usize, 0..100usize).prop_map(|(b, c)| Observable::Coherence(b, c)),
            (0..100usize).prop_map(Observable::Population),
        ]
    }

    proptest! {
        #[test]
        fn text_form_round_trips(o in any_observable()) {
            prop_assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
    }
}

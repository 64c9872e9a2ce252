use num_complex::Complex64;

use super::state::min_eigenvalue;
use super::{
    Collector, IntegrationConfig, Observer, QuantumState, RunSummary, Scheme, StateView, Trajectory,
};
use crate::error::{Error, Result};
use crate::numeric::{hermitian_part, CMatrix};
use crate::quantum_ops::{schrodinger_rhs, CollapseSet, Operator};

/// Most negative eigenvalue tolerated in the deterministic solution.
pub const MASTER_POSITIVITY_TOL: f64 = 1e-6;

pub(crate) fn check_inputs(state: &QuantumState, h: &Operator, cs: &CollapseSet) -> Result<()> {
    let d = cs.dimension();
    for (context, got) in [
        ("initial state", state.dimension()),
        ("Hamiltonian", h.dimension()),
    ] {
        if got != d {
            return Err(Error::Dimension {
                context,
                expected: d,
                got,
            });
        }
    }
    Ok(())
}

/// Classical RK4 on `dρ/dt = ℒ*(ρ)`; pure input is promoted to `|ψ⟩⟨ψ|`.
pub fn master_evolve(
    rho0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let mut collector = Collector::new(cfg);
    let run = master_observe(rho0, h, cs, cfg, &mut collector)?;
    Ok(collector.finish(cfg, run))
}

pub fn master_observe(
    rho0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
    obs: &mut impl Observer,
) -> Result<RunSummary> {
    cfg.validate(Scheme::MasterRk4)?;
    check_inputs(rho0, h, cs)?;
    cfg.stability_check(h, cs);
    let h = h.matrix();
    let dt = Complex64::new(cfg.dt, 0.0);
    let half = Complex64::new(0.5 * cfg.dt, 0.0);
    let sixth = Complex64::new(cfg.dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut rho = rho0.density();
    let mut drift = Vec::with_capacity(cfg.n_steps);
    obs.observe(0, 0.0, StateView::Mixed(&rho));
    for s in 1..=cfg.n_steps {
        let k1 = schrodinger_rhs(&rho, h, cs);
        let k2 = schrodinger_rhs(&(&rho + &k1 * half), h, cs);
        let k3 = schrodinger_rhs(&(&rho + &k2 * half), h, cs);
        let k4 = schrodinger_rhs(&(&rho + &k3 * dt), h, cs);
        let next: CMatrix = &rho + (k1 + k2 * two + k3 * two + k4) * sixth;
        rho = hermitian_part(&next);
        let tr = rho.trace().re;
        drift.push(tr - 1.0);
        rho /= Complex64::new(tr, 0.0);
        if s % cfg.record_stride == 0 {
            let min = min_eigenvalue(&rho);
            if min < -MASTER_POSITIVITY_TOL {
                return Err(Error::StepSize {
                    step: s,
                    time: cfg.time(s),
                    reason: format!(
                        "density matrix eigenvalue {min:e} below -{MASTER_POSITIVITY_TOL:e}"
                    ),
                });
            }
            obs.observe(s, cfg.time(s), StateView::Mixed(&rho));
        }
    }
    Ok(RunSummary {
        final_state: QuantumState::Mixed(rho),
        record: None,
        norm_drift: drift,
        jumps: 0,
        suppressed_jumps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Observable, ObservableSet};
    use crate::kernel::build_grid;
    use crate::numeric::C_ONE;
    use crate::quantum_ops::{
        build_space, hamiltonian, HamiltonianKind, ParticleSpec, DEFAULT_DIM_CAP,
    };

    #[test]
    fn two_level_dephasing_is_exponential() {
        let cs = CollapseSet::from_diagonals(vec![vec![0.0, 1.0]], 1.0).unwrap();
        let psi = QuantumState::superposition(2, &[(0, C_ONE), (1, C_ONE)]).unwrap();
        let cfg = IntegrationConfig::new(0.01, 200, Scheme::MasterRk4).with_stride(50);
        let tr = master_evolve(&psi, &Operator::zeros(2), &cs, &cfg).unwrap();
        assert_eq!(tr.times.len(), 5);
        for (t, st) in tr.times.iter().zip(&tr.states) {
            let c = st.view().element(0, 1).norm();
            assert!((c - 0.5 * (-0.5 * t).exp()).abs() < 1e-10);
            assert!((st.view().population(0) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_system_stays_pure() {
        let grid = build_grid(1, 6, 3.0).unwrap();
        let space = build_space(vec![ParticleSpec { mass: 1.0, grid }], DEFAULT_DIM_CAP).unwrap();
        let h = hamiltonian(
            &space,
            &HamiltonianKind::Harmonic {
                omega: 1.0,
                hopping: 1.0,
            },
        )
        .unwrap();
        let cs = CollapseSet::from_diagonals(vec![vec![0.0; 6]], 1.0).unwrap();
        let obs = ObservableSet::resolve(&[Observable::Purity], &space).unwrap();
        let cfg = IntegrationConfig::new(1e-2, 1000, Scheme::MasterRk4)
            .with_stride(100)
            .with_observables(obs);
        let tr = master_evolve(&QuantumState::basis(6, 2).unwrap(), &h, &cs, &cfg).unwrap();
        assert!(tr
            .column("purity")
            .unwrap()
            .iter()
            .all(|p| (p - 1.0).abs() < 1e-8));
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let cs = CollapseSet::from_diagonals(vec![vec![0.0, 1.0]], 1.0).unwrap();
        let cfg = IntegrationConfig::new(0.01, 10, Scheme::MasterRk4);
        let psi = QuantumState::basis(3, 0).unwrap();
        assert!(master_evolve(&psi, &Operator::zeros(2), &cs, &cfg).is_err());
        let cfg = IntegrationConfig::new(0.01, 10, Scheme::EulerMaruyamaRenorm);
        let psi = QuantumState::basis(2, 0).unwrap();
        assert!(master_evolve(&psi, &Operator::zeros(2), &cs, &cfg).is_err());
    }
}

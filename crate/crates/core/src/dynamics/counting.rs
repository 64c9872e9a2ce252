use num_complex::Complex64;
use rand::Rng;

use super::master::check_inputs;
use super::state::CVector;
use super::{
    Collector, IntegrationConfig, MeasurementRecord, Observer, QuantumState, RecordKind,
    RunSummary, Scheme, StateView, Trajectory,
};
use crate::error::{Error, Result};
use crate::numeric::{hermitian_part, CMatrix};
use crate::quantum_ops::{CollapseSet, Operator};

/// Jumps proposed in a channel with smaller intensity are suppressed.
pub const INTENSITY_FLOOR: f64 = 1e-14;

enum Conditioned {
    Pure(CVector),
    Mixed(CMatrix),
}

impl Conditioned {
    fn view(&self) -> StateView<'_> {
        match self {
            Conditioned::Pure(v) => StateView::Pure(v),
            Conditioned::Mixed(m) => StateView::Mixed(m),
        }
    }
}

/// Number-counting filter. Each step draws one uniform per channel in
/// channel order; a jump in channel `a` happens when it falls below
/// `ν_a dt` with `ν_a = tr(L_a²ρ)`. Jump steps apply `ρ ← LρL/tr` for every
/// firing channel; other steps apply the no-jump evolution
/// `ρ ← K₀ρK₀†/tr`, `K₀ = 1 − (iH/ħ + ½ΣL²)dt`. Pure input stays a vector.
pub fn filter_counting(
    rho0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let mut collector = Collector::new(cfg);
    let run = counting_observe(rho0, h, cs, cfg, &mut collector)?;
    Ok(collector.finish(cfg, run))
}

pub fn counting_observe(
    rho0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
    obs: &mut impl Observer,
) -> Result<RunSummary> {
    cfg.validate(Scheme::EulerMaruyamaRenorm)?;
    check_inputs(rho0, h, cs)?;
    cfg.stability_check(h, cs);
    let d = cs.dimension();
    let r = cs.rank();
    let h = h.matrix();
    let unitary = h.iter().any(|z| z.re != 0.0 || z.im != 0.0);
    // K₀ diagonal and its dense form
    let k0_diag: Vec<f64> = cs
        .total_intensity()
        .iter()
        .map(|x| 1.0 - 0.5 * x * cfg.dt)
        .collect();
    let mut k0 = h * Complex64::new(0.0, -cfg.dt / cs.hbar());
    for b in 0..d {
        k0[(b, b)] += k0_diag[b];
    }
    let squares: Vec<Vec<f64>> = cs
        .diagonals()
        .iter()
        .map(|l| l.iter().map(|x| x * x).collect())
        .collect();
    let mut rng = cfg.rng();
    let mut state = match rho0 {
        QuantumState::Pure(v) => Conditioned::Pure(v.clone()),
        QuantumState::Mixed(m) => Conditioned::Mixed(m.clone()),
    };
    let mut record = cfg.retain.record.then(|| {
        let mut rec = MeasurementRecord::new(RecordKind::Counting, cfg.dt, r);
        rec.reserve(cfg.n_steps);
        rec
    });
    let mut nu = vec![0.0; r];
    let mut dn = vec![0.0; r];
    let mut drift = Vec::with_capacity(cfg.n_steps);
    let (mut jumps, mut suppressed) = (0u64, 0u64);
    obs.observe(0, 0.0, state.view());
    for s in 1..=cfg.n_steps {
        let pops = state.view().populations();
        for (v, sq) in nu.iter_mut().zip(&squares) {
            *v = sq.iter().zip(&pops).map(|(x, p)| x * p).sum();
        }
        let mut fired = false;
        for a in 0..r {
            let u: f64 = rng.random();
            dn[a] = 0.0;
            if u < nu[a] * cfg.dt {
                if nu[a] < INTENSITY_FLOOR {
                    suppressed += 1;
                    log::debug!(
                        "suppressed jump in channel {a} at step {s}: intensity {:e}",
                        nu[a]
                    );
                } else {
                    dn[a] = 1.0;
                    fired = true;
                }
            }
        }
        let norm2 = match &mut state {
            Conditioned::Pure(psi) => {
                if fired {
                    for (a, l) in cs.diagonals().iter().enumerate() {
                        if dn[a] != 0.0 {
                            for (z, x) in psi.iter_mut().zip(l) {
                                *z *= *x;
                            }
                        }
                    }
                } else if unitary {
                    *psi = &k0 * &*psi;
                } else {
                    for (z, k) in psi.iter_mut().zip(&k0_diag) {
                        *z *= *k;
                    }
                }
                let n2 = psi.norm_squared();
                if n2 > 0.0 {
                    *psi /= Complex64::new(n2.sqrt(), 0.0);
                }
                n2
            }
            Conditioned::Mixed(rho) => {
                let next = if fired {
                    let mut f = vec![1.0; d];
                    for (a, l) in cs.diagonals().iter().enumerate() {
                        if dn[a] != 0.0 {
                            f.iter_mut().zip(l).for_each(|(x, y)| *x *= y);
                        }
                    }
                    CMatrix::from_fn(d, d, |b, c| rho[(b, c)] * (f[b] * f[c]))
                } else if unitary {
                    &k0 * &*rho * k0.adjoint()
                } else {
                    CMatrix::from_fn(d, d, |b, c| rho[(b, c)] * (k0_diag[b] * k0_diag[c]))
                };
                *rho = hermitian_part(&next);
                let tr = rho.trace().re;
                if tr > 0.0 {
                    *rho /= Complex64::new(tr, 0.0);
                }
                tr
            }
        };
        if !(norm2 > super::NORM_FLOOR) {
            return Err(Error::StepSize {
                step: s,
                time: cfg.time(s),
                reason: format!("conditioned state norm fell to {norm2:e}"),
            });
        }
        if fired {
            jumps += dn.iter().sum::<f64>() as u64;
            // jump steps rescale by the intensity, not by 1 + O(dt)
            drift.push(0.0);
        } else {
            drift.push(norm2 - 1.0);
        }
        if let Some(rec) = record.as_mut() {
            rec.push(&dn, &nu);
        }
        if s % cfg.record_stride == 0 {
            obs.observe(s, cfg.time(s), state.view());
        }
    }
    let final_state = match state {
        Conditioned::Pure(v) => QuantumState::Pure(v),
        Conditioned::Mixed(m) => QuantumState::Mixed(m),
    };
    Ok(RunSummary {
        final_state,
        record,
        norm_drift: drift,
        jumps,
        suppressed_jumps: suppressed,
    })
}

use num_complex::Complex64;

use super::master::check_inputs;
use super::state::{min_eigenvalue, CVector};
use super::{
    Collector, FilterForm, IntegrationConfig, MeasurementRecord, Observer, QuantumState,
    RecordKind, RunSummary, Scheme, StateView, Trajectory,
};
use crate::error::{Error, Result};
use crate::kernel::channel_increments;
use crate::numeric::{hermitian_part, CMatrix};
use crate::quantum_ops::{CollapseSet, Operator};

/// Squared norm below which a step is considered to have collapsed.
pub const NORM_FLOOR: f64 = 1e-24;
/// Most negative eigenvalue tolerated in the additive filter.
pub const FILTER_POSITIVITY_TOL: f64 = 1e-4;

/// Where the homodyne filter takes its increments from.
#[derive(Debug, Clone, Copy)]
pub enum RecordSource<'a> {
    /// Simulated record `dY = 2 tr(Lρ)dt + dW` with `dW` from the
    /// configuration's random stream, so the innovations equal `dW`.
    FreshNoise,
    Replay(&'a MeasurementRecord),
}

/// `m_a = ⟨L_a⟩` from position-basis populations.
fn channel_means(cs: &CollapseSet, pops: &[f64], out: &mut [f64]) {
    for (m, l) in out.iter_mut().zip(cs.diagonals()) {
        *m = l.iter().zip(pops).map(|(x, p)| x * p).sum();
    }
}

/// Diagonal of `K − 1 + iH dt/ħ`, i.e. `−½Σ(ℓ−m)²dt + Σ(ℓ−m)dI`.
fn kraus_diagonal(cs: &CollapseSet, means: &[f64], d_i: &[f64], dt: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|k| *k = 0.0);
    for ((l, &m), &di) in cs.diagonals().iter().zip(means).zip(d_i) {
        for (k, &x) in out.iter_mut().zip(l) {
            let c = x - m;
            *k += c * di - 0.5 * c * c * dt;
        }
    }
}

fn is_zero(h: &CMatrix) -> bool {
    h.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn norm_error(step: usize, time: f64, norm2: f64) -> Error {
    Error::StepSize {
        step,
        time,
        reason: format!("state norm² fell to {norm2:e} before renormalisation"),
    }
}

/// Diffusive stochastic Schrödinger equation for a pure state.
pub fn homodyne_trajectory(
    psi0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let mut collector = Collector::new(cfg);
    let run = homodyne_observe(psi0, h, cs, cfg, &mut collector)?;
    Ok(collector.finish(cfg, run))
}

pub fn homodyne_observe(
    psi0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
    obs: &mut impl Observer,
) -> Result<RunSummary> {
    cfg.validate(Scheme::EulerMaruyamaRenorm)?;
    check_inputs(psi0, h, cs)?;
    let QuantumState::Pure(psi) = psi0 else {
        return Err(Error::validation(
            "initial state",
            "the stochastic Schrödinger equation needs a pure state",
        ));
    };
    cfg.stability_check(h, cs);
    let d = cs.dimension();
    let r = cs.rank();
    let h = h.matrix();
    let unitary = !is_zero(h);
    let step_h = Complex64::new(0.0, -cfg.dt / cs.hbar());
    let mut rng = cfg.rng();
    let mut psi = psi.clone();
    let mut pops = vec![0.0; d];
    let mut means = vec![0.0; r];
    let mut dw = vec![0.0; r];
    let mut k = vec![0.0; d];
    let mut dy = vec![0.0; r];
    let mut two_m = vec![0.0; r];
    let mut hpsi = CVector::zeros(d);
    let mut record = cfg.retain.record.then(|| {
        let mut rec = MeasurementRecord::new(RecordKind::Homodyne, cfg.dt, r);
        rec.reserve(cfg.n_steps);
        rec
    });
    let mut drift = Vec::with_capacity(cfg.n_steps);
    obs.observe(0, 0.0, StateView::Pure(&psi));
    for s in 1..=cfg.n_steps {
        for (p, z) in pops.iter_mut().zip(psi.iter()) {
            *p = z.norm_sqr();
        }
        channel_means(cs, &pops, &mut means);
        channel_increments(&mut rng, cfg.dt, &mut dw);
        kraus_diagonal(cs, &means, &dw, cfg.dt, &mut k);
        if unitary {
            h.mul_to(&psi, &mut hpsi);
        }
        for b in 0..d {
            let mut z = psi[b] * (1.0 + k[b]);
            if unitary {
                z += step_h * hpsi[b];
            }
            psi[b] = z;
        }
        let norm2 = psi.norm_squared();
        if !(norm2 > NORM_FLOOR) {
            return Err(norm_error(s, cfg.time(s), norm2));
        }
        drift.push(norm2 - 1.0);
        psi /= Complex64::new(norm2.sqrt(), 0.0);
        if let Some(rec) = record.as_mut() {
            for a in 0..r {
                two_m[a] = 2.0 * means[a];
                dy[a] = two_m[a] * cfg.dt + dw[a];
            }
            rec.push(&dy, &two_m);
        }
        if s % cfg.record_stride == 0 {
            obs.observe(s, cfg.time(s), StateView::Pure(&psi));
        }
    }
    Ok(RunSummary {
        final_state: QuantumState::Pure(psi),
        record,
        norm_drift: drift,
        jumps: 0,
        suppressed_jumps: 0,
    })
}

/// Density-matrix homodyne filter conditioned on a measurement record.
pub fn filter_homodyne(
    rho0: &QuantumState,
    source: RecordSource<'_>,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let mut collector = Collector::new(cfg);
    let run = filter_homodyne_observe(rho0, source, h, cs, cfg, &mut collector)?;
    Ok(collector.finish(cfg, run))
}

pub fn filter_homodyne_observe(
    rho0: &QuantumState,
    source: RecordSource<'_>,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
    obs: &mut impl Observer,
) -> Result<RunSummary> {
    cfg.validate(Scheme::EulerMaruyamaRenorm)?;
    check_inputs(rho0, h, cs)?;
    let d = cs.dimension();
    let r = cs.rank();
    if let RecordSource::Replay(rec) = source {
        check_replay(rec, cs, cfg)?;
    }
    cfg.stability_check(h, cs);
    let h = h.matrix();
    let unitary = !is_zero(h);
    let mut rng = cfg.rng();
    let mut rho = rho0.density();
    let mut pops = vec![0.0; d];
    let mut means = vec![0.0; r];
    let mut d_i = vec![0.0; r];
    let mut dy = vec![0.0; r];
    let mut two_m = vec![0.0; r];
    let mut k = vec![0.0; d];
    let mut record = cfg.retain.record.then(|| {
        let mut rec = MeasurementRecord::new(RecordKind::Homodyne, cfg.dt, r);
        rec.reserve(cfg.n_steps);
        rec
    });
    // −(i dt/ħ)H, with the diagonal filled in per step
    let step_h: CMatrix = h * Complex64::new(0.0, -cfg.dt / cs.hbar());
    let mut kmat = step_h.clone();
    let mut drift = Vec::with_capacity(cfg.n_steps);
    obs.observe(0, 0.0, StateView::Mixed(&rho));
    for s in 1..=cfg.n_steps {
        for (b, p) in pops.iter_mut().enumerate() {
            *p = rho[(b, b)].re;
        }
        channel_means(cs, &pops, &mut means);
        match source {
            RecordSource::FreshNoise => {
                channel_increments(&mut rng, cfg.dt, &mut d_i);
                for a in 0..r {
                    dy[a] = 2.0 * means[a] * cfg.dt + d_i[a];
                }
            }
            RecordSource::Replay(rec) => {
                dy.copy_from_slice(rec.signal(s - 1));
                for a in 0..r {
                    d_i[a] = dy[a] - 2.0 * means[a] * cfg.dt;
                }
            }
        }
        let next = match cfg.filter_form {
            FilterForm::Factored => {
                kraus_diagonal(cs, &means, &d_i, cfg.dt, &mut k);
                if unitary {
                    kmat.copy_from(&step_h);
                    for b in 0..d {
                        kmat[(b, b)] += 1.0 + k[b];
                    }
                    &kmat * &rho * kmat.adjoint()
                } else {
                    CMatrix::from_fn(d, d, |b, c| rho[(b, c)] * ((1.0 + k[b]) * (1.0 + k[c])))
                }
            }
            FilterForm::Additive => additive_step(&rho, h, cs, &means, &d_i, cfg.dt),
        };
        rho = hermitian_part(&next);
        let tr = rho.trace().re;
        if !(tr > NORM_FLOOR) {
            return Err(norm_error(s, cfg.time(s), tr));
        }
        drift.push(tr - 1.0);
        rho /= Complex64::new(tr, 0.0);
        if let Some(rec) = record.as_mut() {
            for a in 0..r {
                two_m[a] = 2.0 * means[a];
            }
            rec.push(&dy, &two_m);
        }
        if s % cfg.record_stride == 0 {
            if cfg.filter_form == FilterForm::Additive {
                let min = min_eigenvalue(&rho);
                if min < -FILTER_POSITIVITY_TOL {
                    return Err(Error::StepSize {
                        step: s,
                        time: cfg.time(s),
                        reason: format!(
                            "filter eigenvalue {min:e} below -{FILTER_POSITIVITY_TOL:e}"
                        ),
                    });
                }
            }
            obs.observe(s, cfg.time(s), StateView::Mixed(&rho));
        }
    }
    Ok(RunSummary {
        final_state: QuantumState::Mixed(rho),
        record,
        norm_drift: drift,
        jumps: 0,
        suppressed_jumps: 0,
    })
}

fn additive_step(
    rho: &CMatrix,
    h: &CMatrix,
    cs: &CollapseSet,
    means: &[f64],
    d_i: &[f64],
    dt: f64,
) -> CMatrix {
    let gen = crate::quantum_ops::schrodinger_rhs(rho, h, cs);
    let d = rho.nrows();
    CMatrix::from_fn(d, d, |b, c| {
        let mut f = 0.0;
        for ((l, &m), &di) in cs.diagonals().iter().zip(means).zip(d_i) {
            f += (l[b] + l[c] - 2.0 * m) * di;
        }
        rho[(b, c)] * (1.0 + f) + gen[(b, c)] * dt
    })
}

fn check_replay(rec: &MeasurementRecord, cs: &CollapseSet, cfg: &IntegrationConfig) -> Result<()> {
    if rec.kind() != RecordKind::Homodyne {
        return Err(Error::Record(
            "the homodyne filter needs a dY record".into(),
        ));
    }
    if rec.n_channels() != cs.rank() {
        return Err(Error::Record(format!(
            "record has {} channels, the collapse set has {}",
            rec.n_channels(),
            cs.rank()
        )));
    }
    if (rec.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::Record(format!(
            "record was taken with dt = {}, replay requested dt = {}",
            rec.dt(),
            cfg.dt
        )));
    }
    if rec.n_steps() < cfg.n_steps {
        return Err(Error::Record(format!(
            "record has {} steps, {} requested",
            rec.n_steps(),
            cfg.n_steps
        )));
    }
    Ok(())
}

/// The dY stream of a homodyne run, ready for replay.
pub fn generate_measurement_record(true_trajectory: &Trajectory) -> Result<MeasurementRecord> {
    match &true_trajectory.record {
        Some(rec) if rec.kind() == RecordKind::Homodyne => Ok(rec.clone()),
        Some(_) => Err(Error::Record("trajectory carries a counting record".into())),
        None => Err(Error::Record(
            "trajectory was run without retaining its record".into(),
        )),
    }
}

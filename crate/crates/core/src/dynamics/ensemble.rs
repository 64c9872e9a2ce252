use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::add_density;
use super::{
    counting_observe, filter_homodyne_observe, homodyne_observe, IntegrationConfig, QuantumState,
    RecordSource, Retain, StateView,
};
use crate::error::{Error, Result};
use crate::numeric::{pairwise_reduce, CMatrix};
use crate::quantum_ops::{CollapseSet, Operator};

/// Trajectories per work unit. Fixed, so the summation order never
/// depends on the thread count.
pub const ENSEMBLE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unraveling {
    /// Pure-state stochastic Schrödinger equation.
    Homodyne,
    /// Density-matrix homodyne filter on fresh noise.
    DensityFilter,
    /// Number-counting jump filter.
    Counting,
}

#[derive(Debug, Clone)]
struct Accumulator {
    n: usize,
    states: Vec<CMatrix>,
    obs: Vec<Vec<f64>>,
    obs_sq: Vec<Vec<f64>>,
    jumps: u64,
    suppressed: u64,
    drift_sq: f64,
    drift_steps: usize,
}

impl Accumulator {
    fn new(n_rec: usize, d: usize, n_obs: usize) -> Self {
        Accumulator {
            n: 0,
            states: vec![CMatrix::zeros(d, d); n_rec],
            obs: vec![vec![0.0; n_obs]; n_rec],
            obs_sq: vec![vec![0.0; n_obs]; n_rec],
            jumps: 0,
            suppressed: 0,
            drift_sq: 0.0,
            drift_steps: 0,
        }
    }

    fn merge(a: &Self, b: &Self) -> Self {
        let mut out = a.clone();
        out.n += b.n;
        for (x, y) in out.states.iter_mut().zip(&b.states) {
            *x += y;
        }
        for (x, y) in out.obs.iter_mut().flatten().zip(b.obs.iter().flatten()) {
            *x += y;
        }
        for (x, y) in out
            .obs_sq
            .iter_mut()
            .flatten()
            .zip(b.obs_sq.iter().flatten())
        {
            *x += y;
        }
        out.jumps += b.jumps;
        out.suppressed += b.suppressed;
        out.drift_sq += b.drift_sq;
        out.drift_steps += b.drift_steps;
        out
    }
}

/// Ensemble averages of an unraveling.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub n_traj: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub mean_states: Vec<CMatrix>,
    pub observable_names: Vec<String>,
    pub observable_means: Vec<Vec<f64>>,
    pub observable_stderr: Vec<Vec<f64>>,
    pub total_jumps: u64,
    pub suppressed_jumps: u64,
    /// RMS of the per-step pre-renormalisation drift over all trajectories.
    pub rms_norm_drift: f64,
    /// Final states in trajectory order, when requested.
    pub final_states: Vec<QuantumState>,
}

/// Runs `n_traj` trajectories; trajectory `i` uses the stream
/// `(cfg.seed, i)`. Work is spread over the current rayon pool, and the
/// result is bit-identical for any pool size.
pub fn run_ensemble(
    kind: Unraveling,
    state0: &QuantumState,
    h: &Operator,
    cs: &CollapseSet,
    cfg: &IntegrationConfig,
    n_traj: usize,
    keep_final: bool,
) -> Result<EnsembleRun> {
    if n_traj == 0 {
        return Err(Error::validation("run.n_traj", "must be at least 1"));
    }
    let d = cs.dimension();
    let n_rec = cfg.n_steps / cfg.record_stride.max(1) + 1;
    let n_obs = cfg.observables.len();
    let base = cfg.clone().with_retain(Retain {
        states: false,
        record: false,
    });
    let n_chunks = n_traj.div_ceil(ENSEMBLE_CHUNK);
    let chunks: Vec<(Accumulator, Vec<QuantumState>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(n_rec, d, n_obs);
            let mut finals = Vec::new();
            let mut row = Vec::with_capacity(n_obs);
            for i in c * ENSEMBLE_CHUNK..((c + 1) * ENSEMBLE_CHUNK).min(n_traj) {
                let tcfg = base.clone().with_seed(cfg.seed, i as u64);
                let mut k = 0;
                let mut observer = |_s: usize, _t: f64, st: StateView<'_>| {
                    add_density(&mut acc.states[k], st);
                    row.clear();
                    tcfg.observables.evaluate(st, &mut row);
                    for (j, v) in row.iter().enumerate() {
                        acc.obs[k][j] += v;
                        acc.obs_sq[k][j] += v * v;
                    }
                    k += 1;
                };
                let run = match kind {
                    Unraveling::Homodyne => homodyne_observe(state0, h, cs, &tcfg, &mut observer)?,
                    Unraveling::DensityFilter => filter_homodyne_observe(
                        state0,
                        RecordSource::FreshNoise,
                        h,
                        cs,
                        &tcfg,
                        &mut observer,
                    )?,
                    Unraveling::Counting => counting_observe(state0, h, cs, &tcfg, &mut observer)?,
                };
                acc.n += 1;
                acc.jumps += run.jumps;
                acc.suppressed += run.suppressed_jumps;
                acc.drift_sq += run.norm_drift.iter().map(|x| x * x).sum::<f64>();
                acc.drift_steps += run.norm_drift.len();
                if keep_final {
                    finals.push(run.final_state);
                }
            }
            Ok((acc, finals))
        })
        .collect::<Result<_>>()?;
    let accs: Vec<Accumulator> = chunks.iter().map(|(a, _)| a.clone()).collect();
    let total = pairwise_reduce(&accs, &Accumulator::merge).expect("at least one chunk");
    let final_states = chunks.into_iter().flat_map(|(_, f)| f).collect();
    let n = total.n as f64;
    let inv = num_complex::Complex64::new(1.0 / n, 0.0);
    let observable_means: Vec<Vec<f64>> = total
        .obs
        .iter()
        .map(|r| r.iter().map(|x| x / n).collect())
        .collect();
    let observable_stderr = total
        .obs_sq
        .iter()
        .zip(&observable_means)
        .map(|(sq, mean)| {
            sq.iter()
                .zip(mean)
                .map(|(s2, m)| {
                    if total.n < 2 {
                        0.0
                    } else {
                        ((s2 - n * m * m).max(0.0) / (n - 1.0) / n).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    Ok(EnsembleRun {
        n_traj: total.n,
        dt: cfg.dt,
        times: (0..n_rec)
            .map(|k| cfg.time(k * cfg.record_stride))
            .collect(),
        mean_states: total.states.into_iter().map(|m| m * inv).collect(),
        observable_names: cfg.observables.names().to_vec(),
        observable_means,
        observable_stderr,
        total_jumps: total.jumps,
        suppressed_jumps: total.suppressed,
        rms_norm_drift: if total.drift_steps == 0 {
            0.0
        } else {
            (total.drift_sq / total.drift_steps as f64).sqrt()
        },
        final_states,
    })
}

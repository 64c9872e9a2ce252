use std::io::Write;

use super::{IntegrationConfig, MeasurementRecord, ObservableSet, QuantumState, StateView};
use crate::error::{Error, Result};
use crate::numeric::fmt_f17;

/// Receives the state at every recorded step (`s % record_stride == 0`).
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, state: StateView<'_>);
}

impl<F: FnMut(usize, f64, StateView<'_>)> Observer for F {
    fn observe(&mut self, step: usize, t: f64, state: StateView<'_>) {
        self(step, t, state)
    }
}

/// What an integrator returns besides what its observer saw.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: QuantumState,
    pub record: Option<MeasurementRecord>,
    /// Signed deviation of the norm (pure) or trace (mixed) from 1 before
    /// each renormalisation, one entry per step.
    pub norm_drift: Vec<f64>,
    pub jumps: u64,
    pub suppressed_jumps: u64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub record_stride: usize,
    pub times: Vec<f64>,
    /// Empty unless states were retained.
    pub states: Vec<QuantumState>,
    pub observable_names: Vec<String>,
    /// One row per recorded step.
    pub observables: Vec<Vec<f64>>,
    pub record: Option<MeasurementRecord>,
    pub norm_drift: Vec<f64>,
    pub final_state: QuantumState,
    pub jumps: u64,
    pub suppressed_jumps: u64,
}

/// Observer that builds the recorded part of a [`Trajectory`].
pub(crate) struct Collector<'a> {
    observables: &'a ObservableSet,
    keep_states: bool,
    times: Vec<f64>,
    states: Vec<QuantumState>,
    rows: Vec<Vec<f64>>,
}

impl<'a> Collector<'a> {
    pub(crate) fn new(cfg: &'a IntegrationConfig) -> Self {
        let n = cfg.n_steps / cfg.record_stride + 1;
        Collector {
            observables: &cfg.observables,
            keep_states: cfg.retain.states,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(if cfg.retain.states { n } else { 0 }),
            rows: Vec::with_capacity(n),
        }
    }

    pub(crate) fn finish(self, cfg: &IntegrationConfig, run: RunSummary) -> Trajectory {
        Trajectory {
            dt: cfg.dt,
            record_stride: cfg.record_stride,
            times: self.times,
            states: self.states,
            observable_names: cfg.observables.names().to_vec(),
            observables: self.rows,
            record: run.record,
            norm_drift: run.norm_drift,
            final_state: run.final_state,
            jumps: run.jumps,
            suppressed_jumps: run.suppressed_jumps,
        }
    }
}

impl Observer for Collector<'_> {
    fn observe(&mut self, _step: usize, t: f64, state: StateView<'_>) {
        self.times.push(t);
        let mut row = Vec::with_capacity(self.observables.len());
        self.observables.evaluate(state, &mut row);
        self.rows.push(row);
        if self.keep_states {
            self.states.push(state.to_owned());
        }
    }
}

impl Trajectory {
    /// Mean signed drift per step.
    pub fn mean_norm_drift(&self) -> f64 {
        if self.norm_drift.is_empty() {
            0.0
        } else {
            self.norm_drift.iter().sum::<f64>() / self.norm_drift.len() as f64
        }
    }

    pub fn max_abs_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.observable_names.iter().position(|n| n == name)?;
        Some(self.observables.iter().map(|r| r[i]).collect())
    }

    /// CSV with a `t` column followed by the declared observables.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(w, &self.observable_names, &self.times, &self.observables)
    }
}

pub fn write_csv<W: Write>(
    mut w: W,
    names: &[String],
    times: &[f64],
    rows: &[Vec<f64>],
) -> Result<()> {
    if times.len() != rows.len() {
        return Err(Error::Dimension {
            context: "CSV rows",
            expected: times.len(),
            got: rows.len(),
        });
    }
    let mut line = String::from("t");
    for n in names {
        line.push(',');
        line.push_str(n);
    }
    line.push('\n');
    w.write_all(line.as_bytes())?;
    for (t, row) in times.iter().zip(rows) {
        line.clear();
        line.push_str(&fmt_f17(*t));
        for v in row {
            line.push(',');
            line.push_str(&fmt_f17(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

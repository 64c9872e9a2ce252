use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{EnsembleRun, Trajectory};
use crate::error::{Error, Result};
use crate::numeric::{f17, pairwise_reduce, trace_distance, CMatrix};

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub times: Vec<f64>,
    pub mean_states: Vec<CMatrix>,
    /// Trace distance to the reference at each time; empty without one.
    pub trace_distance: Vec<f64>,
    pub observable_names: Vec<String>,
    pub observable_means: Vec<Vec<f64>>,
    pub observable_stderr: Vec<Vec<f64>>,
}

/// Mean state and observables of stored trajectories, with the trace
/// distance to a reference solution when one is given.
pub fn ensemble_mean(
    trajectories: &[Trajectory],
    reference: Option<&Trajectory>,
) -> Result<EnsembleSummary> {
    if trajectories.len() < 2 {
        return Err(Error::validation(
            "trajectories",
            "need at least two trajectories",
        ));
    }
    let first = &trajectories[0];
    for (i, t) in trajectories.iter().enumerate() {
        if t.dt != first.dt
            || t.record_stride != first.record_stride
            || t.times.len() != first.times.len()
            || t.observable_names != first.observable_names
        {
            return Err(Error::validation(
                format!("trajectories[{i}]"),
                "configuration differs from trajectory 0",
            ));
        }
        if t.states.len() != t.times.len() {
            return Err(Error::validation(
                format!("trajectories[{i}]"),
                "states were not retained",
            ));
        }
    }
    let n = trajectories.len();
    let inv = Complex64::new(1.0 / n as f64, 0.0);
    let mean_states = (0..first.times.len())
        .map(|k| {
            let mats: Vec<CMatrix> = trajectories.iter().map(|t| t.states[k].density()).collect();
            pairwise_reduce(&mats, &|a, b| a + b).expect("non-empty") * inv
        })
        .collect();
    let n_obs = first.observable_names.len();
    let mut observable_means = Vec::with_capacity(first.times.len());
    let mut observable_stderr = Vec::with_capacity(first.times.len());
    for k in 0..first.times.len() {
        let mut means = Vec::with_capacity(n_obs);
        let mut errs = Vec::with_capacity(n_obs);
        for j in 0..n_obs {
            let xs: Vec<f64> = trajectories.iter().map(|t| t.observables[k][j]).collect();
            let (m, e) = mean_and_stderr(&xs);
            means.push(m);
            errs.push(e);
        }
        observable_means.push(means);
        observable_stderr.push(errs);
    }
    let mut s = EnsembleSummary {
        n_traj: n,
        times: first.times.clone(),
        mean_states,
        trace_distance: Vec::new(),
        observable_names: first.observable_names.clone(),
        observable_means,
        observable_stderr,
    };
    if let Some(r) = reference {
        s.compare(r)?;
    }
    Ok(s)
}

pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sum = pairwise_reduce(xs, &|a, b| a + b).unwrap_or(0.0);
    let m = sum / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

impl EnsembleSummary {
    pub fn from_run(run: &EnsembleRun, reference: Option<&Trajectory>) -> Result<Self> {
        let mut s = EnsembleSummary {
            n_traj: run.n_traj,
            times: run.times.clone(),
            mean_states: run.mean_states.clone(),
            trace_distance: Vec::new(),
            observable_names: run.observable_names.clone(),
            observable_means: run.observable_means.clone(),
            observable_stderr: run.observable_stderr.clone(),
        };
        if let Some(r) = reference {
            s.compare(r)?;
        }
        Ok(s)
    }

    /// Fill `trace_distance` against a reference whose recorded times
    /// include every time of this summary.
    pub fn compare(&mut self, reference: &Trajectory) -> Result<()> {
        if reference.states.len() != reference.times.len() {
            return Err(Error::validation("reference", "states were not retained"));
        }
        let mut j = 0;
        let mut out = Vec::with_capacity(self.times.len());
        for (t, m) in self.times.iter().zip(&self.mean_states) {
            let tol = 1e-9 * t.abs().max(1.0);
            while j < reference.times.len() && reference.times[j] < t - tol {
                j += 1;
            }
            if j == reference.times.len() || (reference.times[j] - t).abs() > tol {
                return Err(Error::validation(
                    "reference",
                    format!("no reference state at t = {t}"),
                ));
            }
            let rd = reference.states[j].density();
            if rd.nrows() != m.nrows() {
                return Err(Error::Dimension {
                    context: "reference state",
                    expected: m.nrows(),
                    got: rd.nrows(),
                });
            }
            out.push(trace_distance(m, &rd));
        }
        self.trace_distance = out;
        Ok(())
    }

    pub fn max_trace_distance(&self) -> f64 {
        self.trace_distance.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn report(&self) -> EnsembleReport {
        EnsembleReport {
            n_traj: self.n_traj,
            times: self.times.clone(),
            trace_distance: self.trace_distance.clone(),
            max_trace_distance: self.max_trace_distance(),
            observables: self
                .observable_names
                .iter()
                .enumerate()
                .map(|(j, name)| ObservableSeries {
                    name: name.clone(),
                    mean: self.observable_means.iter().map(|r| r[j]).collect(),
                    stderr: self.observable_stderr.iter().map(|r| r[j]).collect(),
                })
                .collect(),
        }
    }
}

/// JSON form of an [`EnsembleSummary`] without the mean states.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleReport {
    pub n_traj: usize,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub times: Vec<f64>,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub trace_distance: Vec<f64>,
    #[serde(serialize_with = "f17::serialize")]
    pub max_trace_distance: f64,
    pub observables: Vec<ObservableSeries>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSeries {
    pub name: String,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub mean: Vec<f64>,
    #[serde(serialize_with = "f17::vec::serialize")]
    pub stderr: Vec<f64>,
}

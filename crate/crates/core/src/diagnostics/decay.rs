use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::numeric::f17;
use crate::quantum_ops::CollapseSet;

/// Coherences at or below this are excluded from the fit.
pub const COHERENCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    #[serde(serialize_with = "f17::serialize")]
    pub fitted: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub analytic: f64,
    /// Relative to the analytic rate; absolute when that rate is zero.
    #[serde(serialize_with = "f17::serialize")]
    pub relative_error: f64,
    pub n_points: usize,
}

/// Least-squares slope of `ln|ρ_{b1 b2}(t)|` against `t` from a run with
/// `H = 0`, compared with the dephasing rate of the collapse set. Uses the
/// stored states when present, otherwise the `coherence:b1:b2` column.
pub fn coherence_decay_rate(
    traj: &Trajectory,
    b1: usize,
    b2: usize,
    cs: &CollapseSet,
) -> Result<DecayFit> {
    let d = cs.dimension();
    if b1 >= d || b2 >= d {
        return Err(Error::validation(
            "basis",
            format!("index out of range for dimension {d}"),
        ));
    }
    let values: Vec<f64> = if traj.states.len() == traj.times.len() && !traj.states.is_empty() {
        traj.states
            .iter()
            .map(|s| s.view().element(b1, b2).norm())
            .collect()
    } else {
        let name = format!("coherence:{b1}:{b2}");
        traj.column(&name).ok_or_else(|| {
            Error::validation(
                "outputs.observables",
                format!("no states and no {name} column"),
            )
        })?
    };
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v > COHERENCE_FLOOR)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Numerical {
            context: "coherence decay fit",
            reason: format!("fewer than two points with coherence above {COHERENCE_FLOOR:e}"),
        });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    let fitted = -sxy / sxx;
    let analytic = cs.dephasing_rate(b1, b2);
    let diff = (fitted - analytic).abs();
    Ok(DecayFit {
        fitted,
        analytic,
        relative_error: if analytic > 0.0 {
            diff / analytic
        } else {
            diff
        },
        n_points: pts.len(),
    })
}

use std::fmt::Write as _;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::QuantumState;
use crate::error::{Error, Result};
use crate::numeric::f17;

/// A final state counts as collapsed when its largest basis population
/// reaches this value.
pub const COLLAPSE_FIDELITY: f64 = 0.99;

/// Basis states with Born weight at or below this are outside the support.
const SUPPORT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BornBin {
    pub basis: usize,
    #[serde(serialize_with = "f17::serialize")]
    pub probability: f64,
    pub count: usize,
    #[serde(serialize_with = "f17::serialize")]
    pub frequency: f64,
    /// Binomial standard deviation of the frequency.
    #[serde(serialize_with = "f17::serialize")]
    pub sigma: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BornReport {
    pub n_total: usize,
    pub n_collapsed: usize,
    pub n_uncollapsed: usize,
    #[serde(serialize_with = "f17::serialize")]
    pub uncollapsed_fraction: f64,
    /// Collapsed states landing on a basis state of zero Born weight.
    pub off_support: usize,
    pub bins: Vec<BornBin>,
    #[serde(serialize_with = "f17::serialize")]
    pub chi_square: f64,
    pub dof: usize,
    #[serde(serialize_with = "f17::serialize")]
    pub p_value: f64,
    /// Worst `1 − fidelity` among collapsed states.
    #[serde(serialize_with = "f17::serialize")]
    pub max_infidelity: f64,
    /// For each final state, the basis it collapsed to.
    pub outcomes: Vec<Option<usize>>,
}

impl BornReport {
    pub fn max_abs_z(&self) -> f64 {
        self.bins.iter().fold(0.0, |m, b| m.max(b.z.abs()))
    }

    pub fn within_sigma(&self, k: f64) -> bool {
        self.off_support == 0 && self.bins.iter().all(|b| b.z.abs() <= k)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::from("basis  p          count  freq       sigma      z\n");
        for b in &self.bins {
            let _ = writeln!(
                s,
                "{:<6} {:<10.6} {:<6} {:<10.6} {:<10.3e} {:+.3}",
                b.basis, b.probability, b.count, b.frequency, b.sigma, b.z
            );
        }
        let _ = writeln!(
            s,
            "collapsed {}/{}  uncollapsed {:.4}  chi2 {:.4} (dof {})  p {:.4}",
            self.n_collapsed,
            self.n_total,
            self.uncollapsed_fraction,
            self.chi_square,
            self.dof,
            self.p_value
        );
        s
    }
}

/// Classifies final states by their dominant basis population and
/// compares the histogram with `|ψ₀(b)|²`.
pub fn collapse_statistics(
    final_states: &[QuantumState],
    psi0: &QuantumState,
) -> Result<BornReport> {
    let d = psi0.dimension();
    if let Some(s) = final_states.iter().find(|s| s.dimension() != d) {
        return Err(Error::Dimension {
            context: "final state",
            expected: d,
            got: s.dimension(),
        });
    }
    let weights = psi0.view().populations();
    let mut counts = vec![0usize; d];
    let mut outcomes = Vec::with_capacity(final_states.len());
    let mut max_infidelity: f64 = 0.0;
    for s in final_states {
        let pops = s.view().populations();
        let (b, p) = pops
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |m, x| if x.1 > m.1 { x } else { m });
        if p >= COLLAPSE_FIDELITY {
            counts[b] += 1;
            outcomes.push(Some(b));
            max_infidelity = max_infidelity.max(1.0 - p);
        } else {
            outcomes.push(None);
        }
    }
    let n_total = final_states.len();
    let n_collapsed: usize = counts.iter().sum();
    let nc = n_collapsed as f64;
    let mut bins = Vec::new();
    let mut off_support = 0;
    let mut chi_square = 0.0;
    for (b, (&p, &count)) in weights.iter().zip(&counts).enumerate() {
        if p <= SUPPORT_FLOOR {
            off_support += count;
            continue;
        }
        let frequency = if n_collapsed > 0 {
            count as f64 / nc
        } else {
            0.0
        };
        let sigma = if n_collapsed > 0 {
            (p * (1.0 - p) / nc).sqrt()
        } else {
            f64::INFINITY
        };
        let z = if sigma > 0.0 {
            (frequency - p) / sigma
        } else {
            0.0
        };
        if n_collapsed > 0 {
            chi_square += (count as f64 - nc * p).powi(2) / (nc * p);
        }
        bins.push(BornBin {
            basis: b,
            probability: p,
            count,
            frequency,
            sigma,
            z,
        });
    }
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive dof")
            .sf(chi_square)
    };
    let n_uncollapsed = n_total - n_collapsed;
    Ok(BornReport {
        n_total,
        n_collapsed,
        n_uncollapsed,
        uncollapsed_fraction: if n_total > 0 {
            n_uncollapsed as f64 / n_total as f64
        } else {
            0.0
        },
        off_support,
        bins,
        chi_square,
        dof,
        p_value,
        max_infidelity,
        outcomes,
    })
}

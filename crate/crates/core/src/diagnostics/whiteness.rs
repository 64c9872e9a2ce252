use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::MeasurementRecord;
use crate::error::{Error, Result};
use crate::numeric::f17;

pub const MIN_WHITENESS_STEPS: usize = 1000;

/// Thresholds in sigmas of the white-noise null distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitenessOptions {
    /// Leading steps excluded while the filter forgets its prior.
    pub burn_in: usize,
    pub mean_z: f64,
    pub var_sigma: f64,
    pub lag_z: f64,
    pub cross_sigma: f64,
}

impl Default for WhitenessOptions {
    fn default() -> Self {
        WhitenessOptions {
            burn_in: 0,
            mean_z: 4.0,
            var_sigma: 5.0,
            lag_z: 4.0,
            cross_sigma: 5.0,
        }
    }
}

impl WhitenessOptions {
    /// Every test at the same level.
    pub fn at_level(k: f64) -> Self {
        WhitenessOptions {
            burn_in: 0,
            mean_z: k,
            var_sigma: k,
            lag_z: k,
            cross_sigma: k,
        }
    }

    pub fn with_burn_in(mut self, n: usize) -> Self {
        self.burn_in = n;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelWhiteness {
    pub channel: usize,
    /// `Σ dI / √(N dt)`.
    #[serde(serialize_with = "f17::serialize")]
    pub mean_z: f64,
    /// `Σ dI² / (N dt)`.
    #[serde(serialize_with = "f17::serialize")]
    pub variance_ratio: f64,
    /// Deviation of the variance ratio from 1 in units of `√(2/N)`.
    #[serde(serialize_with = "f17::serialize")]
    pub variance_z: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub lag1: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub lag1_z: f64,
    pub pass_mean: bool,
    pub pass_variance: bool,
    pub pass_lag1: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WhitenessReport {
    pub n_steps: usize,
    pub burn_in: usize,
    pub channels: Vec<ChannelWhiteness>,
    /// Largest absolute correlation between two channels, 0 for one channel.
    #[serde(serialize_with = "f17::serialize")]
    pub max_cross_correlation: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub max_cross_z: f64,
    pub pass_cross: bool,
    pub pass: bool,
}

impl WhitenessReport {
    pub fn to_table(&self) -> String {
        let mut s = String::from("channel  mean_z    var_ratio  var_z     lag1_z    pass\n");
        for c in &self.channels {
            let ok = c.pass_mean && c.pass_variance && c.pass_lag1;
            let _ = writeln!(
                s,
                "{:<8} {:+.3}    {:.5}    {:+.3}    {:+.3}    {}",
                c.channel,
                c.mean_z,
                c.variance_ratio,
                c.variance_z,
                c.lag1_z,
                if ok { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "steps {} (burn-in {})  max cross corr {:.3e} (z {:.3})  {}",
            self.n_steps,
            self.burn_in,
            self.max_cross_correlation,
            self.max_cross_z,
            if self.pass { "PASS" } else { "FAIL" }
        );
        s
    }
}

/// White-noise tests on the innovation stream of a record.
pub fn innovation_whiteness(
    record: &MeasurementRecord,
    opts: &WhitenessOptions,
) -> Result<WhitenessReport> {
    if !record.has_innovations() {
        return Err(Error::Record("record carries no innovations".into()));
    }
    let total = record.n_steps();
    if total < opts.burn_in + MIN_WHITENESS_STEPS {
        return Err(Error::Record(format!(
            "whiteness needs at least {MIN_WHITENESS_STEPS} steps after a burn-in of {}, record has {total}",
            opts.burn_in
        )));
    }
    let n = total - opts.burn_in;
    let nf = n as f64;
    let dt = record.dt();
    let streams: Vec<Vec<f64>> = (0..record.n_channels())
        .map(|a| record.innovation_channel(a)[opts.burn_in..].to_vec())
        .collect();
    let sq: Vec<f64> = streams
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum())
        .collect();
    let sigma_hat = (2.0 / nf).sqrt();
    let channels: Vec<ChannelWhiteness> = streams
        .iter()
        .zip(&sq)
        .enumerate()
        .map(|(a, (x, &s2))| {
            let mean_z = x.iter().sum::<f64>() / (nf * dt).sqrt();
            let variance_ratio = s2 / (nf * dt);
            let variance_z = (variance_ratio - 1.0) / sigma_hat;
            let lag1 = if s2 > 0.0 {
                x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / s2
            } else {
                0.0
            };
            let lag1_z = lag1 * nf.sqrt();
            ChannelWhiteness {
                channel: a,
                mean_z,
                variance_ratio,
                variance_z,
                lag1,
                lag1_z,
                pass_mean: mean_z.abs() <= opts.mean_z,
                pass_variance: variance_z.abs() <= opts.var_sigma,
                pass_lag1: lag1_z.abs() <= opts.lag_z,
            }
        })
        .collect();
    let mut max_cross_correlation: f64 = 0.0;
    for a in 0..streams.len() {
        for b in a + 1..streams.len() {
            let denom = (sq[a] * sq[b]).sqrt();
            if denom > 0.0 {
                let c = streams[a]
                    .iter()
                    .zip(&streams[b])
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
                    / denom;
                max_cross_correlation = max_cross_correlation.max(c.abs());
            }
        }
    }
    let max_cross_z = max_cross_correlation * nf.sqrt();
    let pass_cross = max_cross_z <= opts.cross_sigma;
    let pass = pass_cross
        && channels
            .iter()
            .all(|c| c.pass_mean && c.pass_variance && c.pass_lag1);
    Ok(WhitenessReport {
        n_steps: n,
        burn_in: opts.burn_in,
        channels,
        max_cross_correlation,
        max_cross_z,
        pass_cross,
        pass,
    })
}

use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::fmt_f17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// Diffusive increments `dY_a`.
    Homodyne,
    /// Jump counts `dN_a ∈ {0, 1}`.
    Counting,
}

/// Per-step, per-channel measurement output.
///
/// All streams are flat `n_steps × n_channels` arrays, step-major. For
/// homodyne records `signal = dY`, `expected = 2 tr(Lρ)` and
/// `innovation = dY − expected·dt`; for counting records `signal = dN`,
/// `expected = ν = tr(L²ρ)` and `innovation = dN − ν dt`. A record read back
/// from JSON lines carries only the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    kind: RecordKind,
    dt: f64,
    t0: f64,
    n_channels: usize,
    signal: Vec<f64>,
    expected: Vec<f64>,
    innovation: Vec<f64>,
}

impl MeasurementRecord {
    pub fn new(kind: RecordKind, dt: f64, n_channels: usize) -> Self {
        MeasurementRecord {
            kind,
            dt,
            t0: 0.0,
            n_channels,
            signal: Vec::new(),
            expected: Vec::new(),
            innovation: Vec::new(),
        }
    }

    pub(crate) fn reserve(&mut self, steps: usize) {
        let n = steps * self.n_channels;
        self.signal.reserve(n);
        self.expected.reserve(n);
        self.innovation.reserve(n);
    }

    /// Append one step; the innovation is derived so the stored relation is
    /// exact.
    pub(crate) fn push(&mut self, signal: &[f64], expected: &[f64]) {
        debug_assert_eq!(signal.len(), self.n_channels);
        for (&s, &e) in signal.iter().zip(expected) {
            self.signal.push(s);
            self.expected.push(e);
            self.innovation.push(s - e * self.dt);
        }
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_steps(&self) -> usize {
        self.signal.len().checked_div(self.n_channels).unwrap_or(0)
    }

    /// Start time of step `s`.
    pub fn time(&self, s: usize) -> f64 {
        self.t0 + s as f64 * self.dt
    }

    pub fn signal(&self, s: usize) -> &[f64] {
        &self.signal[s * self.n_channels..(s + 1) * self.n_channels]
    }

    pub fn has_innovations(&self) -> bool {
        !self.signal.is_empty() && self.innovation.len() == self.signal.len()
    }

    pub fn expected(&self, s: usize) -> &[f64] {
        &self.expected[s * self.n_channels..(s + 1) * self.n_channels]
    }

    pub fn innovation(&self, s: usize) -> &[f64] {
        &self.innovation[s * self.n_channels..(s + 1) * self.n_channels]
    }

    /// Innovations of channel `a` over all steps.
    pub fn innovation_channel(&self, a: usize) -> Vec<f64> {
        self.innovation
            .iter()
            .skip(a)
            .step_by(self.n_channels)
            .copied()
            .collect()
    }

    pub fn signal_channel(&self, a: usize) -> Vec<f64> {
        self.signal
            .iter()
            .skip(a)
            .step_by(self.n_channels)
            .copied()
            .collect()
    }

    /// Replace the innovation stream, for building synthetic records.
    pub fn from_innovations(dt: f64, n_channels: usize, innovations: Vec<f64>) -> Result<Self> {
        if n_channels == 0 || !innovations.len().is_multiple_of(n_channels) {
            return Err(Error::Record(format!(
                "{} innovations do not split into {n_channels} channels",
                innovations.len()
            )));
        }
        Ok(MeasurementRecord {
            kind: RecordKind::Homodyne,
            dt,
            t0: 0.0,
            n_channels,
            expected: vec![0.0; innovations.len()],
            signal: innovations.clone(),
            innovation: innovations,
        })
    }

    /// One JSON object per step: `{"t":…,"dY":[…]}` or `{"t":…,"jumps":[…]}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = String::new();
        for s in 0..self.n_steps() {
            line.clear();
            line.push_str("{\"t\":");
            line.push_str(&fmt_f17(self.time(s)));
            match self.kind {
                RecordKind::Homodyne => {
                    line.push_str(",\"dY\":[");
                    for (a, v) in self.signal(s).iter().enumerate() {
                        if a > 0 {
                            line.push(',');
                        }
                        line.push_str(&fmt_f17(*v));
                    }
                }
                RecordKind::Counting => {
                    line.push_str(",\"jumps\":[");
                    let mut first = true;
                    for (a, v) in self.signal(s).iter().enumerate() {
                        if *v != 0.0 {
                            if !first {
                                line.push(',');
                            }
                            first = false;
                            line.push_str(&a.to_string());
                        }
                    }
                }
            }
            line.push_str("]}\n");
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Parse JSON lines. Counting records need the channel count, which
    /// the format does not carry. `dt` is inferred from the time stamps,
    /// which must be uniform.
    pub fn read_jsonl<R: BufRead>(r: R, counting_channels: Option<usize>) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Line {
            t: f64,
            #[serde(rename = "dY")]
            dy: Option<Vec<f64>>,
            jumps: Option<Vec<usize>>,
        }
        let mut times = Vec::new();
        let mut signal = Vec::new();
        let mut kind = None;
        let mut n_channels = counting_channels.unwrap_or(0);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?;
            let this = match (parsed.dy, parsed.jumps) {
                (Some(dy), None) => {
                    if kind.is_none() {
                        n_channels = dy.len();
                    }
                    if dy.len() != n_channels {
                        return Err(Error::Record(format!(
                            "line {}: {} channels, expected {n_channels}",
                            i + 1,
                            dy.len()
                        )));
                    }
                    signal.extend(dy);
                    RecordKind::Homodyne
                }
                (None, Some(jumps)) => {
                    let n = counting_channels.ok_or_else(|| {
                        Error::Record("counting records need the channel count".into())
                    })?;
                    let start = signal.len();
                    signal.resize(start + n, 0.0);
                    for a in jumps {
                        if a >= n {
                            return Err(Error::Record(format!(
                                "line {}: jump channel {a} out of range",
                                i + 1
                            )));
                        }
                        signal[start + a] = 1.0;
                    }
                    RecordKind::Counting
                }
                _ => {
                    return Err(Error::Record(format!(
                        "line {}: need exactly one of dY or jumps",
                        i + 1
                    )))
                }
            };
            if kind.is_some_and(|k| k != this) {
                return Err(Error::Record(format!("line {}: mixed record kinds", i + 1)));
            }
            kind = Some(this);
            times.push(parsed.t);
        }
        let kind = kind.ok_or_else(|| Error::Record("empty record".into()))?;
        if times.len() < 2 {
            return Err(Error::Record(
                "at least two steps are needed to infer dt".into(),
            ));
        }
        let t0 = times[0];
        let dt = times[1] - t0;
        if !(dt > 0.0) {
            return Err(Error::Record("time stamps must increase".into()));
        }
        for (s, &t) in times.iter().enumerate() {
            let want = t0 + s as f64 * dt;
            if (t - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(Error::Record(format!(
                    "non-uniform time stamp at step {s}: {t} vs {want}"
                )));
            }
        }
        Ok(MeasurementRecord {
            kind,
            dt,
            t0,
            n_channels,
            signal,
            expected: Vec::new(),
            innovation: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homodyne_round_trip() {
        let mut r = MeasurementRecord::new(RecordKind::Homodyne, 0.1, 2);
        r.push(&[0.5, -0.25], &[1.0, 2.0]);
        r.push(&[1e-300, 3.0], &[0.0, 0.0]);
        r.push(&[0.1, 0.2], &[0.0, 0.0]);
        assert_eq!(r.innovation(0), &[0.4, -0.45]);
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"t\":0.0000000000000000e0,\"dY\":[5.0000000000000000e-1,"));
        let back = MeasurementRecord::read_jsonl(&buf[..], None).unwrap();
        assert_eq!(back.n_steps(), 3);
        assert_eq!(back.dt(), 0.1);
        assert_eq!(back.signal(1), r.signal(1));
        assert!(!back.has_innovations());
    }

    #[test]
    fn counting_round_trip() {
        let mut r = MeasurementRecord::new(RecordKind::Counting, 0.5, 3);
        r.push(&[0.0, 1.0, 0.0], &[0.1, 0.2, 0.3]);
        r.push(&[1.0, 0.0, 1.0], &[0.1, 0.2, 0.3]);
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"t\":0.0000000000000000e0,\"jumps\":[1]}\n{\"t\":5.0000000000000000e-1,\"jumps\":[0,2]}\n"
        );
        let back = MeasurementRecord::read_jsonl(&buf[..], Some(3)).unwrap();
        assert_eq!(back.signal(1), &[1.0, 0.0, 1.0]);
        assert!(MeasurementRecord::read_jsonl(&buf[..], None).is_err());
        assert!(MeasurementRecord::read_jsonl(&buf[..], Some(2)).is_err());
    }

    #[test]
    fn malformed_input() {
        let uneven = "{\"t\":0,\"dY\":[1]}\n{\"t\":1,\"dY\":[1]}\n{\"t\":3,\"dY\":[1]}\n";
        assert!(MeasurementRecord::read_jsonl(uneven.as_bytes(), None).is_err());
        let ragged = "{\"t\":0,\"dY\":[1]}\n{\"t\":1,\"dY\":[1,2]}\n";
        assert!(MeasurementRecord::read_jsonl(ragged.as_bytes(), None).is_err());
        let extra = "{\"t\":0,\"dY\":[1],\"x\":1}\n";
        assert!(MeasurementRecord::read_jsonl(extra.as_bytes(), None).is_err());
        assert!(MeasurementRecord::read_jsonl("".as_bytes(), None).is_err());
    }
}

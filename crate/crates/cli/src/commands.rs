//! Subcommand pipelines. Each writes its files through an [`OutputDir`]
//! and returns a short text report.

use std::fmt::Write as _;

use dpfilter_core::diagnostics::{
    coherence_decay_rate, collapse_statistics, innovation_whiteness, BornReport, EnsembleSummary,
    WhitenessOptions, WhitenessReport, MIN_WHITENESS_STEPS,
};
use dpfilter_core::dynamics::{
    filter_counting, filter_homodyne, filter_homodyne_observe, generate_measurement_record,
    homodyne_trajectory, master_evolve, run_ensemble, IntegrationConfig, Observable, ObservableSet,
    QuantumState, RecordSource, Retain, Scheme, StateView, Trajectory, Unraveling,
};
use dpfilter_core::kernel::{gamma_square_root_check, KernelExport, QuadratureSpec};
use dpfilter_core::numeric::f17;
use dpfilter_core::quantum_ops::{ito_correction_check, HamiltonianKind};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, FilterPrior, Mode};
use crate::output::OutputDir;

/// Radii of the square-root quadrature check.
pub const SQRT_RADII: [f64; 3] = [0.5, 1.0, 2.0];
pub const SQRT_TOL: f64 = 1e-6;
pub const MERCER_TOL_REL: f64 = 1e-10;
pub const CLIP_TOL_REL: f64 = 1e-6;
pub const ITO_TOL_REL: f64 = 1e-10;
pub const DECAY_TOL_REL: f64 = 0.01;
/// The ensemble reference runs the master equation at `dt / REFERENCE_REFINE`.
pub const REFERENCE_REFINE: usize = 10;
pub const DEFAULT_COLLAPSE_TRAJECTORIES: usize = 8;

pub struct Outcome {
    pub passed: bool,
    pub report: String,
}

/// Settings that come from the command line rather than the config.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dephasing {
    pub b1: usize,
    pub b2: usize,
    /// `Λ = ½ Σ_a (ℓ_a(b1) − ℓ_a(b2))²`.
    #[serde(serialize_with = "f17::serialize")]
    pub lambda: f64,
}

fn mode_error(allowed: &str, got: Mode) -> anyhow::Error {
    crate::config::ConfigError {
        path: "run.mode".into(),
        message: format!("this subcommand runs {allowed}, got {got:?}"),
    }
    .into()
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl Experiment {
    /// Basis pair for coherence diagnostics: the configured one or the two
    /// most populated basis states of the initial state.
    pub fn coherence_pair(&self) -> anyhow::Result<(usize, usize)> {
        let d = self.space.dimension();
        if let Some([b1, b2]) = self.config.outputs.coherence {
            if b1 >= d || b2 >= d || b1 == b2 {
                return Err(crate::config::ConfigError {
                    path: "outputs.coherence".into(),
                    message: format!("needs two distinct basis indices below {d}"),
                }
                .into());
            }
            return Ok((b1, b2));
        }
        if d < 2 {
            anyhow::bail!("coherence needs a Hilbert space of dimension at least 2");
        }
        let pops = self.psi0.view().populations();
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| pops[b].total_cmp(&pops[a]).then(a.cmp(&b)));
        let (b1, b2) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        Ok((b1, b2))
    }

    pub fn dephasing(&self) -> anyhow::Result<Dephasing> {
        let (b1, b2) = self.coherence_pair()?;
        Ok(Dephasing {
            b1,
            b2,
            lambda: self.collapse.dephasing_rate(b1, b2),
        })
    }

    fn run_cfg(&self, ctx: &RunContext, scheme: Scheme) -> IntegrationConfig {
        let r = &self.config.run;
        IntegrationConfig::new(r.dt, r.n_steps, scheme)
            .with_seed(ctx.seed, 0)
            .with_stride(r.record_stride)
            .with_observables(self.observables.clone())
            .with_filter_form(r.filter_form)
    }

    fn h_is_zero(&self) -> bool {
        matches!(self.hamiltonian_kind, HamiltonianKind::Zero)
            || self
                .hamiltonian
                .matrix()
                .iter()
                .all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

#[derive(Serialize)]
struct KernelDiagnostics {
    family: dpfilter_core::kernel::KernelFamily,
    n_sites: usize,
    rank: usize,
    #[serde(serialize_with = "f17::serialize")]
    cell_weight: f64,
    #[serde(serialize_with = "f17::serialize")]
    max_abs_g: f64,
    #[serde(serialize_with = "f17::serialize")]
    trace: f64,
    #[serde(serialize_with = "f17::serialize")]
    raw_min_eigenvalue: f64,
    #[serde(serialize_with = "f17::serialize")]
    min_retained_eigenvalue: f64,
    #[serde(serialize_with = "f17::serialize")]
    clipped_mass: f64,
    #[serde(serialize_with = "f17::serialize")]
    truncated_mass: f64,
    /// `max |G − Σ λ e eᵀ| / (w max|g|)`.
    #[serde(serialize_with = "f17::serialize")]
    mercer_error_rel: f64,
    #[serde(serialize_with = "f17::serialize")]
    orthonormality_error: f64,
    #[serde(serialize_with = "f17::serialize")]
    sqrt_max_residual: f64,
    #[serde(serialize_with = "f17::serialize")]
    ito_relative_deviation: f64,
    #[serde(serialize_with = "f17::serialize")]
    mollifier_leakage: f64,
    /// `max_b Σ_a ℓ_a(b)²`, the fastest dissipative rate.
    #[serde(serialize_with = "f17::serialize")]
    max_intensity: f64,
    dephasing: Dephasing,
    passed: bool,
}

pub fn kernel_check(ex: &Experiment, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let k = &ex.kernel;
    let d = &ex.decomp;
    let sqrt = gamma_square_root_check(ex.constants, &SQRT_RADII, QuadratureSpec::default())?;
    out.write_json("sqrt_check.json", &sqrt)?;
    out.write_text("sqrt_check.txt", &sqrt.to_table())?;
    out.write_json("kernel.json", &KernelExport::new(k, d))?;
    let w = ex.grid.cell_weight();
    let gmax = k.matrix().amax();
    let mercer = d.reconstruction_error(k) / (w * gmax.max(f64::MIN_POSITIVE));
    let ito = ito_correction_check(&ex.collapse, &ex.family, k, ex.constants)?;
    let min_retained = d
        .eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let checks = [
        ("square root residual", sqrt.max_residual(), SQRT_TOL),
        ("mercer reconstruction", mercer, MERCER_TOL_REL),
        (
            "clipped mass / trace",
            k.clipped_mass() / k.trace(),
            CLIP_TOL_REL,
        ),
        ("ito deviation", ito.relative_deviation(), ITO_TOL_REL),
    ];
    let mut report = sqrt.to_table();
    let mut passed = min_retained >= 0.0;
    for (name, value, tol) in checks {
        let ok = value <= tol;
        passed &= ok;
        let _ = writeln!(
            report,
            "{name:<24} {value:.3e} <= {tol:.0e}  {}",
            pass_word(ok)
        );
    }
    let _ = writeln!(
        report,
        "{:<24} {min_retained:.3e} >= 0  {}",
        "min eigenvalue",
        pass_word(min_retained >= 0.0)
    );
    let diag = KernelDiagnostics {
        family: k.family().clone(),
        n_sites: k.len(),
        rank: d.rank(),
        cell_weight: w,
        max_abs_g: gmax,
        trace: k.trace(),
        raw_min_eigenvalue: k.raw_min_eigenvalue(),
        min_retained_eigenvalue: min_retained,
        clipped_mass: k.clipped_mass(),
        truncated_mass: d.truncated_mass(),
        mercer_error_rel: mercer,
        orthonormality_error: d.orthonormality_error(),
        sqrt_max_residual: sqrt.max_residual(),
        ito_relative_deviation: ito.relative_deviation(),
        mollifier_leakage: ex.family.leakage_measured(),
        max_intensity: ex.collapse.max_intensity(),
        dephasing: ex.dephasing()?,
        passed,
    };
    out.write_json("diagnostics.json", &diag)?;
    Ok(Outcome { passed, report })
}

#[derive(Serialize)]
struct DecayDiagnostics {
    b1: usize,
    b2: usize,
    #[serde(serialize_with = "f17::serialize")]
    lambda_analytic: f64,
    #[serde(serialize_with = "f17::serialize")]
    lambda_fitted: f64,
    #[serde(serialize_with = "f17::serialize")]
    relative_error: f64,
    n_points: usize,
    coherence_column: String,
    /// The fit is only compared against Λ when the Hamiltonian vanishes.
    hamiltonian_zero: bool,
    #[serde(serialize_with = "f17::serialize")]
    max_abs_trace_drift: f64,
    passed: bool,
}

pub fn decohere(ex: &Experiment, ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    if let Some(m) = ex.config.run.mode {
        if m != Mode::Master {
            return Err(mode_error("the master equation", m));
        }
    }
    let (b1, b2) = ex.coherence_pair()?;
    let column = format!("coherence:{b1}:{b2}");
    let mut list: Vec<Observable> = ex
        .config
        .observable_names()
        .iter()
        .map(|n| n.parse())
        .collect::<Result<_, _>>()?;
    if !ex.observables.names().contains(&column) {
        list.push(Observable::Coherence(b1, b2));
    }
    let obs = ObservableSet::resolve(&list, &ex.space)?;
    let cfg = ex
        .run_cfg(ctx, Scheme::MasterRk4)
        .with_observables(obs)
        .with_retain(Retain {
            states: false,
            record: false,
        });
    let tr = master_evolve(&ex.psi0, &ex.hamiltonian, &ex.collapse, &cfg)?;
    out.write_with("trajectory.csv", |w| tr.write_csv(w))?;
    let fit = coherence_decay_rate(&tr, b1, b2, &ex.collapse)?;
    let zero = ex.h_is_zero();
    let passed = !zero || fit.relative_error <= DECAY_TOL_REL;
    let diag = DecayDiagnostics {
        b1,
        b2,
        lambda_analytic: fit.analytic,
        lambda_fitted: fit.fitted,
        relative_error: fit.relative_error,
        n_points: fit.n_points,
        coherence_column: column,
        hamiltonian_zero: zero,
        max_abs_trace_drift: tr.max_abs_norm_drift(),
        passed,
    };
    out.write_json("diagnostics.json", &diag)?;
    let report = format!(
        "coherence ({b1},{b2}): fitted {:.6e}, analytic {:.6e}, relative error {:.3e}  {}\n",
        fit.fitted,
        fit.analytic,
        fit.relative_error,
        if zero {
            pass_word(passed)
        } else {
            "n/a (H != 0)"
        }
    );
    Ok(Outcome { passed, report })
}

#[derive(Serialize)]
struct FilterDiagnostics {
    n_steps: usize,
    n_channels: usize,
    prior: FilterPrior,
    #[serde(serialize_with = "f17::serialize")]
    initial_fidelity: f64,
    #[serde(serialize_with = "f17::serialize")]
    final_fidelity: f64,
    /// Mean over the second half of the recorded steps.
    #[serde(serialize_with = "f17::serialize")]
    late_mean_fidelity: f64,
    whiteness: Option<WhitenessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    whiteness_skipped: Option<String>,
    dephasing: Dephasing,
    passed: bool,
}

/// Burn-in used for the whiteness test of `filter` runs.
pub fn whiteness_burn_in(n_steps: usize) -> usize {
    n_steps / 10
}

pub fn filter(ex: &Experiment, ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    if let Some(m) = ex.config.run.mode {
        if m != Mode::Homodyne {
            return Err(mode_error("a homodyne record", m));
        }
    }
    let truth_cfg = ex
        .run_cfg(ctx, Scheme::EulerMaruyamaRenorm)
        .with_retain(Retain {
            states: true,
            record: true,
        });
    let truth = homodyne_trajectory(&ex.psi0, &ex.hamiltonian, &ex.collapse, &truth_cfg)?;
    out.write_with("truth.csv", |w| truth.write_csv(w))?;
    let rec = generate_measurement_record(&truth)?;
    out.write_with("record.jsonl", |w| rec.write_jsonl(w))?;
    let d = ex.space.dimension();
    let prior = match ex.config.run.filter_prior {
        FilterPrior::MaximallyMixed => QuantumState::maximally_mixed(d),
        FilterPrior::TrueState => QuantumState::Mixed(ex.psi0.density()),
    };
    let filter_cfg = truth_cfg.clone().with_retain(Retain {
        states: false,
        record: true,
    });
    let mut names = filter_cfg.observables.names().to_vec();
    names.push("fidelity".into());
    let mut times = Vec::with_capacity(truth.times.len());
    let mut rows = Vec::with_capacity(truth.times.len());
    let mut k = 0;
    let mut missing = false;
    let mut observer = |_s: usize, t: f64, st: StateView<'_>| {
        let mut row = Vec::with_capacity(names.len());
        filter_cfg.observables.evaluate(st, &mut row);
        let f = match truth.states.get(k) {
            Some(QuantumState::Pure(v)) => st.fidelity_with(v),
            _ => {
                missing = true;
                f64::NAN
            }
        };
        row.push(f);
        times.push(t);
        rows.push(row);
        k += 1;
    };
    let summary = filter_homodyne_observe(
        &prior,
        RecordSource::Replay(&rec),
        &ex.hamiltonian,
        &ex.collapse,
        &filter_cfg,
        &mut observer,
    )?;
    if missing {
        anyhow::bail!("true trajectory and filter recorded different step counts");
    }
    out.write_csv("filter.csv", &names, &times, &rows)?;
    let innov = summary
        .record
        .ok_or_else(|| anyhow::anyhow!("filter returned no innovation record"))?;
    let r = innov.n_channels();
    let inames: Vec<String> = (0..r).map(|a| format!("dI:{a}")).collect();
    let itimes: Vec<f64> = (0..innov.n_steps()).map(|s| innov.time(s)).collect();
    let irows: Vec<Vec<f64>> = (0..innov.n_steps())
        .map(|s| innov.innovation(s).to_vec())
        .collect();
    out.write_csv("innovations.csv", &inames, &itimes, &irows)?;
    let burn_in = whiteness_burn_in(ex.config.run.n_steps);
    let (whiteness, skipped) = if innov.n_steps() >= burn_in + MIN_WHITENESS_STEPS {
        let rep = innovation_whiteness(&innov, &WhitenessOptions::default().with_burn_in(burn_in))?;
        out.write_text("whiteness.txt", &rep.to_table())?;
        (Some(rep), None)
    } else {
        (
            None,
            Some(format!(
                "needs at least {} steps",
                burn_in + MIN_WHITENESS_STEPS
            )),
        )
    };
    let fid: Vec<f64> = rows.iter().map(|r| *r.last().unwrap()).collect();
    let late = &fid[fid.len() / 2..];
    let passed = whiteness.as_ref().is_none_or(|w| w.pass);
    let mut report = String::new();
    match &whiteness {
        Some(w) => report.push_str(&w.to_table()),
        None => report.push_str("whiteness: skipped, record too short\n"),
    }
    let _ = writeln!(
        report,
        "fidelity: initial {:.6}, final {:.6}",
        fid[0],
        fid[fid.len() - 1]
    );
    let diag = FilterDiagnostics {
        n_steps: innov.n_steps(),
        n_channels: r,
        prior: ex.config.run.filter_prior,
        initial_fidelity: fid[0],
        final_fidelity: fid[fid.len() - 1],
        late_mean_fidelity: late.iter().sum::<f64>() / late.len() as f64,
        whiteness,
        whiteness_skipped: skipped,
        dephasing: ex.dephasing()?,
        passed,
    };
    out.write_json("diagnostics.json", &diag)?;
    Ok(Outcome { passed, report })
}

#[derive(Serialize)]
struct JumpDiagnostics {
    n_steps: usize,
    n_channels: usize,
    jumps: u64,
    suppressed_jumps: u64,
    jumps_per_channel: Vec<u64>,
    #[serde(serialize_with = "f17::serialize")]
    max_abs_norm_drift: f64,
    dephasing: Dephasing,
}

pub fn jump(ex: &Experiment, ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    if let Some(m) = ex.config.run.mode {
        if m != Mode::Counting {
            return Err(mode_error("the counting filter", m));
        }
    }
    let cfg = ex
        .run_cfg(ctx, Scheme::EulerMaruyamaRenorm)
        .with_retain(Retain {
            states: false,
            record: true,
        });
    let tr = filter_counting(&ex.psi0, &ex.hamiltonian, &ex.collapse, &cfg)?;
    out.write_with("trajectory.csv", |w| tr.write_csv(w))?;
    let rec = tr
        .record
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("counting run returned no record"))?;
    out.write_with("record.jsonl", |w| rec.write_jsonl(w))?;
    let per_channel: Vec<u64> = (0..rec.n_channels())
        .map(|a| rec.signal_channel(a).iter().filter(|&&v| v != 0.0).count() as u64)
        .collect();
    let diag = JumpDiagnostics {
        n_steps: rec.n_steps(),
        n_channels: rec.n_channels(),
        jumps: tr.jumps,
        suppressed_jumps: tr.suppressed_jumps,
        jumps_per_channel: per_channel,
        max_abs_norm_drift: tr.max_abs_norm_drift(),
        dephasing: ex.dephasing()?,
    };
    out.write_json("diagnostics.json", &diag)?;
    let report = format!(
        "{} jumps over {} steps ({} suppressed)\n",
        tr.jumps,
        rec.n_steps(),
        tr.suppressed_jumps
    );
    Ok(Outcome {
        passed: true,
        report,
    })
}

#[derive(Serialize)]
struct BornOutput<'a> {
    #[serde(flatten)]
    report: &'a BornReport,
    /// Largest final `x_var` among trajectories counted as collapsed.
    #[serde(serialize_with = "f17::serialize")]
    max_collapsed_x_var: f64,
    within_3_sigma: bool,
}

#[derive(Serialize)]
struct EnsembleDiagnostics {
    mode: Unraveling,
    n_traj: usize,
    #[serde(serialize_with = "f17::serialize")]
    reference_dt: f64,
    #[serde(serialize_with = "f17::serialize")]
    max_trace_distance: f64,
    total_jumps: u64,
    suppressed_jumps: u64,
    #[serde(serialize_with = "f17::serialize")]
    rms_norm_drift: f64,
    collapse_trajectories: usize,
    born_written: bool,
    dephasing: Dephasing,
}

fn single_trajectory(
    kind: Unraveling,
    ex: &Experiment,
    cfg: &IntegrationConfig,
) -> anyhow::Result<Trajectory> {
    Ok(match kind {
        Unraveling::Homodyne => homodyne_trajectory(&ex.psi0, &ex.hamiltonian, &ex.collapse, cfg)?,
        Unraveling::DensityFilter => filter_homodyne(
            &QuantumState::Mixed(ex.psi0.density()),
            RecordSource::FreshNoise,
            &ex.hamiltonian,
            &ex.collapse,
            cfg,
        )?,
        Unraveling::Counting => filter_counting(&ex.psi0, &ex.hamiltonian, &ex.collapse, cfg)?,
    })
}

pub fn ensemble(ex: &Experiment, ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let mode = ex.config.run.mode.unwrap_or(Mode::Homodyne);
    let kind = mode
        .unraveling()
        .ok_or_else(|| mode_error("an unraveling", mode))?;
    let n_traj = ex.config.run.n_traj;
    if n_traj < 2 {
        return Err(crate::config::ConfigError {
            path: "run.n_traj".into(),
            message: "ensembles need at least 2 trajectories".into(),
        }
        .into());
    }
    let cfg = ex.run_cfg(ctx, Scheme::EulerMaruyamaRenorm);
    let born = ex.h_is_zero() && kind != Unraveling::DensityFilter;
    let run = run_ensemble(
        kind,
        &ex.psi0,
        &ex.hamiltonian,
        &ex.collapse,
        &cfg,
        n_traj,
        born,
    )?;
    let r = &ex.config.run;
    let reference_dt = r.dt / REFERENCE_REFINE as f64;
    let ref_cfg = IntegrationConfig::new(
        reference_dt,
        r.n_steps * REFERENCE_REFINE,
        Scheme::MasterRk4,
    )
    .with_stride(r.record_stride * REFERENCE_REFINE)
    .with_retain(Retain {
        states: true,
        record: false,
    });
    let reference = master_evolve(&ex.psi0, &ex.hamiltonian, &ex.collapse, &ref_cfg)?;
    let summary = EnsembleSummary::from_run(&run, Some(&reference))?;

    let mut names = Vec::new();
    for n in &summary.observable_names {
        names.push(n.clone());
        names.push(format!("{n}_stderr"));
    }
    names.push("trace_distance".into());
    let rows: Vec<Vec<f64>> = (0..summary.times.len())
        .map(|k| {
            let mut row: Vec<f64> = summary.observable_means[k]
                .iter()
                .zip(&summary.observable_stderr[k])
                .flat_map(|(m, s)| [*m, *s])
                .collect();
            row.push(summary.trace_distance[k]);
            row
        })
        .collect();
    out.write_csv("ensemble.csv", &names, &summary.times, &rows)?;

    // individual position-variance traces; trajectory i reuses stream i
    let n_show = ex
        .config
        .outputs
        .trajectories
        .unwrap_or(DEFAULT_COLLAPSE_TRAJECTORIES)
        .min(n_traj);
    let xvar = ObservableSet::resolve(&[Observable::PositionVariance { particle: 0 }], &ex.space)?;
    if n_show > 0 {
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n_show);
        let mut times = Vec::new();
        for i in 0..n_show {
            let tcfg = cfg
                .clone()
                .with_seed(ctx.seed, i as u64)
                .with_observables(xvar.clone())
                .with_retain(Retain {
                    states: false,
                    record: false,
                });
            let tr = single_trajectory(kind, ex, &tcfg)?;
            columns.push(tr.observables.iter().map(|row| row[0]).collect());
            times = tr.times;
        }
        let cnames: Vec<String> = (0..n_show).map(|i| format!("x_var:traj{i}")).collect();
        let crows: Vec<Vec<f64>> = (0..times.len())
            .map(|k| columns.iter().map(|c| c[k]).collect())
            .collect();
        out.write_csv("collapse.csv", &cnames, &times, &crows)?;
    }

    let mut report = format!(
        "{kind:?} ensemble of {n_traj}: max trace distance to master reference {:.4e}\n",
        summary.max_trace_distance()
    );
    if born {
        let b = collapse_statistics(&run.final_states, &ex.psi0)?;
        let mut buf = Vec::new();
        let mut max_x_var: f64 = 0.0;
        for (st, o) in run.final_states.iter().zip(&b.outcomes) {
            if o.is_some() {
                buf.clear();
                xvar.evaluate(st.view(), &mut buf);
                max_x_var = max_x_var.max(buf[0]);
            }
        }
        out.write_json(
            "born.json",
            &BornOutput {
                report: &b,
                max_collapsed_x_var: max_x_var,
                within_3_sigma: b.within_sigma(3.0),
            },
        )?;
        out.write_text("born.txt", &b.to_table())?;
        report.push_str(&b.to_table());
    }
    let diag = EnsembleDiagnostics {
        mode: kind,
        n_traj,
        reference_dt,
        max_trace_distance: summary.max_trace_distance(),
        total_jumps: run.total_jumps,
        suppressed_jumps: run.suppressed_jumps,
        rms_norm_drift: run.rms_norm_drift,
        collapse_trajectories: n_show,
        born_written: born,
        dephasing: ex.dephasing()?,
    };
    out.write_json("diagnostics.json", &diag)?;
    Ok(Outcome {
        passed: true,
        report,
    })
}

/// Experiment pipeline by subcommand name.
pub fn run_experiment(
    name: &str,
    config: ExperimentConfig,
    ctx: &RunContext,
    out: &mut OutputDir,
) -> anyhow::Result<Outcome> {
    let ex = Experiment::build(config, ctx.strict)?;
    match name {
        "kernel-check" => kernel_check(&ex, out),
        "decohere" => decohere(&ex, ctx, out),
        "filter" => filter(&ex, ctx, out),
        "jump" => jump(&ex, ctx, out),
        "ensemble" => ensemble(&ex, ctx, out),
        other => anyhow::bail!("unknown subcommand {other}"),
    }
}

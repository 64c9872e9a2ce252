//! Experiment configuration: JSON schema types, validation with field
//! paths, and assembly of the physical objects.

use std::path::Path;

use anyhow::{bail, Context};
use dpfilter_core::dynamics::{FilterForm, Observable, ObservableSet, QuantumState, Unraveling};
use dpfilter_core::kernel::{
    build_grid, build_kernel, spectral_decompose, DecomposeOptions, Kernel, KernelFamily,
    PhysicalConstants, SpatialGrid, SpectralDecomposition,
};
use dpfilter_core::quantum_ops::{
    build_space, collapse_set, hamiltonian, mass_density_family, CollapseSet, HamiltonianKind,
    HilbertSpace, MassDensityFamily, Operator, ParticleSpec, DEFAULT_DIM_CAP,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A configuration problem tied to a field path such as `run.dt`.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at {}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn field_error(path: impl Into<String>, message: impl Into<String>) -> anyhow::Error {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
    .into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub constants: ConstantsConfig,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub particles: Vec<ParticleConfig>,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(rename = "G")]
    pub g: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n_per_axis: usize,
    /// Half-width of the cubic box.
    pub extent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `newtonian_mollified`, `gaussian`, `exponential` or `custom`.
    pub family: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Width of the mass-density mollifier; defaults to the lattice spacing.
    #[serde(default)]
    pub mollifier_sigma: Option<f64>,
    /// Absolute eigenvalue cut-off of the Mercer expansion.
    #[serde(default)]
    pub rank_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub mass: f64,
    pub state: StateSpec,
}

/// Initial single-particle wavefunction on the lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Site {
        site: usize,
    },
    /// Amplitudes default to equal weights; `probabilities` gives real
    /// non-negative amplitudes `√p`.
    Superposition {
        sites: Vec<usize>,
        #[serde(default)]
        amplitudes: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        probabilities: Option<Vec<f64>>,
    },
    /// Gaussian packet `exp(−|x−c|²/4w² + i k·x)`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        momentum: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        HamiltonianConfig {
            kind: "zero".into(),
            params: Map::new(),
        }
    }
}

/// Which dynamics a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Master,
    Homodyne,
    DensityFilter,
    Counting,
}

impl Mode {
    pub fn unraveling(self) -> Option<Unraveling> {
        match self {
            Mode::Master => None,
            Mode::Homodyne => Some(Unraveling::Homodyne),
            Mode::DensityFilter => Some(Unraveling::DensityFilter),
            Mode::Counting => Some(Unraveling::Counting),
        }
    }
}

/// Starting estimate of the density-matrix filter in `filter` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPrior {
    #[default]
    MaximallyMixed,
    TrueState,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub filter_form: FilterForm,
    #[serde(default)]
    pub filter_prior: FilterPrior,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default)]
    pub observables: Option<Vec<String>>,
    /// Basis pair whose coherence `decohere` fits; defaults to the two
    /// largest amplitudes of the initial state.
    #[serde(default)]
    pub coherence: Option<[usize; 2]>,
    /// Trajectories written individually by `ensemble`.
    #[serde(default)]
    pub trajectories: Option<usize>,
}

pub const DEFAULT_OBSERVABLES: [&str; 4] = ["trace", "purity", "x_mean", "x_var"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_error(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, Vec<u8>)> {
        let bytes =
            std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Checks that do not need the physics objects.
    pub fn validate(&self) -> anyhow::Result<()> {
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field_error(
                    path,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        positive("constants.G", self.constants.g)?;
        positive("constants.hbar", self.constants.hbar)?;
        positive("grid.extent", self.grid.extent)?;
        if !(1..=3).contains(&self.grid.dim) {
            return Err(field_error(
                "grid.dim",
                format!("must be 1, 2 or 3, got {}", self.grid.dim),
            ));
        }
        if self.grid.n_per_axis < 2 {
            return Err(field_error("grid.n_per_axis", "must be at least 2"));
        }
        if let Some(s) = self.kernel.mollifier_sigma {
            positive("kernel.mollifier_sigma", s)?;
        }
        if let Some(t) = self.kernel.rank_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(field_error(
                    "kernel.rank_tol",
                    format!("must be non-negative, got {t}"),
                ));
            }
        }
        if self.particles.is_empty() {
            return Err(field_error(
                "particles",
                "at least one particle is required",
            ));
        }
        for (i, p) in self.particles.iter().enumerate() {
            if !(p.mass >= 0.0 && p.mass.is_finite()) {
                return Err(field_error(
                    format!("particles[{i}].mass"),
                    format!("must be non-negative, got {}", p.mass),
                ));
            }
        }
        positive("run.dt", self.run.dt)?;
        if self.run.n_steps == 0 {
            return Err(field_error("run.n_steps", "must be at least 1"));
        }
        if self.run.n_traj == 0 {
            return Err(field_error("run.n_traj", "must be at least 1"));
        }
        if self.run.record_stride == 0 || self.run.record_stride > self.run.n_steps {
            return Err(field_error(
                "run.record_stride",
                "must lie between 1 and run.n_steps",
            ));
        }
        if let Some(obs) = &self.outputs.observables {
            for (i, name) in obs.iter().enumerate() {
                name.parse::<Observable>()
                    .map_err(|e| field_error(format!("outputs.observables[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn kernel_family(&self) -> anyhow::Result<KernelFamily> {
        tagged(&self.kernel.family, &self.kernel.params, "kernel")
    }

    pub fn hamiltonian_kind(&self) -> anyhow::Result<HamiltonianKind> {
        tagged(
            &self.hamiltonian.kind,
            &self.hamiltonian.params,
            "hamiltonian",
        )
    }

    pub fn observable_names(&self) -> Vec<String> {
        match &self.outputs.observables {
            Some(list) => list.clone(),
            None => DEFAULT_OBSERVABLES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Builds `{"kind": kind, ...params}` and deserializes it, so parameter
/// errors are reported under `<section>.params`.
fn tagged<T: serde::de::DeserializeOwned>(
    kind: &str,
    params: &Map<String, Value>,
    section: &str,
) -> anyhow::Result<T> {
    if params.contains_key("kind") {
        return Err(field_error(
            format!("{section}.params.kind"),
            "unknown field",
        ));
    }
    let mut obj = params.clone();
    obj.insert("kind".into(), Value::String(kind.into()));
    serde_path_to_error::deserialize(Value::Object(obj)).map_err(|e| {
        let inner = e.inner().to_string();
        let path = e.path().to_string();
        if inner.contains("unknown variant") {
            let key = if section == "kernel" {
                "family"
            } else {
                "kind"
            };
            field_error(format!("{section}.{key}"), inner)
        } else if path == "." {
            field_error(format!("{section}.params"), inner)
        } else {
            field_error(format!("{section}.params.{path}"), inner)
        }
    })
}

/// The physical objects a subcommand works with.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub constants: PhysicalConstants,
    pub grid: SpatialGrid,
    pub space: HilbertSpace,
    pub family: MassDensityFamily,
    pub kernel: Kernel,
    pub decomp: SpectralDecomposition,
    pub collapse: CollapseSet,
    pub hamiltonian: Operator,
    pub hamiltonian_kind: HamiltonianKind,
    pub psi0: QuantumState,
    pub observables: ObservableSet,
}

/// Grid, kernel and decomposition only.
pub struct KernelSetup {
    pub constants: PhysicalConstants,
    pub grid: SpatialGrid,
    pub kernel: Kernel,
    pub decomp: SpectralDecomposition,
}

pub fn build_kernel_setup(cfg: &ExperimentConfig, strict: bool) -> anyhow::Result<KernelSetup> {
    let constants = PhysicalConstants::new(cfg.constants.g, cfg.constants.hbar)?;
    let grid = build_grid(cfg.grid.dim, cfg.grid.n_per_axis, cfg.grid.extent)?;
    let family = cfg.kernel_family()?;
    let kernel = build_kernel(&grid, family, constants)?;
    let decomp = spectral_decompose(
        &kernel,
        DecomposeOptions {
            rank_tol: cfg.kernel.rank_tol,
            strict,
        },
    )?;
    Ok(KernelSetup {
        constants,
        grid,
        kernel,
        decomp,
    })
}

impl Experiment {
    pub fn build(config: ExperimentConfig, strict: bool) -> anyhow::Result<Self> {
        let KernelSetup {
            constants,
            grid,
            kernel,
            decomp,
        } = build_kernel_setup(&config, strict)?;
        let particles = config
            .particles
            .iter()
            .map(|p| ParticleSpec {
                mass: p.mass,
                grid: grid.clone(),
            })
            .collect();
        let space = build_space(particles, DEFAULT_DIM_CAP)?;
        let sigma = config.kernel.mollifier_sigma.unwrap_or(grid.spacing());
        let family = mass_density_family(&space, &grid, sigma)?;
        let collapse = collapse_set(&family, &kernel, &decomp, constants)?;
        let hamiltonian_kind = config.hamiltonian_kind()?;
        let h = hamiltonian(&space, &hamiltonian_kind)?;
        let psi0 = initial_state(&config, &grid)?;
        let list: Vec<Observable> = config
            .observable_names()
            .iter()
            .map(|n| n.parse())
            .collect::<Result<_, _>>()?;
        let observables = ObservableSet::resolve(&list, &space)
            .map_err(|e| field_error("outputs.observables", e.to_string()))?;
        Ok(Experiment {
            config,
            constants,
            grid,
            space,
            family,
            kernel,
            decomp,
            collapse,
            hamiltonian: h,
            hamiltonian_kind,
            psi0,
            observables,
        })
    }
}

fn particle_amplitudes(
    i: usize,
    spec: &StateSpec,
    grid: &SpatialGrid,
) -> anyhow::Result<Vec<Complex64>> {
    let n = grid.len();
    let path = |f: &str| format!("particles[{i}].state.{f}");
    let mut amp = vec![Complex64::new(0.0, 0.0); n];
    match spec {
        StateSpec::Site { site } => {
            if *site >= n {
                return Err(field_error(
                    path("site"),
                    format!("site {site} out of range for {n} sites"),
                ));
            }
            amp[*site] = Complex64::new(1.0, 0.0);
        }
        StateSpec::Superposition {
            sites,
            amplitudes,
            probabilities,
        } => {
            if sites.is_empty() {
                return Err(field_error(path("sites"), "must list at least one site"));
            }
            let coeffs: Vec<Complex64> = match (amplitudes, probabilities) {
                (Some(_), Some(_)) => {
                    return Err(field_error(
                        path("amplitudes"),
                        "give amplitudes or probabilities, not both",
                    ))
                }
                (Some(a), None) => {
                    if a.len() != sites.len() {
                        return Err(field_error(
                            path("amplitudes"),
                            "must have one entry per site",
                        ));
                    }
                    a.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
                }
                (None, Some(p)) => {
                    if p.len() != sites.len() {
                        return Err(field_error(
                            path("probabilities"),
                            "must have one entry per site",
                        ));
                    }
                    if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                        return Err(field_error(path("probabilities"), "must be non-negative"));
                    }
                    p.iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect()
                }
                (None, None) => vec![Complex64::new(1.0, 0.0); sites.len()],
            };
            for (j, (&s, c)) in sites.iter().zip(coeffs).enumerate() {
                if s >= n {
                    return Err(field_error(
                        format!("{}[{j}]", path("sites")),
                        format!("site {s} out of range for {n} sites"),
                    ));
                }
                amp[s] += c;
            }
        }
        StateSpec::Gaussian {
            center,
            width,
            momentum,
        } => {
            let dim = grid.dim();
            if center.len() != dim {
                return Err(field_error(
                    path("center"),
                    format!("must have {dim} coordinates"),
                ));
            }
            if !momentum.is_empty() && momentum.len() != dim {
                return Err(field_error(
                    path("momentum"),
                    format!("must be empty or have {dim} coordinates"),
                ));
            }
            if !(*width > 0.0 && width.is_finite()) {
                return Err(field_error(path("width"), "must be positive"));
            }
            for (j, a) in amp.iter_mut().enumerate() {
                let x = grid.position(j);
                let r2: f64 = (0..dim).map(|k| (x[k] - center[k]).powi(2)).sum();
                let phase: f64 = momentum.iter().enumerate().map(|(k, p)| p * x[k]).sum();
                *a = Complex64::from_polar((-r2 / (4.0 * width * width)).exp(), phase);
            }
        }
    }
    let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(field_error(
            format!("particles[{i}].state"),
            "amplitudes vanish",
        ));
    }
    Ok(amp.into_iter().map(|z| z / norm).collect())
}

/// Product of the single-particle states, first particle slowest.
pub fn initial_state(cfg: &ExperimentConfig, grid: &SpatialGrid) -> anyhow::Result<QuantumState> {
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for (i, p) in cfg.particles.iter().enumerate() {
        let a = particle_amplitudes(i, &p.state, grid)?;
        psi = psi
            .iter()
            .flat_map(|x| a.iter().map(move |y| x * y))
            .collect();
    }
    if psi.len() > DEFAULT_DIM_CAP {
        bail!(
            "initial state dimension {} exceeds the cap {DEFAULT_DIM_CAP}",
            psi.len()
        );
    }
    Ok(QuantumState::pure_normalized(nalgebra::DVector::from_vec(
        psi,
    ))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "constants": {"G": 1.0, "hbar": 1.0},
        "grid": {"dim": 1, "n_per_axis": 4, "extent": 2.0},
        "kernel": {"family": "newtonian_mollified", "params": {"sigma": 0.5}},
        "particles": [{"mass": 1.0, "state": {"kind": "superposition", "sites": [0, 3]}}],
        "run": {"dt": 0.01, "n_steps": 10}
    }"#;

    fn patched(f: impl FnOnce(&mut Value)) -> String {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn error_path(text: &str) -> String {
        let e = ExperimentConfig::parse(text).unwrap_err();
        e.downcast::<ConfigError>().expect("config error").path
    }

    #[test]
    fn minimal_config_builds() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.run.n_traj, 1);
        assert_eq!(cfg.observable_names().len(), 4);
        let ex = Experiment::build(cfg, false).unwrap();
        assert_eq!(ex.space.dimension(), 4);
        assert!((ex.psi0.view().population(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            error_path(&patched(|v| v["run"]["dt"] = (-0.1).into())),
            "run.dt"
        );
        assert_eq!(
            error_path(&patched(|v| v["run"]["bogus"] = 1.into())),
            "run.bogus"
        );
        assert_eq!(
            error_path(&patched(|v| v["constants"]["G"] = "x".into())),
            "constants.G"
        );
        assert_eq!(
            error_path(&patched(|v| v["particles"][0]["mass"] = (-1.0).into())),
            "particles[0].mass"
        );
        assert_eq!(
            error_path(&patched(
                |v| v["outputs"] = serde_json::json!({"observables": ["nope"]})
            )),
            "outputs.observables[0]"
        );
        let cfg =
            ExperimentConfig::parse(&patched(|v| v["kernel"]["family"] = "lorentzian".into()))
                .unwrap();
        let e = cfg
            .kernel_family()
            .unwrap_err()
            .downcast::<ConfigError>()
            .unwrap();
        assert_eq!(e.path, "kernel.family");
        let cfg = ExperimentConfig::parse(&patched(|v| {
            v["kernel"]["params"] = serde_json::json!({"length": 1.0})
        }))
        .unwrap();
        let e = cfg
            .kernel_family()
            .unwrap_err()
            .downcast::<ConfigError>()
            .unwrap();
        assert!(e.path.starts_with("kernel.params"), "{}", e.path);
    }

    #[test]
    fn product_states_and_probabilities() {
        let text = patched(|v| {
            v["particles"] = serde_json::json!([
                {"mass": 1.0, "state": {"kind": "superposition", "sites": [0, 1], "probabilities": [0.8, 0.2]}},
                {"mass": 2.0, "state": {"kind": "site", "site": 2}}
            ])
        });
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let grid = build_grid(1, 4, 2.0).unwrap();
        let psi = initial_state(&cfg, &grid).unwrap();
        assert_eq!(psi.dimension(), 16);
        assert!((psi.view().population(2) - 0.8).abs() < 1e-15);
        assert!((psi.view().population(4 + 2) - 0.2).abs() < 1e-15);
    }
}

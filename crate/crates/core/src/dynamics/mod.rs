//! Time evolution: the deterministic master equation, the diffusive
//! (homodyne) stochastic Schrödinger equation and density-matrix filter,
//! and the number-counting jump filter.
//!
//! Every stochastic integrator draws its randomness from the stream
//! `(seed, trajectory_index)`, channel `a` of step `s` in `(s, a)` order.

mod config;
mod counting;
mod ensemble;
mod homodyne;
mod master;
mod observable;
mod record;
mod state;
mod trajectory;

pub use config::{trajectory_rng, FilterForm, IntegrationConfig, Retain, Scheme, STABILITY_WARN};
pub use counting::{counting_observe, filter_counting, INTENSITY_FLOOR};
pub use ensemble::{run_ensemble, EnsembleRun, Unraveling, ENSEMBLE_CHUNK};
pub use homodyne::{
    filter_homodyne, filter_homodyne_observe, generate_measurement_record, homodyne_observe,
    homodyne_trajectory, RecordSource, FILTER_POSITIVITY_TOL, NORM_FLOOR,
};
pub use master::{master_evolve, master_observe, MASTER_POSITIVITY_TOL};
pub use observable::{Observable, ObservableSet};
pub use record::{MeasurementRecord, RecordKind};
pub use state::{CVector, QuantumState, StateView, POSITIVITY_TOL, STATE_TOL};
pub use trajectory::{write_csv, Observer, RunSummary, Trajectory};

pub(crate) use trajectory::Collector;

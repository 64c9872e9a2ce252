//! Ensemble statistics, decoherence-rate fits, Born-rule collapse
//! statistics and innovation whiteness tests.

mod born;
mod decay;
mod ensemble;
mod whiteness;

pub use born::{collapse_statistics, BornBin, BornReport, COLLAPSE_FIDELITY};
pub use decay::{coherence_decay_rate, DecayFit, COHERENCE_FLOOR};
pub use ensemble::{ensemble_mean, EnsembleReport, EnsembleSummary, ObservableSeries};
pub use whiteness::{
    innovation_whiteness, ChannelWhiteness, WhitenessOptions, WhitenessReport, MIN_WHITENESS_STEPS,
};

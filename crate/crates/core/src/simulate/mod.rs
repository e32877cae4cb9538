//! Synthetic drift paths and observations, the uniform quantizer, the
//! (quasi-)ML estimator and the Monte-Carlo variance harness.

mod estimate;
mod generate;
mod montecarlo;
mod quantize;

pub use estimate::{ml_estimate, MlEstimator};
pub use generate::{
    domain, gen_drift_path, gen_observations, stream_key, substream, ObservationSet,
};
pub use montecarlo::{
    chi_square_interval, monte_carlo_variance, run_trials, summarize, MonteCarloConfig,
    MonteCarloResult, TrialBatch, MIN_TRIALS,
};
pub use quantize::{uniform_quantize, QuantizedObservations, QuantizerSpec};

//! Cramér-Rao bounds for polynomial signals observed by sensors whose bias
//! drifts as an AR(1) process.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod closed_form;
pub mod covariance;
pub mod error;
pub mod fisher;
mod linalg;
pub mod model;
pub mod simulate;
pub mod study;

pub use approximation::{
    approx_precision, build_m, drift_constants, exact_drift_inverse, residual_diagnostics,
    ApproxPrecision, DriftConstants, MParts, ResidualDiagnostics,
};
pub use closed_form::{
    approx_fim, approximation_region, closed_form_crb, crb_report, effective_xi,
    effective_xi_quantized, max_relative_error, n_epsilon, perturbed_hilbert_inverse_diag,
    polylog_closed, power_sum_coeffs, xi_constants, xtmx_constants, ApproxVariant, CrbMode,
    CrbReport, EffectiveMode, NEpsilon, Regime, XiConstants,
};
pub use covariance::{
    drift_covariance, drift_precision_closed, drift_precision_tridiagonal,
    quantization_adjusted_params, total_covariance, variance_ladder, varrho, CovarianceSet,
    DriftCorrelation, QuantizedParams,
};
pub use error::{Error, Result};
pub use fisher::{
    exact_crb, exact_fim, network_crb, network_fim, sensor_crb, sensor_fim, CrbExact, FimExact,
    FimMethod,
};
pub use linalg::{SymTridiagonal, CONDITION_LIMIT};
pub use model::{
    build_design_matrix, eval_signal, validate_drift_params, CalibrationAge, DesignMatrix,
    DriftParams, Interval, NetworkSpec, ParamBox, SignalSpec, MAX_ORDER,
};
pub use simulate::{
    gen_drift_path, gen_observations, ml_estimate, monte_carlo_variance, uniform_quantize,
    MlEstimator, MonteCarloConfig, MonteCarloResult, ObservationSet, QuantizerSpec,
};

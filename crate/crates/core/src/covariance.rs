//! Drift correlation `R`, its tridiagonal precision, and the total error
//! covariance `Sigma = sigma2 (I + gamma R)` of a single sensor.
//!
//! With calibration age `tau`, the drift is zero at index `1 - tau` and the
//! variance ladder is `S_n = sum_{j=0}^{n+tau-2} rho^{2j}` (in units of
//! `gamma * sigma2`). This indexing is the one for which the tridiagonal
//! precision below is the exact inverse of `R`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;
use crate::model::{CalibrationAge, DriftParams};

/// `sum_{j=0}^{count-1} ratio^j` for `ratio = rho^2`, accurate for `rho` near 1.
fn geometric_sum_rho2(rho: f64, count: u64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    if rho == 1.0 {
        return count as f64;
    }
    if rho == 0.0 {
        return 1.0;
    }
    let ln_ratio = 2.0 * rho.ln();
    -(count as f64 * ln_ratio).exp_m1() / ((1.0 - rho) * (1.0 + rho))
}

/// Top-left correction `rho^{2 tau} / (1 + rho^2 + ... + rho^{2 tau - 2})` of the
/// precision matrix; zero for an uncalibrated sensor.
pub fn varrho(rho: f64, tau: CalibrationAge) -> f64 {
    match tau {
        CalibrationAge::Uncalibrated => 0.0,
        CalibrationAge::Finite(t) => {
            if rho == 0.0 {
                return 0.0;
            }
            let lead = (2.0 * t as f64 * rho.ln()).exp();
            lead / geometric_sum_rho2(rho, t as u64)
        }
    }
}

/// `S_1 .. S_N` (dimensionless drift variances in units of `gamma * sigma2`).
pub fn variance_ladder(rho: f64, tau: CalibrationAge, n_samples: usize) -> Result<Vec<f64>> {
    match tau {
        CalibrationAge::Uncalibrated => {
            if rho >= 1.0 {
                return Err(Error::domain(
                    "rho",
                    "stationary variance diverges for rho = 1",
                ));
            }
            Ok(vec![1.0 / ((1.0 - rho) * (1.0 + rho)); n_samples])
        }
        CalibrationAge::Finite(t) => {
            let mut ladder = Vec::with_capacity(n_samples);
            let mut s = geometric_sum_rho2(rho, t as u64);
            for _ in 0..n_samples {
                ladder.push(s);
                s = rho * rho * s + 1.0;
            }
            Ok(ladder)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCorrelation {
    /// `gamma * sigma2 * r` is the covariance of the drift vector.
    pub r: DMatrix<f64>,
    pub s_ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub params: DriftParams,
    pub drift: DriftCorrelation,
    pub sigma: DMatrix<f64>,
}

impl CovarianceSet {
    pub fn n_samples(&self) -> usize {
        self.sigma.nrows()
    }
}

pub fn drift_covariance(params: &DriftParams, n_samples: usize) -> Result<DriftCorrelation> {
    let params = params.validate()?;
    if n_samples == 0 {
        return Err(Error::domain("n_samples", "must be at least 1"));
    }
    let rho = params.rho;
    let s_ladder = variance_ladder(rho, params.tau, n_samples)?;
    let powers: Vec<f64> = (0..n_samples).map(|k| rho.powi(k as i32)).collect();
    let r = DMatrix::from_fn(n_samples, n_samples, |i, j| {
        powers[i.abs_diff(j)] * s_ladder[i.min(j)]
    });
    Ok(DriftCorrelation { r, s_ladder })
}

/// Exact inverse of `R` in banded form.
pub fn drift_precision_tridiagonal(
    params: &DriftParams,
    n_samples: usize,
) -> Result<SymTridiagonal> {
    let params = params.validate()?;
    if n_samples == 0 {
        return Err(Error::domain("n_samples", "must be at least 1"));
    }
    let rho = params.rho;
    if params.tau == CalibrationAge::Uncalibrated && rho >= 1.0 {
        return Err(Error::domain(
            "rho",
            "stationary variance diverges for rho = 1",
        ));
    }
    if n_samples == 1 {
        let s1 = variance_ladder(rho, params.tau, 1)?[0];
        return Ok(SymTridiagonal {
            diag: vec![1.0 / s1],
            off: 0.0,
        });
    }
    let mut diag = vec![1.0 + rho * rho; n_samples];
    diag[0] = 1.0 + varrho(rho, params.tau);
    diag[n_samples - 1] = 1.0;
    Ok(SymTridiagonal { diag, off: -rho })
}

pub fn drift_precision_closed(params: &DriftParams, n_samples: usize) -> Result<DMatrix<f64>> {
    Ok(drift_precision_tridiagonal(params, n_samples)?.to_dense())
}

pub fn total_covariance(params: &DriftParams, n_samples: usize) -> Result<CovarianceSet> {
    let drift = drift_covariance(params, n_samples)?;
    let scale = params.sigma2;
    let gamma = params.gamma;
    let sigma = DMatrix::from_fn(n_samples, n_samples, |i, j| {
        let white = if i == j { 1.0 } else { 0.0 };
        scale * (white + gamma * drift.r[(i, j)])
    });
    Ok(CovarianceSet {
        params: *params,
        drift,
        sigma,
    })
}

/// Noise parameters seen by the quasi-ML estimator when quantization adds
/// white distortion of variance `sigma2_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedParams {
    pub sigma2_tilde: f64,
    pub gamma_tilde: f64,
    pub sigma2_q: f64,
}

impl QuantizedParams {
    /// The sensor description with `(sigma2, gamma)` replaced by their adjusted values.
    pub fn apply_to(&self, params: &DriftParams) -> DriftParams {
        DriftParams {
            sigma2: self.sigma2_tilde,
            gamma: self.gamma_tilde,
            ..*params
        }
    }
}

pub fn quantization_adjusted_params(
    params: &DriftParams,
    sigma2_q: f64,
) -> Result<QuantizedParams> {
    let params = params.validate()?;
    if !(sigma2_q.is_finite() && sigma2_q >= 0.0) {
        return Err(Error::domain(
            "sigma2_q",
            format!("must be non-negative, got {sigma2_q}"),
        ));
    }
    Ok(QuantizedParams {
        sigma2_tilde: params.sigma2 + sigma2_q,
        gamma_tilde: params.gamma / (1.0 + sigma2_q / params.sigma2),
        sigma2_q,
    })
}

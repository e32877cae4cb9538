use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::estimate::MlEstimator;
use super::generate::{domain, fill_drift, stream_key, substream};
use super::quantize::QuantizerSpec;
use crate::error::{Error, Result};
use crate::model::{eval_signal, DriftParams, SignalSpec};

pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub sensors: Vec<DriftParams>,
    pub signal: SignalSpec,
    pub n_samples: usize,
    pub trials: usize,
    pub seed: u64,
    /// When set, observations are quantized and the quasi-ML estimator is used.
    pub quantizer: Option<QuantizerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    /// Mean squared error about the true coefficients.
    pub variance: Vec<f64>,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    /// Standard error of `bias`.
    pub bias_se: Vec<f64>,
    pub variance_about_mean: Vec<f64>,
    /// 95% chi-square interval for the true variance.
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Fraction of quantized samples that fell outside the quantizer range.
    pub clip_rate: f64,
}

/// Estimation errors `beta_hat - beta` of a batch of trials, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub errors: Vec<Vec<f64>>,
    pub clipped: u64,
    pub samples: u64,
}

/// Run `trials` independent trials; trial `t` draws from substream `t` of `key`.
pub fn run_trials(
    estimator: &MlEstimator,
    sensors: &[DriftParams],
    signal: &SignalSpec,
    key: u64,
    trials: usize,
    quantizer: Option<&QuantizerSpec>,
) -> Result<TrialBatch> {
    let n = estimator.n_samples();
    if sensors.len() != estimator.sensor_count() {
        return Err(Error::domain(
            "sensors",
            "estimator and sensor list differ in size",
        ));
    }
    if signal.order() != estimator.order() {
        return Err(Error::domain(
            "beta",
            "signal order differs from estimator order",
        ));
    }
    let x = eval_signal(signal, n)?;
    let sensors = sensors
        .iter()
        .map(|s| s.validate())
        .collect::<Result<Vec<_>>>()?;
    let size = estimator.order() + 1;

    let per_trial: Vec<(Vec<f64>, u64)> = (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(drift, z), t| {
                let mut rng = substream(key, t as u64);
                let mut score = vec![0.0; size];
                let mut clipped = 0;
                for (m, params) in sensors.iter().enumerate() {
                    fill_drift(params, drift, &mut rng);
                    let sd = params.sigma2.sqrt();
                    for i in 0..n {
                        let v = x[i] + drift[i] + sd * rng.sample::<f64, _>(StandardNormal);
                        z[i] = match quantizer {
                            Some(q) => {
                                let (level, c) = q.quantize(v);
                                clipped += c as u64;
                                level
                            }
                            None => v,
                        };
                    }
                    estimator.accumulate(m, z, &mut score);
                }
                let beta_hat = estimator.finish(&score);
                let errors = (0..size).map(|p| beta_hat[p] - signal.beta[p]).collect();
                (errors, clipped)
            },
        )
        .collect();

    let clipped = per_trial.iter().map(|(_, c)| c).sum();
    Ok(TrialBatch {
        errors: per_trial.into_iter().map(|(e, _)| e).collect(),
        clipped,
        samples: (trials * n * sensors.len()) as u64,
    })
}

/// 95% interval for a variance whose estimate `variance` averages `trials`
/// squared zero-mean Gaussian errors.
pub fn chi_square_interval(variance: f64, trials: usize) -> (f64, f64) {
    let dist = ChiSquared::new(trials as f64).expect("positive degrees of freedom");
    let total = variance * trials as f64;
    (
        total / dist.inverse_cdf(0.975),
        total / dist.inverse_cdf(0.025),
    )
}

pub fn summarize(batch: &TrialBatch, beta: &[f64], seed: u64) -> MonteCarloResult {
    let trials = batch.errors.len();
    let size = batch.errors.first().map_or(0, Vec::len);
    let t = trials as f64;
    let mut result = MonteCarloResult {
        variance: vec![0.0; size],
        mean: vec![0.0; size],
        bias: vec![0.0; size],
        bias_se: vec![0.0; size],
        variance_about_mean: vec![0.0; size],
        ci_low: vec![0.0; size],
        ci_high: vec![0.0; size],
        trials,
        seed,
        clip_rate: if batch.samples == 0 {
            0.0
        } else {
            batch.clipped as f64 / batch.samples as f64
        },
    };
    for p in 0..size {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for e in &batch.errors {
            sum += e[p];
            sum_sq += e[p] * e[p];
        }
        let bias = sum / t;
        let variance = sum_sq / t;
        let about_mean = batch
            .errors
            .iter()
            .map(|e| (e[p] - bias).powi(2))
            .sum::<f64>()
            / t;
        let (lo, hi) = chi_square_interval(variance, trials);
        result.variance[p] = variance;
        result.bias[p] = bias;
        result.mean[p] = beta[p] + bias;
        result.bias_se[p] = (about_mean / (t - 1.0)).sqrt();
        result.variance_about_mean[p] = about_mean;
        result.ci_low[p] = lo;
        result.ci_high[p] = hi;
    }
    result
}

pub fn monte_carlo_variance(config: &MonteCarloConfig) -> Result<MonteCarloResult> {
    if config.trials < MIN_TRIALS {
        return Err(Error::domain(
            "trials",
            format!("need at least {MIN_TRIALS} trials, got {}", config.trials),
        ));
    }
    let order = config.signal.order();
    let estimator = match &config.quantizer {
        Some(q) => MlEstimator::quasi(&config.sensors, config.n_samples, order, q.sigma2_q)?,
        None => MlEstimator::new(&config.sensors, config.n_samples, order)?,
    };
    let batch = run_trials(
        &estimator,
        &config.sensors,
        &config.signal,
        stream_key(config.seed, domain::TRIALS),
        config.trials,
        config.quantizer.as_ref(),
    )?;
    Ok(summarize(&batch, &config.signal.beta, config.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CalibrationAge;

    fn awgn_config(seed: u64) -> MonteCarloConfig {
        MonteCarloConfig {
            sensors: vec![DriftParams::awgn(1.0).unwrap()],
            signal: SignalSpec::new(vec![2.0]).unwrap(),
            n_samples: 100,
            trials: 4000,
            seed,
            quantizer: None,
        }
    }

    #[test]
    fn white_noise_variance() {
        let r = monte_carlo_variance(&awgn_config(11)).unwrap();
        assert!(r.ci_low[0] <= 0.01 && 0.01 <= r.ci_high[0], "{r:?}");
        assert!(r.ci_low[0] <= r.variance[0] && r.variance[0] <= r.ci_high[0]);
        assert!(r.bias[0].abs() < 5.0 * r.bias_se[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = monte_carlo_variance(&awgn_config(3)).unwrap();
        let b = monte_carlo_variance(&awgn_config(3)).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_variance(&awgn_config(4)).unwrap();
        assert_ne!(a.variance, c.variance);
        assert!(a.ci_low[0] <= c.ci_high[0] && c.ci_low[0] <= a.ci_high[0]);
    }

    #[test]
    fn variance_splits_into_spread_and_bias() {
        let mut cfg = awgn_config(5);
        cfg.sensors = vec![DriftParams::new(1.0, 0.5, 0.9, CalibrationAge::Finite(2)).unwrap()];
        cfg.signal = SignalSpec::new(vec![1.0, 0.1]).unwrap();
        cfg.trials = 500;
        let r = monte_carlo_variance(&cfg).unwrap();
        for p in 0..2 {
            let rebuilt = r.variance_about_mean[p] + r.bias[p] * r.bias[p];
            assert!((rebuilt - r.variance[p]).abs() <= 1e-12 * r.variance[p]);
        }
    }

    #[test]
    fn too_few_trials() {
        let mut cfg = awgn_config(1);
        cfg.trials = 1;
        assert!(matches!(
            monte_carlo_variance(&cfg),
            Err(Error::Domain {
                param: "trials",
                ..
            })
        ));
    }

    #[test]
    fn chi_square_interval_brackets_estimate() {
        let (lo, hi) = chi_square_interval(1.0, 10_000);
        assert!(lo < 1.0 && hi > 1.0);
        assert!((hi - lo) < 0.06);
    }
}

use serde::Serialize;

use driftcrb::{
    monte_carlo_variance, network_crb, quantization_adjusted_params, MonteCarloConfig,
    MonteCarloResult, NetworkSpec, QuantizerSpec,
};

use super::{Context, Report};
use crate::config::ConfigError;
use crate::output;

#[derive(Debug, Serialize)]
struct Outcome {
    tau: String,
    #[serde(rename = "N")]
    n: usize,
    bits: Option<u32>,
    /// Exact bound, under quantization-adjusted parameters when quantized.
    crb: Vec<f64>,
    monte_carlo: MonteCarloResult,
}

pub fn run(ctx: &Context) -> anyhow::Result<Report> {
    let config = &ctx.loaded.config;
    let sets = config.sensor_sets()?;
    let [(tau, sensors)] = sets.as_slice() else {
        return Err(ConfigError("montecarlo takes a single calibration age".into()).into());
    };
    let n = config.single_n()?;
    let signal = config.signal()?;
    let quantizer = match &config.quantizer {
        Some(q) => match q.bits.to_vec().as_slice() {
            [bits] => Some(QuantizerSpec::new(q.u0, q.u1, *bits)?),
            _ => {
                return Err(ConfigError("montecarlo takes a single `quantizer.bits`".into()).into())
            }
        },
        None => None,
    };
    let sigma2_q = quantizer.map_or(0.0, |q| q.sigma2_q);
    let adjusted = sensors
        .iter()
        .map(|p| Ok(quantization_adjusted_params(p, sigma2_q)?.apply_to(p)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let crb = network_crb(&NetworkSpec::new(adjusted)?, n, signal.order())?.diag;
    let monte_carlo = monte_carlo_variance(&MonteCarloConfig {
        sensors: sensors.clone(),
        signal,
        n_samples: n,
        trials: config.trials(1000),
        seed: ctx.seed,
        quantizer,
    })?;
    let outcome = Outcome {
        tau: tau.clone(),
        n,
        bits: quantizer.map(|q| q.bits),
        crb,
        monte_carlo,
    };
    Ok(Report {
        bytes: output::json(&ctx.meta("montecarlo"), &outcome)?,
        warnings: Vec::new(),
    })
}

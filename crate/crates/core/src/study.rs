//! Parameter sweeps and Monte-Carlo studies built from the library pieces.

use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::closed_form::{
    closed_form_crb, effective_xi, effective_xi_quantized, n_epsilon, ApproxVariant, CrbMode,
    EffectiveMode,
};
use crate::error::{Error, Result};
use crate::fisher::network_crb;
use crate::model::{CalibrationAge, DriftParams, NetworkSpec, ParamBox, SignalSpec};
use crate::simulate::{
    domain, run_trials, stream_key, substream, summarize, MlEstimator, QuantizerSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MreMapSpec {
    pub rhos: Vec<f64>,
    pub gammas: Vec<f64>,
    pub taus: Vec<CalibrationAge>,
    pub sigma2: f64,
    pub order: usize,
    pub epsilon: f64,
    pub variants: Vec<ApproxVariant>,
    /// Give up on a cell once `N` reaches this size.
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MreMapCell {
    pub rho: f64,
    pub gamma: f64,
    pub tau: CalibrationAge,
    pub variant: ApproxVariant,
    pub n_epsilon: Option<usize>,
    pub mre: f64,
    pub reason: Option<String>,
}

/// `N_epsilon` for every `(tau, variant, rho, gamma)` cell, in that nesting order.
pub fn mre_map(spec: &MreMapSpec) -> Vec<MreMapCell> {
    let mut cells = Vec::new();
    for &tau in &spec.taus {
        for &variant in &spec.variants {
            for &rho in &spec.rhos {
                for &gamma in &spec.gammas {
                    cells.push((tau, variant, rho, gamma));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(tau, variant, rho, gamma)| {
            let found = DriftParams::new(spec.sigma2, gamma, rho, tau)
                .and_then(|p| NetworkSpec::new(vec![p]))
                .and_then(|net| n_epsilon(&net, spec.order, spec.epsilon, variant, spec.n_max));
            let (n_epsilon, mre, reason) = match found {
                Ok(found) => (found.n, found.mre, found.reason),
                Err(e) => (None, f64::NAN, Some(e.to_string())),
            };
            MreMapCell {
                rho,
                gamma,
                tau,
                variant,
                n_epsilon,
                mre,
                reason,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultisensorSpec {
    /// Sensor ranges; the box's own `tau` is replaced by each entry of `taus`.
    pub param_box: ParamBox,
    pub taus: Vec<CalibrationAge>,
    pub signal: SignalSpec,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// Random networks per `(M, N)` cell.
    pub draws: usize,
    /// Monte-Carlo trials per network.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultisensorRow {
    pub tau: CalibrationAge,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Bound from box-averaged constants.
    pub avg_crb: f64,
    /// Mean over networks of the per-network Monte-Carlo variance.
    pub mc_variance: f64,
    /// 2.5% and 97.5% quantiles of the per-network Monte-Carlo variance.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean and 95% range of the per-network exact bound.
    pub exact_mean: f64,
    pub exact_low: f64,
    pub exact_high: f64,
}

fn band(values: Vec<f64>) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut data = Data::new(values);
    (mean, data.quantile(0.025), data.quantile(0.975))
}

/// Trial stream family for network draw `draw`.
fn draw_trial_key(seed: u64, draw: usize) -> u64 {
    stream_key(seed, domain::TRIALS ^ ((draw as u64 + 1) << 16))
}

pub fn multisensor_study(spec: &MultisensorSpec) -> Result<Vec<MultisensorRow>> {
    if spec.draws < 2 {
        return Err(Error::domain("draws", "need at least two network draws"));
    }
    if spec.trials < 2 {
        return Err(Error::domain(
            "trials",
            "need at least two trials per network",
        ));
    }
    let order = spec.signal.order();
    let m_max = spec
        .m_list
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::domain("M", "empty list"))?;
    let draw_key = stream_key(spec.seed, domain::NETWORK_DRAWS);
    let mut rows = Vec::new();
    for &tau in &spec.taus {
        let param_box = ParamBox {
            tau,
            ..spec.param_box
        };
        param_box.validate()?;
        // The same networks serve every (N, M, tau) cell.
        let networks: Vec<Vec<DriftParams>> = (0..spec.draws)
            .map(|d| {
                let mut rng = substream(draw_key, d as u64);
                (0..m_max).map(|_| param_box.sample(&mut rng)).collect()
            })
            .collect();
        for &n in &spec.n_list {
            for &m in &spec.m_list {
                let xi = effective_xi(
                    &NetworkSpec::from_box(param_box)?,
                    EffectiveMode::Integral { sensors: m },
                )?;
                let avg = closed_form_crb(&xi, n, order, CrbMode::FimApprox)?.diag;
                let mut mc = vec![Vec::with_capacity(spec.draws); order + 1];
                let mut exact = vec![Vec::with_capacity(spec.draws); order + 1];
                for (d, sensors) in networks.iter().enumerate() {
                    let sensors = &sensors[..m];
                    let crb = network_crb(&NetworkSpec::new(sensors.to_vec())?, n, order)?.diag;
                    let estimator = MlEstimator::new(sensors, n, order)?;
                    let batch = run_trials(
                        &estimator,
                        sensors,
                        &spec.signal,
                        draw_trial_key(spec.seed, d),
                        spec.trials,
                        None,
                    )?;
                    let result = summarize(&batch, &spec.signal.beta, spec.seed);
                    for p in 0..=order {
                        mc[p].push(result.variance[p]);
                        exact[p].push(crb[p]);
                    }
                }
                for p in 0..=order {
                    let (mc_variance, ci_low, ci_high) = band(std::mem::take(&mut mc[p]));
                    let (exact_mean, exact_low, exact_high) = band(std::mem::take(&mut exact[p]));
                    rows.push(MultisensorRow {
                        tau,
                        n,
                        m,
                        p,
                        avg_crb: avg[p],
                        mc_variance,
                        ci_low,
                        ci_high,
                        exact_mean,
                        exact_low,
                        exact_high,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedStudySpec {
    pub sensors: Vec<DriftParams>,
    pub signal: SignalSpec,
    pub n_samples: usize,
    pub u0: f64,
    pub u1: f64,
    pub bits: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizedRow {
    /// `None` is the unquantized reference.
    pub bits: Option<u32>,
    pub p: usize,
    /// Exact bound under the quantization-adjusted sensor parameters.
    pub modified_crb: f64,
    /// Closed-form second-order version of the same bound.
    pub modified_crb_closed: f64,
    pub mc_variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub clip_rate: f64,
}

pub fn quantized_study(spec: &QuantizedStudySpec) -> Result<Vec<QuantizedRow>> {
    let order = spec.signal.order();
    let n = spec.n_samples;
    let key = stream_key(spec.seed, domain::TRIALS);
    let network = NetworkSpec::new(spec.sensors.clone())?;
    let mut levels: Vec<Option<QuantizerSpec>> = spec
        .bits
        .iter()
        .map(|&b| QuantizerSpec::new(spec.u0, spec.u1, b).map(Some))
        .collect::<Result<_>>()?;
    levels.push(None);

    let mut rows = Vec::new();
    for quantizer in levels {
        let sigma2_q = quantizer.map_or(0.0, |q| q.sigma2_q);
        let adjusted = spec
            .sensors
            .iter()
            .map(|p| Ok(crate::covariance::quantization_adjusted_params(p, sigma2_q)?.apply_to(p)))
            .collect::<Result<Vec<_>>>()?;
        let modified = network_crb(&NetworkSpec::new(adjusted.clone())?, n, order)?.diag;
        let xi = effective_xi_quantized(&network, EffectiveMode::Sum, sigma2_q)?;
        let closed = closed_form_crb(&xi, n, order, CrbMode::ClosedSecond)?.diag;
        let estimator = MlEstimator::new(&adjusted, n, order)?;
        let batch = run_trials(
            &estimator,
            &spec.sensors,
            &spec.signal,
            key,
            spec.trials,
            quantizer.as_ref(),
        )?;
        let result = summarize(&batch, &spec.signal.beta, spec.seed);
        for p in 0..=order {
            rows.push(QuantizedRow {
                bits: quantizer.map(|q| q.bits),
                p,
                modified_crb: modified[p],
                modified_crb_closed: closed[p],
                mc_variance: result.variance[p],
                ci_low: result.ci_low[p],
                ci_high: result.ci_high[p],
                clip_rate: result.clip_rate,
            });
        }
    }
    Ok(rows)
}

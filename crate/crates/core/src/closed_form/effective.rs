use super::constants::{regime_of, xi_constants, Regime, XiConstants};
use crate::covariance::quantization_adjusted_params;
use crate::error::{Error, Result};
use crate::model::{DriftParams, Interval, NetworkSpec, ParamBox};

/// Nodes per axis of the tensor-product quadrature over a parameter box.
pub const QUADRATURE_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectiveMode {
    /// Sum over the explicit sensor list.
    Sum,
    /// `sensors` times the box average of each constant.
    Integral { sensors: usize },
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let n = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=count {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            derivative = n * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / derivative;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// Nodes on `iv` with weights summing to one; a single node for a degenerate interval.
fn axis_rule(iv: Interval) -> Vec<(f64, f64)> {
    if iv.width() == 0.0 {
        return vec![(iv.lo, 1.0)];
    }
    let (nodes, weights) = gauss_legendre(QUADRATURE_NODES);
    let mid = 0.5 * (iv.lo + iv.hi);
    let half = 0.5 * iv.width();
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| (mid + half * x, 0.5 * w))
        .collect()
}

fn box_regime(param_box: &ParamBox) -> Result<Regime> {
    let rho = param_box.rho;
    if rho.lo < 1.0 && rho.hi >= 1.0 && param_box.gamma.hi > 0.0 {
        return Err(Error::MixedRegime);
    }
    if rho.lo == 1.0 && param_box.gamma.lo == 0.0 && param_box.gamma.hi > 0.0 {
        return Err(Error::MixedRegime);
    }
    Ok(if rho.lo == 1.0 && param_box.gamma.hi > 0.0 {
        Regime::RandomWalk
    } else {
        Regime::Stationary
    })
}

fn sum_over_sensors(
    sensors: &[DriftParams],
    map: impl Fn(&DriftParams) -> Result<DriftParams>,
) -> Result<XiConstants> {
    let first = sensors
        .first()
        .ok_or_else(|| Error::domain("sensors", "network has no sensors"))?;
    let regime = regime_of(first);
    let mut total = XiConstants::zero(regime);
    for s in sensors {
        if regime_of(s) != regime {
            return Err(Error::MixedRegime);
        }
        total.add_scaled(&xi_constants(&map(s)?)?, 1.0);
    }
    Ok(total)
}

fn integrate_over_box(
    param_box: &ParamBox,
    sensors: usize,
    map: impl Fn(&DriftParams) -> Result<DriftParams>,
) -> Result<XiConstants> {
    if sensors == 0 {
        return Err(Error::domain("sensors", "integral mode needs M >= 1"));
    }
    param_box.validate()?;
    let regime = box_regime(param_box)?;
    let mut total = XiConstants::zero(regime);
    for (rho, w_rho) in axis_rule(param_box.rho) {
        for (sigma2, w_s) in axis_rule(param_box.sigma2) {
            for (gamma, w_g) in axis_rule(param_box.gamma) {
                let params = DriftParams::new(sigma2, gamma, rho, param_box.tau)?;
                total.add_scaled(&xi_constants(&map(&params)?)?, w_rho * w_s * w_g);
            }
        }
    }
    Ok(total.scaled(sensors as f64))
}

/// Network constants `xi_eff = sum_m xi(sensor_m)`, or `M E[xi]` over a box.
pub fn effective_xi(network: &NetworkSpec, mode: EffectiveMode) -> Result<XiConstants> {
    effective_xi_quantized(network, mode, 0.0)
}

/// As [`effective_xi`], with every sensor's parameters replaced by their
/// quantization-adjusted values for distortion `sigma2_q`.
pub fn effective_xi_quantized(
    network: &NetworkSpec,
    mode: EffectiveMode,
    sigma2_q: f64,
) -> Result<XiConstants> {
    let adjust = |p: &DriftParams| -> Result<DriftParams> {
        if sigma2_q == 0.0 {
            Ok(*p)
        } else {
            Ok(quantization_adjusted_params(p, sigma2_q)?.apply_to(p))
        }
    };
    match mode {
        EffectiveMode::Sum => sum_over_sensors(&network.sensors, adjust),
        EffectiveMode::Integral { sensors } => {
            let param_box = network
                .param_box
                .as_ref()
                .ok_or_else(|| Error::domain("box", "integral mode needs a parameter box"))?;
            integrate_over_box(param_box, sensors, adjust)
        }
    }
}

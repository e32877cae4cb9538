use serde::Serialize;

use crate::approximation::{drift_constants, DriftConstants};
use crate::error::{Error, Result};
use crate::model::DriftParams;

/// Leading coefficients of `sum_{n=1}^N n^q = sum_i B_{q,i} N^{q+1-i}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSumCoeffs {
    pub q: u32,
    pub coeffs: [f64; 4],
}

impl PowerSumCoeffs {
    /// Truncated reconstruction of `sum_{n=1}^N n^q`. Exact for `q <= 3`;
    /// the dropped terms are `O(N^{q-3})` beyond that.
    pub fn reconstruct(&self, n: u64) -> f64 {
        let nf = n as f64;
        let q = self.q as i32;
        (0..=self.q.min(3) as i32)
            .map(|i| self.coeffs[i as usize] * nf.powi(q + 1 - i))
            .sum()
    }
}

pub fn power_sum_coeffs(q: u32) -> PowerSumCoeffs {
    let qf = q as f64;
    PowerSumCoeffs {
        q,
        coeffs: [1.0 / (qf + 1.0), 0.5, qf / 12.0, 0.0],
    }
}

/// `Y_v = sum_{i >= 1} i^v y^i` for `v <= 3`.
pub fn polylog_closed(v: u32, y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::domain("y", format!("must lie in (0, 1), got {y}")));
    }
    let d = 1.0 - y;
    match v {
        0 => Ok(y / d),
        1 => Ok(y / (d * d)),
        2 => Ok(y * (1.0 + y) / (d * d * d)),
        3 => Ok(y * (1.0 + 4.0 * y + y * y) / (d * d * d * d)),
        _ => Err(Error::domain(
            "v",
            format!("polylogarithm order {v} is not supported (max 3)"),
        )),
    }
}

/// Coefficients of `[X' M X]_{k,l} = sum_{i=0}^{3} A_{k,l,i} N^{k+l+1-i} + ...`
/// together with the constant term `alpha_{k,l}` where it is tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XtmxConstants {
    pub k: u32,
    pub l: u32,
    pub a: [f64; 4],
    /// Only available for `k, l <= 1`.
    pub alpha: Option<f64>,
}

fn choose2(n: u32) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Polylogarithms without the domain check; `y = 0` is a valid limit here.
fn polylogs(y: f64) -> [f64; 4] {
    let d = 1.0 - y;
    [
        y / d,
        y / (d * d),
        y * (1.0 + y) / (d * d * d),
        y * (1.0 + 4.0 * y + y * y) / (d * d * d * d),
    ]
}

pub fn xtmx_constants(k: u32, l: u32, constants: &DriftConstants) -> Result<XtmxConstants> {
    if k > 6 || l > 6 {
        return Err(Error::domain("k", format!("exponents ({k}, {l}) exceed 6")));
    }
    let (y, kappa, eta) = (constants.y, constants.kappa, constants.eta);
    let [y0, y1, y2, y3] = polylogs(y);
    let d = 1.0 - y;
    let q = k + l;
    let qf = q as f64;
    let (kf, lf) = (k as f64, l as f64);
    let pair = choose2(k) + choose2(l);
    let b = power_sum_coeffs(q).coeffs;

    let m1 = [
        2.0 * y0 / (qf + 1.0),
        y0 - y1,
        qf / 6.0 * y0 - qf / 2.0 * y1
            + if pair == 0.0 {
                0.0
            } else {
                pair / (qf - 1.0) * y2
            },
        -choose2(q) / 6.0 * y1 + pair / 2.0 * y2 - (pair - kf * lf / 2.0) / 3.0 * y3,
    ];
    let m3 = [
        0.0,
        1.0 / (d * d),
        -qf * y / (d * d * d),
        y * ((1.0 + y) * pair + kf * lf * y) / (d * d * d * d),
    ];
    let a = std::array::from_fn(|i| b[i] + m1[i] + kappa * m3[i]);

    let d2 = d * d;
    let alpha = match (k, l) {
        (0, 0) => Some((-2.0 * y + eta + kappa) / d2),
        (0, 1) | (1, 0) => Some((-y + eta / d - kappa * y / d) / d2),
        (1, 1) => Some((2.0 * y * y / d2 + eta / d2 + kappa * y * y / d2) / d2),
        _ => None,
    };
    Ok(XtmxConstants { k, l, a, alpha })
}

/// Constant term `alpha_{k,l}` of `[X' M X]_{k,l}`; only the four pairs with
/// `k, l <= 1` are available.
pub fn alpha(k: u32, l: u32, constants: &DriftConstants) -> Result<f64> {
    xtmx_constants(k, l, constants)?.alpha.ok_or_else(|| {
        Error::domain(
            "k",
            format!("alpha_({k},{l}) is only tabulated for k, l <= 1"),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `rho < 1`, or no drift at all.
    Stationary,
    /// `rho = 1` with `gamma > 0`.
    RandomWalk,
}

/// Scalar constants of the second-order FIM expansion, already divided by
/// `sigma2`. Unused entries of a regime are zero, which keeps network sums
/// additive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiConstants {
    pub xi0: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub xi5: f64,
    pub xi6: f64,
    pub regime: Regime,
}

impl XiConstants {
    pub(crate) fn zero(regime: Regime) -> Self {
        XiConstants {
            xi0: 0.0,
            xi1: 0.0,
            xi2: 0.0,
            xi3: 0.0,
            xi4: 0.0,
            xi5: 0.0,
            xi6: 0.0,
            regime,
        }
    }

    pub(crate) fn add_scaled(&mut self, other: &XiConstants, weight: f64) {
        self.xi0 += weight * other.xi0;
        self.xi1 += weight * other.xi1;
        self.xi2 += weight * other.xi2;
        self.xi3 += weight * other.xi3;
        self.xi4 += weight * other.xi4;
        self.xi5 += weight * other.xi5;
        self.xi6 += weight * other.xi6;
    }

    pub fn scaled(&self, factor: f64) -> XiConstants {
        let mut out = XiConstants::zero(self.regime);
        out.add_scaled(self, factor);
        out
    }
}

pub fn regime_of(params: &DriftParams) -> Regime {
    if params.is_random_walk() {
        Regime::RandomWalk
    } else {
        Regime::Stationary
    }
}

pub fn xi_constants(params: &DriftParams) -> Result<XiConstants> {
    let params = params.validate()?;
    let inv = params.sigma2.recip();
    if params.gamma == 0.0 {
        return Ok(XiConstants {
            xi0: inv,
            xi1: 0.5 * inv,
            xi2: -0.5 * inv,
            ..XiConstants::zero(Regime::Stationary)
        });
    }
    let c = drift_constants(params.gamma, params.rho, params.tau)?;
    let (y, nu, kappa) = (c.y, c.nu, c.kappa);
    let d = 1.0 - y;
    if params.is_random_walk() {
        let gt = c
            .gamma_tilde_rw
            .expect("random-walk constants carry gamma tilde");
        let tau = c
            .tau
            .finite()
            .expect("validated: random walk needs finite tau") as f64;
        let xi5 = -inv * y * y / (d * d * d);
        return Ok(XiConstants {
            xi2: inv / (2.0 / (gt + 1.0) * (1.0 + 2.0 * tau / (gt - 1.0))),
            xi3: -inv * nu * alpha(1, 0, &c)?,
            xi4: inv / params.gamma,
            xi5,
            xi6: -xi5 - inv * nu * alpha(1, 1, &c)?,
            ..XiConstants::zero(Regime::RandomWalk)
        });
    }
    let a1 = (1.0 + 2.0 * kappa - 2.0 * y - y * y) / (2.0 * d * d);
    let xi1 = inv * (0.5 - nu * a1);
    Ok(XiConstants {
        xi0: inv / params.noise_inflation(),
        xi1,
        xi2: -xi1 - inv * nu * alpha(0, 0, &c)?,
        ..XiConstants::zero(Regime::Stationary)
    })
}

/// `[1 - nu (1 + y)/(1 - y)] / sigma2`, the unsimplified form of `xi0`.
pub fn xi0_from_constants(params: &DriftParams) -> Result<f64> {
    let c = DriftConstants::for_params(params)?;
    Ok((1.0 - c.nu * (1.0 + c.y) / (1.0 - c.y)) / params.sigma2)
}

use nalgebra::DMatrix;
use serde::Serialize;

use super::constants::{Regime, XiConstants};
use super::effective::{effective_xi, EffectiveMode};
use crate::error::{Error, Result};
use crate::fisher::{exact_crb, network_crb, FimExact};
use crate::model::{check_design_shape, NetworkSpec};

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `K_{P,p} = [(P+p+1) C(P+p, p) C(P, p)]^2`, the scale of `[H^{-1}]_{p,p}`.
pub fn k_coeff(order: usize, p: usize) -> f64 {
    let (big, small) = (order as u64, p as u64);
    let root = (big + small + 1) as u128 * binomial(big + small, small) * binomial(big, small);
    (root * root) as f64
}

/// `L_{P,p} = ((P+1)/(p+1))^2`.
pub fn l_coeff(order: usize, p: usize) -> f64 {
    let r = (order + 1) as f64 / (p + 1) as f64;
    r * r
}

/// Hilbert matrix `H_{k,l} = 1/(k+l+1)`.
pub fn hilbert(size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |k, l| 1.0 / (k + l + 1) as f64)
}

/// Diagonal of `[c0 H + (c1 e e' + c2 f f')/N]^{-1}` to second order in `1/N`.
pub fn perturbed_hilbert_inverse_diag(
    c0: f64,
    c1: f64,
    c2: f64,
    n_samples: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if c0 == 0.0 {
        return Err(Error::domain("c0", "leading coefficient must be nonzero"));
    }
    let n = n_samples as f64;
    Ok((0..=order)
        .map(|p| {
            let k = k_coeff(order, p);
            let l = l_coeff(order, p);
            k / c0 * (1.0 / (2 * p + 1) as f64 - (c1 + c2 * l) / (n * c0))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrbMode {
    Exact,
    ClosedSecond,
    ClosedFirst,
    /// Numerical inverse of the second-order approximate FIM.
    FimApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbReport {
    pub diag: Vec<f64>,
    pub mode: CrbMode,
    /// Relative size of the second-order term per coefficient; empty for `Exact`.
    pub epsilon: Vec<f64>,
    /// The `K` and `L` factors actually used for each coefficient.
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    /// Set when the second-order correction drives some variance to `<= 0`.
    pub negative_variance: bool,
    pub mre_vs_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxFimParts {
    /// Diagonal of `E = diag(1, N, ..., N^P)`.
    pub e_scale: Vec<f64>,
    /// Hilbert block (`(P+1)`-sized when stationary, `P`-sized for a random walk).
    pub hilbert: DMatrix<f64>,
    /// Matrix between the two `E` factors.
    pub inner: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxFim {
    pub j: DMatrix<f64>,
    pub parts: ApproxFimParts,
}

/// Second-order approximate FIM `E B E`.
pub fn approx_fim(xi: &XiConstants, n_samples: usize, order: usize) -> Result<ApproxFim> {
    check_design_shape(n_samples, order)?;
    let n = n_samples as f64;
    let size = order + 1;
    let e_scale: Vec<f64> = (0..size).map(|p| n.powi(p as i32)).collect();
    let (hilbert, inner) = match xi.regime {
        Regime::Stationary => {
            let h = hilbert(size);
            let inner = DMatrix::from_fn(size, size, |k, l| {
                let f = if k == 0 && l == 0 { xi.xi2 } else { 0.0 };
                n * xi.xi0 * h[(k, l)] + xi.xi1 + f
            });
            (h, inner)
        }
        Regime::RandomWalk => {
            let h = hilbert(order);
            let inner = DMatrix::from_fn(size, size, |k, l| match (k, l) {
                (0, 0) => xi.xi2,
                (0, 1) | (1, 0) => xi.xi3 / n,
                (0, _) | (_, 0) => 0.0,
                _ => {
                    let kl = (k * l) as f64;
                    let f = if k == 1 && l == 1 { xi.xi6 } else { 0.0 };
                    kl / n * (xi.xi4 * h[(k - 1, l - 1)] + (xi.xi5 + f) / n)
                }
            });
            (h, inner)
        }
    };
    let j = DMatrix::from_fn(size, size, |k, l| e_scale[k] * inner[(k, l)] * e_scale[l]);
    Ok(ApproxFim {
        j,
        parts: ApproxFimParts {
            e_scale,
            hilbert,
            inner,
        },
    })
}

/// Relative size `epsilon_p` of the second-order term in each closed-form bound.
pub fn approximation_region(xi: &XiConstants, n_samples: usize, order: usize) -> Vec<f64> {
    let n = n_samples as f64;
    match xi.regime {
        Regime::Stationary => (0..=order)
            .map(|p| (2 * p + 1) as f64 * (xi.xi1 + xi.xi2 * l_coeff(order, p)) / (xi.xi0 * n))
            .collect(),
        Regime::RandomWalk => (0..=order)
            .map(|p| {
                if p == 0 {
                    (order * order) as f64 * xi.xi3 * xi.xi3 / (n * xi.xi2 * xi.xi4)
                } else {
                    (2 * p - 1) as f64 * xi_tilde(xi, order, p) / n
                }
            })
            .collect(),
    }
}

fn xi_tilde(xi: &XiConstants, order: usize, p: usize) -> f64 {
    let ratio = (order * order) as f64 / (p * p) as f64;
    (xi.xi5 + (xi.xi6 - xi.xi3 * xi.xi3 / xi.xi2) * ratio) / xi.xi4
}

/// Closed-form or approximate-FIM bound from precomputed constants.
pub fn closed_form_crb(
    xi: &XiConstants,
    n_samples: usize,
    order: usize,
    mode: CrbMode,
) -> Result<CrbReport> {
    check_design_shape(n_samples, order)?;
    let n = n_samples as f64;
    let epsilon = approximation_region(xi, n_samples, order);
    let second = mode == CrbMode::ClosedSecond;
    let (diag, k, l) = match (mode, xi.regime) {
        (CrbMode::Exact, _) => {
            return Err(Error::domain(
                "mode",
                "exact bounds need the sensor list; use crb_report",
            ));
        }
        (CrbMode::FimApprox, _) => {
            let fim = FimExact {
                j: approx_fim(xi, n_samples, order)?.j,
                n_samples,
                order,
                sensor_count: 1,
            };
            let diag = exact_crb(&fim)?.diag;
            let k = (0..=order).map(|p| k_coeff(order, p)).collect();
            let l = (0..=order).map(|p| l_coeff(order, p)).collect();
            (diag, k, l)
        }
        (_, Regime::Stationary) => {
            if xi.xi0 <= 0.0 {
                return Err(Error::domain("xi0", "stationary bounds need xi0 > 0"));
            }
            let diag = if order == 0 && second {
                vec![1.0 / (xi.xi0 * n + xi.xi1 + xi.xi2)]
            } else if second {
                perturbed_hilbert_inverse_diag(xi.xi0, xi.xi1, xi.xi2, n_samples, order)?
                    .iter()
                    .enumerate()
                    .map(|(p, v)| v / n.powi(2 * p as i32 + 1))
                    .collect()
            } else {
                (0..=order)
                    .map(|p| {
                        k_coeff(order, p) / ((2 * p + 1) as f64 * n.powi(2 * p as i32 + 1) * xi.xi0)
                    })
                    .collect()
            };
            let k = (0..=order).map(|p| k_coeff(order, p)).collect();
            let l = (0..=order).map(|p| l_coeff(order, p)).collect();
            (diag, k, l)
        }
        (_, Regime::RandomWalk) => {
            let mut diag = Vec::with_capacity(order + 1);
            let mut k = Vec::with_capacity(order + 1);
            let mut l = Vec::with_capacity(order + 1);
            let p_sq = (order * order) as f64;
            let correction = if second { 1.0 } else { 0.0 };
            diag.push(
                1.0 / xi.xi2 * (1.0 + correction * p_sq * xi.xi3 * xi.xi3 / (n * xi.xi2 * xi.xi4)),
            );
            k.push(1.0);
            l.push(p_sq);
            for p in 1..=order {
                let kp = k_coeff(order - 1, p - 1);
                let lead = kp / (n.powi(2 * p as i32 - 1) * (p * p) as f64 * xi.xi4);
                diag.push(
                    lead * (1.0 / (2 * p - 1) as f64 - correction * xi_tilde(xi, order, p) / n),
                );
                k.push(kp);
                l.push(l_coeff(order - 1, p - 1));
            }
            (diag, k, l)
        }
    };
    let negative_variance = diag.iter().any(|v| !(*v > 0.0));
    Ok(CrbReport {
        diag,
        mode,
        epsilon,
        k,
        l,
        negative_variance,
        mre_vs_exact: None,
    })
}

/// Bound for a network in any mode. Closed-form modes use the summed
/// per-sensor constants.
pub fn crb_report(
    network: &NetworkSpec,
    n_samples: usize,
    order: usize,
    mode: CrbMode,
) -> Result<CrbReport> {
    if mode == CrbMode::Exact {
        let diag = network_crb(network, n_samples, order)?.diag;
        return Ok(CrbReport {
            diag,
            mode,
            epsilon: Vec::new(),
            k: Vec::new(),
            l: Vec::new(),
            negative_variance: false,
            mre_vs_exact: Some(0.0),
        });
    }
    let xi = effective_xi(network, EffectiveMode::Sum)?;
    closed_form_crb(&xi, n_samples, order, mode)
}

pub fn max_relative_error(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(Error::domain(
            "approx",
            format!(
                "length {} does not match exact length {}",
                approx.len(),
                exact.len()
            ),
        ));
    }
    let mut worst = 0.0_f64;
    for (e, a) in exact.iter().zip(approx) {
        if !(*e > 0.0) {
            return Err(Error::domain(
                "exact",
                format!("entries must be positive, got {e}"),
            ));
        }
        worst = worst.max((e - a).abs() / e);
    }
    Ok(worst)
}

/// Which approximation `n_epsilon` measures against the exact bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxVariant {
    /// Closed-form second-order bound.
    CrbApprox,
    /// Numerical inverse of the approximate FIM.
    FimApprox,
}

impl ApproxVariant {
    pub fn mode(self) -> CrbMode {
        match self {
            ApproxVariant::CrbApprox => CrbMode::ClosedSecond,
            ApproxVariant::FimApprox => CrbMode::FimApprox,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ApproxVariant::CrbApprox => "crb-approx",
            ApproxVariant::FimApprox => "fim-approx",
        }
    }
}

/// MRE of `variant` against the exact bound at one sample size.
pub fn mre_at(
    network: &NetworkSpec,
    xi: &XiConstants,
    n_samples: usize,
    order: usize,
    variant: ApproxVariant,
) -> Result<f64> {
    let exact = network_crb(network, n_samples, order)?.diag;
    let approx = closed_form_crb(xi, n_samples, order, variant.mode())?;
    max_relative_error(&exact, &approx.diag)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NEpsilon {
    /// Smallest `N` with MRE below the threshold, if found before `n_max`.
    pub n: Option<usize>,
    /// MRE at `n` (or at the last size tried).
    pub mre: f64,
    pub reason: Option<String>,
}

/// Smallest `N` whose MRE is below `epsilon`: doubling from `P + 2`, then
/// bisection between the last failing and first passing size.
pub fn n_epsilon(
    network: &NetworkSpec,
    order: usize,
    epsilon: f64,
    variant: ApproxVariant,
    n_max: usize,
) -> Result<NEpsilon> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    let xi = effective_xi(network, EffectiveMode::Sum)?;
    // Sizes where either bound is unavailable count as not yet accurate.
    let mre = |n: usize| mre_at(network, &xi, n, order, variant).unwrap_or(f64::INFINITY);

    let mut lo = order + 1;
    let mut hi = order + 2;
    let mut hi_mre = mre(hi);
    while !(hi_mre < epsilon) {
        if hi >= n_max {
            return Ok(NEpsilon {
                n: None,
                mre: hi_mre,
                reason: Some(format!(
                    "MRE {hi_mre:.3e} still above {epsilon} at N = {hi}"
                )),
            });
        }
        lo = hi;
        hi = (hi * 2).min(n_max);
        hi_mre = mre(hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let m = mre(mid);
        if m < epsilon {
            hi = mid;
            hi_mre = m;
        } else {
            lo = mid;
        }
    }
    Ok(NEpsilon {
        n: Some(hi),
        mre: hi_mre,
        reason: None,
    })
}

//! Structured approximation of `(I + gamma R)^{-1}` as `I - nu M`.
//!
//! `M` is built from the scalar `y` (the smaller root of
//! `y^2 - ((gamma + 1)/rho + rho) y + 1 = 0`) and two boundary corrections:
//! `eta` on the top-left diagonal (depends on the calibration age) and
//! `kappa` on the bottom-right diagonal. The approximation error decays like
//! `y^N`.

use nalgebra::DMatrix;

use crate::covariance::{drift_precision_tridiagonal, varrho};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, SymTridiagonal};
use crate::model::{CalibrationAge, DriftParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    pub gamma: f64,
    pub rho: f64,
    pub tau: CalibrationAge,
    pub y: f64,
    pub nu: f64,
    pub kappa: f64,
    pub eta: f64,
    pub varrho: f64,
    /// `sqrt(1 + 4/gamma)`, only defined for random-walk drift.
    pub gamma_tilde_rw: Option<f64>,
}

/// `y / rho`, where `y` is the smaller root of `y^2 - c y + 1` with
/// `c = (gamma + 1)/rho + rho`. Finite at `rho = 0`, where `y` itself vanishes.
fn y_over_rho(gamma: f64, rho: f64) -> f64 {
    // rho (c - 2) and rho (c + 2), written without cancellation.
    let minus = gamma + (1.0 - rho) * (1.0 - rho);
    let plus = gamma + (1.0 + rho) * (1.0 + rho);
    2.0 / (gamma + 1.0 + rho * rho + (minus * plus).sqrt())
}

pub fn drift_constants(gamma: f64, rho: f64, tau: CalibrationAge) -> Result<DriftConstants> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(
            "gamma",
            format!("must be non-negative, got {gamma}"),
        ));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(
            "rho",
            format!("must lie in [0, 1], got {rho}"),
        ));
    }
    if rho == 1.0 && tau == CalibrationAge::Uncalibrated {
        return Err(Error::InfiniteCrb);
    }
    if rho == 1.0 && gamma == 0.0 {
        return Err(Error::domain(
            "gamma",
            "y = 1 for drift-free random walk; treat as white noise",
        ));
    }
    let y_over_rho = y_over_rho(gamma, rho);
    let y = rho * y_over_rho;

    let nu = y_over_rho * gamma / (1.0 - y * y);
    let kappa = y * (rho - y) / (1.0 - rho * y);
    let varrho = varrho(rho, tau);
    let eta = (1.0 - y * y) / (1.0 - rho * y + varrho * y_over_rho) - 1.0;
    let gamma_tilde_rw = (rho == 1.0).then(|| (1.0 + 4.0 / gamma).sqrt());
    Ok(DriftConstants {
        gamma,
        rho,
        tau,
        y,
        nu,
        kappa,
        eta,
        varrho,
        gamma_tilde_rw,
    })
}

impl DriftConstants {
    pub fn for_params(params: &DriftParams) -> Result<Self> {
        let params = params.validate()?;
        drift_constants(params.gamma, params.rho, params.tau)
    }

    /// Closed-form tridiagonal `Mt^{-1}` where `(I + gamma R)^{-1} = I - nu Mt` exactly.
    pub fn exact_m_inverse(&self, n_samples: usize) -> SymTridiagonal {
        let (y, rho) = (self.y, self.rho);
        let scale = 1.0 / (1.0 - y * y);
        let mut diag = vec![(1.0 + y * y) * scale; n_samples];
        diag[0] = (1.0 - rho * y + y * y + self.varrho * y_over_rho(self.gamma, rho)) * scale;
        diag[n_samples - 1] = (1.0 - rho * y + y * y) * scale;
        SymTridiagonal {
            diag,
            off: -y * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MParts {
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub m3: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxPrecision {
    pub m: DMatrix<f64>,
    pub parts: Option<MParts>,
    pub nu: f64,
}

impl ApproxPrecision {
    pub fn n_samples(&self) -> usize {
        self.m.nrows()
    }

    /// `I - nu M`.
    pub fn precision(&self) -> DMatrix<f64> {
        let n = self.n_samples();
        DMatrix::identity(n, n) - &self.m * self.nu
    }
}

pub fn build_m(
    constants: &DriftConstants,
    n_samples: usize,
    with_parts: bool,
) -> Result<ApproxPrecision> {
    if n_samples < 2 {
        return Err(Error::domain("n_samples", "M needs N >= 2"));
    }
    let n = n_samples;
    let y = constants.y;
    let (eta, kappa) = (constants.eta, constants.kappa);
    let pow: Vec<f64> = (0..2 * n).map(|k| y.powi(k as i32)).collect();

    // 0-based (i, j); entries with i + j <= n - 2 belong to the top-left half and
    // use a_{min+1}; the anti-diagonal and below use b counted from the bottom.
    let m = DMatrix::from_fn(n, n, |i, j| {
        let off = pow[i.abs_diff(j)];
        if i + j + 2 <= n {
            off * (1.0 + pow[2 * i.min(j)] * eta)
        } else {
            off * (1.0 + pow[2 * (n - 1 - i.max(j))] * kappa)
        }
    });

    let parts = with_parts.then(|| MParts {
        m1: DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { pow[i.abs_diff(j)] }),
        m2: DMatrix::from_fn(n, n, |i, j| if i + j + 2 <= n { pow[i + j] } else { 0.0 }),
        m3: DMatrix::from_fn(n, n, |i, j| {
            if i + j + 2 > n {
                pow[2 * n - 2 - i - j]
            } else {
                0.0
            }
        }),
    });

    Ok(ApproxPrecision {
        m,
        parts,
        nu: constants.nu,
    })
}

/// `I - nu M`, to be scaled by `1/sigma2` to approximate `Sigma^{-1}`.
pub fn approx_precision(params: &DriftParams, n_samples: usize) -> Result<DMatrix<f64>> {
    let params = params.validate()?;
    if params.gamma == 0.0 {
        return Ok(DMatrix::identity(n_samples, n_samples));
    }
    let constants = DriftConstants::for_params(&params)?;
    Ok(build_m(&constants, n_samples, false)?.precision())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    /// `max |(I + gamma R)^{-1} - (I - nu M)|`.
    pub max_abs_error: f64,
    /// `max_abs_error / y^N`; stays bounded as `N` grows.
    pub y_power_ratio: f64,
    /// Largest deviation of `(Mt^{-1} M - I) r0 / y^N` from the predicted
    /// anti-diagonal pattern built from `r1, r2, r3`.
    pub structure_mismatch: Option<f64>,
    /// Largest residual on the predicted anti-diagonal band over the largest
    /// residual elsewhere.
    pub band_dominance: Option<f64>,
}

/// Predicted `(Mt^{-1} M - I) r0 / y^N` at 0-based `(i, j)`.
fn predicted_pattern(c: &DriftConstants, n: usize, i: usize, j: usize) -> Option<f64> {
    let (y, rho, vr) = (c.y, c.rho, c.varrho);
    let r1 = -vr * y;
    let r2 = -rho * (rho - y) * (1.0 - rho * y) + vr * (1.0 + y * y - rho * y);
    let r3 = r2 + vr * (vr - rho * rho) * y_over_rho(c.gamma, rho);
    if i + j + 2 == n {
        Some(r1)
    } else if i + j + 1 == n {
        Some(if i == 0 { r3 } else { r2 })
    } else {
        None
    }
}

/// `(I + gamma R)^{-1} = (Q + gamma I)^{-1} Q` with the tridiagonal `Q = R^{-1}`.
/// Far better conditioned than inverting `I + gamma R` when `rho` is near 1.
pub fn exact_drift_inverse(params: &DriftParams, n_samples: usize) -> Result<DMatrix<f64>> {
    let params = params.validate()?;
    let q = drift_precision_tridiagonal(&params, n_samples)?;
    let mut out = q.to_dense();
    q.shifted(params.gamma).solve_in_place(&mut out)?;
    Ok((&out + out.transpose()) * 0.5)
}

pub fn residual_diagnostics(params: &DriftParams, n_samples: usize) -> Result<ResidualDiagnostics> {
    let params = params.validate()?;
    let n = n_samples;
    if params.gamma == 0.0 {
        return Ok(ResidualDiagnostics {
            max_abs_error: 0.0,
            y_power_ratio: 0.0,
            structure_mismatch: None,
            band_dominance: None,
        });
    }
    let constants = DriftConstants::for_params(&params)?;
    let approx = build_m(&constants, n, false)?;

    let exact_inv = exact_drift_inverse(&params, n)?;
    let max_abs_error = max_abs(&(exact_inv - approx.precision()));
    let y_n = constants.y.powi(n as i32);

    let (y, rho, vr) = (constants.y, constants.rho, constants.varrho);
    let r0 = (1.0 - rho * y) * (rho - rho * rho * y + vr * y);
    let mut residual = constants.exact_m_inverse(n).to_dense() * &approx.m;
    for i in 0..n {
        residual[(i, i)] -= 1.0;
    }

    let mut mismatch = 0.0_f64;
    let mut band = 0.0_f64;
    let mut off_band = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let raw = residual[(i, j)];
            match predicted_pattern(&constants, n, i, j) {
                Some(expected) => {
                    band = band.max(raw.abs());
                    mismatch = mismatch.max((raw * r0 / y_n - expected).abs());
                }
                None => {
                    off_band = off_band.max(raw.abs());
                    mismatch = mismatch.max((raw * r0 / y_n).abs());
                }
            }
        }
    }

    Ok(ResidualDiagnostics {
        max_abs_error,
        y_power_ratio: max_abs_error / y_n,
        structure_mismatch: Some(mismatch),
        band_dominance: Some(if off_band == 0.0 {
            f64::INFINITY
        } else {
            band / off_band
        }),
    })
}

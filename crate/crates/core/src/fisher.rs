//! Exact Fisher information `J = X' (sum_m Sigma_m^{-1}) X` and the
//! Cramér-Rao bound `diag(J^{-1})`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::covariance::{drift_precision_tridiagonal, total_covariance};
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::model::{
    build_design_matrix, normalized_design, DesignMatrix, DriftParams, NetworkSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FimExact {
    pub j: DMatrix<f64>,
    pub n_samples: usize,
    pub order: usize,
    pub sensor_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbExact {
    pub diag: Vec<f64>,
    pub j_inverse: DMatrix<f64>,
    /// Condition number of `J` after symmetric diagonal scaling.
    pub condition: f64,
}

/// How a single sensor's `Sigma^{-1} X` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FimMethod {
    /// Cholesky factorization of the dense covariance.
    #[default]
    Dense,
    /// `O(N)` solve through the tridiagonal drift precision.
    Banded,
}

pub fn exact_fim(x: &DesignMatrix, sigmas: &[DMatrix<f64>]) -> Result<FimExact> {
    if sigmas.is_empty() {
        return Err(Error::domain("sigmas", "need at least one sensor"));
    }
    let n = x.n_samples();
    let per_sensor: Vec<Result<DMatrix<f64>>> = sigmas
        .par_iter()
        .enumerate()
        .map(|(m, sigma)| {
            if sigma.nrows() != n || sigma.ncols() != n {
                return Err(Error::domain(
                    "sigmas",
                    format!("sensor {m} covariance is not {n} x {n}"),
                ));
            }
            let chol = sigma
                .clone()
                .cholesky()
                .ok_or(Error::SingularCovariance { sensor: m })?;
            let solved = chol.solve(x.matrix());
            Ok(x.matrix().transpose() * solved)
        })
        .collect();
    Ok(FimExact {
        j: sum_in_order(per_sensor, x.order())?,
        n_samples: n,
        order: x.order(),
        sensor_count: sigmas.len(),
    })
}

/// `Sigma^{-1} X_hat` for normalized design columns `(n/N)^p`, using
/// `(I + gamma R)^{-1} = (Q + gamma I)^{-1} Q` with `Q = R^{-1}` tridiagonal.
pub(crate) fn banded_whitened_design(
    params: &DriftParams,
    x_hat: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let params = params.validate()?;
    let inv_sigma2 = params.sigma2.recip();
    if params.gamma == 0.0 {
        return Ok(x_hat * inv_sigma2);
    }
    let q = drift_precision_tridiagonal(&params, x_hat.nrows())?;
    let mut out = q.mul(x_hat);
    q.shifted(params.gamma).solve_in_place(&mut out)?;
    Ok(out * inv_sigma2)
}

/// `X_hat' Sigma^{-1} X_hat` in normalized units; scale entry `(k, l)` by
/// `N^{k+l}` to recover `J`.
pub(crate) fn normalized_sensor_fim(
    params: &DriftParams,
    x_hat: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let whitened = banded_whitened_design(params, x_hat)?;
    let j = x_hat.transpose() * whitened;
    Ok((&j + j.transpose()) * 0.5)
}

fn denormalize(j_hat: &DMatrix<f64>, n_samples: usize) -> DMatrix<f64> {
    let n = n_samples as f64;
    DMatrix::from_fn(j_hat.nrows(), j_hat.ncols(), |k, l| {
        j_hat[(k, l)] * n.powi((k + l) as i32)
    })
}

pub fn sensor_fim(
    params: &DriftParams,
    n_samples: usize,
    order: usize,
    method: FimMethod,
) -> Result<DMatrix<f64>> {
    match method {
        FimMethod::Dense => {
            let x = build_design_matrix(n_samples, order)?;
            let sigma = total_covariance(params, n_samples)?.sigma;
            Ok(exact_fim(&x, &[sigma])?.j)
        }
        FimMethod::Banded => {
            crate::model::check_design_shape(n_samples, order)?;
            let x_hat = normalized_design(n_samples, order);
            Ok(denormalize(
                &normalized_sensor_fim(params, &x_hat)?,
                n_samples,
            ))
        }
    }
}

pub fn network_fim(
    network: &NetworkSpec,
    n_samples: usize,
    order: usize,
    method: FimMethod,
) -> Result<FimExact> {
    if network.is_empty() {
        return Err(Error::domain("sensors", "network has no sensors"));
    }
    let per_sensor: Vec<Result<DMatrix<f64>>> = network
        .sensors
        .par_iter()
        .enumerate()
        .map(|(m, params)| {
            sensor_fim(params, n_samples, order, method).map_err(|e| match e {
                Error::SingularCovariance { .. } => Error::SingularCovariance { sensor: m },
                other => other,
            })
        })
        .collect();
    Ok(FimExact {
        j: sum_in_order(per_sensor, order)?,
        n_samples,
        order,
        sensor_count: network.len(),
    })
}

fn sum_in_order(parts: Vec<Result<DMatrix<f64>>>, order: usize) -> Result<DMatrix<f64>> {
    let mut total = DMatrix::zeros(order + 1, order + 1);
    for part in parts {
        total += part?;
    }
    Ok(total)
}

pub fn exact_crb(fim: &FimExact) -> Result<CrbExact> {
    if fim.n_samples < fim.order + 1 {
        return Err(Error::SingularFim {
            condition: f64::INFINITY,
        });
    }
    let (j_inverse, condition) = spd_inverse(&fim.j)?;
    let diag: Vec<f64> = j_inverse.diagonal().iter().copied().collect();
    Ok(CrbExact {
        diag,
        j_inverse,
        condition,
    })
}

/// Exact CRB of a single sensor through the banded path.
pub fn sensor_crb(params: &DriftParams, n_samples: usize, order: usize) -> Result<CrbExact> {
    let network = NetworkSpec {
        sensors: vec![*params],
        param_box: None,
    };
    network_crb(&network, n_samples, order)
}

/// Exact CRB of a network through the banded path.
pub fn network_crb(network: &NetworkSpec, n_samples: usize, order: usize) -> Result<CrbExact> {
    exact_crb(&network_fim(network, n_samples, order, FimMethod::Banded)?)
}

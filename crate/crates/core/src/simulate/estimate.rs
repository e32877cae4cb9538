use nalgebra::{DMatrix, DVector};

use crate::covariance::quantization_adjusted_params;
use crate::error::{Error, Result};
use crate::fisher::banded_whitened_design;
use crate::linalg::spd_inverse;
use crate::model::{check_design_shape, normalized_design, DesignMatrix, DriftParams};

/// Generalized least squares `beta = J^{-1} X' sum_m Sigma_m^{-1} z_m` with
/// every per-sensor weight precomputed, so each estimate is a few dot products.
///
/// Internally the design columns are `(n/N)^p`; estimates are rescaled by
/// `N^-p` on the way out.
#[derive(Debug, Clone)]
pub struct MlEstimator {
    n_samples: usize,
    order: usize,
    /// `(Sigma_m^{-1} X_hat)'` per sensor, `(P+1) x N`.
    weights: Vec<DMatrix<f64>>,
    j_hat_inverse: DMatrix<f64>,
}

impl MlEstimator {
    /// Weights from the sensors' drift models through the banded solve.
    pub fn new(sensors: &[DriftParams], n_samples: usize, order: usize) -> Result<Self> {
        check_design_shape(n_samples, order)?;
        let x_hat = normalized_design(n_samples, order);
        let whitened = sensors
            .iter()
            .map(|p| banded_whitened_design(p, &x_hat))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(&x_hat, whitened)
    }

    /// Quasi-ML weights: each sensor's covariance gains white distortion `sigma2_q`.
    pub fn quasi(
        sensors: &[DriftParams],
        n_samples: usize,
        order: usize,
        sigma2_q: f64,
    ) -> Result<Self> {
        let adjusted = sensors
            .iter()
            .map(|p| Ok(quantization_adjusted_params(p, sigma2_q)?.apply_to(p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&adjusted, n_samples, order)
    }

    /// Weights from explicit covariance matrices via Cholesky.
    pub fn from_covariances(x: &DesignMatrix, sigmas: &[DMatrix<f64>]) -> Result<Self> {
        let x_hat = x.normalized();
        let whitened = sigmas
            .iter()
            .enumerate()
            .map(|(m, sigma)| {
                let chol = sigma
                    .clone()
                    .cholesky()
                    .ok_or(Error::SingularCovariance { sensor: m })?;
                Ok(chol.solve(&x_hat))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(&x_hat, whitened)
    }

    fn assemble(x_hat: &DMatrix<f64>, whitened: Vec<DMatrix<f64>>) -> Result<Self> {
        if whitened.is_empty() {
            return Err(Error::domain(
                "sensors",
                "estimator needs at least one sensor",
            ));
        }
        let size = x_hat.ncols();
        let mut j_hat = DMatrix::zeros(size, size);
        for w in &whitened {
            j_hat += x_hat.transpose() * w;
        }
        let j_hat = (&j_hat + j_hat.transpose()) * 0.5;
        let (j_hat_inverse, _) = spd_inverse(&j_hat)?;
        Ok(MlEstimator {
            n_samples: x_hat.nrows(),
            order: size - 1,
            weights: whitened.into_iter().map(|w| w.transpose()).collect(),
            j_hat_inverse,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sensor_count(&self) -> usize {
        self.weights.len()
    }

    /// Add sensor `m`'s contribution `W_m' z_m` to `score`.
    pub(crate) fn accumulate(&self, m: usize, z: &[f64], score: &mut [f64]) {
        let w = &self.weights[m];
        for (p, s) in score.iter_mut().enumerate() {
            let row = w.row(p);
            *s += row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Estimate from an accumulated score vector.
    pub(crate) fn finish(&self, score: &[f64]) -> DVector<f64> {
        let n = self.n_samples as f64;
        let beta_hat = &self.j_hat_inverse * DVector::from_column_slice(score);
        DVector::from_fn(self.order + 1, |p, _| beta_hat[p] / n.powi(p as i32))
    }

    /// `z` holds one column per sensor.
    pub fn estimate(&self, z: &DMatrix<f64>) -> Result<DVector<f64>> {
        if z.nrows() != self.n_samples || z.ncols() != self.weights.len() {
            return Err(Error::domain(
                "z",
                format!(
                    "expected {} x {} observations, got {} x {}",
                    self.n_samples,
                    self.weights.len(),
                    z.nrows(),
                    z.ncols()
                ),
            ));
        }
        let mut score = vec![0.0; self.order + 1];
        for m in 0..z.ncols() {
            self.accumulate(m, z.column(m).as_slice(), &mut score);
        }
        Ok(self.finish(&score))
    }
}

pub fn ml_estimate(
    z: &DMatrix<f64>,
    x: &DesignMatrix,
    sigmas: &[DMatrix<f64>],
) -> Result<DVector<f64>> {
    MlEstimator::from_covariances(x, sigmas)?.estimate(z)
}

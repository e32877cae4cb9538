use approx::assert_relative_eq;
use nalgebra::DMatrix;

use driftcrb::{
    drift_covariance, drift_precision_closed, drift_precision_tridiagonal, exact_drift_inverse,
    total_covariance, variance_ladder, CalibrationAge, DriftParams,
};

const TAUS: [CalibrationAge; 4] = [
    CalibrationAge::Finite(1),
    CalibrationAge::Finite(2),
    CalibrationAge::Finite(7),
    CalibrationAge::Uncalibrated,
];

/// Drift correlation built from the innovation representation: the drift at
/// sample `n` is the sum of the `n + tau - 1` innovations since calibration,
/// each damped by `rho` per step.
fn innovation_oracle(rho: f64, tau: CalibrationAge, n: usize) -> DMatrix<f64> {
    match tau {
        CalibrationAge::Finite(t) => {
            let steps = n + t as usize - 1;
            let a = DMatrix::from_fn(n, steps, |i, k| {
                let age = i + t as usize - 1;
                if k <= age {
                    rho.powi((age - k) as i32)
                } else {
                    0.0
                }
            });
            &a * a.transpose()
        }
        CalibrationAge::Uncalibrated => DMatrix::from_fn(n, n, |i, j| {
            rho.powi(i.abs_diff(j) as i32) / (1.0 - rho * rho)
        }),
    }
}

#[test]
fn correlation_matches_innovation_sum() {
    for rho in [0.0, 0.4, 0.9, 0.999, 1.0] {
        for tau in TAUS {
            let Ok(params) = DriftParams::new(1.0, 0.5, rho, tau) else {
                continue;
            };
            let r = drift_covariance(&params, 12).unwrap().r;
            let oracle = innovation_oracle(rho, tau, 12);
            for (a, b) in r.iter().zip(oracle.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }
}

#[test]
fn ladder_is_diagonal() {
    let params = DriftParams::new(1.0, 1.0, 0.8, CalibrationAge::Finite(3)).unwrap();
    let corr = drift_covariance(&params, 9).unwrap();
    let ladder = variance_ladder(0.8, CalibrationAge::Finite(3), 9).unwrap();
    assert_eq!(corr.s_ladder, ladder);
    for (i, s) in ladder.iter().enumerate() {
        assert_relative_eq!(corr.r[(i, i)], *s, max_relative = 1e-15);
    }
    assert!(ladder.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn random_walk_ladder_counts_steps() {
    let ladder = variance_ladder(1.0, CalibrationAge::Finite(4), 6).unwrap();
    assert_eq!(ladder, vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
}

#[test]
fn closed_precision_is_dense_inverse() {
    for rho in [0.3, 0.95, 1.0] {
        for tau in TAUS {
            let Ok(params) = DriftParams::new(2.0, 0.1, rho, tau) else {
                continue;
            };
            let r = drift_covariance(&params, 30).unwrap().r;
            let inverse = r.clone().try_inverse().unwrap();
            let closed = drift_precision_closed(&params, 30).unwrap();
            let scale = inverse.amax();
            assert!((&closed - &inverse).amax() <= 1e-9 * scale);
            let banded = drift_precision_tridiagonal(&params, 30).unwrap();
            for i in 0..30 {
                assert_relative_eq!(banded.diag[i], closed[(i, i)], max_relative = 1e-15);
            }
        }
    }
}

#[test]
fn total_covariance_adds_white_noise() {
    let params = DriftParams::new(3.0, 0.7, 0.9, CalibrationAge::Finite(2)).unwrap();
    let set = total_covariance(&params, 15).unwrap();
    let r = drift_covariance(&params, 15).unwrap().r;
    let expected = (DMatrix::identity(15, 15) + r * 0.7) * 3.0;
    assert!((&set.sigma - expected).amax() < 1e-12);
    assert_eq!(set.n_samples(), 15);
}

#[test]
fn banded_drift_inverse_matches_dense() {
    let params = DriftParams::new(1.0, 0.3, 0.85, CalibrationAge::Uncalibrated).unwrap();
    let r = drift_covariance(&params, 25).unwrap().r;
    let dense = (DMatrix::identity(25, 25) + r * 0.3).try_inverse().unwrap();
    let banded = exact_drift_inverse(&params, 25).unwrap();
    assert!((dense - banded).amax() < 1e-12);
}

#[test]
fn uncalibrated_random_walk_is_rejected() {
    assert!(DriftParams::new(1.0, 0.1, 1.0, CalibrationAge::Uncalibrated).is_err());
    assert!(DriftParams::new(1.0, 0.1, 1.0, CalibrationAge::Finite(0)).is_err());
    assert!(DriftParams::new(0.0, 0.1, 0.5, CalibrationAge::Finite(1)).is_err());
}

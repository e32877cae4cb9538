use nalgebra::DMatrix;
use proptest::prelude::*;

use driftcrb::closed_form::{xi_constants, Regime};
use driftcrb::{
    drift_covariance, drift_precision_closed, network_crb, quantization_adjusted_params,
    sensor_crb, CalibrationAge, DriftParams, NetworkSpec, QuantizerSpec,
};

fn tau_strategy() -> impl Strategy<Value = CalibrationAge> {
    prop_oneof![
        (1u32..20).prop_map(CalibrationAge::Finite),
        Just(CalibrationAge::Uncalibrated)
    ]
}

fn params_strategy() -> impl Strategy<Value = DriftParams> {
    (0.1f64..10.0, 0.0f64..5.0, 0.0f64..0.99, tau_strategy())
        .prop_map(|(sigma2, gamma, rho, tau)| DriftParams::new(sigma2, gamma, rho, tau).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_inverse_pair(params in params_strategy(), n in 1usize..40) {
        let r = drift_covariance(&params, n).unwrap().r;
        prop_assert!((&r - r.transpose()).amax() == 0.0);
        let q = drift_precision_closed(&params, n).unwrap();
        prop_assert!((r * q - DMatrix::identity(n, n)).amax() < 1e-8);
    }

    #[test]
    fn bound_is_positive_and_scales_with_sigma2(params in params_strategy(), n in 5usize..200, order in 0usize..3) {
        let crb = sensor_crb(&params, n, order).unwrap().diag;
        prop_assert!(crb.iter().all(|v| *v > 0.0 && v.is_finite()));
        let doubled = DriftParams { sigma2: 2.0 * params.sigma2, ..params };
        let twice = sensor_crb(&doubled, n, order).unwrap().diag;
        for (a, b) in crb.iter().zip(&twice) {
            prop_assert!((b / a - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn extra_sensor_never_hurts(a in params_strategy(), b in params_strategy(), n in 5usize..100) {
        let one = network_crb(&NetworkSpec::new(vec![a]).unwrap(), n, 1).unwrap().diag;
        let two = network_crb(&NetworkSpec::new(vec![a, b]).unwrap(), n, 1).unwrap().diag;
        for (x, y) in one.iter().zip(&two) {
            prop_assert!(y <= &(x * (1.0 + 1e-10)));
        }
    }

    #[test]
    fn more_samples_never_hurt(params in params_strategy(), n in 5usize..150) {
        let a = sensor_crb(&params, n, 1).unwrap().diag[0];
        let b = sensor_crb(&params, n + 1, 1).unwrap().diag[0];
        prop_assert!(b <= a * (1.0 + 1e-10));
    }

    #[test]
    fn stationary_regime_below_one(params in params_strategy()) {
        prop_assume!(params.gamma > 0.0 && params.rho > 0.0);
        let xi = xi_constants(&params).unwrap();
        prop_assert_eq!(xi.regime, Regime::Stationary);
        prop_assert!(xi.xi0 > 0.0 && xi.xi0 <= 1.0 / params.sigma2);
    }

    #[test]
    fn quantizer_is_idempotent(v in -100.0f64..1300.0, bits in 1u32..12) {
        let q = QuantizerSpec::new(0.0, 1200.0, bits).unwrap();
        let (level, clipped) = q.quantize(v);
        prop_assert_eq!(clipped, !(0.0..=1200.0).contains(&v));
        prop_assert_eq!(q.quantize(level), (level, false));
        if !clipped {
            prop_assert!((level - v).abs() <= q.delta / 2.0 + 1e-9);
        }
    }

    #[test]
    fn quantization_adjustment_keeps_drift_power(params in params_strategy(), sigma2_q in 0.0f64..50.0) {
        let adj = quantization_adjusted_params(&params, sigma2_q).unwrap();
        let drift_power = params.gamma * params.sigma2;
        prop_assert!((adj.gamma_tilde * adj.sigma2_tilde - drift_power).abs() <= 1e-12 * drift_power.max(1.0));
    }
}

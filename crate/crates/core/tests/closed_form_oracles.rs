use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use driftcrb::closed_form::{
    alpha, approx_fim, approximation_region, closed_form_crb, hilbert, k_coeff, l_coeff,
    xi_constants, xtmx_constants, CrbMode,
};
use driftcrb::{
    build_design_matrix, build_m, drift_constants, sensor_crb, CalibrationAge, DriftParams,
};

/// Least-squares polynomial coefficients in `N` (degrees `low..=high`, negative allowed).
fn fit_in_n(ns: &[usize], values: &[f64], low: i32, high: i32) -> Vec<f64> {
    let cols = (high - low + 1) as usize;
    let a = DMatrix::from_fn(ns.len(), cols, |i, j| (ns[i] as f64).powi(low + j as i32));
    a.svd(true, true)
        .solve(&DVector::from_column_slice(values), 1e-15)
        .unwrap()
        .iter()
        .copied()
        .collect()
}

fn xtmx(gamma: f64, rho: f64, tau: CalibrationAge, n: usize, order: usize) -> DMatrix<f64> {
    let c = drift_constants(gamma, rho, tau).unwrap();
    let m = build_m(&c, n, false).unwrap().m;
    let x = build_design_matrix(n, order).unwrap();
    x.matrix().transpose() * m * x.matrix()
}

#[test]
fn alpha00_is_constant_term_of_fit() {
    let ns: Vec<usize> = (60..=200).step_by(10).collect();
    let values: Vec<f64> = ns
        .iter()
        .map(|&n| xtmx(1.0, 0.9, CalibrationAge::Uncalibrated, n, 0)[(0, 0)])
        .collect();
    let coeffs = fit_in_n(&ns, &values, -2, 1);
    let c = drift_constants(1.0, 0.9, CalibrationAge::Uncalibrated).unwrap();
    assert_relative_eq!(coeffs[2], alpha(0, 0, &c).unwrap(), max_relative = 1e-3);
}

#[test]
fn expansion_constants_reproduce_exact_sums() {
    let cases = [
        (0.1, 0.9, CalibrationAge::Uncalibrated),
        (0.1, 0.9, CalibrationAge::Finite(1)),
        (2.0, 0.5, CalibrationAge::Finite(4)),
        (0.5, 1.0, CalibrationAge::Finite(3)),
    ];
    for (gamma, rho, tau) in cases {
        let c = drift_constants(gamma, rho, tau).unwrap();
        let n = 200;
        let exact = xtmx(gamma, rho, tau, n, 1);
        for (k, l) in [(0u32, 0u32), (0, 1), (1, 1)] {
            let t = xtmx_constants(k, l, &c).unwrap();
            let q = (k + l) as i32;
            let nf = n as f64;
            // Powers N^{q+1}..N^1 from the A series; the N^0 term is alpha.
            let series: f64 = (0..=q).map(|i| t.a[i as usize] * nf.powi(q + 1 - i)).sum();
            let predicted = series + t.alpha.unwrap();
            assert_relative_eq!(
                exact[(k as usize, l as usize)],
                predicted,
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn leading_coefficient_and_shared_first_order() {
    let c = drift_constants(0.4, 0.8, CalibrationAge::Finite(2)).unwrap();
    let first = xtmx_constants(0, 1, &c).unwrap().a[1];
    for k in 0..=3u32 {
        for l in 0..=3u32 {
            let t = xtmx_constants(k, l, &c).unwrap();
            assert_relative_eq!(
                t.a[0],
                (1.0 + c.y) / (1.0 - c.y) / (k + l + 1) as f64,
                max_relative = 1e-14
            );
            if k + l >= 1 {
                assert_relative_eq!(t.a[1], first, max_relative = 1e-13);
            }
        }
    }
}

#[test]
fn k_is_scaled_hilbert_inverse_diagonal() {
    for order in 0..=4 {
        let inverse = hilbert(order + 1).try_inverse().unwrap();
        for p in 0..=order {
            let k = k_coeff(order, p) / (2 * p + 1) as f64;
            assert_relative_eq!(k, inverse[(p, p)], max_relative = 1e-8);
            assert_eq!(
                l_coeff(order, p),
                (((order + 1) as f64) / ((p + 1) as f64)).powi(2)
            );
        }
    }
    assert_eq!(k_coeff(0, 0), 1.0);
    assert_eq!(k_coeff(1, 1), 36.0);
    assert_eq!(l_coeff(2, 0), 9.0);
}

#[test]
fn approximate_fim_tracks_exact_bound() {
    let params = DriftParams::new(2.0, 0.5, 0.9, CalibrationAge::Uncalibrated).unwrap();
    let xi = xi_constants(&params).unwrap();
    let n = 2000;
    let exact = sensor_crb(&params, n, 2).unwrap().diag;
    let second = closed_form_crb(&xi, n, 2, CrbMode::ClosedSecond)
        .unwrap()
        .diag;
    let via_fim = closed_form_crb(&xi, n, 2, CrbMode::FimApprox).unwrap().diag;
    for p in 0..3 {
        assert_relative_eq!(second[p], exact[p], max_relative = 5e-3);
        assert_relative_eq!(via_fim[p], exact[p], max_relative = 5e-3);
    }
    let fim = approx_fim(&xi, n, 2).unwrap();
    assert_eq!(fim.j.nrows(), 3);
    assert!((&fim.j - fim.j.transpose()).amax() <= 1e-12 * fim.j.amax());
}

#[test]
fn first_order_bound_is_inflated_white_noise() {
    let params = DriftParams::new(1.5, 0.2, 0.7, CalibrationAge::Finite(3)).unwrap();
    let white = DriftParams::awgn(params.sigma2 * params.noise_inflation()).unwrap();
    let drifting = closed_form_crb(
        &xi_constants(&params).unwrap(),
        500,
        1,
        CrbMode::ClosedFirst,
    )
    .unwrap();
    let reference =
        closed_form_crb(&xi_constants(&white).unwrap(), 500, 1, CrbMode::ClosedFirst).unwrap();
    for p in 0..2 {
        assert_relative_eq!(drifting.diag[p], reference.diag[p], max_relative = 1e-12);
    }
    // The exact bounds agree once N is large.
    let n = 20_000;
    let a = sensor_crb(&params, n, 1).unwrap().diag;
    let b = sensor_crb(&white, n, 1).unwrap().diag;
    for p in 0..2 {
        assert_relative_eq!(a[p], b[p], max_relative = 2e-3);
    }
}

#[test]
fn random_walk_region_shrinks_like_inverse_root_gamma() {
    let gammas = [1e-5, 1e-4, 1e-3];
    let eps: Vec<f64> = gammas
        .iter()
        .map(|&g| {
            let params = DriftParams::new(1.0, g, 1.0, CalibrationAge::Finite(1)).unwrap();
            approximation_region(&xi_constants(&params).unwrap(), 1000, 1)[1]
        })
        .collect();
    for w in 0..2 {
        let slope = (eps[w + 1] / eps[w]).ln() / (gammas[w + 1] / gammas[w]).ln();
        assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    }
}

#[test]
fn white_noise_constants() {
    let xi = xi_constants(&DriftParams::awgn(4.0).unwrap()).unwrap();
    assert_relative_eq!(xi.xi0, 0.25);
    assert_relative_eq!(xi.xi1, 0.125);
    assert_relative_eq!(xi.xi2, -0.125);
    // The P = 0 white-noise bound is sigma2 / N exactly.
    let v = closed_form_crb(&xi, 40, 0, CrbMode::ClosedSecond)
        .unwrap()
        .diag[0];
    assert_relative_eq!(v, 0.1, max_relative = 1e-12);
}

//! Shared fixtures for the benchmarks.

use driftcrb::{CalibrationAge, DriftParams, Interval, NetworkSpec, ParamBox};

/// Sensor in the middle of the usual stationary parameter range.
pub fn typical_sensor() -> DriftParams {
    DriftParams::new(180.0, 1.5, 0.9, CalibrationAge::Uncalibrated).expect("valid parameters")
}

/// `m` sensors spread evenly over the stationary parameter range.
pub fn network(m: usize, tau: CalibrationAge) -> NetworkSpec {
    let param_box = ParamBox {
        rho: Interval::new(0.85, 0.95),
        sigma2: Interval::new(72.0, 288.0),
        gamma: Interval::new(0.6, 2.4),
        tau,
    };
    NetworkSpec::new(param_box.evenly_spaced(m)).expect("non-empty network")
}

//! Domain types shared by every stage of the pipeline: sensor drift
//! descriptions, polynomial signals and their Vandermonde design matrix.
//!
//! Sample indices start at `n = 1`. Shifting the time origin would change the
//! meaning of each `beta[p]` but not the structure of the bounds.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Highest polynomial order supported by the closed-form machinery.
pub const MAX_ORDER: usize = 6;

/// Largest integer such that every smaller integer is exactly representable in `f64`.
const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

/// Number of sample periods since the drift state was last reset to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalibrationAge {
    /// Reset `tau` periods before the first sample (`tau >= 1`).
    Finite(u32),
    /// Never reset: the drift is in its stationary regime.
    Uncalibrated,
}

impl CalibrationAge {
    pub const CALIBRATED: CalibrationAge = CalibrationAge::Finite(1);

    pub fn finite(self) -> Option<u32> {
        match self {
            CalibrationAge::Finite(t) => Some(t),
            CalibrationAge::Uncalibrated => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, CalibrationAge::Finite(_))
    }
}

impl fmt::Display for CalibrationAge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationAge::Finite(t) => write!(f, "{t}"),
            CalibrationAge::Uncalibrated => f.write_str("inf"),
        }
    }
}

impl Serialize for CalibrationAge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CalibrationAge::Finite(t) => s.serialize_u32(*t),
            CalibrationAge::Uncalibrated => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CalibrationAge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AgeVisitor;

        impl Visitor<'_> for AgeVisitor {
            type Value = CalibrationAge;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                match u32::try_from(v) {
                    Ok(t) if t >= 1 => Ok(CalibrationAge::Finite(t)),
                    _ => Err(E::custom(format!("calibration age {v} out of range"))),
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                if v < 1 {
                    return Err(E::custom(format!("calibration age {v} must be >= 1")));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "uncalibrated" => Ok(CalibrationAge::Uncalibrated),
                    other => Err(E::custom(format!("unknown calibration age {other:?}"))),
                }
            }
        }

        d.deserialize_any(AgeVisitor)
    }
}

/// Noise and drift description of one sensor.
///
/// `gamma` is the ratio of drift-innovation variance to white-noise variance,
/// so the innovations of the AR(1) drift have variance `gamma * sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftParams {
    pub sigma2: f64,
    pub gamma: f64,
    pub rho: f64,
    pub tau: CalibrationAge,
}

impl DriftParams {
    pub fn new(sigma2: f64, gamma: f64, rho: f64, tau: CalibrationAge) -> Result<Self> {
        validate_drift_params(DriftParams {
            sigma2,
            gamma,
            rho,
            tau,
        })
    }

    pub fn validate(self) -> Result<Self> {
        validate_drift_params(self)
    }

    /// White-noise sensor: no drift at all.
    pub fn awgn(sigma2: f64) -> Result<Self> {
        Self::new(sigma2, 0.0, 0.0, CalibrationAge::CALIBRATED)
    }

    pub fn is_random_walk(&self) -> bool {
        self.rho == 1.0 && self.gamma > 0.0
    }

    /// First-order noise inflation `1 + gamma / (1 - rho)^2` for stationary drift.
    pub fn noise_inflation(&self) -> f64 {
        1.0 + self.gamma / ((1.0 - self.rho) * (1.0 - self.rho))
    }
}

pub fn validate_drift_params(raw: DriftParams) -> Result<DriftParams> {
    if !(raw.sigma2.is_finite() && raw.sigma2 > 0.0) {
        return Err(Error::domain(
            "sigma2",
            format!("must be positive, got {}", raw.sigma2),
        ));
    }
    if !(raw.gamma.is_finite() && raw.gamma >= 0.0) {
        return Err(Error::domain(
            "gamma",
            format!("must be non-negative, got {}", raw.gamma),
        ));
    }
    if !(0.0..=1.0).contains(&raw.rho) {
        return Err(Error::domain(
            "rho",
            format!("must lie in [0, 1], got {}", raw.rho),
        ));
    }
    if let CalibrationAge::Finite(0) = raw.tau {
        return Err(Error::domain("tau", "calibration age must be at least 1"));
    }
    if raw.rho == 1.0 && raw.tau == CalibrationAge::Uncalibrated {
        return Err(Error::InfiniteCrb);
    }
    Ok(raw)
}

/// Polynomial signal `x_n = sum_p beta[p] * n^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub beta: Vec<f64>,
}

impl SignalSpec {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::domain("beta", "needs at least one coefficient"));
        }
        if beta.len() > MAX_ORDER + 1 {
            return Err(Error::domain(
                "beta",
                format!("polynomial order {} exceeds {MAX_ORDER}", beta.len() - 1),
            ));
        }
        Ok(SignalSpec { beta })
    }

    /// Zero signal of the given order; the bounds do not depend on `beta`.
    pub fn zeros(order: usize) -> Result<Self> {
        Self::new(vec![0.0; order + 1])
    }

    pub fn order(&self) -> usize {
        self.beta.len() - 1
    }
}

pub fn eval_signal(spec: &SignalSpec, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples", "must be at least 1"));
    }
    Ok((1..=n_samples)
        .map(|n| {
            let t = n as f64;
            // Horner
            spec.beta.iter().rev().fold(0.0, |acc, b| acc * t + b)
        })
        .collect())
}

/// `N x (P+1)` Vandermonde matrix with entry `(n, p) = n^p`, `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    order: usize,
}

impl DesignMatrix {
    pub fn n_samples(&self) -> usize {
        self.entries.nrows()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn apply(&self, beta: &[f64]) -> DVector<f64> {
        &self.entries * DVector::from_column_slice(beta)
    }

    /// Columns rescaled by `N^-p`, i.e. entries `(n/N)^p`. Keeps every
    /// entry in `[0, 1]` for the normal-equation products.
    pub fn normalized(&self) -> DMatrix<f64> {
        normalized_design(self.n_samples(), self.order)
    }
}

pub fn build_design_matrix(n_samples: usize, order: usize) -> Result<DesignMatrix> {
    check_design_shape(n_samples, order)?;
    let entries = DMatrix::from_fn(n_samples, order + 1, |i, p| ((i + 1) as f64).powi(p as i32));
    Ok(DesignMatrix { entries, order })
}

pub(crate) fn check_design_shape(n_samples: usize, order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::domain(
            "order",
            format!("{order} exceeds the supported maximum {MAX_ORDER}"),
        ));
    }
    if n_samples < order + 1 {
        return Err(Error::domain(
            "n_samples",
            format!(
                "need at least P + 1 = {} samples, got {n_samples}",
                order + 1
            ),
        ));
    }
    if (n_samples as f64).powi(order as i32) > EXACT_INTEGER_LIMIT {
        return Err(Error::domain(
            "n_samples",
            format!("{n_samples}^{order} is not exactly representable"),
        ));
    }
    Ok(())
}

pub(crate) fn normalized_design(n_samples: usize, order: usize) -> DMatrix<f64> {
    let scale = n_samples as f64;
    DMatrix::from_fn(n_samples, order + 1, |i, p| {
        ((i + 1) as f64 / scale).powi(p as i32)
    })
}

/// Closed interval `[lo, hi]` used by parameter boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => (0..count)
                .map(|i| self.lo + self.width() * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(v: Interval) -> Self {
        [v.lo, v.hi]
    }
}

/// Uniform ranges of sensor parameters for the integral-average network model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub rho: Interval,
    pub sigma2: Interval,
    pub gamma: Interval,
    pub tau: CalibrationAge,
}

impl ParamBox {
    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [
            ("rho", self.rho),
            ("sigma2", self.sigma2),
            ("gamma", self.gamma),
        ] {
            if !(iv.lo <= iv.hi) {
                return Err(Error::domain(
                    name,
                    format!("range [{}, {}] is inverted", iv.lo, iv.hi),
                ));
            }
        }
        // Corners of the box are valid sensors iff every interior point is.
        DriftParams::new(self.sigma2.lo, self.gamma.lo, self.rho.lo, self.tau)?;
        DriftParams::new(self.sigma2.hi, self.gamma.hi, self.rho.hi, self.tau)?;
        Ok(())
    }

    /// Draw a sensor uniformly from the box.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> DriftParams {
        let mut draw = |iv: Interval| iv.lo + iv.width() * rng.random::<f64>();
        let rho = draw(self.rho);
        let sigma2 = draw(self.sigma2);
        let gamma = draw(self.gamma);
        DriftParams {
            sigma2,
            gamma,
            rho,
            tau: self.tau,
        }
    }

    /// `count` sensors with parameters evenly spaced from the lower to the upper corner.
    pub fn evenly_spaced(&self, count: usize) -> Vec<DriftParams> {
        let rho = self.rho.linspace(count);
        let sigma2 = self.sigma2.linspace(count);
        let gamma = self.gamma.linspace(count);
        (0..count)
            .map(|i| DriftParams {
                sigma2: sigma2[i],
                gamma: gamma[i],
                rho: rho[i],
                tau: self.tau,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub sensors: Vec<DriftParams>,
    pub param_box: Option<ParamBox>,
}

impl NetworkSpec {
    pub fn new(sensors: Vec<DriftParams>) -> Result<Self> {
        if sensors.is_empty() {
            return Err(Error::domain(
                "sensors",
                "network needs at least one sensor",
            ));
        }
        let sensors = sensors
            .into_iter()
            .map(validate_drift_params)
            .collect::<Result<_>>()?;
        Ok(NetworkSpec {
            sensors,
            param_box: None,
        })
    }

    pub fn from_box(param_box: ParamBox) -> Result<Self> {
        param_box.validate()?;
        Ok(NetworkSpec {
            sensors: Vec::new(),
            param_box: Some(param_box),
        })
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }
}

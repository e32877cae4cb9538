use nalgebra::DMatrix;
use serde::Serialize;

use super::generate::ObservationSet;
use crate::error::{Error, Result};

/// Uniform `l`-bit quantizer with `2^l` levels from `u0` to `u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizerSpec {
    pub u0: f64,
    pub u1: f64,
    pub bits: u32,
    pub delta: f64,
    pub sigma2_q: f64,
}

impl QuantizerSpec {
    pub fn new(u0: f64, u1: f64, bits: u32) -> Result<Self> {
        if !(u0.is_finite() && u1.is_finite() && u1 > u0) {
            return Err(Error::domain(
                "quantizer",
                format!("need U0 < U1, got [{u0}, {u1}]"),
            ));
        }
        if !(1..=52).contains(&bits) {
            return Err(Error::domain(
                "bits",
                format!("must lie in 1..=52, got {bits}"),
            ));
        }
        let delta = (u1 - u0) / (Self::levels_for(bits) - 1) as f64;
        Ok(QuantizerSpec {
            u0,
            u1,
            bits,
            delta,
            sigma2_q: delta * delta / 12.0,
        })
    }

    fn levels_for(bits: u32) -> u64 {
        1u64 << bits
    }

    pub fn levels(&self) -> u64 {
        Self::levels_for(self.bits)
    }

    /// Nearest level to `v` after clipping, and whether `v` was clipped.
    pub fn quantize(&self, v: f64) -> (f64, bool) {
        let clipped = !(self.u0..=self.u1).contains(&v);
        let top = self.levels() - 1;
        let index = ((v.clamp(self.u0, self.u1) - self.u0) / self.delta).round() as u64;
        let level = if index >= top {
            self.u1
        } else {
            self.u0 + index as f64 * self.delta
        };
        (level, clipped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedObservations {
    pub values: DMatrix<f64>,
    pub clipped: usize,
}

pub fn uniform_quantize(
    observations: &ObservationSet,
    spec: &QuantizerSpec,
) -> QuantizedObservations {
    let mut clipped = 0;
    let values = observations.z.map(|v| {
        let (q, c) = spec.quantize(v);
        clipped += c as usize;
        q
    });
    QuantizedObservations { values, clipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn five_bit_step() {
        let q = QuantizerSpec::new(0.0, 1200.0, 5).unwrap();
        assert_abs_diff_eq!(q.delta, 1200.0 / 31.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.delta, 38.7097, epsilon = 1e-4);
        assert_abs_diff_eq!(q.sigma2_q, 124.87, epsilon = 1e-2);
        assert_eq!(q.sigma2_q, q.delta * q.delta / 12.0);
    }

    #[test]
    fn levels_are_fixed_points() {
        let q = QuantizerSpec::new(0.0, 1200.0, 6).unwrap();
        for j in [0u64, 1, 17, 62] {
            let level = j as f64 * q.delta;
            assert_eq!(q.quantize(level), (level, false));
        }
        assert_eq!(q.quantize(1200.0), (1200.0, false));
    }

    #[test]
    fn clipping_is_counted() {
        let q = QuantizerSpec::new(0.0, 1200.0, 5).unwrap();
        assert_eq!(q.quantize(1e9), (1200.0, true));
        assert_eq!(q.quantize(-3.0), (0.0, true));
        let obs = ObservationSet {
            z: DMatrix::from_row_slice(2, 1, &[1e9, 600.0]),
            drift: DMatrix::zeros(2, 1),
            noise: DMatrix::zeros(2, 1),
            seed: 0,
        };
        let out = uniform_quantize(&obs, &q);
        assert_eq!(out.clipped, 1);
        assert_eq!(out.values[(0, 0)], 1200.0);
    }

    #[test]
    fn rounds_to_nearest_level() {
        let q = QuantizerSpec::new(0.0, 3.0, 2).unwrap();
        assert_eq!(q.delta, 1.0);
        assert_eq!(q.quantize(1.4).0, 1.0);
        assert_eq!(q.quantize(1.6).0, 2.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(QuantizerSpec::new(1.0, 1.0, 5).is_err());
        assert!(QuantizerSpec::new(0.0, 1.0, 0).is_err());
    }
}

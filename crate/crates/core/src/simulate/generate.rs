use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{eval_signal, CalibrationAge, DriftParams, NetworkSpec, SignalSpec};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Independent stream families derived from one master seed.
pub mod domain {
    pub const OBSERVATIONS: u64 = 1;
    pub const TRIALS: u64 = 2;
    pub const NETWORK_DRAWS: u64 = 3;
}

/// Key of the stream family `domain` under `seed`.
pub fn stream_key(seed: u64, domain: u64) -> u64 {
    seed ^ domain.wrapping_mul(GOLDEN)
}

/// Counter-based substream `index` of the family `key`. Streams are
/// independent of the order in which they are requested.
pub fn substream(key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Overwrite `out` with a drift path `d_1 .. d_N`.
pub(crate) fn fill_drift<R: Rng + ?Sized>(params: &DriftParams, out: &mut [f64], rng: &mut R) {
    if params.gamma == 0.0 || out.is_empty() {
        out.fill(0.0);
        return;
    }
    let sd = (params.gamma * params.sigma2).sqrt();
    let rho = params.rho;
    let mut d = match params.tau {
        CalibrationAge::Finite(tau) => {
            // d_{1-tau} = 0; tau steps reach d_1.
            let mut d = 0.0;
            for _ in 0..tau {
                d = rho * d + sd * rng.sample::<f64, _>(StandardNormal);
            }
            d
        }
        CalibrationAge::Uncalibrated => {
            let stationary_sd = sd / ((1.0 - rho) * (1.0 + rho)).sqrt();
            stationary_sd * rng.sample::<f64, _>(StandardNormal)
        }
    };
    out[0] = d;
    for slot in out.iter_mut().skip(1) {
        d = rho * d + sd * rng.sample::<f64, _>(StandardNormal);
        *slot = d;
    }
}

pub fn gen_drift_path<R: Rng + ?Sized>(
    params: &DriftParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let params = params.validate()?;
    let mut out = vec![0.0; n_samples];
    fill_drift(&params, &mut out, rng);
    Ok(out)
}

/// One realization of `z_{n,m} = x_n + d_{n,m} + w_{n,m}`; column `m` is sensor `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub z: DMatrix<f64>,
    pub drift: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub seed: u64,
}

pub fn gen_observations(
    network: &NetworkSpec,
    signal: &SignalSpec,
    n_samples: usize,
    seed: u64,
) -> Result<ObservationSet> {
    if network.is_empty() {
        return Err(Error::domain("sensors", "network has no sensors"));
    }
    let x = eval_signal(signal, n_samples)?;
    let m = network.len();
    let key = stream_key(seed, domain::OBSERVATIONS);
    let mut drift = DMatrix::zeros(n_samples, m);
    let mut noise = DMatrix::zeros(n_samples, m);
    for (s, params) in network.sensors.iter().enumerate() {
        let params = params.validate()?;
        let mut rng = substream(key, s as u64);
        fill_drift(&params, drift.column_mut(s).as_mut_slice(), &mut rng);
        let sd = params.sigma2.sqrt();
        for w in noise.column_mut(s).iter_mut() {
            *w = sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let z = DMatrix::from_fn(n_samples, m, |n, s| x[n] + drift[(n, s)] + noise[(n, s)]);
    Ok(ObservationSet {
        z,
        drift,
        noise,
        seed,
    })
}

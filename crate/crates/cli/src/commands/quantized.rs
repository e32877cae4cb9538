use driftcrb::study::{quantized_study, QuantizedStudySpec};

use super::{Context, Report};
use crate::output::{self, CsvTable};

const COLUMNS: &[&str] = &[
    "tau_mode",
    "bits",
    "p",
    "modified_crb",
    "modified_crb_closed",
    "mc_variance",
    "ci_low",
    "ci_high",
    "clip_rate",
];

/// Clip rates above this make the additive-distortion model doubtful.
const CLIP_WARNING: f64 = 1e-3;

pub fn run(ctx: &Context) -> anyhow::Result<Report> {
    let config = &ctx.loaded.config;
    let quantizer = config.quantizer()?;
    let signal = config.signal()?;
    let n_samples = config.single_n()?;
    let mut table = CsvTable::new(COLUMNS);
    let mut warnings = Vec::new();
    for (tau, sensors) in config.sensor_sets()? {
        let rows = quantized_study(&QuantizedStudySpec {
            sensors,
            signal: signal.clone(),
            n_samples,
            u0: quantizer.u0,
            u1: quantizer.u1,
            bits: quantizer.bits.to_vec(),
            trials: config.trials(10_000),
            seed: ctx.seed,
        })?;
        for row in rows {
            let bits = row
                .bits
                .map_or_else(|| "inf".to_string(), |b| b.to_string());
            if row.modified_crb_closed <= 0.0 {
                warnings.push(format!(
                    "tau={tau} bits={bits} p={}: closed-form bound is non-positive",
                    row.p
                ));
            }
            if row.clip_rate > CLIP_WARNING && row.p == 0 {
                warnings.push(format!(
                    "tau={tau} bits={bits}: clip rate {:.2e}",
                    row.clip_rate
                ));
            }
            table.push(vec![
                tau.clone(),
                bits,
                row.p.to_string(),
                output::float(row.modified_crb),
                output::float(row.modified_crb_closed),
                output::float(row.mc_variance),
                output::float(row.ci_low),
                output::float(row.ci_high),
                output::float(row.clip_rate),
            ]);
        }
    }
    Ok(Report {
        bytes: table.render(&ctx.meta("quantized"))?,
        warnings,
    })
}

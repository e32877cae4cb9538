use driftcrb::study::{mre_map, MreMapSpec};
use driftcrb::{ApproxVariant, CalibrationAge};

use super::{Context, Report};
use crate::output::{self, CsvTable};

const COLUMNS: &[&str] = &[
    "rho",
    "gamma",
    "tau_mode",
    "variant",
    "N_epsilon",
    "mre",
    "reason",
];

/// Default cap on the sample-size search.
const N_MAX: usize = 1 << 22;

pub fn run(ctx: &Context) -> anyhow::Result<Report> {
    let config = &ctx.loaded.config;
    let grid = config.grid()?;
    let mut taus = config.taus();
    if taus.is_empty() {
        taus.push(CalibrationAge::Uncalibrated);
    }
    let spec = MreMapSpec {
        rhos: grid.rho.clone(),
        gammas: grid.gamma.clone(),
        taus,
        sigma2: grid.sigma2,
        order: config.order()?,
        epsilon: config.epsilon()?,
        variants: vec![ApproxVariant::FimApprox, ApproxVariant::CrbApprox],
        n_max: config.n_max.unwrap_or(N_MAX),
    };
    let mut table = CsvTable::new(COLUMNS);
    for cell in mre_map(&spec) {
        table.push(vec![
            output::float(cell.rho),
            output::float(cell.gamma),
            cell.tau.to_string(),
            cell.variant.label().to_string(),
            cell.n_epsilon
                .map_or_else(|| "NaN".to_string(), |n| n.to_string()),
            output::float(cell.mre),
            cell.reason.unwrap_or_default(),
        ]);
    }
    Ok(Report {
        bytes: table.render(&ctx.meta("mre-map"))?,
        warnings: Vec::new(),
    })
}

use driftcrb::study::{multisensor_study, MultisensorSpec};

use super::{Context, Report};
use crate::output::{self, CsvTable};

const COLUMNS: &[&str] = &[
    "tau_mode",
    "N",
    "M",
    "p",
    "avg_crb",
    "mc_variance",
    "ci_low",
    "ci_high",
    "exact_mean",
    "exact_low",
    "exact_high",
];

pub fn run(ctx: &Context) -> anyhow::Result<Report> {
    let config = &ctx.loaded.config;
    let taus = config.box_taus()?;
    let spec = MultisensorSpec {
        param_box: config.param_box(taus[0])?,
        taus,
        signal: config.signal()?,
        n_list: config.n_values()?,
        m_list: config.box_config()?.m.to_vec(),
        draws: config.draws.unwrap_or(200),
        trials: config.trials(500),
        seed: ctx.seed,
    };
    let mut table = CsvTable::new(COLUMNS);
    for row in multisensor_study(&spec)? {
        table.push(vec![
            row.tau.to_string(),
            row.n.to_string(),
            row.m.to_string(),
            row.p.to_string(),
            output::float(row.avg_crb),
            output::float(row.mc_variance),
            output::float(row.ci_low),
            output::float(row.ci_high),
            output::float(row.exact_mean),
            output::float(row.exact_low),
            output::float(row.exact_high),
        ]);
    }
    Ok(Report {
        bytes: table.render(&ctx.meta("multisensor"))?,
        warnings: Vec::new(),
    })
}

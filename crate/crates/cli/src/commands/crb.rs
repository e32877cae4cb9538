use serde::Serialize;

use driftcrb::{crb_report, max_relative_error, network_crb, CrbMode, NetworkSpec};

use super::{Context, Report};
use crate::config::ModeConfig;
use crate::output;

#[derive(Debug, Serialize)]
struct Approximation {
    mode: &'static str,
    diag: Vec<f64>,
    mre: f64,
    negative_variance: bool,
}

#[derive(Debug, Serialize)]
struct Entry {
    tau: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "P")]
    order: usize,
    exact: Vec<f64>,
    condition: f64,
    /// Relative size of the second-order term per coefficient.
    epsilon: Option<Vec<f64>>,
    approximations: Vec<Approximation>,
    closed_form_error: Option<String>,
}

fn modes(selected: Option<ModeConfig>) -> Vec<(CrbMode, &'static str)> {
    let all = [
        (CrbMode::ClosedSecond, "closed-second"),
        (CrbMode::ClosedFirst, "closed-first"),
        (CrbMode::FimApprox, "fim-approx"),
    ];
    match selected {
        None | Some(ModeConfig::All) => all.to_vec(),
        Some(ModeConfig::Exact) => Vec::new(),
        Some(ModeConfig::ClosedSecond) => all[..1].to_vec(),
        Some(ModeConfig::ClosedFirst) => all[1..2].to_vec(),
        Some(ModeConfig::FimApprox) => all[2..].to_vec(),
    }
}

pub fn run(ctx: &Context) -> anyhow::Result<Report> {
    let config = &ctx.loaded.config;
    let order = config.order()?;
    let n_values = config.n_values()?;
    // The neglected third-order term is roughly epsilon_p squared.
    let threshold = config.epsilon()?.sqrt();
    let modes = modes(config.mode);
    let mut entries = Vec::new();
    let mut warnings = Vec::new();

    for (tau, sensors) in config.sensor_sets()? {
        let network = NetworkSpec::new(sensors)?;
        for &n in &n_values {
            let exact = network_crb(&network, n, order)?;
            let mut entry = Entry {
                tau: tau.clone(),
                n,
                order,
                exact: exact.diag.clone(),
                condition: exact.condition,
                epsilon: None,
                approximations: Vec::new(),
                closed_form_error: None,
            };
            for &(mode, label) in &modes {
                match crb_report(&network, n, order, mode) {
                    Ok(report) => {
                        let mre = max_relative_error(&exact.diag, &report.diag)?;
                        if report.negative_variance {
                            warnings.push(format!(
                                "tau={tau} N={n}: {label} bound has a non-positive variance"
                            ));
                        }
                        if entry.epsilon.is_none() {
                            if let Some(worst) =
                                report.epsilon.iter().map(|e| e.abs()).reduce(f64::max)
                            {
                                if worst > threshold {
                                    warnings.push(format!(
                                        "tau={tau} N={n}: second-order term is {worst:.3} of the bound (limit {threshold:.3})"
                                    ));
                                }
                            }
                            entry.epsilon = Some(report.epsilon.clone());
                        }
                        entry.approximations.push(Approximation {
                            mode: label,
                            diag: report.diag,
                            mre,
                            negative_variance: report.negative_variance,
                        });
                    }
                    Err(e) => {
                        entry.closed_form_error = Some(e.to_string());
                        break;
                    }
                }
            }
            entries.push(entry);
        }
    }
    let bytes = output::json(&ctx.meta("crb"), &entries)?;
    Ok(Report { bytes, warnings })
}

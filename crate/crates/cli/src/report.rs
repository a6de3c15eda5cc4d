//! Tabular and JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use cftrain_core::eval::{Interval, Metric, Scenario};
use cftrain_core::training::Objective;

use crate::error::CliError;
use crate::experiment::ExperimentReport;

pub const METRICS_HEADER: [&str; 8] = ["dataset", "objective", "scenario", "metric", "mean", "lb", "ub", "significant"];

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Row<'a> {
    objective: Objective,
    scenario: Scenario,
    metric: String,
    interval: Option<Interval>,
    significant: &'a str,
}

impl Row<'_> {
    fn point(objective: Objective, scenario: Scenario, metric: impl Into<String>, value: Option<f64>) -> Row<'static> {
        Row {
            objective,
            scenario,
            metric: metric.into(),
            interval: value.map(|v| Interval { mean: v, lb: v, ub: v }),
            significant: "false",
        }
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Writes `metrics.csv` rows: clean accuracy per trained model, every metric
/// per evaluated model with its bootstrap interval, percentage reductions
/// relative to Vanilla, and protected-feature sensitivities.
pub fn write_metrics<W: Write>(report: &ExperimentReport, out: W) -> Result<(), CliError> {
    let mut rows: Vec<Row> = Vec::new();
    for v in &report.variants {
        rows.push(Row::point(v.objective, v.scenario, "accuracy", Some(v.clean_accuracy)));
    }
    for scenario in [Scenario::Unconstrained, Scenario::Constrained] {
        let evals: Vec<_> = report
            .evaluations
            .iter()
            .filter(|e| e.report.scenario == scenario)
            .collect();
        // all comparisons share the baseline's rounds, so it is listed once
        if let Some(first) = evals.first() {
            for m in Metric::ALL {
                rows.push(Row {
                    objective: Objective::Vanilla,
                    scenario,
                    metric: m.name().into(),
                    interval: first.report.comparison(m).baseline,
                    significant: "false",
                });
            }
        }
        for e in &evals {
            for m in Metric::ALL {
                let c = e.report.comparison(m);
                let sig = flag(c.significant());
                rows.push(Row {
                    objective: e.objective,
                    scenario,
                    metric: m.name().into(),
                    interval: c.candidate,
                    significant: sig,
                });
                rows.push(Row {
                    objective: e.objective,
                    scenario,
                    metric: format!("{}_reduction_pct", m.name()),
                    interval: c.reduction_pct.map(|mean| Interval {
                        mean,
                        lb: c.reduction_pct_ci.map_or(f64::NAN, |i| i.lb),
                        ub: c.reduction_pct_ci.map_or(f64::NAN, |i| i.ub),
                    }),
                    significant: sig,
                });
            }
        }
    }
    for s in &report.sensitivity {
        let name = format!("ig_{}", s.feature_name);
        rows.push(Row {
            objective: s.objective,
            scenario: Scenario::Constrained,
            metric: name.clone(),
            interval: Some(s.report.candidate),
            significant: "false",
        });
        rows.push(Row {
            objective: Objective::Vanilla,
            scenario: Scenario::Constrained,
            metric: name.clone(),
            interval: Some(s.report.baseline),
            significant: "false",
        });
        rows.push(Row {
            objective: s.objective,
            scenario: Scenario::Constrained,
            metric: format!("{name}_ratio"),
            interval: Some(s.report.ratio),
            significant: flag(s.report.ratio.excludes(1.0)),
        });
    }

    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        let finite = |v: f64| v.is_finite().then_some(v);
        w.write_record([
            report.dataset.as_str(),
            r.objective.name(),
            r.scenario.name(),
            r.metric.as_str(),
            &num(r.interval.and_then(|i| finite(i.mean))),
            &num(r.interval.and_then(|i| finite(i.lb))),
            &num(r.interval.and_then(|i| finite(i.ub))),
            r.significant,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Robust-accuracy rows: dataset, objective, attack, ε, accuracy.
pub fn write_robustness<W: Write>(report: &ExperimentReport, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "objective", "attack", "epsilon", "accuracy"])?;
    for c in &report.robustness {
        for (eps, acc) in &c.points {
            w.write_record([
                report.dataset.as_str(),
                c.objective.name(),
                c.attack.name(),
                &eps.to_string(),
                &acc.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes all tabular artifacts, the JSON report and the epoch logs.
pub fn write_artifacts(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir.join("logs"))?;
    write_metrics(report, fs::File::create(dir.join("metrics.csv"))?)?;
    write_robustness(report, fs::File::create(dir.join("robust.csv"))?)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    for v in &report.variants {
        let name = match v.scenario {
            Scenario::Unconstrained => format!("epochs_{}.csv", v.objective),
            Scenario::Constrained => format!("epochs_{}_constrained.csv", v.objective),
        };
        let mut w = csv::Writer::from_path(dir.join("logs").join(name))?;
        for log in &v.log {
            w.serialize(log)?;
        }
        w.flush()?;
    }
    Ok(())
}

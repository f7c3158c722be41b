//! Report emission: plot-ready CSV tables or a single JSON document.
//! Numbers print via the default float formatting, which round-trips
//! exactly, so identical reports are byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gridsched::RatioReport;

use crate::experiment::{CliError, Report, RunRow};

pub const RUNS_HEADER: &str =
    "algo,w,seed,noise_frac,total_cost,benchmark_cost,cost_reduction,ratio_vs_opt,startup_count";
pub const BOUNDS_HEADER: &str = "w,lambda_star,cr_chase,cr_chaselk,cr_chaselk_plus,cr_chasepp,\
cr_chasepp_plus,cr_lower,delta1_star,delta2_star,alpha,price_cap";

pub fn runs_csv(report: &Report) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in &report.runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.algo,
            r.w,
            r.seed,
            r.noise_frac,
            r.total_cost,
            r.benchmark_cost,
            r.cost_reduction,
            r.ratio_vs_opt,
            r.startup_count
        ));
    }
    out
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn bounds_csv(report: &Report) -> String {
    let b = &report.bounds;
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for row in &b.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.w,
            row.lambda_star,
            row.cr_chase,
            row.cr_chaselk,
            row.cr_chaselk_plus,
            row.cr_chasepp,
            row.cr_chasepp_plus,
            row.cr_lower,
            opt_field(row.delta1_star),
            opt_field(row.delta2_star),
            b.alpha,
            b.price_cap
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    price_cap: f64,
    benchmark_cost: f64,
    opt_cost: f64,
    opt_cost_reduction: f64,
    algorithms: BTreeMap<&'a str, Vec<&'a RunRow>>,
    bounds: &'a RatioReport,
}

pub fn report_json(report: &Report) -> String {
    let mut algorithms: BTreeMap<&str, Vec<&RunRow>> = BTreeMap::new();
    for row in &report.runs {
        algorithms.entry(&row.algo).or_default().push(row);
    }
    let doc = JsonReport {
        price_cap: report.price_cap,
        benchmark_cost: report.benchmark_cost,
        opt_cost: report.opt_cost,
        opt_cost_reduction: report.opt_cost_reduction,
        algorithms,
        bounds: &report.bounds,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Writes the report next to `out` and returns the paths written:
/// `<out>.runs.csv` and `<out>.bounds.csv`, or `<out>.json`.
pub fn emit_report(report: &Report, out: &Path, format: &str) -> Result<Vec<PathBuf>, CliError> {
    let stem = out.as_os_str().to_string_lossy().to_string();
    let write = |suffix: &str, body: String| -> Result<PathBuf, CliError> {
        let path = PathBuf::from(format!("{stem}{suffix}"));
        std::fs::write(&path, body)
            .map_err(|source| CliError::Write { path: path.clone(), source })?;
        Ok(path)
    };
    match format {
        "json" => Ok(vec![write(".json", report_json(report))?]),
        _ => Ok(vec![
            write(".runs.csv", runs_csv(report))?,
            write(".bounds.csv", bounds_csv(report))?,
        ]),
    }
}

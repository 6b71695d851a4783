//! Dual-vs-joint comparison harness.
//!
//! Each (method, scenario) pair runs once up to the largest requested
//! `k_max`; the results at smaller `k_max` are read off the per-iteration
//! trace, which is exactly what a separate shorter run would produce.
//!
//! Output files:
//!
//! | file                  | columns |
//! |-----------------------|---------|
//! | `runs.csv`            | `method,k_max,scenario,seed,status,rmse_h_cm,rmse_q_lps,initial_rmse_h_cm,initial_rmse_q_lps,iterations,error` |
//! | `summary.csv`         | `method,k_max,n,failed,rmse_h_cm_mean,rmse_h_cm_std,rmse_q_lps_mean,rmse_q_lps_std,initial_rmse_h_cm_mean` |
//! | `timing.csv`          | `method,k_max,scenario,time_s` |
//! | `timing_summary.csv`  | `method,k_max,n,time_s_mean,time_s_std` |
//! | `plot.csv`            | `method,k_max,metric,mean,std` |
//!
//! `runs.csv` and `summary.csv` hold no timings and are byte-identical across
//! runs with the same inputs; the timing files are not.

pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimationSetup, EstimatorConfig, Method};
use crate::graph::{NetworkGraph, SensorLayout, StructuralMatrices};
use crate::hydraulics::{generate_scenario, Scenario, SolverOptions};
use crate::scalar::{to_f64, Scalar};

/// `sqrt(mean((x - x̂)²))`
pub fn rmse<T: Scalar>(x: &DVector<T>, estimate: &DVector<T>) -> Result<f64> {
    if x.len() != estimate.len() {
        return Err(Error::Dimension(format!(
            "rmse of vectors with lengths {} and {}",
            x.len(),
            estimate.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Dimension("rmse of empty vectors".into()));
    }
    let sum: f64 = x
        .iter()
        .zip(estimate.iter())
        .map(|(&a, &b)| to_f64(a - b).powi(2))
        .sum();
    Ok((sum / x.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    pub methods: Vec<Method>,
    pub k_max: Vec<usize>,
    pub workers: usize,
    /// Timing repetitions per run; the median is reported.
    pub repetitions: usize,
    pub solver: SolverOptions,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            methods: vec![Method::Dual, Method::Joint],
            k_max: vec![15, 50, 100],
            workers: 1,
            repetitions: 1,
            solver: SolverOptions::default(),
        }
    }
}

/// One (method, k_max, scenario) result. RMSE in cm and l/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub method: Method,
    pub k_max: usize,
    pub scenario: usize,
    pub seed: u64,
    pub rmse_h_cm: Option<f64>,
    pub rmse_q_lps: Option<f64>,
    pub initial_rmse_h_cm: Option<f64>,
    pub initial_rmse_q_lps: Option<f64>,
    pub iterations: usize,
    pub time: Duration,
    pub error: Option<String>,
}

impl RunRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation, summed in input order.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub k_max: usize,
    pub n: usize,
    pub failed: usize,
    pub rmse_h_cm: Stat,
    pub rmse_q_lps: Stat,
    pub initial_rmse_h_cm: Stat,
    pub time_s: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Ordered by method, then k_max, then scenario.
    pub rows: Vec<RunRow>,
}

impl Comparison {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    pub fn rows_for(&self, method: Method, k_max: usize) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(move |r| r.method == method && r.k_max == k_max)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(Method, usize), Vec<&RunRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.method, r.k_max)).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|((method, k_max), rows)| {
                let ok: Vec<&RunRow> = rows.iter().copied().filter(|r| r.ok()).collect();
                let pick = |f: fn(&RunRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
                SummaryRow {
                    method,
                    k_max,
                    n: ok.len(),
                    failed: rows.len() - ok.len(),
                    rmse_h_cm: Stat::of(&pick(|r| r.rmse_h_cm)),
                    rmse_q_lps: Stat::of(&pick(|r| r.rmse_q_lps)),
                    initial_rmse_h_cm: Stat::of(&pick(|r| r.initial_rmse_h_cm)),
                    time_s: Stat::of(&ok.iter().map(|r| r.time.as_secs_f64()).collect::<Vec<_>>()),
                }
            })
            .collect()
    }
}

/// Runs every method on every scenario, on a pool of `options.workers`
/// threads. Failed scenarios are recorded, never fatal.
pub fn run_comparison(
    graph: &NetworkGraph<f64>,
    layout: &SensorLayout,
    scenarios: &[Scenario],
    config: &EstimatorConfig,
    options: &ComparisonOptions,
) -> Result<Comparison> {
    if scenarios.is_empty() {
        return Err(Error::Config("no scenarios to compare".into()));
    }
    if options.k_max.is_empty() || options.methods.is_empty() {
        return Err(Error::Config("need at least one method and one k_max".into()));
    }
    config.validate()?;
    let matrices = StructuralMatrices::new(graph, layout)?;
    let mut ks = options.k_max.clone();
    ks.sort_unstable();
    ks.dedup();
    let longest = *ks.last().unwrap();
    let run_config = EstimatorConfig {
        k_max: longest,
        ..config.clone()
    };

    let one = |(idx, scenario): (usize, &Scenario)| -> Vec<RunRow> {
        let failed = |method: Method, msg: String| -> Vec<RunRow> {
            ks.iter()
                .map(|&k| RunRow {
                    method,
                    k_max: k,
                    scenario: idx,
                    seed: scenario.seed,
                    rmse_h_cm: None,
                    rmse_q_lps: None,
                    initial_rmse_h_cm: None,
                    initial_rmse_q_lps: None,
                    iterations: 0,
                    time: Duration::ZERO,
                    error: Some(msg.clone()),
                })
                .collect()
        };
        let prepared = generate_scenario(graph, layout, scenario, scenario.seed, &options.solver).and_then(|data| {
            let setup = EstimationSetup::prepare(graph, layout, &matrices, &data.measurements, &config.gsi)?;
            Ok((data, setup))
        });
        let (data, setup) = match prepared {
            Ok(p) => p,
            Err(e) => return options.methods.iter().flat_map(|&m| failed(m, e.to_string())).collect(),
        };
        let mut out = Vec::new();
        for &method in &options.methods {
            let mut reports = Vec::new();
            for _ in 0..options.repetitions.max(1) {
                match estimate(method, &setup, &data.measurements, &run_config, Some(&data.truth)) {
                    Ok(r) => reports.push(r),
                    Err(e) => {
                        reports.clear();
                        out.extend(failed(method, e.to_string()));
                        break;
                    }
                }
            }
            let Some(report) = reports.first() else { continue };
            for &k in &ks {
                let at = report.at(k.min(report.iterations)).expect("trace covers executed iterations");
                let mut times: Vec<Duration> = reports
                    .iter()
                    .map(|r| r.at(k.min(r.iterations)).map_or(Duration::ZERO, |t| t.elapsed))
                    .collect();
                times.sort();
                out.push(RunRow {
                    method,
                    k_max: k,
                    scenario: idx,
                    seed: scenario.seed,
                    rmse_h_cm: at.rmse_h.map(|v| v * 100.0),
                    rmse_q_lps: at.rmse_q.map(|v| v * 1e3),
                    initial_rmse_h_cm: report.initial_rmse_h.map(|v| v * 100.0),
                    initial_rmse_q_lps: report.initial_rmse_q.map(|v| v * 1e3),
                    iterations: at.iteration,
                    time: times[times.len() / 2],
                    error: None,
                });
            }
        }
        out
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let per_scenario: Vec<Vec<RunRow>> = pool.install(|| scenarios.par_iter().enumerate().map(one).collect());

    let mut rows: Vec<RunRow> = per_scenario.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.method, r.k_max, r.scenario));
    Ok(Comparison { rows })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn runs_csv(c: &Comparison) -> String {
    let mut out = String::from(
        "method,k_max,scenario,seed,status,rmse_h_cm,rmse_q_lps,initial_rmse_h_cm,initial_rmse_q_lps,iterations,error\n",
    );
    for r in &c.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.k_max,
            r.scenario,
            r.seed,
            if r.ok() { "ok" } else { "failed" },
            opt(r.rmse_h_cm),
            opt(r.rmse_q_lps),
            opt(r.initial_rmse_h_cm),
            opt(r.initial_rmse_q_lps),
            r.iterations,
            csv_field(r.error.as_deref().unwrap_or(""))
        );
    }
    out
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from(
        "method,k_max,n,failed,rmse_h_cm_mean,rmse_h_cm_std,rmse_q_lps_mean,rmse_q_lps_std,initial_rmse_h_cm_mean\n",
    );
    for s in summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.method,
            s.k_max,
            s.n,
            s.failed,
            s.rmse_h_cm.mean,
            s.rmse_h_cm.std,
            s.rmse_q_lps.mean,
            s.rmse_q_lps.std,
            s.initial_rmse_h_cm.mean
        );
    }
    out
}

pub fn timing_csv(c: &Comparison) -> String {
    let mut out = String::from("method,k_max,scenario,time_s\n");
    for r in c.rows.iter().filter(|r| r.ok()) {
        let _ = writeln!(out, "{},{},{},{}", r.method, r.k_max, r.scenario, r.time.as_secs_f64());
    }
    out
}

pub fn timing_summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("method,k_max,n,time_s_mean,time_s_std\n");
    for s in summary {
        let _ = writeln!(out, "{},{},{},{},{}", s.method, s.k_max, s.n, s.time_s.mean, s.time_s.std);
    }
    out
}

/// Long format, one row per (method, k_max, metric). Metric order:
/// `rmse_h_cm`, `rmse_q_lps`, `time_s`.
pub fn emit_plot_data(summary: &[SummaryRow]) -> String {
    let mut out = String::from("method,k_max,metric,mean,std\n");
    for s in summary {
        for (metric, stat) in [("rmse_h_cm", s.rmse_h_cm), ("rmse_q_lps", s.rmse_q_lps), ("time_s", s.time_s)] {
            let _ = writeln!(out, "{},{},{},{},{}", s.method, s.k_max, metric, stat.mean, stat.std);
        }
    }
    out
}

/// Writes the five CSV files into `dir`, creating it if needed.
pub fn write_reports(c: &Comparison, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let summary = c.summary();
    std::fs::write(dir.join("runs.csv"), runs_csv(c))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&summary))?;
    std::fs::write(dir.join("timing.csv"), timing_csv(c))?;
    std::fs::write(dir.join("timing_summary.csv"), timing_summary_csv(&summary))?;
    std::fs::write(dir.join("plot.csv"), emit_plot_data(&summary))?;
    Ok(())
}

/// Median of a slice (upper middle for even lengths is avoided by averaging).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

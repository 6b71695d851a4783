use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wdn_estim::bench::synthetic::{
    synthetic_layout, synthetic_network, synthetic_scenarios, LayoutSpec, NetworkSpec, ScenarioSpec,
};
use wdn_estim::bench::{run_comparison, write_reports, ComparisonOptions};
use wdn_estim::estimators::{estimate, EstimationSetup, EstimatorConfig, Method};
use wdn_estim::graph::StructuralMatrices;
use wdn_estim::hydraulics::{generate_scenario, Scenario, SolverOptions};
use wdn_estim::ingest::{
    load_measurements, load_sensor_config, parse_inp, write_inp, write_measurements, write_sensor_config, GraphOptions,
};
use wdn_estim::{Graph, Layout};

#[derive(Parser)]
#[command(name = "wdn-estim", version, about = "Head and flow state estimation for water distribution networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a network, sensor layout, scenarios and measurement snapshots.
    Generate(GenerateArgs),
    /// Run one estimator on one snapshot.
    Estimate(EstimateArgs),
    /// Run the dual/joint comparison over a batch of scenarios.
    Compare(CompareArgs),
    /// Validate an INP file and print what was read.
    Parse(ParseArgs),
}

#[derive(Args, Clone)]
struct NetworkArgs {
    /// INP network; a synthetic network is used when absent.
    #[arg(long, requires = "sensors")]
    network: Option<PathBuf>,
    /// Sensor layout CSV (`kind,id`).
    #[arg(long, requires = "network")]
    sensors: Option<PathBuf>,
    /// Replace reservoirs by fixed-head neighbours at this head (m).
    #[arg(long)]
    inlet_surgery: Option<f64>,
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    #[arg(long, default_value_t = 260)]
    edges: usize,
    #[arg(long, default_value_t = 7)]
    network_seed: u64,
    #[arg(long, default_value_t = 11)]
    layout_seed: u64,
}

impl NetworkArgs {
    fn load(&self) -> Result<(Graph, Layout)> {
        match (&self.network, &self.sensors) {
            (Some(net), Some(sensors)) => {
                let graph = read_graph(net, self.inlet_surgery)?;
                let file = fs::File::open(sensors).with_context(|| format!("opening {}", sensors.display()))?;
                let layout = load_sensor_config(file, &graph).with_context(|| format!("reading {}", sensors.display()))?;
                Ok((graph, layout))
            }
            _ => {
                let graph = synthetic_network(&NetworkSpec {
                    nodes: self.nodes,
                    edges: self.edges,
                    seed: self.network_seed,
                    ..Default::default()
                })?;
                let layout = synthetic_layout(
                    &graph,
                    &LayoutSpec {
                        seed: self.layout_seed,
                        ..Default::default()
                    },
                )?;
                Ok((graph, layout))
            }
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[arg(long, default_value_t = 20)]
    scenarios: usize,
    /// Seed of the first scenario; later ones count up.
    #[arg(long, default_value_t = 1000)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Scenario JSON; supplies ground truth, and readings when no CSV is given.
    #[arg(long, required_unless_present = "measurements")]
    scenario: Option<PathBuf>,
    /// Measurement snapshot CSV (`kind,id,value,unit`).
    #[arg(long)]
    measurements: Option<PathBuf>,
    #[arg(long, default_value = "dual")]
    method: Method,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Result JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuningArgs {
    /// Estimator configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k_ex: Option<usize>,
    /// GSI trade-off weight.
    #[arg(long)]
    zeta: Option<f64>,
    /// GSI solver tolerance.
    #[arg(long)]
    gsi_tolerance: Option<f64>,
}

impl TuningArgs {
    fn config(&self) -> Result<EstimatorConfig> {
        let mut config = match &self.config {
            Some(path) => EstimatorConfig::from_json(&read(path)?)?,
            None => EstimatorConfig::default(),
        };
        if let Some(k) = self.k_ex {
            config.k_ex = k;
        }
        if let Some(z) = self.zeta {
            config.gsi.zeta = z;
        }
        if let Some(t) = self.gsi_tolerance {
            config.gsi.tolerance = t;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Directory of scenario JSON files; synthetic scenarios when absent.
    #[arg(long)]
    scenario_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    scenarios: usize,
    /// Seed of the first synthetic scenario.
    #[arg(long = "seeds", default_value_t = 1000)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "15,50,100")]
    k_max: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "dual,joint")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Timed runs per scenario; the median time is reported.
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ParseArgs {
    file: PathBuf,
    #[arg(long)]
    inlet_surgery: Option<f64>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn read_graph(path: &Path, inlet_surgery: Option<f64>) -> Result<Graph> {
    let inp = parse_inp(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let (graph, warnings) = inp.to_graph(&GraphOptions { inlet_surgery })?;
    for w in inp.warnings.iter().chain(&warnings) {
        eprintln!("warning: {w}");
    }
    Ok(graph)
}

fn scenario_name(i: usize) -> String {
    format!("scenario_{i:03}")
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let (graph, layout) = args.network.load()?;
    let scenarios = synthetic_scenarios(&graph, &layout, &ScenarioSpec::default(), args.scenarios, args.seed);
    let scen_dir = args.out.join("scenarios");
    let meas_dir = args.out.join("measurements");
    fs::create_dir_all(&scen_dir)?;
    fs::create_dir_all(&meas_dir)?;
    write(&args.out.join("network.inp"), &write_inp(&graph))?;
    write(&args.out.join("sensors.csv"), &write_sensor_config(&layout)?)?;
    let solver = SolverOptions::default();
    for (i, scenario) in scenarios.iter().enumerate() {
        let name = scenario_name(i);
        write(&scen_dir.join(format!("{name}.json")), &scenario.to_json()?)?;
        let data = generate_scenario::<f64>(&graph, &layout, scenario, scenario.seed, &solver)
            .with_context(|| format!("solving {name}"))?;
        write(&meas_dir.join(format!("{name}.csv")), &write_measurements(&layout, &data.measurements)?)?;
    }
    eprintln!(
        "wrote {} nodes, {} pipes, {} scenarios to {}",
        graph.node_count(),
        graph.edge_count(),
        scenarios.len(),
        args.out.display()
    );
    Ok(())
}

fn run_estimate(args: &EstimateArgs) -> Result<()> {
    let (graph, layout) = args.network.load()?;
    let config = args.tuning.config()?;
    let matrices = StructuralMatrices::new(&graph, &layout)?;
    let data = match &args.scenario {
        Some(path) => {
            let scenario = Scenario::from_json(&read(path)?)?;
            Some(generate_scenario::<f64>(&graph, &layout, &scenario, scenario.seed, &SolverOptions::default())?)
        }
        None => None,
    };
    let bundle = match (&args.measurements, &data) {
        (Some(path), _) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            load_measurements(file, &layout).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(d)) => d.measurements.clone(),
        (None, None) => bail!("need --measurements or --scenario"),
    };
    let setup = EstimationSetup::prepare(&graph, &layout, &matrices, &bundle, &config.gsi)?;
    let report = estimate(args.method, &setup, &bundle, &config, data.as_ref().map(|d| &d.truth))?;

    let heads: serde_json::Map<_, _> = graph
        .nodes()
        .iter()
        .zip(report.heads.iter())
        .map(|(n, &h)| (n.id.clone(), json!(h)))
        .collect();
    let flows: serde_json::Map<_, _> = graph
        .edges()
        .iter()
        .zip(report.flows.iter())
        .map(|(e, &q)| (e.id.clone(), json!(q)))
        .collect();
    let out = json!({
        "method": report.method.to_string(),
        "iterations": report.iterations,
        "stop_reason": format!("{:?}", report.reason),
        "elapsed_s": report.elapsed.as_secs_f64(),
        "initial_rmse_h_cm": report.initial_rmse_h.map(|v| v * 100.0),
        "rmse_h_cm": report.final_rmse_h().map(|v| v * 100.0),
        "initial_rmse_q_lps": report.initial_rmse_q.map(|v| v * 1e3),
        "rmse_q_lps": report.final_rmse_q().map(|v| v * 1e3),
        "heads_m": heads,
        "flows_m3s": flows,
    });
    let text = serde_json::to_string_pretty(&out)?;
    match &args.out {
        Some(path) => write(path, &text)?,
        None => emit(&text)?,
    }
    Ok(())
}

fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    if paths.is_empty() {
        bail!("no scenario JSON files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| Scenario::from_json(&read(p)?).with_context(|| format!("reading {}", p.display())))
        .collect()
}

/// Returns the number of failed (method, k_max, scenario) rows.
fn compare(args: &CompareArgs) -> Result<usize> {
    let (graph, layout) = args.network.load()?;
    let config = args.tuning.config()?;
    let scenarios = match &args.scenario_dir {
        Some(dir) => load_scenario_dir(dir)?,
        None => synthetic_scenarios(&graph, &layout, &ScenarioSpec::default(), args.scenarios, args.seed),
    };
    let options = ComparisonOptions {
        methods: args.methods.clone(),
        k_max: args.k_max.clone(),
        workers: args.workers,
        repetitions: args.repetitions,
        ..Default::default()
    };
    let comparison = run_comparison(&graph, &layout, &scenarios, &config, &options)?;
    fs::create_dir_all(&args.out)?;
    write_reports(&comparison, &args.out)?;
    for s in comparison.summary() {
        eprintln!(
            "{:>5} k_max={:<4} n={:<3} rmse_h={:.3}±{:.3} cm  rmse_q={:.3}±{:.3} l/s  t={:.3}±{:.3} s",
            s.method.to_string(),
            s.k_max,
            s.n,
            s.rmse_h_cm.mean,
            s.rmse_h_cm.std,
            s.rmse_q_lps.mean,
            s.rmse_q_lps.std,
            s.time_s.mean,
            s.time_s.std
        );
    }
    for row in comparison.rows.iter().filter(|r| !r.ok()) {
        eprintln!(
            "failed: {} k_max={} scenario={}: {}",
            row.method,
            row.k_max,
            row.scenario,
            row.error.as_deref().unwrap_or("")
        );
    }
    Ok(comparison.failures())
}

fn parse(args: &ParseArgs) -> Result<()> {
    let inp = parse_inp(&read(&args.file)?).with_context(|| format!("parsing {}", args.file.display()))?;
    let (graph, warnings) = inp.to_graph::<f64>(&GraphOptions {
        inlet_surgery: args.inlet_surgery,
    })?;
    let out = json!({
        "title": inp.title,
        "units": format!("{:?}", inp.units),
        "junctions": inp.junctions.len(),
        "reservoirs": inp.reservoirs.len(),
        "tanks": inp.tanks.len(),
        "pipes": inp.pipes.len(),
        "skipped": inp.skipped,
        "graph_nodes": graph.node_count(),
        "graph_edges": graph.edge_count(),
        "graph_inlets": graph.inlets().count(),
        "warnings": inp.warnings.iter().chain(&warnings).collect::<Vec<_>>(),
    });
    emit(&serde_json::to_string_pretty(&out)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a).map(|_| 0),
        Command::Estimate(a) => run_estimate(a).map(|_| 0),
        Command::Compare(a) => compare(a),
        Command::Parse(a) => parse(a).map(|_| 0),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} run(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

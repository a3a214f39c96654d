use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pathsec::assurance::{
    path_throughput, LatestAssessment, MultipathGraph, PathAssessment, Pipeline, PipelineConfig,
};
use pathsec::cs::CompressedWindow;
use pathsec::experiment::{
    dataset_window, emit_plots, reference_window, run_experiment, ExperimentConfig,
};
use pathsec::traffic::{load_window, store_window, TrafficConfig, WindowFormat};
use pathsec::{Error, Result};

#[derive(Parser)]
#[command(name = "pathsec", version, about = "Assurance scoring for multipath network paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reference window and a labeled dataset.
    Gen(GenArgs),
    /// Assess event windows and update path assurance on a graph.
    Assess(AssessArgs),
    /// Run a seeded experiment and write the report.
    Run(RunArgs),
    /// Turn a run directory into plot CSVs.
    Plots(PlotArgs),
}

#[derive(Args)]
struct PipelineFlags {
    /// Measurement ratio M/N, overriding the epsilon rule.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed of the sensing row subset.
    #[arg(long)]
    cs_seed: Option<u64>,
    /// False-alarm level of the residual threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Share of variance kept in the principal subspace.
    #[arg(long)]
    power_fraction: Option<f64>,
}

impl PipelineFlags {
    fn apply(&self, p: &mut PipelineConfig) {
        if let Some(r) = self.ratio {
            p.ratio = Some(r);
        }
        if let Some(e) = self.epsilon {
            p.sampler.epsilon = e;
        }
        if let Some(s) = self.cs_seed {
            p.sampler.seed = s;
        }
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(f) = self.power_fraction {
            p.power_fraction = f;
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Experiment config JSON; defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write JSON windows instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AssessArgs {
    /// Pipeline config JSON; defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Attack-free window used to fit the detector and baseline profile.
    #[arg(long)]
    reference: PathBuf,
    /// Windows to assess, in timestamp order.
    #[arg(long = "window", required = true)]
    windows: Vec<PathBuf>,
    /// Graph definition JSON; the built-in seven-vertex example when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Catalog plus signatures JSON; built-in tables when absent.
    #[arg(long)]
    traffic_config: Option<PathBuf>,
    /// Path id for windows that carry none.
    #[arg(long)]
    path: Option<String>,
    /// Message length for the throughput figure.
    #[arg(long, default_value_t = 1.0)]
    message_len: f64,
    /// Directory receiving each compressed window as JSON.
    #[arg(long)]
    compressed_out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the ungated comparison pass.
    #[arg(long)]
    no_compare: bool,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory written by `run`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EdgeReport {
    from: String,
    to: String,
    configured: f64,
    assurance: f64,
}

#[derive(Serialize)]
struct AssessOutput {
    assessments: Vec<PathAssessment>,
    edges: Vec<EdgeReport>,
    throughput: f64,
}

#[derive(Serialize)]
struct GenOutput {
    reference: PathBuf,
    windows: Vec<PathBuf>,
    labeled: usize,
}

fn experiment_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn gen(args: GenArgs) -> Result<()> {
    let mut cfg = experiment_config(args.config.as_deref())?;
    cfg.windows = args.windows.unwrap_or(cfg.windows);
    cfg.samples = args.samples.unwrap_or(cfg.samples);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let traffic = cfg.traffic()?;
    let format = if args.json { WindowFormat::Json } else { WindowFormat::Csv };
    let dir = args.out.join("windows");
    create_dir(&dir)?;

    let reference = args.out.join(format!("reference.{}", format.extension()));
    store_window(&reference_window(&cfg, &traffic)?, &reference, format)?;
    let mut out = GenOutput { reference, windows: Vec::new(), labeled: 0 };
    for i in 0..cfg.windows {
        let w = dataset_window(&cfg, &traffic, i)?;
        let path = dir.join(format!("{}.{}", w.id, format.extension()));
        store_window(&w, &path, format)?;
        out.labeled += usize::from(w.is_labeled());
        out.windows.push(path);
    }
    let path = args.out.join("traffic.json");
    std::fs::write(&path, traffic.to_json()).map_err(|e| io_error(&path, e))?;
    print_json(&out)
}

fn assess(args: AssessArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            serde_json::from_str(&text)?
        }
        None => PipelineConfig::default(),
    };
    args.pipeline.apply(&mut cfg);
    let traffic = match &args.traffic_config {
        Some(p) => TrafficConfig::load(p)?,
        None => TrafficConfig::default(),
    };
    let mut graph = match &args.graph {
        Some(p) => MultipathGraph::load(p)?,
        None => MultipathGraph::example(),
    };
    let load = |p: &Path| load_window(p, WindowFormat::from_path(p)?, &traffic.catalog);
    let reference = load(&args.reference)?;
    let pipeline = Pipeline::new(cfg, &reference, traffic.signatures.clone())?;
    if let Some(dir) = &args.compressed_out {
        create_dir(dir)?;
    }

    let mut assessments = Vec::new();
    for (t, p) in args.windows.iter().enumerate() {
        let mut w = load(p)?;
        if w.path.is_none() {
            w.path = args.path.clone();
        }
        let a = pipeline.assess(&w);
        if let Some(path) = &a.path_id {
            graph.record_assessment(
                path,
                LatestAssessment { window_id: a.window_id.clone(), timestamp: t as u64, assurance: a.assurance },
            )?;
        }
        if let Some(dir) = &args.compressed_out {
            let y: Option<CompressedWindow> = pipeline.stored_window(&w.id);
            if let Some(y) = y {
                let path = dir.join(format!("{}.json", w.id));
                std::fs::write(&path, serde_json::to_string(&y)?).map_err(|e| io_error(&path, e))?;
            }
        }
        assessments.push(a);
    }

    let edges = graph
        .edges()
        .map(|e| {
            Ok(EdgeReport {
                from: e.from.clone(),
                to: e.to.clone(),
                configured: e.assurance,
                assurance: graph.edge_assurance(&e.from, &e.to)?,
            })
        })
        .collect::<Result<_>>()?;
    let paths: Vec<&str> = graph.path_names().collect();
    let throughput = path_throughput(&graph, &paths, args.message_len)?;
    print_json(&AssessOutput { assessments, edges, throughput })
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = experiment_config(args.config.as_deref())?;
    cfg.windows = args.windows.unwrap_or(cfg.windows);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.threads = args.threads.or(cfg.threads);
    cfg.output_dir = args.out.or(cfg.output_dir);
    if args.no_compare {
        cfg.compare_gating = false;
    }
    args.pipeline.apply(&mut cfg.pipeline);
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    print_json(&out.report)
}

fn plots(args: PlotArgs) -> Result<()> {
    print_json(&emit_plots(&args.run, &args.out)?)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let doc = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{doc}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Assess(a) => assess(a),
        Command::Run(a) => run(a),
        Command::Plots(a) => plots(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}

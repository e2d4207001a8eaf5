use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vipguide::calibration::{fit, read_samples_csv, CalibrationModel};
use vipguide::config::Config;
use vipguide::dataset::{read_ground_truth, write_dataset, FrameReader};
use vipguide::global::load_graph;
use vipguide::perception::PerceptionFrame;
use vipguide::pipeline::{annotate, Outcome, Pipeline};
use vipguide::sim::{reference_calibration, Scenario, ScenarioKind, ScenarioSpec};

/// Model file written next to a simulated dataset.
const DATASET_MODEL_FILE: &str = "calibration.json";

#[derive(Parser)]
#[command(name = "vipguide", version, about = "Drone guidance planner for a visually impaired pedestrian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the per-frame planner and write a decision trace.
    Plan(PlanArgs),
    /// Shortest route over a street graph.
    Route(RouteArgs),
    /// Fit a depth calibration model from `rev,distance_m` samples.
    Calibrate(CalibrateArgs),
    /// Write a synthetic scenario dataset.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Dataset directory holding frames.jsonl and PGM sidecars.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    frames: Option<PathBuf>,
    /// Generate frames from a built-in scenario instead.
    #[arg(long, value_parser = parse_kind)]
    scenario: Option<ScenarioKind>,
    #[arg(long, default_value_t = 1, requires = "scenario")]
    seed: u64,
    #[arg(long, default_value_t = 60, requires = "scenario")]
    n_frames: u32,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Calibration model JSON; overrides the config's calibration section.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Write one annotated PPM per frame into this directory.
    #[arg(long)]
    annotate: Option<PathBuf>,
    /// Leave latency out of the trace so reruns are byte-identical.
    #[arg(long)]
    no_latency: bool,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    src: String,
    #[arg(long)]
    dst: String,
    /// Edge to treat as impassable, as `U,V`; repeatable.
    #[arg(long, value_parser = parse_edge)]
    block: Vec<(String, String)>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_kind)]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    n_frames: u32,
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse()
}

fn parse_edge(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((u, v)) if !u.is_empty() && !v.is_empty() && !v.contains(',') => Ok((u.to_string(), v.to_string())),
        _ => Err(format!("expected `U,V`, got `{s}`")),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run_plan(args: PlanArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => Config::default(),
    };
    if args.no_latency {
        config.pipeline.record_latency = false;
    }
    let configured = match &args.model {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(CalibrationModel::from_json(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => config.calibration_model()?,
    };

    let scenario = args.scenario.map(|kind| Scenario::new(ScenarioSpec::new(kind, args.seed, args.n_frames)));
    let model = match (configured, &scenario) {
        (Some(m), _) => m,
        (None, Some(s)) => reference_calibration(&s.spec().rev_law).context("fitting scenario calibration")?,
        (None, None) => bail!("no calibration model: pass --model or set [calibration] in the config"),
    };

    let mut pipeline = Pipeline::new(config.clone(), model)?;
    if let Some(route) = &config.route {
        let graph = load_graph(&route.graph_file)?;
        pipeline = pipeline.with_route(graph, &route.src, &route.dst)?;
    }

    if let Some(dir) = &args.annotate {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut trace = BufWriter::new(file);
    let mut counts = [0usize; 3];

    let mut step = |frame: PerceptionFrame, decode_ms: f64| -> Result<()> {
        let result = pipeline
            .process_frame(&frame, decode_ms)
            .with_context(|| format!("frame {}", frame.frame_id))?;
        writeln!(trace, "{}", result.decision.to_json_line())?;
        match result.decision.outcome {
            Outcome::Heading { .. } => counts[0] += 1,
            Outcome::Reroute { .. } => counts[1] += 1,
            Outcome::VipLost => counts[2] += 1,
        }
        if let Some(dir) = &args.annotate {
            let path = dir.join(format!("{}.ppm", frame.frame_id));
            write_file(&path, &annotate(&frame, &result.overlay))?;
        }
        Ok(())
    };

    match (&args.frames, &scenario) {
        (Some(dir), _) => {
            let mut reader = FrameReader::open(dir)?;
            loop {
                let t = Instant::now();
                let Some(frame) = reader.next() else { break };
                let decode_ms = t.elapsed().as_secs_f64() * 1e3;
                step(frame?, decode_ms)?;
            }
        }
        (None, Some(s)) => {
            for (frame, _) in s.frames() {
                step(frame, 0.0)?;
            }
        }
        (None, None) => unreachable!("clap requires --frames or --scenario"),
    }
    trace.flush().with_context(|| format!("writing {}", args.out.display()))?;

    let lat = pipeline.latency();
    eprintln!(
        "{} frames: {} heading, {} reroute, {} vip lost",
        counts.iter().sum::<usize>(),
        counts[0],
        counts[1],
        counts[2]
    );
    if !lat.is_empty() {
        let (d, t, p, all) = (lat.decode(), lat.track(), lat.plan(), lat.planner());
        eprintln!(
            "latency ms p50/p90: decode {:.3}/{:.3}, track {:.3}/{:.3}, plan {:.3}/{:.3}, planner {:.3}/{:.3}",
            d.p50, d.p90, t.p50, t.p90, p.p50, p.p90, all.p50, all.p90
        );
    }
    Ok(())
}

fn run_route(args: RouteArgs) -> Result<()> {
    let mut graph = load_graph(&args.graph)?;
    for (u, v) in &args.block {
        graph.block_edge(u, v)?;
    }
    let route = graph.shortest_path(&args.src, &args.dst)?;
    println!("{}", serde_json::to_string(&route)?);
    Ok(())
}

fn run_calibrate(args: CalibrateArgs) -> Result<()> {
    let file = File::open(&args.samples).with_context(|| format!("opening {}", args.samples.display()))?;
    let samples = read_samples_csv(file).with_context(|| format!("reading {}", args.samples.display()))?;
    let model = fit(&samples)?;
    write_file(&args.out, model.to_json().as_bytes())?;
    eprintln!(
        "fit {} samples: a={} b={} c={} rmse={:.6} m",
        model.n_samples, model.a, model.b, model.c, model.rmse
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let scenario = Scenario::new(ScenarioSpec::new(args.scenario, args.seed, args.n_frames));
    let n = write_dataset(&args.out, scenario.frames().map(|(f, gt)| (f, Some(gt))))?;
    let model = reference_calibration(&scenario.spec().rev_law)?;
    write_file(&args.out.join(DATASET_MODEL_FILE), model.to_json().as_bytes())?;
    // read back so a broken dataset fails here rather than at plan time
    let truth = read_ground_truth(&args.out)?;
    eprintln!("wrote {n} frames ({} with ground truth) to {}", truth.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => run_plan(a),
        Command::Route(a) => run_route(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Simulate(a) => run_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lktrack::bench::{self, SuiteConfig};
use lktrack::optim::{Method, OptimizerSpec, STEP_GRID};
use lktrack::synthgen::{generate_dataset, SynthSpec};
use lktrack::tracker::{track_sequence, TrackConfig};

#[derive(Parser)]
#[command(
    name = "lktrack",
    version,
    about = "Lucas-Kanade translation tracking: synthetic suite generation, single-sequence tracking, and the method/step benchmark grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic video suite (PGM frames + gt.csv per video)
    Generate {
        /// Output directory for the video directories
        #[arg(long)]
        out: PathBuf,
        /// Master seed; every video derives its own stream from it
        #[arg(long, env = "LK_SEED", default_value_t = 42)]
        seed: u64,
        /// Suite scale: `full` = 105 videos, `desk` = 21 videos
        #[arg(long, default_value = "desk", value_parser = ["full", "desk"])]
        scale: String,
    },
    /// Track one sequence directory and report its accuracy
    Track {
        /// Sequence directory (PGM frames + gt.csv)
        #[arg(long)]
        seq: PathBuf,
        /// gauss_newton, gd, cg_fr, cg_pr, cg_hs, cg_dy or newton
        #[arg(long)]
        method: String,
        /// Constant step size (required for every method except gauss_newton)
        #[arg(long)]
        step: Option<f64>,
        /// Write the trajectory CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full method/step grid over a dataset and write the report CSV
    Bench {
        /// Dataset root containing one directory per sequence
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated method names (default: all seven)
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Comma-separated step sizes (default: 0.005,0.01,0.02,0.04,0.08)
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<f64>>,
        /// Report CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for (method, step, sequence) work items
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

enum CliError {
    /// Bad flags or flag combinations: exit 2, like a parse failure.
    Usage(String),
    /// Runtime/data failure: exit 1.
    Data(String),
}

impl From<lktrack::Error> for CliError {
    fn from(e: lktrack::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { out, seed, scale } => cmd_generate(&out, seed, &scale),
        Command::Track {
            seq,
            method,
            step,
            out,
        } => cmd_track(&seq, &method, step, out.as_deref()),
        Command::Bench {
            dataset,
            methods,
            steps,
            out,
            workers,
        } => cmd_bench(&dataset, methods, steps, &out, workers),
    }
}

fn cmd_generate(out: &std::path::Path, seed: u64, scale: &str) -> Result<(), CliError> {
    let spec = match scale {
        "full" => SynthSpec::full(seed),
        "desk" => SynthSpec::desk(seed),
        other => return Err(CliError::Usage(format!("unknown scale '{other}'"))),
    };
    let manifests = generate_dataset(&spec, out)?;
    for m in &manifests {
        println!(
            "{} shape={} size={} frames={}",
            m.dir.display(),
            m.key.shape,
            m.key.size,
            m.frames
        );
    }
    println!(
        "generated {} videos, {} frames (seed {seed}, scale {scale})",
        manifests.len(),
        manifests.len() as u32 * spec.frames_per_video
    );
    Ok(())
}

fn parse_spec(method: &str, step: Option<f64>) -> Result<OptimizerSpec, CliError> {
    let method: Method = method
        .parse()
        .map_err(|e: lktrack::Error| CliError::Usage(e.to_string()))?;
    if method == Method::GaussNewton {
        return Ok(OptimizerSpec::gauss_newton());
    }
    let step = step.ok_or_else(|| {
        CliError::Usage(format!("method {method} requires --step"))
    })?;
    OptimizerSpec::new(method, step).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_track(
    seq: &std::path::Path,
    method: &str,
    step: Option<f64>,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let spec = parse_spec(method, step)?;
    let (frames, gt) = bench::load_external_sequence(seq)?;
    let cfg = TrackConfig::new(spec);
    let trajectory = track_sequence(&frames, &gt.boxes[0], &cfg)?;
    let eval = bench::evaluate(&trajectory, &gt, bench::FAIL_THRESHOLD_PX)?;

    println!("tracked {} frames from {}", trajectory.frames.len(), seq.display());
    println!(
        "avg_error_px: {} | fail_pct: {:.3} | avg_time_s: {:.6}",
        eval.avg_error_px
            .map_or("-".to_string(), |e| format!("{e:.6}")),
        eval.fail_pct,
        eval.avg_time_s
    );
    if let Some(path) = out {
        trajectory.write_csv(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_bench(
    dataset: &std::path::Path,
    methods: Option<Vec<String>>,
    steps: Option<Vec<f64>>,
    out: &std::path::Path,
    workers: usize,
) -> Result<(), CliError> {
    let mut cfg = SuiteConfig::new(dataset);
    if let Some(names) = methods {
        cfg.methods = names
            .iter()
            .map(|name| name.parse::<Method>())
            .collect::<lktrack::Result<Vec<Method>>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(steps) = steps {
        if let Some(bad) = steps.iter().find(|s| !(**s > 0.0)) {
            return Err(CliError::Usage(format!("step sizes must be > 0, got {bad}")));
        }
        cfg.steps = steps;
    } else {
        cfg.steps = STEP_GRID.to_vec();
    }
    cfg.workers = workers;

    let outcome = bench::run_suite(&cfg)?;
    print!("{}", bench::render_table(&outcome.rows));
    for (what, why) in &outcome.sequence_errors {
        eprintln!("warning: {what}: {why}");
    }
    bench::emit_report(&outcome.rows, out)?;
    println!(
        "benchmarked {} sequences ({} frames per cell), wrote {}",
        outcome.sequences.len(),
        outcome.frames_per_cell,
        out.display()
    );
    Ok(())
}

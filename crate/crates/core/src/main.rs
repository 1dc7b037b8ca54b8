use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ml5g_core::assoc::{
    default_sources, evaluate_fig5, run_training_phase, serve_tick, LifecycleError, ProductionScenario,
};
use ml5g_core::mlfo::{instantiate, parse_intent, HostRegistry, InstanceState, MLIntent, PipelineInstance};
use ml5g_core::nn::MlpModel;
use ml5g_core::sandbox::DivergenceKnobs;
use ml5g_core::underlay::{generate_deployment, DensityClass, RadioConfig};

/// Exit code for invalid intents and models that fail sandbox validation.
const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ml5g",
    version,
    about = "ML-aware WLAN pipeline: deployments, orchestrated training and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated deployments as JSON files.
    Generate(GenerateArgs),
    /// Realize an intent: train, validate, distribute, then serve and monitor.
    Run(RunArgs),
    /// Compare SSF and a trained model per density class.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_delimiter = ',', default_value = "sparse,medium,dense")]
    densities: Vec<DensityClass>,
    /// Seed list such as `1,2,3` or a half-open range `0..30`.
    #[arg(long, default_value = "0..30")]
    seeds: String,
    #[arg(long, default_value_t = 100.0)]
    side: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    intent: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parse and wire the pipeline, then stop.
    #[arg(long)]
    dry_run: bool,
    /// Serving ticks after the training phase.
    #[arg(long, default_value_t = 0)]
    ticks: u64,
    #[arg(long, default_value = "medium")]
    production_density: DensityClass,
    #[arg(long, default_value_t = 1)]
    production_seed: u64,
    /// Noise-floor offset (dB) applied to the production radio from `--shift-at` on.
    #[arg(long, default_value_t = 0.0)]
    noise_shift_db: f64,
    #[arg(long, default_value_t = 1)]
    shift_at: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Intent supplying policies and the indifference margin; the example intent otherwise.
    #[arg(long)]
    intent: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "sparse,medium,dense")]
    densities: Vec<DensityClass>,
    #[arg(long, default_value = "0..30")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Validation(format!("bad seed list `{spec}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        return Ok((a..b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_intent(path: &Path) -> Result<MLIntent, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    parse_intent(&bytes).map_err(|e| Failure::Validation(e.to_string()))
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    fs::create_dir_all(&args.out)?;
    let seeds = parse_seeds(&args.seeds)?;
    let mut written = 0;
    for &density in &args.densities {
        for &seed in &seeds {
            let d = generate_deployment(density, args.side, seed)?;
            let path = args.out.join(format!("deployment_{density}_{seed}.json"));
            write(&path, serde_json::to_vec_pretty(&d)?)?;
            written += 1;
        }
    }
    println!("wrote {written} deployments to {}", args.out.display());
    Ok(())
}

fn save_instance(instance: &PipelineInstance, out: &Path) -> Result<(), Failure> {
    write(&out.join("state.json"), instance.dump_json())?;
    if let Some(model) = instance.active_model() {
        write(&out.join("model.json"), model.to_json()?)?;
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let intent = load_intent(&args.intent)?;
    let registry = HostRegistry::from_intent(&intent);
    let mut instance = instantiate(&intent, &registry)?;
    if args.dry_run {
        println!("intent ok: use_case {}", intent.use_case);
        for host in &intent.pipeline_spec.hosts {
            println!(
                "  {} ({}): {:?}",
                host.host_id,
                host.role,
                instance.graph.kinds_on(&host.host_id)
            );
        }
        println!(
            "  {} stage instances, {} links",
            instance.graph.nodes.len(),
            instance.graph.links.len()
        );
        return Ok(());
    }
    let out = args
        .out
        .ok_or_else(|| Failure::Runtime("--out is required unless --dry-run".into()))?;
    fs::create_dir_all(&out)?;
    // Replay what instantiation logged, then mirror everything that follows.
    let mut events = fs::File::create(out.join("events.jsonl"))?;
    std::io::Write::write_all(&mut events, instance.events.to_jsonl().as_bytes())?;
    instance.events.mirror_to(Box::new(events));

    let mut sources = default_sources(&intent, RadioConfig::default());
    let trained = run_training_phase(&mut instance, &mut sources);
    save_instance(&instance, &out)?;
    let outcome = match trained {
        Ok(o) => o,
        Err(LifecycleError::Failed(cause)) if cause.contains("passed validation") => {
            return Err(Failure::Validation(cause));
        }
        Err(e) => return Err(e.into()),
    };
    println!(
        "serving model {} (gain {:+.2}%, p10 ratio {:.3}, {} samples, attempt {})",
        &outcome.model_hash[..16],
        outcome.verdict.mean_gain_vs_ssf * 100.0,
        outcome.verdict.min_throughput_ratio,
        outcome.samples,
        outcome.attempts
    );

    let mut scenario = ProductionScenario::new(args.production_density, args.production_seed);
    for tick in 1..=args.ticks {
        if tick == args.shift_at && args.noise_shift_db != 0.0 {
            let knobs = DivergenceKnobs {
                noise_floor_offset_db: args.noise_shift_db,
                ..Default::default()
            };
            scenario.radio = knobs.apply(&RadioConfig::default());
            log::info!("production noise floor shifted by {} dB", args.noise_shift_db);
        }
        let t = serve_tick(&mut instance, &scenario, tick)?;
        println!(
            "tick {tick}: {} requests, mean {:.2} Mbps, rolling error {}{}",
            t.requests,
            t.mean_realized_mbps,
            t.rolling_rel_error.map_or("-".into(), |e| format!("{e:.4}")),
            if t.actions.is_empty() {
                String::new()
            } else {
                format!(", actions {:?}", t.actions)
            }
        );
    }
    save_instance(&instance, &out)?;
    if instance.state() == InstanceState::Failed {
        return Err(Failure::Runtime(
            instance.failure_cause().unwrap_or("failed").to_string(),
        ));
    }
    println!("state {} written to {}", instance.state(), out.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let intent = match &args.intent {
        Some(p) => load_intent(p)?,
        None => MLIntent::example(),
    };
    let bytes = fs::read(&args.model)?;
    let model = MlpModel::from_json(&bytes).map_err(|e| Failure::Validation(e.to_string()))?;
    let seeds = parse_seeds(&args.seeds)?;
    let result = evaluate_fig5(
        &model,
        &intent.policies,
        intent.placement.indifference_mbps,
        &args.densities,
        &seeds,
    )?;
    fs::create_dir_all(&args.out)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write(&args.out.join("results.csv"), csv)?;
    write(&args.out.join("summary.json"), result.summary_json())?;
    for s in &result.summary {
        println!(
            "{:>6} {:<4} mean {:6.2}  p10 {:6.2}  p50 {:6.2}  p90 {:6.2}  ({} STAs)",
            s.density, s.strategy, s.mean, s.p10, s.p50, s.p90, s.stations
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ML5G_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

//! `ps`: closed-loop scenario-tree planning runs, ablations and scenario checks.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ps_core::harness::{self, AblationMode, RunConfig, EVALUATION_SCENES};
use ps_core::predictor::PREDICTOR_NAMES;

#[derive(Parser)]
#[command(
    name = "ps",
    version,
    about = "Scenario-tree MCTS planner with ego-conditioned prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run closed-loop episodes and write metrics and artifacts.
    Run(RunArgs),
    /// Run the four-mode ablation matrix over a set of scenes.
    Ablate(AblateArgs),
    /// Check that a scenario file parses and validates.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario file or bundled scene name; repeatable.
    #[arg(long)]
    scenario: Vec<String>,
    #[arg(long)]
    predictor: Option<String>,
    /// PS, PS-Rule, PS-Niter or PS-Fixed.
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// Comma-separated scene names or files.
    #[arg(long, value_delimiter = ',', default_values_t = EVALUATION_SCENES.map(String::from))]
    scenes: Vec<String>,
    /// Predictor used by the PS, PS-Niter and PS-Fixed rows.
    #[arg(long, default_value = "playback")]
    predictor: String,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn check_predictor(name: &str) -> Result<()> {
    if !PREDICTOR_NAMES.contains(&name) {
        bail!(
            "unknown predictor '{name}' (expected one of {})",
            PREDICTOR_NAMES.join(", ")
        );
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if !args.scenario.is_empty() {
        cfg.scenarios = args.scenario;
    }
    if let Some(p) = args.predictor {
        cfg.predictor = p;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(n) = args.iterations {
        cfg.planner.iterations = n;
    }
    if let Some(d) = args.depth {
        cfg.planner.max_depth = d;
    }
    if let Some(s) = args.seed {
        cfg.planner.rng_seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    check_predictor(&cfg.predictor)?;
    check_predictor(&cfg.world)?;
    if cfg.scenarios.is_empty() {
        bail!("no scenario given (use --scenario or a config file)");
    }
    let outcomes = harness::run(&cfg)?;
    for o in &outcomes {
        let m = &o.metrics;
        println!(
            "{:<22} {:<9} C.T. {:>5.1} s  A.V. {:>5.2} m/s  C.D. {}",
            m.scenario,
            m.status.to_string(),
            m.completion_time,
            m.avg_velocity,
            m.collision_distance.map_or_else(|| "-".into(), |c| format!("{c:.2} m"))
        );
    }
    println!("artifacts in {}", cfg.out.display());
    Ok(())
}

fn ablate(args: AblateArgs) -> Result<()> {
    check_predictor(&args.predictor)?;
    let mut base = RunConfig {
        predictor: args.predictor,
        ..RunConfig::default()
    }
    .base_episode();
    if let Some(n) = args.iterations {
        base.planner.iterations = n;
    }
    if let Some(s) = args.seed {
        base.planner.rng_seed = s;
    }
    let table = harness::ablate(&args.scenes, &base, &args.out)?;
    print!("{}", table.to_markdown());
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn validate(path: PathBuf) -> Result<()> {
    let sc =
        ps_core::scene::load_scenario(&path).with_context(|| format!("{} is not a valid scenario", path.display()))?;
    println!(
        "{}: ok ({} lanes, {} tracks, route {})",
        sc.name,
        sc.lanes.len(),
        sc.tracks.len(),
        sc.ego_route.join(" -> ")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PS_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Ablate(a) => ablate(a),
        Command::Validate { scenario } => validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

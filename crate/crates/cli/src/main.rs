use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfgraph::model::validate;
use mfgraph::ModelSpec;
use mfgraph_cli::{run_and_write, CliError, CliResult, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "mfgraph", version, about = "Mean-field jump processes on graphs with colored edges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the predicted candidate-event budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Worker threads for replica parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One n-system run with its trajectory log.
    Simulate(Common),
    /// Coupled LLN rate sweeps (fixed β, accelerated, i.i.d. edges).
    Lln(Common),
    /// Propagation of chaos for two tagged particles.
    Poc(Common),
    /// Averaging: accelerated LLN sweep or the forward-equation overlay.
    Avg(Common),
    /// β-systems against the averaged limit.
    CompareBeta(Common),
    /// Averaged forward equation and invariant measures.
    Riccati(Common),
    /// Fluctuation experiments (η variance, edge-functional kurtosis).
    Clt(Common),
    /// Trace of the fluctuation operator.
    Trace(Common),
    /// Checks a config and its model, or a bare model file.
    Validate {
        #[arg(long, required_unless_present = "model")]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn allowed(cmd: &Command) -> &'static [ExperimentKind] {
    use ExperimentKind as K;
    match cmd {
        Command::Simulate(_) => &[K::Simulate],
        Command::Lln(_) => &[K::LlnRateFixedBeta, K::LlnRateAccel, K::LlnRateIid],
        Command::Poc(_) => &[K::Poc],
        Command::Avg(_) => &[K::LlnRateAccel, K::Riccati],
        Command::CompareBeta(_) => &[K::BetaComparison],
        Command::Riccati(_) => &[K::Riccati],
        Command::Clt(_) => &[K::Clt, K::CltMixture],
        Command::Trace(_) => &[K::Trace],
        Command::Validate { .. } => &[],
    }
}

fn report_model(spec: &ModelSpec) -> CliResult<()> {
    let rep = validate(spec);
    if rep.is_ok() {
        println!("model ok");
        Ok(())
    } else {
        let lines: Vec<String> = rep.violations.iter().map(|v| format!("{:?}: {}", v.rule, v.detail)).collect();
        Err(CliError::Validation(lines.join("\n")))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Command::Validate { config, model } = &cli.command {
        if let Some(path) = config {
            let cfg = ExperimentConfig::from_path(path)?;
            cfg.check()?;
            report_model(&cfg.load_model()?)?;
        }
        if let Some(path) = model {
            report_model(&ModelSpec::from_path(path)?)?;
        }
        return Ok(());
    }
    let kinds = allowed(&cli.command);
    let common = match cli.command {
        Command::Simulate(c)
        | Command::Lln(c)
        | Command::Poc(c)
        | Command::Avg(c)
        | Command::CompareBeta(c)
        | Command::Riccati(c)
        | Command::Clt(c)
        | Command::Trace(c) => c,
        Command::Validate { .. } => unreachable!("handled above"),
    };
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if !kinds.contains(&cfg.experiment) {
        let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
        return Err(CliError::Config(format!(
            "experiment {} does not belong to this subcommand (expected one of {})",
            cfg.experiment.name(),
            names.join(", ")
        )));
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(b) = common.budget {
        cfg.event_budget = b as f64;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let (outcome, dir) = pool.install(|| run_and_write(&cfg, common.out.as_deref()))?;
    println!("{}", mfgraph::json::to_sorted_string(&outcome.summary).trim_end());
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

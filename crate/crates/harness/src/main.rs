use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpecs::hardness::hardness_report;
use cpecs::oracles::TOP_K_WIDTH;
use cpecs::types::reward;
use cpecs::{Decision, ParameterVector};
use cpecs_harness::config::{Application, ExperimentConfig, Format, Mode};
use cpecs_harness::{emit_results, emit_traces, run_experiment, HarnessError, Result};

#[derive(Parser, Debug)]
#[command(name = "cpecs", version, about = "Seeded COCI / uniform-sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// Number of trials
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// coci | uniform | both
    #[arg(long)]
    mode: Option<Mode>,
    /// bi-monotone | corner-enumeration | grid-scan[:points]
    #[arg(long)]
    strategy: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json-lines
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured trials and write result files
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the hardness report of the configured instance
    Hardness {
        config: PathBuf,
        /// Lattice step of the radius search
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Query the oracle once at a parameter vector
    Oracle {
        config: PathBuf,
        /// Comma-separated parameter vector
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
    },
    /// Check that a config parses and describes a valid instance
    Validate { config: PathBuf },
}

fn apply(config: &mut ExperimentConfig, o: Overrides) -> Result<()> {
    if let Some(t) = o.trials {
        config.run.trials = t;
    }
    if let Some(s) = o.seed {
        config.run.master_seed = s;
    }
    if let Some(m) = o.mode {
        config.run.mode = m;
    }
    if o.strategy.is_some() {
        config.run.strategy = o.strategy;
    }
    if let Some(p) = o.out {
        config.output.path = p;
    }
    if let Some(f) = o.format {
        config.output.format = f;
    }
    if o.workers.is_some() {
        config.run.workers = o.workers;
    }
    config.validate()
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply(&mut cfg, overrides)?;
            let outcome = run_experiment(&cfg)?;
            let files = emit_results(&cfg.output.path, &outcome.records, &outcome.summary, cfg.output.format)?;
            if cfg.output.trace {
                emit_traces(&cfg.output.path, &outcome.traces)?;
            }
            print_json(&outcome.summary);
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Hardness { config, epsilon, strategy } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if strategy.is_some() {
                cfg.run.strategy = strategy;
            }
            let instance = cfg.build_instance()?;
            let oracle = instance.oracle();
            let strategy = cfg.strategy(oracle)?;
            let width = match cfg.instance.application {
                Application::BestArm | Application::TopK => Some(TOP_K_WIDTH),
                _ => None,
            };
            let report = hardness_report(oracle, instance.true_params(), epsilon.unwrap_or(cfg.run.epsilon), strategy, width)?;
            print_json(&report);
        }
        Command::Oracle { config, theta } => {
            let cfg = ExperimentConfig::load(&config)?;
            let oracle = cfg.build_oracle()?;
            let theta = ParameterVector::new(theta).map_err(|e| HarnessError::config("--theta", e))?;
            if theta.len() != oracle.arm_count() {
                return Err(HarnessError::config(
                    "--theta",
                    format!("{} values for {} arms", theta.len(), oracle.arm_count()),
                ));
            }
            let y: Decision = oracle.maximize(theta.as_slice());
            let value = reward(oracle.as_ref(), &theta, &y)?;
            print_json(&serde_json::json!({ "decision": y.0, "reward": value }));
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let instance = cfg.build_instance()?;
            let strategy = cfg.strategy(instance.oracle())?;
            println!(
                "ok: {} arms, optimum {}, strategy {strategy}, {} trial(s)",
                instance.arm_count(),
                instance.optimum(),
                cfg.run.trials
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `weakdisc` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use weakdisc::experiment::{self, ExperimentKind, ExperimentSpec, RunError};

#[derive(Parser)]
#[command(name = "weakdisc", version, about = "Weak-measurement state discrimination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Experiment name; overrides the one in --config.
    experiment: Option<String>,
    /// JSON experiment spec.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-step walk trajectories (fig2, fig3).
    #[arg(long)]
    dump_trajectories: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its outputs.
    Run(SpecArgs),
    /// Check a spec without running it.
    Validate(SpecArgs),
    /// List experiment names.
    List,
}

fn build_spec(args: &SpecArgs) -> Result<ExperimentSpec, RunError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            ExperimentSpec::from_json(&text)?
        }
        None => {
            let name = args
                .experiment
                .as_deref()
                .ok_or_else(|| RunError::Invalid(vec!["need an experiment name or --config".into()]))?;
            ExperimentSpec::new(parse_kind(name)?)
        }
    };
    if let Some(name) = &args.experiment {
        spec.experiment = parse_kind(name)?;
    }
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.parameters.trials = Some(trials);
    }
    if let Some(out) = &args.out {
        spec.output_dir = out.clone();
    }
    spec.dump_trajectories |= args.dump_trajectories;
    Ok(spec)
}

fn parse_kind(name: &str) -> Result<ExperimentKind, RunError> {
    ExperimentKind::parse(name).ok_or_else(|| {
        let known: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        RunError::Invalid(vec![format!("unknown experiment `{name}`; expected one of {}", known.join(", "))])
    })
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(match e {
        RunError::Invalid(_) => 2,
        _ => 1,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for k in ExperimentKind::ALL {
                println!("{}", k.name());
            }
            ExitCode::SUCCESS
        }
        Command::Validate(args) => {
            let spec = match build_spec(&args) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let errs = experiment::validate(&spec);
            if errs.is_empty() {
                println!("{}", json!({"valid": true, "experiment": spec.experiment}));
                ExitCode::SUCCESS
            } else {
                fail(RunError::Invalid(errs))
            }
        }
        Command::Run(args) => {
            let spec = match build_spec(&args) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match experiment::run(&spec) {
                Ok(summary) => {
                    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}

mod config;
mod failure;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtmarl_core::equilibrium::CeObjective;

use config::{parse_vector, ExperimentConfig, Overrides};
use failure::Failure;
use manifest::{write_run, RunManifest};
use run::RunOutput;

#[derive(Debug, Parser)]
#[command(name = "gtmarl", version, about = "Equilibrium solvers and multi-agent learners as seeded batch runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a matrix game exactly.
    Solve {
        #[arg(value_enum)]
        solver: Solver,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train a learner or integrate a dynamic; writes a curve, a result and a manifest.
    Learn {
        #[arg(value_enum)]
        algorithm: Algorithm,
        #[command(flatten)]
        run: RunArgs,
        /// Initial population state for replicator runs, comma separated.
        #[arg(long)]
        x0: Option<String>,
        /// Compare minimax-Q state values against Shapley value iteration.
        #[arg(long)]
        oracle: bool,
        /// Training steps, rounds, integration steps or generations.
        #[arg(long)]
        steps: Option<usize>,
        /// Regret mode, replicator mode or shaping learner.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Check a game file against every invariant, or a run directory against
    /// its manifest digests; prints a JSON report.
    Validate { path: PathBuf },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `classic:NAME`, `random:AxB[,zero_sum][,states=K][,discount=G]` or a game file.
    #[arg(long)]
    game: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `$GTMARL_OUT`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Selection criterion among correlated equilibria.
    #[arg(long, value_parser = parse_objective)]
    objective: Option<CeObjective>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Solver {
    Minimax,
    NashEnum,
    Ce,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algorithm {
    MinimaxQ,
    CeQ,
    Regret,
    Fp,
    Replicator,
    Lola,
    Merl,
}

fn parse_objective(text: &str) -> Result<CeObjective, String> {
    text.parse().map_err(|e: gtmarl_core::Error| e.to_string())
}

fn name<T: ValueEnum>(value: T) -> String {
    value.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn execute(
    command: String,
    run: RunArgs,
    extra: Overrides,
    runner: fn(&mut ExperimentConfig) -> Result<RunOutput, Failure>,
) -> Result<(), Failure> {
    let start = Instant::now();
    let file = match &run.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides { game: run.game, seed: run.seed, out: run.out, objective: run.objective, ..extra };
    let mut cfg = file.resolve(&command, overrides)?;
    let dir = cfg.output_dir()?;
    let output = runner(&mut cfg)?;
    let manifest = RunManifest::new(cfg, start.elapsed().as_secs_f64(), &output.artifacts);
    write_run(&dir, &output.artifacts, &manifest)?;
    output.failure.map_or(Ok(()), Err)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { solver, run } => {
            let runner = match solver {
                Solver::Minimax => run::solve_minimax,
                Solver::NashEnum => run::solve_nash_enum,
                Solver::Ce => run::solve_ce,
            };
            execute(format!("solve {}", name(solver)), run, Overrides::default(), runner)
        }
        Command::Learn { algorithm, run, x0, oracle, steps, mode } => {
            let runner = match algorithm {
                Algorithm::MinimaxQ => run::learn_minimax_q,
                Algorithm::CeQ => run::learn_ce_q,
                Algorithm::Regret => run::learn_regret,
                Algorithm::Fp => run::learn_fp,
                Algorithm::Replicator => run::learn_replicator,
                Algorithm::Lola => run::learn_lola,
                Algorithm::Merl => run::learn_merl,
            };
            let x0 = x0.map(|text| parse_vector(&text).map_err(|e| Failure::usage(format!("--x0: {e}")))).transpose()?;
            let extra = Overrides { x0, oracle, steps, mode, ..Overrides::default() };
            execute(format!("learn {}", name(algorithm)), run, extra, runner)
        }
        Command::Validate { path } if path.is_dir() => {
            let report = run::verify_run(&path)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.mismatched.is_empty() {
                Ok(())
            } else {
                Err(Failure::precondition(format!("{} file(s) differ from the manifest", report.mismatched.len())))
            }
        }
        Command::Validate { path } => {
            let report = run::validate_file(&path)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.valid {
                Ok(())
            } else {
                Err(Failure::precondition(format!("{} violation(s) in {}", report.violations.len(), report.path)))
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("gtmarl: {failure}");
            ExitCode::from(failure.code)
        }
    }
}

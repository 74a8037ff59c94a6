//! `opo` — batch front end for the cascaded-OPO toolkit.
//!
//! Scenario references resolve to a file path first, then to the bundled
//! library (fig2 … fig12 and the degenerate-cascade variants).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use opo_cli::{commands, verify};

#[derive(Parser)]
#[command(name = "opo", version, about = "Cascaded optical parametric oscillator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file or bundled scenario name (e.g. fig3 or fig3.scn).
    scenario: String,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles and the oracle (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $OPO_OUT_DIR or ./opo-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Regime classification, thresholds, steady states and stability.
    Analyze(RunArgs),
    /// Integrate one trajectory and write CSV + plot script.
    Simulate(RunArgs),
    /// Run a stochastic ensemble and write moment series.
    Ensemble(RunArgs),
    /// Steady-state sweep across the thresholds (analytic vs numeric).
    Sweep(RunArgs),
    /// Kick the fields at the steady state and report recovery.
    Perturb(RunArgs),
    /// Run the acceptance battery (A1..A12); exit 0 iff all pass.
    Verify {
        /// Reduced ensembles with widened, documented tolerances.
        #[arg(long)]
        quick: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn with_pool<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            pool.install(f)
        }
    }
}

fn run_command(args: &RunArgs, kind: &str) -> Result<()> {
    let sc = commands::load_scenario(&args.scenario, args.seed)?;
    let out_dir = commands::resolve_out_dir(args.out.as_deref());
    let reference = args.scenario.clone();
    with_pool(args.threads, || {
        let outputs = match kind {
            "analyze" => commands::cmd_analyze(&sc, &reference, &out_dir)?,
            "simulate" => commands::cmd_simulate(&sc, &reference, &out_dir)?,
            "ensemble" => commands::cmd_ensemble(&sc, &reference, &out_dir)?,
            "sweep" => commands::cmd_sweep(&sc, &reference, &out_dir)?,
            "perturb" => commands::cmd_perturb(&sc, &reference, &out_dir)?,
            _ => unreachable!(),
        };
        for o in &outputs {
            println!("wrote {}", o.display());
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool> = match &cli.command {
        Command::Analyze(a) => run_command(a, "analyze").map(|_| true),
        Command::Simulate(a) => run_command(a, "simulate").map(|_| true),
        Command::Ensemble(a) => run_command(a, "ensemble").map(|_| true),
        Command::Sweep(a) => run_command(a, "sweep").map(|_| true),
        Command::Perturb(a) => run_command(a, "perturb").map(|_| true),
        Command::Verify { quick, threads } => {
            let quick = *quick;
            with_pool(*threads, || Ok(verify::run_all(quick)))
                .map(|outcomes| verify::print_table(&outcomes))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbca::harness::{self, ValidateHooks};
use dbca::ExperimentConfig;

#[derive(Parser)]
#[command(name = "dbca", version, about = "DBCA random-access analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Throughput curves, Pareto frontier and drift predictions.
    Analyze(Common),
    /// Monte Carlo burst-resolution experiments.
    Simulate(Common),
    /// Analytic and simulation consistency checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scale the analytic throughput in the bridge check (negative control).
        #[arg(long, hide = true)]
        corrupt_throughput: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "DBCA_OUT_DIR")]
    out: Option<PathBuf>,
    /// Write per-round trace files.
    #[arg(long)]
    trace: bool,
    /// Worker threads for replications.
    #[arg(long)]
    parallel: Option<usize>,
}

impl Common {
    fn load(&self) -> dbca::Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        cfg.trace |= self.trace;
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> dbca::Result<bool> {
    match cli.command {
        Command::Analyze(common) => {
            let (cfg, out) = common.load()?;
            for path in harness::analyze(&cfg, &out)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Simulate(common) => {
            let (cfg, out) = common.load()?;
            let report = harness::simulate(&cfg, &out, common.parallel)?;
            println!("{}", report.summary_path.display());
            for o in report.outcomes.iter().filter(|o| o.escalated) {
                eprintln!(
                    "{}: replications raised to {} (ci target met: {})",
                    o.cell.label(),
                    o.summary.replications,
                    o.ci_target_met.map_or("n/a".into(), |b| b.to_string())
                );
            }
            if !report.trace_paths.is_empty() {
                println!("{} trace files under {}", report.trace_paths.len(), out.join("traces").display());
            }
            Ok(true)
        }
        Command::Validate { common, corrupt_throughput } => {
            let (cfg, _) = common.load()?;
            let hooks = ValidateHooks { throughput_scale: corrupt_throughput };
            let report = harness::with_threads(common.parallel, || harness::validate(&cfg, &hooks))??;
            print!("{}", report.table());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

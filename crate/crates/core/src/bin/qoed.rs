use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qoed::bench;
use qoed::config::{ExperimentConfig, Overrides};
use qoed::objectives::ObjectiveKind;
use qoed::verify;
use qoed::Error;

#[derive(Parser)]
#[command(name = "qoed", version, about = "Quasi-optimal experimental design benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bonus and selection for a score file or trajectory (JSON on stdout).
    Bonus {
        #[command(flatten)]
        common: Common,
        /// Score vectors (one per line) or a JSON trajectory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Exploration runs for every (method, seed); writes bench.csv and bench.json.
    Bench(Common),
    /// Identity, bound and consistency checks; exit code 1 on any failure.
    Verify(Common),
    /// QOED vs Agnostic over the threshold grid; writes sweep.csv.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    method: Option<ObjectiveKind>,
    /// Output directory (bench, sweep) or file (bonus, verify).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    delta_eig: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha_eig: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta_cos: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
}

impl Common {
    fn load(&self) -> qoed::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Overrides {
            seed: self.seed,
            seeds: self.seeds,
            method: self.method,
            out: self.out.clone(),
            delta_eig: self.delta_eig,
            alpha_eig: self.alpha_eig,
            delta_cos: self.delta_cos,
            eps: self.eps,
            max_rounds: self.max_rounds,
        }
        .apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn json<T: serde::Serialize>(value: &T) -> qoed::Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(e.to_string()))
}

fn run(cli: Cli) -> qoed::Result<ExitCode> {
    match cli.command {
        Command::Bonus { common, input } => {
            let cfg = common.load()?;
            let kind = common.method.unwrap_or(ObjectiveKind::Qoed);
            let report = bench::cmd_bonus(&cfg, kind, input.as_deref())?;
            bench::emit(cfg.out.as_deref(), &json(&report)?)?;
        }
        Command::Bench(common) => {
            let cfg = common.load()?;
            let out = bench::cmd_bench(&cfg)?;
            print!("{}", out.table.render());
        }
        Command::Verify(common) => {
            let cfg = common.load()?;
            let report = verify::cmd_verify(cfg.seeds[0])?;
            print!("{}", report.render());
            if let Some(p) = &cfg.out {
                std::fs::write(p, json(&report)?)?;
            }
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep(common) => {
            let cfg = common.load()?;
            let table = bench::cmd_sweep(&cfg, None)?;
            if cfg.out.is_none() {
                print!("{}", table.to_csv()?);
            }
            for (m, mean, std) in &table.summary {
                eprintln!("{m}: dyn RMSE (x100) across cells {mean:.3} ± {std:.3}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

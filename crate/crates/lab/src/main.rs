use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auctionlab::commands;
use auctionlab::config::{self, BestResponseConfig, ErmConfig, MechanismsConfig, NashConfig, PhaseConfig, VerifyConfig, DEFAULT_SEED};
use auctionlab::output::write_json;
use auctionlab::verify;
use auctionlab::LabError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "auctionlab", version, about = "Strategic bidding against reserve-learning sellers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, env = "AUCTIONLAB_SEED")]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Search grid size for best responses.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Best response (x0*, x1*) over the phase weight, CSV.
    BestResponse(Common),
    /// Symmetric equilibrium thresholds, JSON.
    Nash(Common),
    /// Critical phase weight, JSON.
    Phase(Common),
    /// Reserve-learning experiment, CSV with summary lines.
    Erm(Common),
    /// Utility uplift per mechanism, CSV.
    Mechanisms(Common),
    /// Acceptance suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Criterion to run; repeat for several. All when absent.
        #[arg(long = "criterion")]
        criteria: Vec<u32>,
        /// Multiplies every tolerance.
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, LabError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load<T: serde::de::DeserializeOwned + Default>(c: &Common) -> Result<T, LabError> {
    config::load(c.config.as_deref().map(Path::new))
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::BestResponse(c) => {
            let mut cfg: BestResponseConfig = load(&c)?;
            if let Some(g) = c.grid {
                cfg.grid = g;
            }
            let rows = commands::best_response_sweep(&cfg)?;
            commands::write_best_response(&rows, sink(&c.out)?)
        }
        Command::Nash(c) => {
            let cfg: NashConfig = load(&c)?;
            write_json(&commands::nash(&cfg)?, sink(&c.out)?)
        }
        Command::Phase(c) => {
            let cfg: PhaseConfig = load(&c)?;
            write_json(&commands::phase(&cfg)?, sink(&c.out)?)
        }
        Command::Erm(c) => {
            let cfg: ErmConfig = load(&c)?;
            let seed = c.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let (rows, sums) = commands::erm(&cfg, seed)?;
            commands::write_erm(&rows, &sums, sink(&c.out)?)
        }
        Command::Mechanisms(c) => {
            let cfg: MechanismsConfig = load(&c)?;
            commands::write_mechanisms(&commands::mechanisms(&cfg)?, sink(&c.out)?)
        }
        Command::Verify { common, criteria, tolerance_scale } => {
            let mut cfg: VerifyConfig = load(&common)?;
            if !criteria.is_empty() {
                cfg.criteria = Some(criteria);
            }
            if let Some(s) = tolerance_scale {
                cfg.tolerance_scale = s;
            }
            let reports = verify::run(&cfg, common.seed, common.grid)?;
            let mut w = sink(&common.out)?;
            for r in &reports {
                write!(w, "{r}")?;
            }
            w.flush()?;
            let failed: Vec<String> = reports.iter().filter(|r| !r.pass()).map(|r| r.id.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(LabError::Acceptance(format!("criteria {} failed", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("auctionlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

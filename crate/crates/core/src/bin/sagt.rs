use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sagt::cli::{
    cmd_audit, cmd_bounds, cmd_mds_dump, cmd_selfcheck, cmd_session, cmd_simulate, dump_audit_codebook,
    ExperimentConfig,
};
use sagt::Error;

#[derive(Parser)]
#[command(name = "sagt", version, about = "Secure adaptive group testing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test-count bounds over an (N, K, delta, Rf) grid.
    Bounds(Common),
    /// Monte Carlo decoding error rates over a sweep of T.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Append a wall_time_s column (not reproducible).
        #[arg(long)]
        timing: bool,
        /// Also write full round transcripts here (session mode).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Eavesdropper leakage of the scheme and of the unkeyed baseline.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Fall back to the plug-in estimator when exact enumeration is too big.
        #[arg(long)]
        monte_carlo: bool,
        /// Write the audited codebook of the first T point as a binary dump.
        #[arg(long)]
        dump_codebook: Option<PathBuf>,
    },
    /// Field, MDS, key-uniformity and decoder consistency checks.
    Selfcheck {
        /// Zero a generator column first; the MDS check must then fail.
        #[arg(long, hide = true)]
        corrupt_generator: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the K x N generator matrix.
    MdsDump(Common),
}

#[derive(Args, Default)]
struct Common {
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    t: Option<String>,
    /// Comma-separated list of T values.
    #[arg(long)]
    t_sweep: Option<String>,
    /// low,high,points: T as multiples of the sufficiency bound.
    #[arg(long)]
    t_scale: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    rf: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    eps_sec: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Decoder search cap C(N,K)*M^K.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    leakage_budget: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("n", &self.n),
            ("k", &self.k),
            ("t", &self.t),
            ("t-sweep", &self.t_sweep),
            ("t-scale", &self.t_scale),
            ("delta", &self.delta),
            ("rf", &self.rf),
            ("eps", &self.eps),
            ("eps-sec", &self.eps_sec),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("threads", &self.threads),
            ("budget", &self.budget),
            ("leakage-budget", &self.leakage_budget),
            ("rounds", &self.rounds),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Bounds(common) => {
            let cfg = common.config()?;
            emit(cfg.out.as_ref(), &cmd_bounds(&cfg)?)?;
        }
        Command::Simulate {
            common,
            timing,
            transcript,
        } => {
            let cfg = common.config()?;
            if cfg.rounds > 1 || transcript.is_some() {
                let (log, transcripts) = cmd_session(&cfg)?;
                emit(cfg.out.as_ref(), &log)?;
                if let Some(path) = transcript {
                    std::fs::write(path, transcripts)?;
                }
            } else {
                emit(cfg.out.as_ref(), &cmd_simulate(&cfg, timing)?)?;
            }
        }
        Command::Audit {
            common,
            monte_carlo,
            dump_codebook,
        } => {
            let cfg = common.config()?;
            emit(cfg.out.as_ref(), &cmd_audit(&cfg, monte_carlo)?)?;
            if let Some(path) = dump_codebook {
                dump_audit_codebook(&cfg, &path)?;
            }
        }
        Command::Selfcheck { corrupt_generator, out } => {
            let report = cmd_selfcheck(corrupt_generator);
            emit(out.as_ref(), &report.render())?;
            return Ok(report.passed());
        }
        Command::MdsDump(common) => {
            let cfg = common.config()?;
            emit(cfg.out.as_ref(), &cmd_mds_dump(&cfg)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

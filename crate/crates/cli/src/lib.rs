//! `qlm` command-line front end.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "qlm", version, about = "Quantum-lattice metamaterial scans")]
pub struct Cli {
    /// JSON config, or a CSV written by a previous run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Peak ε(Δ_b) from the closed form and, with pump on, the oracle.
    SusceptibilityScan,
    /// FOM(Δ_b) at the lossless pump for several Ω_d.
    FomScan,
    /// Isofrequency contours and topology verdicts.
    Contour,
    /// Branching ratio ξ(Ω_a) for a dipole in a lattice gap.
    DecayScan,
    /// Closed form vs steady-state oracle on a seeded random grid.
    OracleVerify,
    /// Lossless negative-permittivity operating point.
    OperatingPoint,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SusceptibilityScan => "susceptibility-scan",
            Command::FomScan => "fom-scan",
            Command::Contour => "contour",
            Command::DecayScan => "decay-scan",
            Command::OracleVerify => "oracle-verify",
            Command::OperatingPoint => "operating-point",
        }
    }
}

fn execute(cli: &Cli) -> CliResult<serde_json::Value> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    }
    .resolve()?;
    let mut sink = Sink::new(&cli.out, cli.format, cli.command.name(), cfg.clone())?;
    let (seed, command) = (cli.seed, cli.command);
    let mut body = move || match command {
        Command::SusceptibilityScan => commands::cmd_susceptibility_scan(&cfg, &mut sink),
        Command::FomScan => commands::cmd_fom_scan(&cfg, &mut sink),
        Command::Contour => commands::cmd_contour(&cfg, &mut sink),
        Command::DecayScan => commands::cmd_decay_scan(&cfg, &mut sink),
        Command::OracleVerify => commands::cmd_oracle_verify(&cfg, &mut sink, seed),
        Command::OperatingPoint => commands::cmd_operating_point(&cfg, &mut sink),
    };
    match cli.workers {
        Some(0) => Err(CliError::Usage("--workers must be > 0".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(body),
        None => body(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with the summary and error streams supplied by the caller.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(mut summary) => {
            // The resolved config is already in the summary file.
            if let Some(map) = summary.as_object_mut() {
                map.remove("config");
            }
            let line = serde_json::to_string(&summary).expect("summary serializes");
            // A closed stdout is not a failure of the run.
            let _ = writeln!(out, "{line}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", e.record());
            e.exit_code()
        }
    }
}

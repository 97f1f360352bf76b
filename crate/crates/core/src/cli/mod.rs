//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when verification fails or no optimization
//! row succeeds, 2 on usage or configuration errors.

pub mod commands;
pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
pub use commands::Output;
use config::{Format, OneOrMany, RunConfig, Spacing};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "heralded-cavity",
    version,
    about = "Heralded two-atom entanglement by cavity photodetection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonant reflection, transmission and loss on an x grid.
    Response(Flags),
    /// Complex amplitudes versus probe detuning.
    Spectrum(Flags),
    /// Success probability and fidelity of one scheme.
    Protocol(Flags),
    /// Maximum success probability at a fidelity floor.
    Optimize(Flags),
    /// Compare closed forms with the independent oracles.
    Verify(Flags),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpacingArg {
    Log,
    Linear,
}

#[derive(Debug, Default, Args)]
#[command(allow_negative_numbers = true)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fock-single, fock-double, coherent-single or coherent-double (comma list for optimize).
    #[arg(long, value_delimiter = ',')]
    pub scheme: Option<Vec<String>>,
    /// Cooperativity g²/(κγ); comma list.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub x_points: Option<usize>,
    #[arg(long, value_enum)]
    pub x_spacing: Option<SpacingArg>,
    /// Number of atoms in the coupled state; comma list.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub omega_points: Option<usize>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub kappa_a: Option<f64>,
    #[arg(long)]
    pub kappa_b: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Atom-cavity detuning.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Coupling to the counter-propagating ring mode.
    #[arg(long)]
    pub g_tilde: Option<f64>,
    #[arg(long)]
    pub kappa_tilde: Option<f64>,
    /// Detection efficiency; comma list for optimize.
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// Preparation angle.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Mean photon budget of a coherent pulse.
    #[arg(long)]
    pub n_max: Option<f64>,
    /// Fidelity floor; comma list for optimize.
    #[arg(long, value_delimiter = ',')]
    pub f_target: Option<Vec<f64>>,
    /// Atom-independent reflection fraction (fock-double only).
    #[arg(long)]
    pub f_spurious: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, hide = true)]
    pub tolerance_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            scheme: self.scheme.clone().map(OneOrMany::Many),
            x: self.x.clone().map(OneOrMany::Many),
            x_min: self.x_min,
            x_max: self.x_max,
            x_points: self.x_points,
            x_spacing: self.x_spacing.map(|s| match s {
                SpacingArg::Log => Spacing::Log,
                SpacingArg::Linear => Spacing::Linear,
            }),
            n: self.n.clone().map(OneOrMany::Many),
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            omega_points: self.omega_points,
            g: self.g,
            kappa_a: self.kappa_a,
            kappa_b: self.kappa_b,
            gamma: self.gamma,
            delta: self.delta,
            g_tilde: self.g_tilde,
            kappa_tilde: self.kappa_tilde,
            eta: self.eta.clone().map(OneOrMany::Many),
            phi: self.phi,
            n_max: self.n_max,
            f_target: self.f_target.clone().map(OneOrMany::Many),
            f_spurious: self.f_spurious,
            seed: self.seed,
            samples: self.samples,
            tolerance_scale: self.tolerance_scale,
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
            out: self.out.clone(),
        }
    }

    /// Config file (if any) with the flags laid over it.
    pub fn resolve(&self) -> crate::Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.to_config()))
    }
}

/// Exit code for an error raised while validating or computing.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Validate and compute everything for one invocation. Nothing is written.
pub fn execute(command: &Command) -> crate::Result<(Output, Option<PathBuf>)> {
    let flags = match command {
        Command::Response(f)
        | Command::Spectrum(f)
        | Command::Protocol(f)
        | Command::Optimize(f)
        | Command::Verify(f) => f,
    };
    let cfg = flags.resolve()?;
    let output = match command {
        Command::Response(_) => commands::table_output(&commands::cmd_response(&cfg)?, &cfg),
        Command::Spectrum(_) => commands::table_output(&commands::cmd_spectrum(&cfg)?, &cfg),
        Command::Protocol(_) => commands::table_output(&commands::cmd_protocol(&cfg)?, &cfg),
        Command::Optimize(_) => {
            let (table, solved) = commands::cmd_optimize(&cfg)?;
            let mut out = commands::table_output(&table, &cfg);
            if solved == 0 {
                out.exit_code = EXIT_FAILED;
            }
            out
        }
        Command::Verify(_) => commands::cmd_verify(&cfg)?,
    };
    Ok((output, cfg.out.clone()))
}

/// Parse `args`, run, and write the result. Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (output, out_path) = match execute(&cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let written = match out_path {
        Some(path) => std::fs::write(&path, &output.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(output.text.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return EXIT_FAILED;
    }
    output.exit_code
}

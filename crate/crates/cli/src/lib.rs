//! Command-line front end for `fastadj`.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 failed verification.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastadj::{AdjointMode, ExtensionKind, WaveletKind};

pub mod adjoint;
pub mod bce;
pub mod deblur;
pub mod io;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fastadj::Error),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fastadj", version, about = "Wavelet deblurring, blind channel estimation and adjoint checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify that every operator's adjoint is its transpose.
    AdjointCheck(adjoint::AdjointCheckArgs),
    /// Deblur an image with wavelet-sparse FISTA.
    Deblur(deblur::DeblurArgs),
    /// Estimate channels and a shared source from multi-channel outputs.
    Bce(bce::BceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for every random draw of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving the outputs (created if missing).
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Record trace entries every this many iterations.
    #[arg(long, default_value_t = 1, value_parser = positive_usize)]
    pub record_every: usize,
}

impl CommonArgs {
    pub fn prepare_out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        Ok(&self.out_dir)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PgmDepth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

pub fn parse_wavelet(s: &str) -> Result<WaveletKind, String> {
    s.parse().map_err(|e: fastadj::Error| e.to_string())
}

pub fn parse_extension(s: &str) -> Result<ExtensionKind, String> {
    s.parse().map_err(|e: fastadj::Error| e.to_string())
}

pub fn parse_adjoint_mode(s: &str) -> Result<AdjointMode, String> {
    s.parse().map_err(|e: fastadj::Error| e.to_string())
}

pub fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

pub fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

pub fn nonnegative_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be nonnegative and finite, got {v}"))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::AdjointCheck(args) => adjoint::run(&args),
        Command::Deblur(args) => deblur::run(&args),
        Command::Bce(args) => bce::run(&args),
    }
}

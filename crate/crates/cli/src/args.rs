use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lieforge::{Field, Mode};

#[derive(Debug, Parser)]
#[command(
    name = "lieforge",
    version,
    about = "Generate and check random solvable Lie algebras"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sample and write it as a lieforge/1 document.
    Generate(GenerateArgs),
    /// Run identity checks on a document.
    Verify(VerifyArgs),
    /// Compare the closed-form constants with the linear-system solution.
    Oracle(OracleArgs),
    /// Time generation (and verification) over several dimensions.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Generic,
    Nilpotent,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Generic => Mode::Generic,
            ModeArg::Nilpotent => Mode::Nilpotent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Adjoint,
    Structure,
    Both,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Algebra dimension N (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    /// RNG seed; drawn from OS entropy and echoed to stderr when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "real")]
    pub field: FieldArg,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..), default_value_t = 16)]
    pub max_attempts: u32,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_enum, default_value = "generic")]
    pub mode: ModeArg,
    /// Which optional blocks to include in the document.
    #[arg(long, value_enum, default_value = "structure")]
    pub emit: Emit,
    /// Verification tolerance recorded in the document.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Document to check (`-` for stdin).
    pub file: PathBuf,
    /// Comma-separated checks, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub checks: Vec<String>,
    /// Relative tolerance; defaults to the value stored in the document (1e-9 unless set at generation).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Seed for sampled checks at large N.
    #[arg(long, default_value_t = 0x5eed_cafe)]
    pub check_seed: u64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Pass when max |difference| ≤ tol·scale.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(2..))]
    pub dims: Vec<u64>,
    /// Timed runs per dimension (at least 3).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
    pub repeat: u32,
    #[arg(long, value_enum, default_value = "generic")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "real")]
    pub field: FieldArg,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; stdout when omitted (the report then goes to stderr).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Largest N for which verification is also timed.
    #[arg(long, default_value_t = 64)]
    pub verify_max_dim: u64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..), default_value_t = 16)]
    pub max_attempts: u32,
}

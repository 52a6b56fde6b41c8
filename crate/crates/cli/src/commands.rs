use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use lieforge::io::{from_document_str, to_document_string, FormatError};
use lieforge::oracle::{
    compare_tensors, count_equations, oracle_structure_constants, MAX_SYSTEM_DIM,
};
use lieforge::{
    generate_any, verify_all, AnySample, Check, GenerateConfig, Mode, OracleError, Tolerances,
    VerifyConfig, WriteOptions,
};
use serde::Serialize;

use crate::args::{Emit, Format, GenerateArgs, OracleArgs, SampleArgs, VerifyArgs};
use crate::exit;

/// Uses the given seed or draws one and echoes it so the run can be repeated.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn config(sample: &SampleArgs, mode: Mode, seed: u64) -> GenerateConfig {
    let mut cfg = GenerateConfig::new(sample.dim as usize, mode, seed);
    cfg.max_attempts = sample.max_attempts;
    cfg
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

pub fn generate(args: &GenerateArgs) -> u8 {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        eprintln!("error: --tol must be a positive finite number");
        return exit::USAGE;
    }
    let seed = resolve_seed(args.sample.seed);
    let mut cfg = config(&args.sample, args.mode.into(), seed);
    cfg.tolerances = Tolerances {
        tau_ver: args.tol,
        ..Tolerances::default()
    };
    let sample = match generate_any(args.sample.field.into(), &cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: generation failed: {e}");
            return exit::GENERATION_FAILED;
        }
    };
    let options = WriteOptions {
        include_adjoint: matches!(args.emit, Emit::Adjoint | Emit::Both),
        include_structure: matches!(args.emit, Emit::Structure | Emit::Both),
    };
    let text = match to_document_string(&sample, options) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::GENERATION_FAILED;
        }
    };
    if let Err(e) = write_output(args.out.as_deref(), &text) {
        eprintln!("error: cannot write output: {e}");
        return exit::IO;
    }
    exit::OK
}

fn parse_checks(names: &[String]) -> Result<Vec<Check>, String> {
    let mut out = Vec::new();
    for name in names.iter().map(|s| s.trim()) {
        if name == "all" {
            out.extend(Check::ALL);
        } else {
            out.push(name.parse()?);
        }
    }
    if out.is_empty() {
        return Err("no checks selected".into());
    }
    Ok(out)
}

fn read_document(path: &Path) -> Result<String, io::Error> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        File::open(path)?.read_to_string(&mut text)?;
    }
    Ok(text)
}

pub fn verify(args: &VerifyArgs) -> u8 {
    let checks = match parse_checks(&args.checks) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    if let Some(t) = args.tol {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("error: --tol must be a positive finite number");
            return exit::USAGE;
        }
    }
    let text = match read_document(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.file.display());
            return exit::NO_INPUT;
        }
    };
    let sample = match from_document_str(&text) {
        Ok(s) => s,
        Err(e @ FormatError::Io(_)) => {
            eprintln!("error: {e}");
            return exit::NO_INPUT;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit::INTEGRITY;
        }
    };
    let config = VerifyConfig {
        tau_ver: args.tol,
        checks,
        seed: args.check_seed,
        ..VerifyConfig::default()
    };
    let report = verify_all(&sample, &config);
    let rendered = match args.format {
        Format::Text => report.to_text(),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    if let Err(e) = write_output(None, &rendered) {
        eprintln!("error: {e}");
        return exit::IO;
    }
    if report.passed() {
        exit::OK
    } else {
        let failed: Vec<&str> = report.failed().iter().map(|c| c.name()).collect();
        eprintln!("verification failed: {}", failed.join(", "));
        exit::VERIFY_FAILED
    }
}

#[derive(Debug, Serialize)]
struct OracleReport {
    dim: usize,
    seed: u64,
    field: String,
    dim_sys: usize,
    scale: f64,
    tolerance: f64,
    max_diff: f64,
    max_diff_at: (usize, usize, usize),
    system_residual: f64,
    condition_estimate: f64,
    passed: bool,
}

pub fn oracle(args: &OracleArgs) -> u8 {
    let dim = args.sample.dim as usize;
    let dim_sys = count_equations(dim);
    if dim_sys > MAX_SYSTEM_DIM {
        eprintln!(
            "error: {}",
            OracleError::TooLarge {
                dim_sys,
                limit: MAX_SYSTEM_DIM
            }
        );
        return exit::USAGE;
    }
    let seed = resolve_seed(args.sample.seed);
    let sample = match generate_any(
        args.sample.field.into(),
        &config(&args.sample, Mode::Generic, seed),
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: generation failed: {e}");
            return exit::GENERATION_FAILED;
        }
    };
    let outcome = match &sample {
        AnySample::Real(s) => run_oracle(s, args.tol),
        AnySample::Complex(s) => run_oracle(s, args.tol),
    };
    let report = match outcome {
        Ok(r) => OracleReport {
            seed,
            field: sample.field().to_string(),
            ..r
        },
        Err(e @ OracleError::Singular { .. }) => {
            eprintln!("error: {e}");
            return exit::ORACLE_SINGULAR;
        }
        Err(e @ OracleError::TooLarge { .. }) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit::INTEGRITY;
        }
    };
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Text => {
            let mut s = format!(
                "dim {} seed {} field {}\nunknowns {}{}\n",
                report.dim,
                report.seed,
                report.field,
                report.dim_sys,
                if report.dim_sys == 0 {
                    " (empty system)"
                } else {
                    ""
                }
            );
            s += &format!(
                "system residual {:.3e}\ncondition estimate {:.3e}\nmax |closed form - oracle| {:.3e} at {:?}\ntolerance {:.3e} (tol x scale, scale {:.6e})\nresult: {}\n",
                report.system_residual,
                report.condition_estimate,
                report.max_diff,
                report.max_diff_at,
                report.tolerance,
                report.scale,
                if report.passed { "PASS" } else { "FAIL" }
            );
            s
        }
    };
    if let Err(e) = write_output(None, &rendered) {
        eprintln!("error: {e}");
        return exit::IO;
    }
    if report.passed {
        exit::OK
    } else {
        exit::VERIFY_FAILED
    }
}

fn run_oracle<T: lieforge::Scalar>(
    s: &lieforge::LieAlgebraSample<T>,
    tol: f64,
) -> Result<OracleReport, OracleError> {
    let r = oracle_structure_constants(s)?;
    let diff = compare_tensors(&s.structure, &r.structure);
    let scale = s.adjoint.scale();
    let tolerance = tol * scale;
    Ok(OracleReport {
        dim: s.dim(),
        seed: s.seed,
        field: String::new(),
        dim_sys: r.dim_sys,
        scale,
        tolerance,
        max_diff: diff.max_diff,
        max_diff_at: diff.at,
        system_residual: r.residual,
        condition_estimate: r.condition_estimate,
        passed: diff.max_diff <= tolerance,
    })
}

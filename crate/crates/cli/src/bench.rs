//! Generation timings, with the published reference figures alongside.

use std::fs::File;
use std::io::{self, Write};
use std::time::Instant;

use lieforge::{generate_any, verify_all, Field, GenerateConfig, Mode, VerifyConfig, RNG_ID};
use serde::Serialize;

use crate::args::BenchArgs;
use crate::commands::resolve_seed;
use crate::exit;

/// Reference generation times (seconds) from the original interpreted
/// implementation.
pub const BASELINES: [(usize, f64); 2] = [(100, 0.3), (500, 40.0)];

/// One CSV row. Field order is the column order.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub mode: Mode,
    pub repeats: u32,
    pub median_generate_s: f64,
    pub median_verify_s: Option<f64>,
    pub rng_id: &'static str,
    #[serde(skip)]
    pub hardware: String,
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of nothing");
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn hardware_note() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".to_string());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {threads} hardware threads; {}-{}; single-threaded run",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

fn bench_one(
    args: &BenchArgs,
    dim: usize,
    seed: u64,
    hardware: &str,
) -> Result<BenchRecord, String> {
    let (mode, field, repeats): (Mode, Field, u32) =
        (args.mode.into(), args.field.into(), args.repeat);
    let time_verify = dim as u64 <= args.verify_max_dim;
    let mut gen_times = Vec::with_capacity(repeats as usize);
    let mut ver_times = Vec::new();
    for r in 0..repeats {
        let mut cfg = GenerateConfig::new(dim, mode, seed.wrapping_add(r as u64));
        cfg.max_attempts = args.max_attempts;
        let start = Instant::now();
        let sample = generate_any(field, &cfg).map_err(|e| format!("N={dim}: {e}"))?;
        gen_times.push(start.elapsed().as_secs_f64());
        if time_verify {
            let start = Instant::now();
            let report = verify_all(&sample, &VerifyConfig::default());
            ver_times.push(start.elapsed().as_secs_f64());
            if !report.passed() {
                log::warn!(
                    "N={dim} run {r}: verification failed: {:?}",
                    report.failed()
                );
            }
        }
    }
    Ok(BenchRecord {
        n: dim,
        mode,
        repeats,
        median_generate_s: median(&mut gen_times),
        median_verify_s: (!ver_times.is_empty()).then(|| median(&mut ver_times)),
        rng_id: RNG_ID,
        hardware: hardware.to_string(),
    })
}

/// Lines comparing measured medians with the reference figures.
pub fn baseline_lines(records: &[BenchRecord]) -> Vec<String> {
    let mut lines = Vec::new();
    for &(n, reference) in &BASELINES {
        for r in records.iter().filter(|r| r.n == n) {
            let verdict = if r.median_generate_s <= reference {
                "within"
            } else {
                "ABOVE"
            };
            lines.push(format!(
                "baseline N={n} {}: measured {:.4} s vs reference {reference} s ({:.1}x, {verdict} bound) on {}",
                r.mode,
                r.median_generate_s,
                reference / r.median_generate_s.max(f64::MIN_POSITIVE),
                r.hardware
            ));
        }
    }
    lines
}

fn write_csv<W: Write>(records: &[BenchRecord], sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &BenchArgs) -> u8 {
    let seed = resolve_seed(args.seed);
    let hardware = hardware_note();
    let mode: Mode = args.mode.into();
    let field: Field = args.field.into();
    let mut records = Vec::new();
    let mut report: Box<dyn Write> = if args.csv.is_some() {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    };
    let _ = writeln!(report, "hardware: {hardware}");
    for &dim in &args.dims {
        let dim = dim as usize;
        match bench_one(args, dim, seed, &hardware) {
            Ok(r) => {
                let verify = r
                    .median_verify_s
                    .map_or("-".to_string(), |v| format!("{v:.4} s"));
                let _ = writeln!(
                    report,
                    "N={:<5} {mode} {field}: median generate {:.4} s, median verify {verify} over {} runs",
                    r.n, r.median_generate_s, r.repeats
                );
                records.push(r);
            }
            Err(e) => {
                eprintln!("error: generation failed: {e}");
                return exit::GENERATION_FAILED;
            }
        }
    }
    for line in baseline_lines(&records) {
        let _ = writeln!(report, "{line}");
    }
    let result = match &args.csv {
        Some(path) => File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| write_csv(&records, f)),
        None => write_csv(&records, io::stdout().lock()),
    };
    if let Err(e) = result {
        eprintln!("error: cannot write CSV: {e}");
        return exit::IO;
    }
    exit::OK
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn csv_header_and_empty_verify_column() {
        let rec = BenchRecord {
            n: 2,
            mode: Mode::Generic,
            repeats: 3,
            median_generate_s: 0.5,
            median_verify_s: None,
            rng_id: RNG_ID,
            hardware: String::new(),
        };
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("n,mode,repeats,median_generate_s,median_verify_s,rng_id")
        );
        assert_eq!(
            lines.next(),
            Some(format!("2,generic,3,0.5,,{RNG_ID}").as_str())
        );
    }

    #[test]
    fn baselines_are_reported_only_for_reference_dims() {
        let rec = |n| BenchRecord {
            n,
            mode: Mode::Generic,
            repeats: 3,
            median_generate_s: 0.01,
            median_verify_s: None,
            rng_id: RNG_ID,
            hardware: String::new(),
        };
        let lines = baseline_lines(&[rec(10), rec(100)]);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].contains("N=100") && lines[0].contains("within"));
    }
}

//! Runs the identity checks on a sample and collects a pass/fail report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{
    cartan_residual, closure_report, derived_abelian_residual, jacobi_residual, left_null_residual,
    lower_central_series, nan_max, nilpotency_ratio, relative, t_product_residual, Coverage,
    SeriesOptions,
};
use crate::generator::{build_adjoint, AnySample, LieAlgebraSample, Mode};
use crate::scalar::{Field, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Jacobi,
    Closure,
    Derived,
    Killing,
    Series,
    Nilpotency,
    TProduct,
    NullSpace,
    Consistency,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Jacobi,
        Check::Closure,
        Check::Derived,
        Check::Killing,
        Check::Series,
        Check::Nilpotency,
        Check::TProduct,
        Check::NullSpace,
        Check::Consistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Jacobi => "jacobi",
            Check::Closure => "closure",
            Check::Derived => "derived",
            Check::Killing => "killing",
            Check::Series => "series",
            Check::Nilpotency => "nilpotency",
            Check::TProduct => "tproduct",
            Check::NullSpace => "nullspace",
            Check::Consistency => "consistency",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
                format!("unknown check `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Which checks to run and how exhaustively.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    /// Overrides the sample's recorded `tau_ver` when set.
    pub tau_ver: Option<f64>,
    pub checks: Vec<Check>,
    pub jacobi_full_max_dim: usize,
    pub jacobi_samples: usize,
    pub closure_full_max_dim: usize,
    pub derived_full_max_dim: usize,
    pub cubic_full_max_dim: usize,
    pub samples: usize,
    /// Deepest lower-central-series level; `None` means `N`.
    pub l_max: Option<usize>,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tau_ver: None,
            checks: Check::ALL.to_vec(),
            jacobi_full_max_dim: 30,
            jacobi_samples: 1_000_000,
            closure_full_max_dim: 64,
            derived_full_max_dim: 12,
            cubic_full_max_dim: 40,
            samples: 512,
            l_max: None,
            seed: 0x5eed_cafe,
        }
    }
}

impl VerifyConfig {
    fn coverage(&self, dim: usize, full_max: usize, samples: usize, salt: u64) -> Coverage {
        if dim <= full_max {
            Coverage::Full
        } else {
            Coverage::Sampled {
                count: samples,
                seed: self.seed ^ salt,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub coverage: String,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub dim: usize,
    pub field: Field,
    pub mode: Mode,
    pub scale: f64,
    pub tau_ver: f64,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<Check> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.check)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dim {} field {} mode {} scale {:.6e} tau_ver {:e}\n",
            self.dim, self.field, self.mode, self.scale, self.tau_ver
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<5} {:<12} residual {:<12.3e} tolerance {:<12.3e} {:<14} {:>9.4}s  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.check.name(),
                c.residual,
                c.tolerance,
                c.coverage,
                c.seconds,
                c.detail
            ));
        }
        out.push_str(if self.passed() {
            "result: PASS\n"
        } else {
            "result: FAIL\n"
        });
        out
    }
}

/// Pass iff `residual ≤ tolerance` (NaN fails).
fn within(residual: f64, tolerance: f64) -> bool {
    residual <= tolerance
}

struct Outcome {
    passed: bool,
    residual: f64,
    tolerance: f64,
    coverage: String,
    detail: String,
}

impl Outcome {
    fn bound(residual: f64, tolerance: f64, coverage: Coverage, detail: String) -> Self {
        Self {
            passed: within(residual, tolerance),
            residual,
            tolerance,
            coverage: coverage.describe(),
            detail,
        }
    }
}

pub fn verify_sample<T: Scalar>(
    sample: &LieAlgebraSample<T>,
    config: &VerifyConfig,
) -> VerificationReport {
    let dim = sample.dim();
    let tau = config.tau_ver.unwrap_or(sample.tolerances.tau_ver);
    let adj = &sample.adjoint;
    let scale = adj.scale();
    let scale2 = scale * scale;
    let mut checks = Vec::new();

    let mut selected = config.checks.clone();
    selected.sort();
    selected.dedup();

    for check in selected {
        let start = Instant::now();
        let o = match check {
            Check::Jacobi => {
                let cov =
                    config.coverage(dim, config.jacobi_full_max_dim, config.jacobi_samples, 1);
                let r = jacobi_residual(&sample.structure, cov);
                Outcome::bound(
                    r.max_residual,
                    tau * scale2,
                    cov,
                    format!("{} sums, worst at {:?}", r.checked_count, r.worst_indices),
                )
            }
            Check::Closure => {
                let cov = config.coverage(dim, config.closure_full_max_dim, config.samples, 2);
                let r = closure_report(adj, cov);
                Outcome::bound(
                    r.max_residual,
                    tau * scale2,
                    cov,
                    format!("{} pairs, worst at {:?}", r.checked_count, r.worst_indices),
                )
            }
            Check::Derived => {
                let cov = config.coverage(dim, config.derived_full_max_dim, config.samples, 3);
                let r = derived_abelian_residual(adj, cov);
                Outcome::bound(
                    r.max_residual,
                    tau * scale2,
                    cov,
                    format!(
                        "{} pair-pairs, worst at {:?}",
                        r.checked_count, r.worst_indices
                    ),
                )
            }
            Check::Killing => {
                let cov = config.coverage(dim, config.cubic_full_max_dim, config.samples, 4);
                let r = cartan_residual(adj, cov);
                let k = &r.killing;
                let asym = k.checked_sub(&k.transpose()).expect("square").max_abs();
                let tol = tau * scale2;
                Outcome {
                    passed: within(r.max_cartan_residual, tol) && within(asym, tol),
                    residual: nan_max(r.max_cartan_residual, asym),
                    tolerance: tol,
                    coverage: cov.describe(),
                    detail: format!(
                        "cartan max at {:?}, killing asymmetry {asym:.2e}",
                        r.worst_indices
                    ),
                }
            }
            Check::Series => {
                let l_max = config.l_max.unwrap_or(dim);
                let r = lower_central_series(
                    adj,
                    &sample.params,
                    &sample.null,
                    SeriesOptions {
                        l_max,
                        tau_ver: tau,
                        path_seed: config.seed ^ 5,
                    },
                );
                let expect_terminated = sample.mode() == Mode::Nilpotent;
                let shape_ok = r.terminated == expect_terminated;
                Outcome {
                    passed: within(r.max_relative_discrepancy, tau) && shape_ok,
                    residual: r.max_relative_discrepancy,
                    tolerance: tau,
                    coverage: format!("2 paths to L={l_max}"),
                    detail: format!(
                        "terminated {} (expected {expect_terminated}), at level {:?}",
                        r.terminated, r.terminated_at
                    ),
                }
            }
            Check::Nilpotency => {
                let ratio = nilpotency_ratio(&sample.params);
                match sample.mode() {
                    Mode::Nilpotent => Outcome {
                        passed: within(ratio, tau),
                        residual: ratio,
                        tolerance: tau,
                        coverage: "full".into(),
                        detail: "||P^N|| / ||P||^N".into(),
                    },
                    Mode::Generic => Outcome {
                        passed: true,
                        residual: ratio,
                        tolerance: tau,
                        coverage: "full".into(),
                        detail: "not applicable in generic mode".into(),
                    },
                }
            }
            Check::TProduct => {
                let cov = config.coverage(dim, config.cubic_full_max_dim, config.samples, 6);
                let r = t_product_residual(&sample.null, adj, cov);
                Outcome::bound(
                    r.max_residual,
                    tau * scale2,
                    cov,
                    format!("{} pairs, worst at {:?}", r.checked_count, r.worst_indices),
                )
            }
            Check::NullSpace => {
                let r = left_null_residual(&sample.null, adj);
                let reference = scale.max(sample.params.matrix().norm_inf());
                Outcome::bound(r, tau * reference, Coverage::Full, "max_k ||n A_k||".into())
            }
            Check::Consistency => {
                let rebuilt = build_adjoint(&sample.params, &sample.null);
                let diff = adj
                    .matrices()
                    .iter()
                    .zip(rebuilt.matrices())
                    .map(|(a, b)| a.checked_sub(b).expect("same shape").max_abs())
                    .fold(0.0, nan_max);
                let asym = sample.structure.antisymmetry_defect();
                let residual = nan_max(relative(diff, scale.max(f64::MIN_POSITIVE)), asym);
                Outcome::bound(
                    residual,
                    tau,
                    Coverage::Full,
                    format!("adjoint vs rebuilt from (P, n) {diff:.2e}, antisymmetry {asym:.2e}"),
                )
            }
        };
        checks.push(CheckResult {
            check,
            passed: o.passed,
            residual: o.residual,
            tolerance: o.tolerance,
            coverage: o.coverage,
            seconds: start.elapsed().as_secs_f64(),
            detail: o.detail,
        });
    }

    VerificationReport {
        dim,
        field: T::FIELD,
        mode: sample.mode(),
        scale,
        tau_ver: tau,
        checks,
    }
}

/// Runs every configured check on `sample`.
pub fn verify_all(sample: &AnySample, config: &VerifyConfig) -> VerificationReport {
    with_sample!(sample, s => verify_sample(s, config))
}

//! Sampling the parameter matrix and building the adjoint representation.
//!
//! A parameter matrix `P` (zero first column, rank `N − 1`) with unit left
//! null vector `n` determines the whole algebra: the adjoint matrices are
//! `A_k = P·T_k` with `T_k = n{k}·1 − e_kᵀ·n`, which expands to the rank-one
//! update `A_k = n{k}·P − p_k ⊗ n` (`p_k` the k-th column of `P`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{rank_and_left_null, LinalgError, Matrix};
use crate::rng::{NormalStream, RNG_ID};
use crate::scalar::{Complex64, Field, Scalar};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Normal draws in columns 2..N; solvable, not nilpotent.
    Generic,
    /// Normal draws strictly above the diagonal; nilpotent.
    Nilpotent,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Generic => "generic",
            Mode::Nilpotent => "nilpotent",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generic" => Ok(Mode::Generic),
            "nilpotent" => Ok(Mode::Nilpotent),
            other => Err(format!(
                "unknown mode `{other}` (expected generic|nilpotent)"
            )),
        }
    }
}

/// Numerical thresholds recorded with every sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute singular-value floor for rank decisions; 0 selects `N·ε·σ_max`.
    pub tol_rank: f64,
    /// Minimum `|n{1}|` in generic mode.
    pub tau_n1: f64,
    /// Relative tolerance for identity checks.
    pub tau_ver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: 0.0,
            tau_n1: 1e-10,
            tau_ver: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("unsupported dimension {0}: at least 2 is required")]
    UnsupportedDimension(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate parameters: rank {rank}, expected {expected}{}", residual_note(.null_residual))]
    DegenerateParameters {
        rank: usize,
        expected: usize,
        null_residual: Option<f64>,
    },
    #[error("null vector first component |n1| = {value:e} is below {threshold:e}")]
    NullFirstComponent { value: f64, threshold: f64 },
    #[error("malformed parameter matrix: {0}")]
    MalformedParameters(String),
    #[error("generation failed after {attempts} attempts; last failure: {last}")]
    GenerationFailed {
        attempts: u32,
        last: Box<GenerateError>,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn residual_note(r: &Option<f64>) -> String {
    match r {
        Some(r) => format!(" (null residual {r:e} too large)"),
        None => String::new(),
    }
}

/// The `N x N` a-priori matrix with zero first column.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterMatrix<T> {
    matrix: Matrix<T>,
    mode: Mode,
}

impl<T: Scalar> ParameterMatrix<T> {
    pub fn new(matrix: Matrix<T>, mode: Mode) -> Result<Self, GenerateError> {
        if !matrix.is_square() {
            return Err(GenerateError::MalformedParameters(format!(
                "not square: {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        if n < 2 {
            return Err(GenerateError::UnsupportedDimension(n));
        }
        if !matrix.all_finite() {
            return Err(GenerateError::MalformedParameters(
                "non-finite entry".into(),
            ));
        }
        if let Some(i) = (0..n).find(|&i| !matrix[(i, 0)].is_zero()) {
            return Err(GenerateError::MalformedParameters(format!(
                "first column must be zero, row {i} holds {:?}",
                matrix[(i, 0)]
            )));
        }
        if mode == Mode::Nilpotent {
            for i in 0..n {
                for j in 0..=i {
                    if !matrix[(i, j)].is_zero() {
                        return Err(GenerateError::MalformedParameters(format!(
                            "nilpotent mode needs a strictly upper-triangular matrix, ({i}, {j}) is nonzero"
                        )));
                    }
                }
            }
        }
        Ok(Self { matrix, mode })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }
}

/// Left null vector of `P` plus the scale factor `c = 1/n{1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NullData<T> {
    pub n: Vec<T>,
    /// Absent in nilpotent mode, where `n{1}` is necessarily zero.
    pub c: Option<T>,
    pub smallest_retained_sv: f64,
}

/// `T_k = n{k}·1 − e_kᵀ·n`, kept implicit as `(n, k)`.
#[derive(Clone, Copy, Debug)]
pub struct TransferMatrix<'a, T> {
    null: &'a [T],
    k: usize,
}

impl<'a, T: Scalar> TransferMatrix<'a, T> {
    pub fn new(null: &'a [T], k: usize) -> Self {
        assert!(k < null.len(), "transfer index out of range");
        Self { null, k }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> T {
        let mut v = if i == j { self.null[self.k] } else { T::zero() };
        if i == self.k {
            v -= self.null[j];
        }
        v
    }

    pub fn materialize(&self) -> Matrix<T> {
        let n = self.null.len();
        Matrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// The adjoint matrices `A_1..A_N`, with `A_k{i,j} = f{k,j,i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointRep<T> {
    matrices: Vec<Matrix<T>>,
}

impl<T: Scalar> AdjointRep<T> {
    pub fn from_matrices(matrices: Vec<Matrix<T>>) -> Result<Self, GenerateError> {
        let n = matrices.len();
        if let Some(k) = matrices.iter().position(|m| m.shape() != (n, n)) {
            return Err(GenerateError::MalformedParameters(format!(
                "adjoint matrix {k} has shape {:?}, expected ({n}, {n})",
                matrices[k].shape()
            )));
        }
        Ok(Self { matrices })
    }

    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, k: usize) -> &Matrix<T> {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[Matrix<T>] {
        &self.matrices
    }

    /// `max_k ‖A_k‖∞`, the reference magnitude for identity checks.
    pub fn scale(&self) -> f64 {
        self.matrices
            .iter()
            .map(Matrix::norm_inf)
            .fold(0.0, f64::max)
    }

    pub fn from_structure(f: &StructureTensor<T>) -> Self {
        let n = f.dim();
        let matrices = (0..n)
            .map(|k| Matrix::from_fn(n, n, |i, j| f.get(k, j, i)))
            .collect();
        Self { matrices }
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .matrices
                .iter()
                .zip(&other.matrices)
                .all(|(a, b)| a.bit_eq(b))
    }
}

/// Structure constants `f{i,j,k}` with `[g_i, g_j] = Σ_k f{i,j,k} g_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensor<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> StructureTensor<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: T) {
        self.data[(i * self.dim + j) * self.dim + k] = value;
    }

    /// Sets `f{i,j,k} = value` and `f{j,i,k} = −value`.
    pub fn set_antisymmetric(&mut self, i: usize, j: usize, k: usize, value: T) {
        self.set(i, j, k, value);
        self.set(j, i, k, (-value).canonical_zero());
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    /// Largest `|f{i,j,k} + f{j,i,k}|`, including the diagonal `|2 f{i,i,k}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(j, i, k)).modulus());
                }
            }
        }
        worst
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(&a, &b)| a.bit_eq(b))
    }
}

/// A generated algebra together with everything needed to regenerate it.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSample<T> {
    pub seed: u64,
    pub rng_id: String,
    pub attempts: u32,
    pub tolerances: Tolerances,
    pub params: ParameterMatrix<T>,
    pub null: NullData<T>,
    pub adjoint: AdjointRep<T>,
    pub structure: StructureTensor<T>,
}

impl<T: Scalar> LieAlgebraSample<T> {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn mode(&self) -> Mode {
        self.params.mode()
    }

    /// Bitwise equality of every numeric field plus provenance.
    pub fn bit_eq(&self, other: &Self) -> bool {
        let opt_eq = |a: Option<T>, b: Option<T>| match (a, b) {
            (Some(a), Some(b)) => a.bit_eq(b),
            (None, None) => true,
            _ => false,
        };
        self.seed == other.seed
            && self.rng_id == other.rng_id
            && self.attempts == other.attempts
            && self.tolerances == other.tolerances
            && self.mode() == other.mode()
            && self.params.matrix().bit_eq(other.params.matrix())
            && self.null.n.len() == other.null.n.len()
            && self
                .null
                .n
                .iter()
                .zip(&other.null.n)
                .all(|(&a, &b)| a.bit_eq(b))
            && opt_eq(self.null.c, other.null.c)
            && self.adjoint.bit_eq(&other.adjoint)
            && self.structure.bit_eq(&other.structure)
    }
}

/// A sample over either field.
#[derive(Clone, Debug, PartialEq)]
pub enum AnySample {
    Real(LieAlgebraSample<f64>),
    Complex(LieAlgebraSample<Complex64>),
}

/// Runs `$body` with `$s` bound to the typed sample inside an [`AnySample`].
#[macro_export]
macro_rules! with_sample {
    ($any:expr, $s:ident => $body:expr) => {
        match $any {
            $crate::generator::AnySample::Real($s) => $body,
            $crate::generator::AnySample::Complex($s) => $body,
        }
    };
}

impl AnySample {
    pub fn dim(&self) -> usize {
        with_sample!(self, s => s.dim())
    }

    pub fn field(&self) -> Field {
        match self {
            AnySample::Real(_) => Field::Real,
            AnySample::Complex(_) => Field::Complex,
        }
    }

    pub fn mode(&self) -> Mode {
        with_sample!(self, s => s.mode())
    }

    pub fn seed(&self) -> u64 {
        with_sample!(self, s => s.seed)
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        match (self, other) {
            (AnySample::Real(a), AnySample::Real(b)) => a.bit_eq(b),
            (AnySample::Complex(a), AnySample::Complex(b)) => a.bit_eq(b),
            _ => false,
        }
    }
}

impl From<LieAlgebraSample<f64>> for AnySample {
    fn from(s: LieAlgebraSample<f64>) -> Self {
        AnySample::Real(s)
    }
}

impl From<LieAlgebraSample<Complex64>> for AnySample {
    fn from(s: LieAlgebraSample<Complex64>) -> Self {
        AnySample::Complex(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerateConfig {
    pub dim: usize,
    pub mode: Mode,
    pub seed: u64,
    pub max_attempts: u32,
    pub tolerances: Tolerances,
}

impl GenerateConfig {
    pub fn new(dim: usize, mode: Mode, seed: u64) -> Self {
        Self {
            dim,
            mode,
            seed,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            tolerances: Tolerances::default(),
        }
    }
}

/// Draws a parameter matrix.
///
/// Filled positions are visited in row-major order: columns `2..N` of every
/// row in generic mode, strictly-upper positions in nilpotent mode. All real
/// parts are drawn first; for the complex field a second pass over the same
/// positions draws the imaginary parts.
pub fn sample_parameter_matrix<T: Scalar>(
    dim: usize,
    mode: Mode,
    rng: &mut NormalStream,
) -> Result<ParameterMatrix<T>, GenerateError> {
    if dim < 2 {
        return Err(GenerateError::UnsupportedDimension(dim));
    }
    let positions: Vec<(usize, usize)> = match mode {
        Mode::Generic => (0..dim)
            .flat_map(|i| (1..dim).map(move |j| (i, j)))
            .collect(),
        Mode::Nilpotent => (0..dim)
            .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
            .collect(),
    };
    let re: Vec<f64> = positions.iter().map(|_| rng.next_normal()).collect();
    let im: Vec<f64> = match T::FIELD {
        Field::Real => vec![0.0; positions.len()],
        Field::Complex => positions.iter().map(|_| rng.next_normal()).collect(),
    };
    let mut p = Matrix::zeros(dim, dim);
    for (idx, &(i, j)) in positions.iter().enumerate() {
        p[(i, j)] = T::from_parts(re[idx], im[idx]);
    }
    ParameterMatrix::new(p, mode)
}

/// Checks the rank condition (and `|n{1}| ≥ τ_n1` in generic mode) and
/// returns the null data.
pub fn validate_parameter_matrix<T: Scalar>(
    p: &ParameterMatrix<T>,
    tolerances: &Tolerances,
) -> Result<NullData<T>, GenerateError> {
    let dim = p.dim();
    let rn = rank_and_left_null(p.matrix(), tolerances.tol_rank)?;
    let n = match rn.null {
        Some(n) if rn.rank + 1 == dim => n,
        _ => {
            return Err(GenerateError::DegenerateParameters {
                rank: rn.rank,
                expected: dim - 1,
                null_residual: rn.null_residual,
            })
        }
    };
    let c = match p.mode() {
        Mode::Generic => {
            let n1 = n[0];
            if n1.modulus() < tolerances.tau_n1 {
                return Err(GenerateError::NullFirstComponent {
                    value: n1.modulus(),
                    threshold: tolerances.tau_n1,
                });
            }
            Some(T::one() / n1)
        }
        Mode::Nilpotent => None,
    };
    Ok(NullData {
        n,
        c,
        smallest_retained_sv: rn.smallest_retained_sv,
    })
}

/// `A_k = n{k}·P − p_k ⊗ n` for every k.
pub fn build_adjoint<T: Scalar>(p: &ParameterMatrix<T>, null: &NullData<T>) -> AdjointRep<T> {
    let pm = p.matrix();
    let dim = p.dim();
    let n = &null.n;
    let matrices = (0..dim)
        .map(|k| {
            let nk = n[k];
            Matrix::from_fn(dim, dim, |i, j| {
                (nk * pm[(i, j)] - pm[(i, k)] * n[j]).canonical_zero()
            })
        })
        .collect();
    AdjointRep { matrices }
}

/// `f{k,j,i} = A_k{i,j}`.
pub fn adjoint_to_structure<T: Scalar>(adj: &AdjointRep<T>) -> StructureTensor<T> {
    let n = adj.dim();
    let mut f = StructureTensor::zeros(n);
    for (k, a) in adj.matrices().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                f.set(k, j, i, a[(i, j)]);
            }
        }
    }
    f
}

/// Samples and validates until success or `max_attempts` failures, then
/// builds the adjoint representation and structure tensor.
pub fn generate<T: Scalar>(config: &GenerateConfig) -> Result<LieAlgebraSample<T>, GenerateError> {
    if config.dim < 2 {
        return Err(GenerateError::UnsupportedDimension(config.dim));
    }
    if config.max_attempts == 0 {
        return Err(GenerateError::InvalidConfig(
            "max_attempts must be at least 1".into(),
        ));
    }
    let mut rng = NormalStream::new(config.seed);
    let mut last = None;
    for attempt in 1..=config.max_attempts {
        let params = sample_parameter_matrix::<T>(config.dim, config.mode, &mut rng)?;
        match validate_parameter_matrix(&params, &config.tolerances) {
            Ok(null) => {
                let adjoint = build_adjoint(&params, &null);
                let structure = adjoint_to_structure(&adjoint);
                return Ok(LieAlgebraSample {
                    seed: config.seed,
                    rng_id: RNG_ID.to_string(),
                    attempts: attempt,
                    tolerances: config.tolerances,
                    params,
                    null,
                    adjoint,
                    structure,
                });
            }
            Err(e) => {
                log::warn!("seed {} attempt {attempt}: {e}", config.seed);
                last = Some(e);
            }
        }
    }
    Err(GenerateError::GenerationFailed {
        attempts: config.max_attempts,
        last: Box::new(last.expect("at least one attempt ran")),
    })
}

pub fn generate_any(field: Field, config: &GenerateConfig) -> Result<AnySample, GenerateError> {
    Ok(match field {
        Field::Real => AnySample::Real(generate(config)?),
        Field::Complex => AnySample::Complex(generate(config)?),
    })
}

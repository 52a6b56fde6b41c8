//! The `lieforge/1` document format.
//!
//! A document is one line of UTF-8 JSON followed by a newline, with keys in
//! a fixed order: `format, dim, field, mode, seed, rng_id, attempts,
//! tolerances, p_matrix, null_vector, c, adjoint?, structure_constants?`.
//! Matrices are row-major flat arrays; complex numbers are `[re, im]`.
//! Indices are zero-based. `structure_constants` lists `[i, j, k, value]`
//! for `i < j` and nonzero values only; the `i > j` half follows by
//! antisymmetry. Floats are written in shortest round-trip form, so reading
//! a document back reproduces every number bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{
    adjoint_to_structure, build_adjoint, validate_parameter_matrix, AdjointRep, AnySample,
    LieAlgebraSample, Mode, NullData, ParameterMatrix, StructureTensor, Tolerances,
};
use crate::linalg::{null_residual_bound, Matrix};
use crate::scalar::{Complex64, Field, Scalar};

pub const FORMAT_VERSION: &str = "lieforge/1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported document version `{found}` (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("non-finite value in {0}; documents cannot carry NaN or infinity")]
    NonFinite(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    fn integrity(msg: impl Into<String>) -> Self {
        FormatError::Integrity(msg.into())
    }
}

/// Which optional blocks to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WriteOptions {
    pub include_adjoint: bool,
    pub include_structure: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            include_adjoint: false,
            include_structure: true,
        }
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Leaf {
    Real(f64),
    Complex([f64; 2]),
}

/// On-disk layout. Field order here is the key order on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDocument {
    pub format: String,
    pub dim: usize,
    pub field: Field,
    pub mode: Mode,
    pub seed: u64,
    pub rng_id: String,
    pub attempts: u32,
    pub tolerances: Tolerances,
    pub p_matrix: Vec<Leaf>,
    pub null_vector: Vec<Leaf>,
    pub c: Option<Leaf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint: Option<Vec<Vec<Leaf>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Vec<(usize, usize, usize, Leaf)>>,
}

fn to_leaf<T: Scalar>(v: T, what: &str) -> Result<Leaf, FormatError> {
    if !v.is_finite() {
        return Err(FormatError::NonFinite(what.to_string()));
    }
    let v = v.canonical_zero();
    Ok(match T::FIELD {
        Field::Real => Leaf::Real(v.re()),
        Field::Complex => Leaf::Complex([v.re(), v.im()]),
    })
}

fn from_leaf<T: Scalar>(leaf: Leaf, what: &str) -> Result<T, FormatError> {
    let v = match (T::FIELD, leaf) {
        (Field::Real, Leaf::Real(x)) => T::from_real(x),
        (Field::Complex, Leaf::Complex([re, im])) => T::from_parts(re, im),
        (Field::Real, Leaf::Complex(_)) => {
            return Err(FormatError::integrity(format!(
                "{what}: complex value in a real document"
            )))
        }
        (Field::Complex, Leaf::Real(_)) => {
            return Err(FormatError::integrity(format!(
                "{what}: expected [re, im] in a complex document"
            )))
        }
    };
    if !v.is_finite() {
        return Err(FormatError::NonFinite(what.to_string()));
    }
    Ok(v)
}

fn leaves<T: Scalar>(xs: &[T], what: &str) -> Result<Vec<Leaf>, FormatError> {
    xs.iter().map(|&x| to_leaf(x, what)).collect()
}

fn values<T: Scalar>(xs: &[Leaf], what: &str) -> Result<Vec<T>, FormatError> {
    xs.iter().map(|&x| from_leaf(x, what)).collect()
}

impl SampleDocument {
    pub fn from_sample<T: Scalar>(
        s: &LieAlgebraSample<T>,
        options: WriteOptions,
    ) -> Result<Self, FormatError> {
        let adjoint = if options.include_adjoint {
            Some(
                s.adjoint
                    .matrices()
                    .iter()
                    .map(|a| leaves(a.as_slice(), "adjoint"))
                    .collect::<Result<_, _>>()?,
            )
        } else {
            None
        };
        let structure_constants = if options.include_structure {
            let n = s.dim();
            let mut list = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        let v = s.structure.get(i, j, k);
                        if !v.is_zero() {
                            list.push((i, j, k, to_leaf(v, "structure_constants")?));
                        } else if !v.is_finite() {
                            return Err(FormatError::NonFinite("structure_constants".into()));
                        }
                    }
                }
            }
            Some(list)
        } else {
            None
        };
        let c = match s.null.c {
            Some(c) => Some(to_leaf(c, "c")?),
            None => None,
        };
        for (name, x) in [
            ("tol_rank", s.tolerances.tol_rank),
            ("tau_n1", s.tolerances.tau_n1),
            ("tau_ver", s.tolerances.tau_ver),
        ] {
            if !x.is_finite() {
                return Err(FormatError::NonFinite(format!("tolerances.{name}")));
            }
        }
        Ok(Self {
            format: FORMAT_VERSION.to_string(),
            dim: s.dim(),
            field: T::FIELD,
            mode: s.mode(),
            seed: s.seed,
            rng_id: s.rng_id.clone(),
            attempts: s.attempts,
            tolerances: s.tolerances,
            p_matrix: leaves(s.params.matrix().as_slice(), "p_matrix")?,
            null_vector: leaves(&s.null.n, "null_vector")?,
            c,
            adjoint,
            structure_constants,
        })
    }

    pub fn from_any(s: &AnySample, options: WriteOptions) -> Result<Self, FormatError> {
        with_sample!(s, s => Self::from_sample(s, options))
    }

    fn into_sample<T: Scalar>(self) -> Result<LieAlgebraSample<T>, FormatError> {
        let dim = self.dim;
        if dim < 2 {
            return Err(FormatError::integrity(format!("dim {dim} is below 2")));
        }
        if self.p_matrix.len() != dim * dim {
            return Err(FormatError::integrity(format!(
                "p_matrix has {} entries, expected {}",
                self.p_matrix.len(),
                dim * dim
            )));
        }
        if self.null_vector.len() != dim {
            return Err(FormatError::integrity(format!(
                "null_vector has {} entries, expected {dim}",
                self.null_vector.len()
            )));
        }
        let tol = self.tolerances;
        if ![tol.tol_rank, tol.tau_n1, tol.tau_ver]
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0)
        {
            return Err(FormatError::integrity(
                "tolerances must be finite and non-negative",
            ));
        }

        let p = Matrix::from_row_major(dim, dim, values::<T>(&self.p_matrix, "p_matrix")?)
            .map_err(|e| FormatError::integrity(e.to_string()))?;
        if let Some(i) = (0..dim).find(|&i| !p[(i, 0)].is_zero()) {
            return Err(FormatError::integrity(format!(
                "p_matrix first column is nonzero at row {i}"
            )));
        }
        let params = ParameterMatrix::new(p, self.mode)
            .map_err(|e| FormatError::integrity(e.to_string()))?;

        // Rank and |n{1}| are re-derived; the stored vector must then be a
        // left null vector of P within the usual residual bound.
        let derived = validate_parameter_matrix(&params, &tol)
            .map_err(|e| FormatError::integrity(format!("p_matrix fails validation: {e}")))?;
        let n = values::<T>(&self.null_vector, "null_vector")?;
        let residual = Matrix::vec_mul(&n, params.matrix())
            .iter()
            .map(|x| x.modulus())
            .fold(0.0, f64::max);
        let bound = null_residual_bound(params.matrix());
        if !(residual <= bound) {
            return Err(FormatError::integrity(format!(
                "null_vector residual {residual:e} exceeds {bound:e}"
            )));
        }
        let c = match (self.mode, self.c) {
            (Mode::Generic, Some(c)) => {
                let c = from_leaf::<T>(c, "c")?;
                if !c.bit_eq(T::one() / n[0]) {
                    return Err(FormatError::integrity("c is not 1/null_vector[0]"));
                }
                Some(c)
            }
            (Mode::Generic, None) => {
                return Err(FormatError::integrity("generic document without c"))
            }
            (Mode::Nilpotent, None) => None,
            (Mode::Nilpotent, Some(_)) => {
                return Err(FormatError::integrity(
                    "nilpotent document must have c = null",
                ))
            }
        };
        let null = NullData {
            n,
            c,
            smallest_retained_sv: derived.smallest_retained_sv,
        };

        let adjoint = match self.adjoint {
            Some(mats) => {
                if mats.len() != dim {
                    return Err(FormatError::integrity(format!(
                        "adjoint has {} matrices, expected {dim}",
                        mats.len()
                    )));
                }
                let mats = mats
                    .iter()
                    .map(|m| {
                        Matrix::from_row_major(dim, dim, values::<T>(m, "adjoint")?)
                            .map_err(|e| FormatError::integrity(format!("adjoint: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(
                    AdjointRep::from_matrices(mats)
                        .map_err(|e| FormatError::integrity(e.to_string()))?,
                )
            }
            None => None,
        };
        let structure = match self.structure_constants {
            Some(list) => Some(read_sparse::<T>(dim, &list)?),
            None => None,
        };
        let (adjoint, structure) = match (adjoint, structure) {
            (Some(a), Some(f)) => {
                if !adjoint_to_structure(&a).bit_eq(&f) {
                    return Err(FormatError::integrity(
                        "adjoint and structure_constants disagree",
                    ));
                }
                (a, f)
            }
            (Some(a), None) => {
                let f = adjoint_to_structure(&a);
                (a, f)
            }
            (None, Some(f)) => (AdjointRep::from_structure(&f), f),
            (None, None) => {
                let a = build_adjoint(&params, &null);
                let f = adjoint_to_structure(&a);
                (a, f)
            }
        };

        Ok(LieAlgebraSample {
            seed: self.seed,
            rng_id: self.rng_id,
            attempts: self.attempts,
            tolerances: tol,
            params,
            null,
            adjoint,
            structure,
        })
    }

    pub fn into_any(self) -> Result<AnySample, FormatError> {
        if self.format != FORMAT_VERSION {
            return Err(FormatError::Version { found: self.format });
        }
        Ok(match self.field {
            Field::Real => AnySample::Real(self.into_sample::<f64>()?),
            Field::Complex => AnySample::Complex(self.into_sample::<Complex64>()?),
        })
    }
}

fn read_sparse<T: Scalar>(
    dim: usize,
    list: &[(usize, usize, usize, Leaf)],
) -> Result<StructureTensor<T>, FormatError> {
    let mut f = StructureTensor::zeros(dim);
    let mut seen = vec![false; dim * dim * dim];
    for &(i, j, k, leaf) in list {
        if i >= j || j >= dim || k >= dim {
            return Err(FormatError::integrity(format!(
                "structure constant index ({i}, {j}, {k}) is not canonical for dim {dim}"
            )));
        }
        let v = from_leaf::<T>(leaf, "structure_constants")?;
        if v.is_zero() {
            return Err(FormatError::integrity(format!(
                "structure constant ({i}, {j}, {k}) is an explicit zero"
            )));
        }
        let slot = (i * dim + j) * dim + k;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(FormatError::integrity(format!(
                "structure constant ({i}, {j}, {k}) listed twice"
            )));
        }
        f.set_antisymmetric(i, j, k, v);
    }
    Ok(f)
}

/// Serializes to the canonical one-line form, including the newline.
pub fn to_document_string(
    sample: &AnySample,
    options: WriteOptions,
) -> Result<String, FormatError> {
    let doc = SampleDocument::from_any(sample, options)?;
    let mut s = serde_json::to_string(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_sample<W: Write>(
    sample: &AnySample,
    options: WriteOptions,
    mut sink: W,
) -> Result<(), FormatError> {
    let s = to_document_string(sample, options)?;
    sink.write_all(s.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Parses a document. The version is checked before anything else so that
/// future formats fail with [`FormatError::Version`].
pub fn from_document_str(text: &str) -> Result<AnySample, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("format") {
        Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
        Some(serde_json::Value::String(v)) => {
            return Err(FormatError::Version { found: v.clone() })
        }
        Some(other) => {
            return Err(FormatError::Version {
                found: other.to_string(),
            })
        }
        None => return Err(FormatError::integrity("missing `format` key")),
    }
    let doc: SampleDocument =
        serde_json::from_value(value).map_err(|e| FormatError::integrity(e.to_string()))?;
    doc.into_any()
}

pub fn read_sample<R: Read>(mut source: R) -> Result<AnySample, FormatError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    from_document_str(&text)
}

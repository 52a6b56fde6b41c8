//! Independent reconstruction of the structure constants.
//!
//! Fixing the first row `f{0,j,k}` of the tensor (read off `A_0`), the Jacobi
//! identities with one index equal to zero are linear in the remaining
//! constants `f{i,j,k}`, `1 ≤ i < j < N`. Both unknowns and equations are
//! indexed by such triples, giving a square system of
//! [`count_equations`]`(N)` rows that is solved by Gaussian elimination with
//! partial pivoting. A generator bug would show up as a mismatch between this
//! solution and the closed-form constants.

use thiserror::Error;

use crate::generator::{LieAlgebraSample, StructureTensor};
use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Scalar;

/// Largest system the oracle will assemble.
pub const MAX_SYSTEM_DIM: usize = 4000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("linear system of dimension {dim_sys} exceeds the limit {limit}")]
    TooLarge { dim_sys: usize, limit: usize },
    #[error(
        "system is numerically singular: pivot {pivot:e} at column {column} is below {threshold:e}"
    )]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("malformed a-priori row: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Number of unknowns (and equations) for dimension `n`: `N(N−1)(N−2)/2`.
pub fn count_equations(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 2
    }
}

/// Position of the unknown `f{i,j,k}` (`1 ≤ i < j < N`, `k < N`) in the
/// solution vector. Pairs are ordered lexicographically, `k` fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnknownIndex {
    pub dim: usize,
}

impl UnknownIndex {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn len(&self) -> usize {
        count_equations(self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        let m = self.dim - 1;
        let (a, b) = (i - 1, j - 1);
        a * (2 * m - a - 1) / 2 + (b - a - 1)
    }

    pub fn linearize(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        if i == 0 || i >= j || j >= self.dim || k >= self.dim {
            return None;
        }
        Some(self.pair(i, j) * self.dim + k)
    }

    pub fn delinearize(&self, index: usize) -> Option<(usize, usize, usize)> {
        if index >= self.len() {
            return None;
        }
        let (mut p, k) = (index / self.dim, index % self.dim);
        for i in 1..self.dim {
            let row = self.dim - 1 - i;
            if p < row {
                return Some((i, i + 1 + p, k));
            }
            p -= row;
        }
        None
    }
}

/// The assembled square system `M u = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem<T> {
    pub matrix: Matrix<T>,
    pub rhs: Vec<T>,
    pub index: UnknownIndex,
}

/// Builds the system from `a_priori[j][k] = f{0,j,k}`, given as an `N×N`
/// matrix. Row 0 must vanish since `f{0,0,k} = 0`.
pub fn assemble_system<T: Scalar>(a_priori: &Matrix<T>) -> Result<LinearSystem<T>, OracleError> {
    let n = a_priori.rows();
    if !a_priori.is_square() {
        return Err(OracleError::Malformed(format!(
            "expected a square matrix, got {}x{}",
            a_priori.rows(),
            a_priori.cols()
        )));
    }
    if n < 2 {
        return Err(OracleError::Malformed(format!("dimension {n} is below 2")));
    }
    if !a_priori.all_finite() {
        return Err(OracleError::Malformed("non-finite entry".into()));
    }
    if let Some(k) = (0..n).find(|&k| !a_priori[(0, k)].is_zero()) {
        return Err(OracleError::Malformed(format!("f{{0,0,{k}}} is nonzero")));
    }
    let dim_sys = count_equations(n);
    if dim_sys > MAX_SYSTEM_DIM {
        return Err(OracleError::TooLarge {
            dim_sys,
            limit: MAX_SYSTEM_DIM,
        });
    }

    let index = UnknownIndex::new(n);
    let f1 = a_priori;
    let mut matrix = Matrix::zeros(dim_sys, dim_sys);
    let mut rhs = vec![T::zero(); dim_sys];

    // Adds `coef · f{p,q,m}` to equation `row`: known terms go to the rhs.
    let mut add = |row: usize, coef: T, p: usize, q: usize, m: usize| {
        if p == q || coef.is_zero() {
            return;
        }
        if p == 0 {
            rhs[row] -= coef * f1[(q, m)];
        } else if q == 0 {
            rhs[row] += coef * f1[(p, m)];
        } else if p < q {
            let col = index.linearize(p, q, m).expect("valid unknown");
            matrix[(row, col)] += coef;
        } else {
            let col = index.linearize(q, p, m).expect("valid unknown");
            matrix[(row, col)] -= coef;
        }
    };

    for j in 1..n {
        for k in j + 1..n {
            for m in 0..n {
                let row = index.linearize(j, k, m).expect("valid equation");
                for l in 0..n {
                    add(row, f1[(j, l)], k, l, m);
                    add(row, -f1[(k, l)], j, l, m);
                    add(row, f1[(l, m)], j, k, l);
                }
            }
        }
    }

    Ok(LinearSystem { matrix, rhs, index })
}

/// `PA = LU` with partial pivoting, stored compactly.
#[derive(Clone, Debug)]
pub struct LuDecomposition<T> {
    lu: Matrix<T>,
    /// Row `i` of `PA` is row `perm[i]` of `A`.
    perm: Vec<usize>,
}

impl<T: Scalar> LuDecomposition<T> {
    /// Factors `a`, failing when a pivot modulus is at most `threshold`.
    pub fn factor(a: &Matrix<T>, threshold: f64) -> Result<Self, OracleError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                op: "lu",
                rows: a.rows(),
                cols: a.cols(),
            }
            .into());
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv_row, piv_abs) =
                (col..n)
                    .map(|r| (r, lu[(r, col)].modulus()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(piv_abs > threshold) {
                return Err(OracleError::Singular {
                    column: col,
                    pivot: piv_abs,
                    threshold,
                });
            }
            if piv_row != col {
                perm.swap(piv_row, col);
                let data = lu.as_mut_slice();
                for c in 0..n {
                    data.swap(piv_row * n + c, col * n + c);
                }
            }
            let pivot = lu[(col, col)];
            let data = lu.as_mut_slice();
            let (upper, lower) = data.split_at_mut((col + 1) * n);
            let pivot_row = &upper[col * n..];
            for r in 0..n - col - 1 {
                let row = &mut lower[r * n..(r + 1) * n];
                if row[col].is_zero() {
                    continue;
                }
                let factor = row[col] / pivot;
                row[col] = factor;
                for c in col + 1..n {
                    row[c] -= factor * pivot_row[c];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᴴ x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_adjoint(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length");
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Estimate of `‖A⁻¹‖∞` (Hager's method with Higham's refinements,
    /// applied to `A⁻ᴴ` in the 1-norm). Never exceeds the true value by more
    /// than rounding.
    pub fn inverse_norm_inf_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let sign = |v: T| {
            let m = v.modulus();
            if m == 0.0 {
                T::one()
            } else {
                v * T::from_real(1.0 / m)
            }
        };
        let norm1 = |v: &[T]| v.iter().map(|x| x.modulus()).sum::<f64>();

        let mut x = vec![T::from_real(1.0 / n as f64); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve_adjoint(&x);
            let new_est = norm1(&y);
            if new_est <= est {
                break;
            }
            est = new_est;
            let xi: Vec<T> = y.into_iter().map(sign).collect();
            let z = self.solve(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.modulus()))
                .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (b.conj() * *a).re()).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![T::zero(); n];
            x[j] = T::one();
        }
        // Higham's alternating-sign vector guards against bad cases.
        let alt: Vec<T> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                T::from_real(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)))
            })
            .collect();
        let alt_est = 2.0 * norm1(&self.solve_adjoint(&alt)) / (3.0 * n as f64);
        est.max(alt_est)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSolution<T> {
    pub solution: Vec<T>,
    /// `‖M u − rhs‖∞`.
    pub residual: f64,
    /// Estimate of `κ∞(M)`.
    pub condition_estimate: f64,
    pub pivot_threshold: f64,
}

/// Pivot threshold `dim·ε·‖M‖∞`.
pub fn pivot_threshold<T: Scalar>(m: &Matrix<T>) -> f64 {
    m.rows() as f64 * f64::EPSILON * m.norm_inf()
}

pub fn solve_system<T: Scalar>(system: &LinearSystem<T>) -> Result<SystemSolution<T>, OracleError> {
    let m = &system.matrix;
    let threshold = pivot_threshold(m);
    let lu = LuDecomposition::factor(m, threshold)?;
    let solution = lu.solve(&system.rhs);
    let residual = m
        .mul_vec(&solution)
        .iter()
        .zip(&system.rhs)
        .map(|(a, b)| (*a - *b).modulus())
        .fold(0.0, f64::max);
    let condition_estimate = m.norm_inf() * lu.inverse_norm_inf_estimate();
    Ok(SystemSolution {
        solution,
        residual,
        condition_estimate,
        pivot_threshold: threshold,
    })
}

/// `‖M u − rhs‖∞` with `u` read from a full tensor.
pub fn substitution_residual<T: Scalar>(system: &LinearSystem<T>, f: &StructureTensor<T>) -> f64 {
    let u: Vec<T> = (0..system.index.len())
        .map(|p| {
            let (i, j, k) = system.index.delinearize(p).expect("in range");
            f.get(i, j, k)
        })
        .collect();
    system
        .matrix
        .mul_vec(&u)
        .iter()
        .zip(&system.rhs)
        .map(|(a, b)| (*a - *b).modulus())
        .fold(0.0, f64::max)
}

/// Assembles the full antisymmetric tensor from the first row and the
/// solved unknowns.
pub fn scatter<T: Scalar>(
    a_priori: &Matrix<T>,
    index: &UnknownIndex,
    u: &[T],
) -> StructureTensor<T> {
    let n = index.dim;
    let mut f = StructureTensor::zeros(n);
    for j in 1..n {
        for k in 0..n {
            f.set_antisymmetric(0, j, k, a_priori[(j, k)]);
        }
    }
    for (p, &v) in u.iter().enumerate() {
        let (i, j, k) = index.delinearize(p).expect("in range");
        f.set_antisymmetric(i, j, k, v);
    }
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<T> {
    pub structure: StructureTensor<T>,
    pub dim_sys: usize,
    pub residual: f64,
    pub condition_estimate: f64,
}

/// `a_priori[j][k] = f{0,j,k} = (A_0){k,j}`.
pub fn a_priori_row<T: Scalar>(sample: &LieAlgebraSample<T>) -> Matrix<T> {
    let a0 = sample.adjoint.matrix(0);
    a0.transpose()
}

/// Solves for every structure constant given only the first row.
pub fn oracle_structure_constants<T: Scalar>(
    sample: &LieAlgebraSample<T>,
) -> Result<OracleResult<T>, OracleError> {
    let a_priori = a_priori_row(sample);
    let system = assemble_system(&a_priori)?;
    let dim_sys = system.index.len();
    if dim_sys == 0 {
        return Ok(OracleResult {
            structure: scatter(&a_priori, &system.index, &[]),
            dim_sys,
            residual: 0.0,
            condition_estimate: 0.0,
        });
    }
    let sol = solve_system(&system)?;
    Ok(OracleResult {
        structure: scatter(&a_priori, &system.index, &sol.solution),
        dim_sys,
        residual: sol.residual,
        condition_estimate: sol.condition_estimate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorDiff {
    pub max_diff: f64,
    pub at: (usize, usize, usize),
    pub reference_max: f64,
}

impl TensorDiff {
    /// Mixed absolute/relative test `max_diff ≤ tol·(1 + max|f_ref|)`.
    pub fn within(&self, tol: f64) -> bool {
        self.max_diff <= tol * (1.0 + self.reference_max)
    }
}

/// Entrywise comparison; `a` is the reference. Panics on dimension mismatch.
pub fn compare_tensors<T: Scalar>(a: &StructureTensor<T>, b: &StructureTensor<T>) -> TensorDiff {
    assert_eq!(a.dim(), b.dim(), "tensor dimensions differ");
    let n = a.dim();
    let mut out = TensorDiff {
        max_diff: 0.0,
        at: (0, 0, 0),
        reference_max: a.max_abs(),
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = (a.get(i, j, k) - b.get(i, j, k)).modulus();
                if d > out.max_diff || d.is_nan() && !out.max_diff.is_nan() {
                    out.max_diff = d;
                    out.at = (i, j, k);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GenerateConfig, Mode};
    use crate::scalar::Complex64;

    #[test]
    fn equation_counts() {
        assert_eq!(count_equations(2), 0);
        assert_eq!(count_equations(3), 3);
        assert_eq!(count_equations(4), 12);
        assert_eq!(count_equations(40), 29640);
    }

    #[test]
    fn index_round_trip_and_order() {
        let idx = UnknownIndex::new(5);
        assert_eq!(idx.linearize(1, 2, 0), Some(0));
        assert_eq!(idx.linearize(1, 2, 4), Some(4));
        assert_eq!(idx.linearize(1, 3, 0), Some(5));
        assert_eq!(idx.linearize(3, 4, 4), Some(idx.len() - 1));
        assert_eq!(idx.linearize(0, 1, 0), None);
        assert_eq!(idx.linearize(2, 2, 0), None);
        assert_eq!(idx.delinearize(idx.len()), None);
        for p in 0..idx.len() {
            let (i, j, k) = idx.delinearize(p).unwrap();
            assert_eq!(idx.linearize(i, j, k), Some(p));
        }
    }

    #[test]
    fn diagonal_example_solves_to_zero() {
        // P = diag(0, 1, 1), n = e_0: A_0 = diag(0, 1, 1).
        let f1 = Matrix::from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let sys = assemble_system(&f1).unwrap();
        let expected =
            Matrix::from_rows(&[&[-2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, -1.0]]);
        assert_eq!(sys.matrix, expected);
        assert!(sys.rhs.iter().all(|v| *v == 0.0));
        let sol = solve_system(&sys).unwrap();
        assert!(sol.solution.iter().all(|v| *v == 0.0));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn nilpotent_sample_is_singular() {
        let s = generate::<f64>(&GenerateConfig::new(3, Mode::Nilpotent, 4)).unwrap();
        assert!(matches!(
            oracle_structure_constants(&s),
            Err(OracleError::Singular { .. })
        ));
    }

    #[test]
    fn perturbed_entry_is_located() {
        let s = generate::<f64>(&GenerateConfig::new(4, Mode::Generic, 2)).unwrap();
        let mut g = s.structure.clone();
        g.set(2, 3, 1, g.get(2, 3, 1) + 1e-3);
        let d = compare_tensors(&s.structure, &g);
        assert_eq!(d.at, (2, 3, 1));
        assert!((d.max_diff - 1e-3).abs() < 1e-12);
        assert_eq!(compare_tensors(&s.structure, &s.structure).max_diff, 0.0);
    }

    #[test]
    fn rejects_bad_first_row() {
        let mut f1 = Matrix::<f64>::zeros(3, 3);
        f1[(0, 2)] = 1.0;
        assert!(matches!(
            assemble_system(&f1),
            Err(OracleError::Malformed(_))
        ));
        assert!(matches!(
            assemble_system(&Matrix::<f64>::zeros(2, 3)),
            Err(OracleError::Malformed(_))
        ));
    }

    #[test]
    fn size_guard() {
        let f1 = Matrix::<f64>::zeros(40, 40);
        assert_eq!(
            assemble_system(&f1).unwrap_err(),
            OracleError::TooLarge {
                dim_sys: 29640,
                limit: MAX_SYSTEM_DIM
            }
        );
    }

    #[test]
    fn zero_first_row_is_singular() {
        let f1 = Matrix::<f64>::zeros(3, 3);
        let sys = assemble_system(&f1).unwrap();
        assert!(matches!(
            solve_system(&sys),
            Err(OracleError::Singular { .. })
        ));
    }

    #[test]
    fn lu_solves_and_estimates_condition() {
        let a = Matrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let lu = LuDecomposition::factor(&a, 0.0).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let xt = lu.solve_adjoint(&b);
        let rt = a.transpose().mul_vec(&xt);
        for (u, v) in rt.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        // Exact ‖A⁻¹‖∞ from explicit columns.
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|j| {
                lu.solve(
                    &(0..3)
                        .map(|i| if i == j { 1.0 } else { 0.0 })
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let exact = (0..3)
            .map(|i| cols.iter().map(|c| c[i].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let est = lu.inverse_norm_inf_estimate();
        assert!(
            est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact,
            "{est} vs {exact}"
        );
    }

    #[test]
    fn recovers_generated_constants() {
        for dim in 3..=6 {
            let s = generate::<f64>(&GenerateConfig::new(dim, Mode::Generic, 5)).unwrap();
            let r = oracle_structure_constants(&s).unwrap();
            let d = compare_tensors(&s.structure, &r.structure);
            assert!(d.max_diff <= 1e-8 * s.adjoint.scale(), "dim {dim}: {d:?}");
            assert!(r.condition_estimate >= 1.0);
        }
        let s = generate::<Complex64>(&GenerateConfig::new(4, Mode::Generic, 5)).unwrap();
        let r = oracle_structure_constants(&s).unwrap();
        assert!(compare_tensors(&s.structure, &r.structure).within(1e-8));
    }

    #[test]
    fn true_constants_satisfy_the_system() {
        let s = generate::<f64>(&GenerateConfig::new(5, Mode::Generic, 9)).unwrap();
        let sys = assemble_system(&a_priori_row(&s)).unwrap();
        let r = substitution_residual(&sys, &s.structure);
        assert!(r <= 1e-12 * s.adjoint.scale().powi(2), "{r}");
    }

    #[test]
    fn two_dim_has_no_unknowns() {
        let s = generate::<f64>(&GenerateConfig::new(2, Mode::Generic, 1)).unwrap();
        let r = oracle_structure_constants(&s).unwrap();
        assert_eq!(r.dim_sys, 0);
        assert!(
            r.structure.bit_eq(&s.structure)
                || compare_tensors(&s.structure, &r.structure).max_diff == 0.0
        );
    }
}

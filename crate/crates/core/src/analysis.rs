//! Identity checks on a concrete algebra: Jacobi, bracket closure, derived
//! and lower central series, the Killing form and Cartan's criterion,
//! nilpotency of `P`, and the transfer-matrix product rules.
//!
//! All residuals are absolute; callers scale tolerances by
//! `scale = max_k ‖A_k‖∞` (see [`crate::verify`]).

use serde::Serialize;

use crate::generator::{AdjointRep, NullData, ParameterMatrix, StructureTensor, TransferMatrix};
use crate::linalg::{commutator, outer, trace_of_product, Matrix};
use crate::rng::NormalStream;
use crate::scalar::Scalar;

/// How much of an index space a check visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    Full,
    /// `count` uniformly drawn index tuples from a stream seeded with `seed`.
    Sampled {
        count: usize,
        seed: u64,
    },
}

impl Coverage {
    pub fn is_sampled(self) -> bool {
        matches!(self, Coverage::Sampled { .. })
    }

    pub fn describe(self) -> String {
        match self {
            Coverage::Full => "full".to_string(),
            Coverage::Sampled { count, .. } => format!("sampled({count})"),
        }
    }
}

/// Running maximum with lexicographic tie-breaking on the index tuple.
#[derive(Clone, Debug)]
struct Worst<I> {
    max: f64,
    at: Option<I>,
    count: usize,
}

impl<I: Ord + Copy> Worst<I> {
    fn new() -> Self {
        Self {
            max: 0.0,
            at: None,
            count: 0,
        }
    }

    fn offer(&mut self, value: f64, at: I) {
        self.count += 1;
        let better = match self.at {
            None => true,
            Some(cur) => value > self.max || (value == self.max && at < cur),
        };
        // NaN residuals must surface as failures, never be skipped.
        if better || value.is_nan() {
            self.max = if value.is_nan() { f64::NAN } else { value };
            self.at = Some(at);
        }
    }
}

/// Outcome of an index-space maximum search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    /// Zero-based index tuple where the maximum occurred (empty if nothing
    /// was checked).
    pub worst_indices: Vec<usize>,
    pub checked_count: usize,
    pub sampled: bool,
}

impl ResidualReport {
    fn from_worst<const K: usize>(w: Worst<[usize; K]>, sampled: bool) -> Self {
        Self {
            max_residual: w.max,
            worst_indices: w.at.map(|a| a.to_vec()).unwrap_or_default(),
            checked_count: w.count,
            sampled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiReport {
    pub max_residual: f64,
    /// Zero-based `(i, j, k, m)`.
    pub worst_indices: (usize, usize, usize, usize),
    pub checked_count: usize,
    pub sampled: bool,
}

/// `J^A + J^B + J^C` at `(i, j, k, m)`:
/// `Σ_l f{i,j,l} f{k,l,m} + f{k,i,l} f{j,l,m} + f{j,k,l} f{i,l,m}`.
pub fn jacobi_sum<T: Scalar>(f: &StructureTensor<T>, i: usize, j: usize, k: usize, m: usize) -> T {
    let n = f.dim();
    let mut ja = T::zero();
    let mut jb = T::zero();
    let mut jc = T::zero();
    for l in 0..n {
        ja += f.get(i, j, l) * f.get(k, l, m);
        jb += f.get(k, i, l) * f.get(j, l, m);
        jc += f.get(j, k, l) * f.get(i, l, m);
    }
    ja + jb + jc
}

/// Jacobi identity in structure constants. Full mode visits `i < j < k`,
/// every `m` (the other orderings are related by antisymmetry).
pub fn jacobi_residual<T: Scalar>(f: &StructureTensor<T>, coverage: Coverage) -> JacobiReport {
    let n = f.dim();
    let mut w = Worst::<[usize; 4]>::new();
    match coverage {
        Coverage::Full => {
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        for m in 0..n {
                            w.offer(jacobi_sum(f, i, j, k, m).modulus(), [i, j, k, m]);
                        }
                    }
                }
            }
        }
        Coverage::Sampled { count, seed } => {
            let mut rng = NormalStream::new(seed);
            for _ in 0..count {
                let idx = [
                    rng.next_index(n),
                    rng.next_index(n),
                    rng.next_index(n),
                    rng.next_index(n),
                ];
                w.offer(jacobi_sum(f, idx[0], idx[1], idx[2], idx[3]).modulus(), idx);
            }
        }
    }
    let at = w.at.unwrap_or([0; 4]);
    JacobiReport {
        max_residual: w.max,
        worst_indices: (at[0], at[1], at[2], at[3]),
        checked_count: w.count,
        sampled: coverage.is_sampled(),
    }
}

fn unordered_pairs(n: usize) -> Vec<[usize; 2]> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| [i, j]))
        .collect()
}

fn random_pair(rng: &mut NormalStream, n: usize) -> [usize; 2] {
    let i = rng.next_index(n);
    let j = rng.next_index(n);
    [i.min(j), i.max(j)]
}

fn closure_defect<T: Scalar>(adj: &AdjointRep<T>, i: usize, j: usize) -> f64 {
    let a = adj.matrices();
    let lhs = commutator(&a[i], &a[j]).expect("adjoint matrices share a square shape");
    let mut rhs = Matrix::zeros(adj.dim(), adj.dim());
    for (k, ak) in a.iter().enumerate() {
        let coeff = a[i][(k, j)];
        if !coeff.is_zero() {
            rhs.axpy(coeff, ak);
        }
    }
    lhs.checked_sub(&rhs).expect("same shape").norm_inf()
}

/// `max_{i<j} ‖[A_i, A_j] − Σ_k A_i{k,j} A_k‖∞`.
pub fn closure_residual<T: Scalar>(adj: &AdjointRep<T>) -> f64 {
    closure_report(adj, Coverage::Full).max_residual
}

pub fn closure_report<T: Scalar>(adj: &AdjointRep<T>, coverage: Coverage) -> ResidualReport {
    let n = adj.dim();
    let mut w = Worst::<[usize; 2]>::new();
    match coverage {
        Coverage::Full => {
            for [i, j] in unordered_pairs(n) {
                w.offer(closure_defect(adj, i, j), [i, j]);
            }
        }
        Coverage::Sampled { count, seed } => {
            let mut rng = NormalStream::new(seed);
            for _ in 0..count {
                let [i, j] = random_pair(&mut rng, n);
                w.offer(closure_defect(adj, i, j), [i, j]);
            }
        }
    }
    ResidualReport::from_worst(w, coverage.is_sampled())
}

/// `max ‖[[A_i,A_j],[A_k,A_l]]‖∞`: the derived algebra is Abelian.
pub fn derived_abelian_residual<T: Scalar>(
    adj: &AdjointRep<T>,
    coverage: Coverage,
) -> ResidualReport {
    let n = adj.dim();
    let a = adj.matrices();
    let bracket = |i: usize, j: usize| commutator(&a[i], &a[j]).expect("square");
    let mut w = Worst::<[usize; 4]>::new();
    match coverage {
        Coverage::Full => {
            let pairs = unordered_pairs(n);
            let brackets: Vec<Matrix<T>> = pairs.iter().map(|&[i, j]| bracket(i, j)).collect();
            for (x, &[i, j]) in pairs.iter().enumerate() {
                for (y, &[k, l]) in pairs.iter().enumerate().skip(x) {
                    let r = commutator(&brackets[x], &brackets[y])
                        .expect("square")
                        .norm_inf();
                    w.offer(r, [i, j, k, l]);
                }
            }
        }
        Coverage::Sampled { count, seed } => {
            let mut rng = NormalStream::new(seed);
            for _ in 0..count {
                let [i, j] = random_pair(&mut rng, n);
                let [k, l] = random_pair(&mut rng, n);
                let r = commutator(&bracket(i, j), &bracket(k, l))
                    .expect("square")
                    .norm_inf();
                w.offer(r, [i, j, k, l]);
            }
        }
    }
    ResidualReport::from_worst(w, coverage.is_sampled())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KillingReport<T> {
    /// `K{i,j} = Tr(A_i·A_j)`.
    pub killing: Matrix<T>,
    /// `max |Tr(A_i·[A_j, A_k])|`.
    pub max_cartan_residual: f64,
    /// Zero-based `(i, j, k)` of the maximum.
    pub worst_indices: Vec<usize>,
    pub checked_count: usize,
    pub sampled: bool,
}

pub fn killing_form<T: Scalar>(adj: &AdjointRep<T>) -> Matrix<T> {
    let n = adj.dim();
    let a = adj.matrices();
    Matrix::from_fn(n, n, |i, j| trace_of_product(&a[i], &a[j]))
}

/// Killing form and Cartan's criterion `Tr(A_i·[A_j, A_k]) = 0`.
pub fn cartan_residual<T: Scalar>(adj: &AdjointRep<T>, coverage: Coverage) -> KillingReport<T> {
    let n = adj.dim();
    let a = adj.matrices();
    let mut w = Worst::<[usize; 3]>::new();
    match coverage {
        Coverage::Full => {
            // [A_j, A_k] is antisymmetric in (j, k); j < k covers everything.
            for [j, k] in unordered_pairs(n) {
                let c = commutator(&a[j], &a[k]).expect("square");
                for (i, ai) in a.iter().enumerate() {
                    w.offer(trace_of_product(ai, &c).modulus(), [i, j, k]);
                }
            }
        }
        Coverage::Sampled { count, seed } => {
            let mut rng = NormalStream::new(seed);
            for _ in 0..count {
                let i = rng.next_index(n);
                let [j, k] = random_pair(&mut rng, n);
                let c = commutator(&a[j], &a[k]).expect("square");
                w.offer(trace_of_product(&a[i], &c).modulus(), [i, j, k]);
            }
        }
    }
    KillingReport {
        killing: killing_form(adj),
        max_cartan_residual: w.max,
        worst_indices: w.at.map(|x| x.to_vec()).unwrap_or_default(),
        checked_count: w.count,
        sampled: coverage.is_sampled(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Derived,
    LowerCentral,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub kind: SeriesKind,
    /// Highest level evaluated; levels run `0..=depth_tested`.
    pub depth_tested: usize,
    pub terminated: bool,
    /// First level whose maximum norm is at or below its threshold.
    pub terminated_at: Option<usize>,
    pub max_norm_per_level: Vec<f64>,
    /// `τ` times the largest norm one more bracket could produce from the
    /// previous level, so a level counts as zero only at roundoff scale.
    pub threshold_per_level: Vec<f64>,
    /// Lower central series only: `‖nested − closed form‖∞` per level.
    pub discrepancy_per_level: Vec<f64>,
    /// Lower central series only: `max_L discrepancy_L / scale^{L+2}`.
    pub max_relative_discrepancy: f64,
}

fn first_level_below(norms: &[f64], thresholds: &[f64]) -> Option<usize> {
    norms.iter().zip(thresholds).position(|(&x, &t)| x <= t)
}

/// Derived series: level 0 holds `max ‖[A_i, A_j]‖∞`, level 1 the
/// brackets of brackets (see [`derived_abelian_residual`]).
pub fn derived_series<T: Scalar>(
    adj: &AdjointRep<T>,
    coverage: Coverage,
    tau: f64,
) -> SeriesReport {
    let a = adj.matrices();
    let level0 = unordered_pairs(adj.dim())
        .into_iter()
        .map(|[i, j]| commutator(&a[i], &a[j]).expect("square").norm_inf())
        .fold(0.0, f64::max);
    let level1 = derived_abelian_residual(adj, coverage).max_residual;
    let norms = vec![level0, level1];
    let scale = adj.scale();
    // ‖[X, Y]‖∞ ≤ 2‖X‖∞‖Y‖∞ bounds each level by the one before.
    let thresholds = vec![tau * 2.0 * scale * scale, tau * 2.0 * level0 * level0];
    let terminated_at = first_level_below(&norms, &thresholds);
    SeriesReport {
        kind: SeriesKind::Derived,
        depth_tested: 1,
        terminated: terminated_at.is_some(),
        terminated_at,
        max_norm_per_level: norms,
        threshold_per_level: thresholds,
        discrepancy_per_level: Vec::new(),
        max_relative_discrepancy: 0.0,
    }
}

/// A nested-bracket path `[A_{i_L}, … [A_{i_1}, [A_j, A_k]]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketPath {
    pub j: usize,
    pub k: usize,
    /// Outer indices `i_1, i_2, …`, innermost first.
    pub outer: Vec<usize>,
}

impl BracketPath {
    /// Follows the dominant components of `n`: the inner pair is the two
    /// largest `|n{i}|`, the outer index the largest, at every level (ties go
    /// to the lower index). Every bracket along a path carries the factor
    /// `∏ n{i_l}`, so this keeps the path away from vanishing coefficients.
    pub fn canonical<T: Scalar>(n: &[T], depth: usize) -> Self {
        assert!(n.len() >= 2, "need at least two generators");
        let mut order: Vec<usize> = (0..n.len()).collect();
        order.sort_by(|&a, &b| n[b].modulus().total_cmp(&n[a].modulus()).then(a.cmp(&b)));
        Self {
            j: order[0].min(order[1]),
            k: order[0].max(order[1]),
            outer: vec![order[0]; depth],
        }
    }

    pub fn random(dim: usize, depth: usize, seed: u64) -> Self {
        let mut rng = NormalStream::new(seed);
        let j = rng.next_index(dim);
        let mut k = rng.next_index(dim - 1);
        if k >= j {
            k += 1;
        }
        Self {
            j: j.min(k),
            k: j.max(k),
            outer: (0..depth).map(|_| rng.next_index(dim)).collect(),
        }
    }
}

/// Nested brackets along `path`, levels `0..=outer.len()`.
pub fn nested_brackets<T: Scalar>(adj: &AdjointRep<T>, path: &BracketPath) -> Vec<Matrix<T>> {
    let a = adj.matrices();
    let mut x = commutator(&a[path.j], &a[path.k]).expect("square");
    let mut out = Vec::with_capacity(path.outer.len() + 1);
    for &i in &path.outer {
        let next = commutator(&a[i], &x).expect("square");
        out.push(std::mem::replace(&mut x, next));
    }
    out.push(x);
    out
}

/// Closed form of the same path: `n{i_L}…n{i_1}·P^{L+2}·m_{k,j}ᵀ·n` with
/// `m_{k,j}ᵀ = n{k}·e_jᵀ − n{j}·e_kᵀ`.
pub fn closed_form_brackets<T: Scalar>(
    p: &ParameterMatrix<T>,
    null: &NullData<T>,
    path: &BracketPath,
) -> Vec<Matrix<T>> {
    let pm = p.matrix();
    let n = &null.n;
    let mut m = vec![T::zero(); n.len()];
    m[path.j] += n[path.k];
    m[path.k] -= n[path.j];
    let mut v = pm.mul_vec(&pm.mul_vec(&m));
    let mut coeff = T::one();
    let mut out = Vec::with_capacity(path.outer.len() + 1);
    out.push(outer(&v, n));
    for &i in &path.outer {
        coeff *= n[i];
        v = pm.mul_vec(&v);
        let scaled: Vec<T> = v.iter().map(|&x| coeff * x).collect();
        out.push(outer(&scaled, n));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    pub l_max: usize,
    pub tau_ver: f64,
    pub path_seed: u64,
}

/// Lower central series along the canonical path and one seeded random
/// path, cross-checked against the closed form at every level.
pub fn lower_central_series<T: Scalar>(
    adj: &AdjointRep<T>,
    p: &ParameterMatrix<T>,
    null: &NullData<T>,
    opts: SeriesOptions,
) -> SeriesReport {
    let dim = adj.dim();
    let scale = adj.scale();
    let paths = [
        BracketPath::canonical(&null.n, opts.l_max),
        BracketPath::random(dim, opts.l_max, opts.path_seed),
    ];
    let mut norms = vec![0.0f64; opts.l_max + 1];
    let mut disc = vec![0.0f64; opts.l_max + 1];
    for path in &paths {
        let nested = nested_brackets(adj, path);
        let closed = closed_form_brackets(p, null, path);
        for (level, (x, y)) in nested.iter().zip(&closed).enumerate() {
            norms[level] = nan_max(norms[level], x.norm_inf());
            let d = x.checked_sub(y).expect("same shape").norm_inf();
            disc[level] = nan_max(disc[level], d);
        }
    }
    let max_relative_discrepancy = disc
        .iter()
        .enumerate()
        .map(|(level, &d)| relative(d, scale.powi(level as i32 + 2)))
        .fold(0.0, nan_max);
    // ‖[A_i, X]‖∞ ≤ 2·scale·‖X‖∞; level 0 is bounded by 2·scale².
    let thresholds: Vec<f64> = (0..norms.len())
        .map(|level| {
            let prev = if level == 0 { scale } else { norms[level - 1] };
            opts.tau_ver * 2.0 * scale * prev
        })
        .collect();
    let terminated_at = first_level_below(&norms, &thresholds);
    SeriesReport {
        kind: SeriesKind::LowerCentral,
        depth_tested: opts.l_max,
        terminated: terminated_at.is_some(),
        terminated_at,
        max_norm_per_level: norms,
        threshold_per_level: thresholds,
        discrepancy_per_level: disc,
        max_relative_discrepancy,
    }
}

/// `d / reference`, with `0/0 = 0` and `d/0 = ∞` for `d > 0`.
pub(crate) fn relative(d: f64, reference: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        d / reference
    }
}

pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// `‖P^N‖∞ ≤ τ·‖P‖∞^N`, evaluated as `‖(P/‖P‖∞)^N‖∞ ≤ τ` to avoid overflow.
pub fn nilpotency_check<T: Scalar>(p: &ParameterMatrix<T>, tau: f64) -> bool {
    nilpotency_ratio(p) <= tau
}

/// `‖P^N‖∞ / ‖P‖∞^N` (0 for `P = 0`).
pub fn nilpotency_ratio<T: Scalar>(p: &ParameterMatrix<T>) -> f64 {
    let pm = p.matrix();
    let norm = pm.norm_inf();
    if norm == 0.0 {
        return 0.0;
    }
    let q = pm.scaled(T::from_real(1.0 / norm));
    q.pow(p.dim() as u32).expect("square").norm_inf()
}

/// `max ‖T_j·T_k − n{j}·T_k‖∞` and `max ‖A_j·T_k − n{j}·A_k‖∞` over `(j, k)`.
pub fn t_product_residual<T: Scalar>(
    null: &NullData<T>,
    adj: &AdjointRep<T>,
    coverage: Coverage,
) -> ResidualReport {
    let n = &null.n;
    let dim = n.len();
    let ts: Vec<Matrix<T>> = (0..dim)
        .map(|k| TransferMatrix::new(n, k).materialize())
        .collect();
    let a = adj.matrices();
    let defect = |j: usize, k: usize| {
        let tt = ts[j].matmul(&ts[k]).expect("square");
        let r1 = tt
            .checked_sub(&ts[k].scaled(n[j]))
            .expect("same shape")
            .norm_inf();
        let at = a[j].matmul(&ts[k]).expect("square");
        let r2 = at
            .checked_sub(&a[k].scaled(n[j]))
            .expect("same shape")
            .norm_inf();
        nan_max(r1, r2)
    };
    let mut w = Worst::<[usize; 2]>::new();
    match coverage {
        Coverage::Full => {
            for j in 0..dim {
                for k in 0..dim {
                    w.offer(defect(j, k), [j, k]);
                }
            }
        }
        Coverage::Sampled { count, seed } => {
            let mut rng = NormalStream::new(seed);
            for _ in 0..count {
                let (j, k) = (rng.next_index(dim), rng.next_index(dim));
                w.offer(defect(j, k), [j, k]);
            }
        }
    }
    ResidualReport::from_worst(w, coverage.is_sampled())
}

/// `max_k ‖n·A_k‖∞`: every adjoint matrix shares the left null vector `n`.
pub fn left_null_residual<T: Scalar>(null: &NullData<T>, adj: &AdjointRep<T>) -> f64 {
    adj.matrices()
        .iter()
        .map(|a| {
            Matrix::vec_mul(&null.n, a)
                .iter()
                .map(|x| x.modulus())
                .fold(0.0, nan_max)
        })
        .fold(0.0, nan_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{
        adjoint_to_structure, build_adjoint, generate, validate_parameter_matrix, GenerateConfig,
        Mode, Tolerances,
    };

    struct Fixture {
        p: ParameterMatrix<f64>,
        null: NullData<f64>,
        adj: AdjointRep<f64>,
        f: StructureTensor<f64>,
    }

    fn fixture(rows: &[&[f64]], mode: Mode) -> Fixture {
        let p = ParameterMatrix::new(Matrix::from_rows(rows), mode).unwrap();
        let null = validate_parameter_matrix(&p, &Tolerances::default()).unwrap();
        let adj = build_adjoint(&p, &null);
        let f = adjoint_to_structure(&adj);
        Fixture { p, null, adj, f }
    }

    fn two_dim() -> Fixture {
        fixture(&[&[0.0, 0.0], &[0.0, 1.0]], Mode::Generic)
    }

    fn three_dim_diagonal() -> Fixture {
        fixture(
            &[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
            Mode::Generic,
        )
    }

    fn heisenberg() -> Fixture {
        fixture(
            &[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]],
            Mode::Nilpotent,
        )
    }

    fn zero_adjoint(n: usize) -> AdjointRep<f64> {
        AdjointRep::from_matrices(vec![Matrix::zeros(n, n); n]).unwrap()
    }

    #[test]
    fn jacobi_examples() {
        let zero = StructureTensor::<f64>::zeros(4);
        assert_eq!(jacobi_residual(&zero, Coverage::Full).max_residual, 0.0);

        let r = jacobi_residual(&two_dim().f, Coverage::Full);
        assert_eq!(r.checked_count, 0);
        assert_eq!(r.max_residual, 0.0);

        let r = jacobi_residual(&three_dim_diagonal().f, Coverage::Full);
        assert_eq!(r.checked_count, 3);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn jacobi_tie_breaks_lexicographically() {
        let r = jacobi_residual(&StructureTensor::<f64>::zeros(4), Coverage::Full);
        assert_eq!(r.worst_indices, (0, 1, 2, 0));
    }

    #[test]
    fn jacobi_worst_index_reproduces_maximum() {
        let mut s = generate::<f64>(&GenerateConfig::new(4, Mode::Generic, 2)).unwrap();
        s.structure
            .set_antisymmetric(1, 2, 3, s.structure.get(1, 2, 3) + 1.0);
        let r = jacobi_residual(&s.structure, Coverage::Full);
        let (i, j, k, m) = r.worst_indices;
        assert_eq!(
            jacobi_sum(&s.structure, i, j, k, m).modulus(),
            r.max_residual
        );
        assert!(r.max_residual > 1e-3);
    }

    #[test]
    fn closure_examples() {
        assert_eq!(closure_residual(&two_dim().adj), 0.0);
        assert_eq!(closure_residual(&zero_adjoint(3)), 0.0);
        assert_eq!(closure_residual(&heisenberg().adj), 0.0);
    }

    #[test]
    fn derived_examples() {
        let r = derived_abelian_residual(&two_dim().adj, Coverage::Full);
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.checked_count, 1);
        let r = derived_abelian_residual(&three_dim_diagonal().adj, Coverage::Full);
        assert_eq!(r.max_residual, 0.0);
        let s = derived_series(&three_dim_diagonal().adj, Coverage::Full, 1e-9);
        assert_eq!(s.terminated_at, Some(1));
        assert!(s.max_norm_per_level[0] > 0.0);
    }

    #[test]
    fn killing_two_dim() {
        let r = cartan_residual(&two_dim().adj, Coverage::Full);
        assert_eq!(r.killing, Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]));
        assert_eq!(r.max_cartan_residual, 0.0);
        let z = cartan_residual(&zero_adjoint(3), Coverage::Full);
        assert!(z.killing.is_zero());
        assert_eq!(z.max_cartan_residual, 0.0);
    }

    #[test]
    fn lower_central_two_dim_never_terminates() {
        let fx = two_dim();
        let opts = SeriesOptions {
            l_max: 4,
            tau_ver: 1e-9,
            path_seed: 1,
        };
        let path = BracketPath::canonical(&fx.null.n, 4);
        assert_eq!((path.j, path.k, path.outer[0]), (0, 1, 0));
        for level in nested_brackets(&fx.adj, &path) {
            assert_eq!(&level, fx.adj.matrix(1));
        }
        let r = lower_central_series(&fx.adj, &fx.p, &fx.null, opts);
        assert!(!r.terminated);
        assert_eq!(r.max_relative_discrepancy, 0.0);
    }

    #[test]
    fn lower_central_heisenberg_terminates() {
        let fx = heisenberg();
        let opts = SeriesOptions {
            l_max: 3,
            tau_ver: 1e-9,
            path_seed: 5,
        };
        let r = lower_central_series(&fx.adj, &fx.p, &fx.null, opts);
        assert!(r.terminated);
        assert!(r.terminated_at.unwrap() <= 1);
        assert_eq!(r.max_relative_discrepancy, 0.0);
    }

    #[test]
    fn lower_central_zero_algebra_terminates_at_level_zero() {
        // Nilpotent 2x2 parameters produce the Abelian algebra.
        let fx = fixture(&[&[0.0, 1.0], &[0.0, 0.0]], Mode::Nilpotent);
        assert!(fx.adj.matrices().iter().all(Matrix::is_zero));
        let opts = SeriesOptions {
            l_max: 2,
            tau_ver: 1e-9,
            path_seed: 0,
        };
        let r = lower_central_series(&fx.adj, &fx.p, &fx.null, opts);
        assert_eq!(r.terminated_at, Some(0));
    }

    #[test]
    fn nilpotency_examples() {
        assert!(nilpotency_check(&heisenberg().p, 1e-9));
        assert!(!nilpotency_check(&two_dim().p, 1e-9));
        let zero = ParameterMatrix::new(Matrix::<f64>::zeros(3, 3), Mode::Generic).unwrap();
        assert!(nilpotency_check(&zero, 1e-9));
    }

    #[test]
    fn t_products_two_dim() {
        let fx = two_dim();
        let r = t_product_residual(&fx.null, &fx.adj, Coverage::Full);
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.checked_count, 4);
        // n = (1, 0): T_2 has coefficient n{2} = 0, so T_2·T_k vanishes.
        let t2 = TransferMatrix::new(&fx.null.n, 1).materialize();
        for k in 0..2 {
            let tk = TransferMatrix::new(&fx.null.n, k).materialize();
            assert!(t2.matmul(&tk).unwrap().is_zero());
        }
    }

    #[test]
    fn t_product_diagonal_case() {
        // T_k·T_k = n{k}·T_k for an arbitrary unit vector.
        let n = [0.6, -0.8];
        for k in 0..2 {
            let t = TransferMatrix::new(&n, k).materialize();
            let lhs = t.matmul(&t).unwrap();
            let rhs = t.scaled(n[k]);
            assert!(lhs.checked_sub(&rhs).unwrap().max_abs() < 1e-16);
        }
    }

    #[test]
    fn left_null_is_shared() {
        let s = generate::<f64>(&GenerateConfig::new(6, Mode::Generic, 17)).unwrap();
        assert!(left_null_residual(&s.null, &s.adjoint) < 1e-12);
    }

    #[test]
    fn sampled_coverage_is_deterministic() {
        let s = generate::<f64>(&GenerateConfig::new(7, Mode::Generic, 4)).unwrap();
        let c = Coverage::Sampled { count: 50, seed: 9 };
        let a = jacobi_residual(&s.structure, c);
        let b = jacobi_residual(&s.structure, c);
        assert_eq!(a, b);
        assert_eq!(a.checked_count, 50);
        assert!(a.sampled);
    }
}

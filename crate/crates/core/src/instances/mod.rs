//! Benchmark problem families and their reference solutions.

pub mod libsvm;

use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::criteria::CriterionKind;
use crate::error::{Error, Result};
use crate::linalg::{svd, symmetric_eigen, vector, Cholesky, Matrix};
use crate::objective::{L1Norm, LeastSquares, NonnegIndicator, Objective, Separable};
use crate::pdhg::{self, BetaPolicy, PdhgVersion, SolveConfig};
use crate::problem::{AffineConstraint, Family, PrimalDualPoint, ProblemInstance, Provenance, ReferenceSolution};
use crate::scalar::Real;

/// Relative eigenvalue cutoff for the pseudo-inverse KKT solve.
pub const KKT_CUTOFF: f64 = 1e-12;
/// Default decay of the Toeplitz covariance first row.
pub const DEFAULT_RHO: f64 = 0.5;

fn gaussian_matrix<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(StandardNormal.sample(rng)))
}

fn gaussian_vector<T: Real>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| T::lit(StandardNormal.sample(rng))).collect()
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("dimensions must be positive, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// `min ½(x/9 − 2)² s.t. 9x = 7`, solved by `x* = 7/9`.
pub fn make_1d<T: Real>() -> Result<ProblemInstance<T>> {
    let q = Matrix::from_diag(&[T::one() / T::lit(9.0)]);
    let ls = LeastSquares::new(q, vec![T::lit(2.0)])?;
    let a = AffineConstraint::new(Matrix::from_diag(&[T::lit(9.0)]), vec![T::lit(7.0)])?;
    let x_star = T::lit(7.0) / T::lit(9.0);
    // Stationarity: Qᵀ(Qx* − c) + 9y* = 0.
    let y_star = -ls.gradient(&[x_star])[0] / T::lit(9.0);
    let f_star = ls.eval(&[x_star]).value();
    ProblemInstance::new(Arc::new(ls), a, Family::OneDim, "1d")?.with_reference(ReferenceSolution {
        x_star: vec![x_star],
        y_star: Some(vec![y_star]),
        f_star,
        provenance: Provenance::Analytic,
    })
}

/// Least squares with i.i.d. standard normal `Q`, `c`, `A`, `b`; `Q` and `A`
/// are `m × n`.
pub fn make_iidg<T: Real>(n: usize, m: usize, seed: u64) -> Result<ProblemInstance<T>> {
    check_dims(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = gaussian_matrix(&mut rng, m, n);
    let c = gaussian_vector(&mut rng, m);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);
    least_squares_instance(LeastSquares::new(q, c)?, AffineConstraint::new(a, b)?, Family::Iidg, "iidg")
}

/// Symmetric Toeplitz matrix from its first column; `first_row`, when given,
/// must coincide with it.
pub fn symmetric_toeplitz<T: Real>(first_col: &[T], first_row: Option<&[T]>) -> Result<Matrix<T>> {
    if first_col.is_empty() {
        return Err(Error::Empty("toeplitz first column"));
    }
    if let Some(row) = first_row {
        if row != first_col {
            return Err(Error::NonSymmetricToeplitz);
        }
    }
    let n = first_col.len();
    Ok(Matrix::from_fn(n, n, |i, j| first_col[i.abs_diff(j)]))
}

/// `(1, ρ, ρ², …)` of length `len`.
pub fn geometric_row<T: Real>(len: usize, rho: T) -> Vec<T> {
    (0..len).map(|k| rho.powi(k as i32)).collect()
}

/// Covariance matrix check: symmetric Toeplitz and positive definite.
pub fn toeplitz_covariance<T: Real>(first_row: &[T]) -> Result<Matrix<T>> {
    let s = symmetric_toeplitz(first_row, None)?;
    Cholesky::new(&s)?;
    Ok(s)
}

/// Correlated-noise instance with `A = Σ_a X_a`, `Q = Σ_q X_q` for i.i.d.
/// Gaussian `X` and Toeplitz covariances given by their first rows.
pub fn make_ntc<T: Real>(
    n: usize,
    m: usize,
    seed: u64,
    cov_a_row: &[T],
    cov_q_row: &[T],
) -> Result<ProblemInstance<T>> {
    check_dims(n, m)?;
    crate::error::check_len("covariance row", m, cov_a_row.len())?;
    crate::error::check_len("covariance row", m, cov_q_row.len())?;
    let sa = toeplitz_covariance(cov_a_row)?;
    let sq = toeplitz_covariance(cov_q_row)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xq = gaussian_matrix(&mut rng, m, n);
    let c = gaussian_vector(&mut rng, m);
    let xa = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);
    let ls = LeastSquares::new(sq.matmul(&xq), c)?;
    least_squares_instance(ls, AffineConstraint::new(sa.matmul(&xa), b)?, Family::Ntc, "ntc")
}

/// [`make_ntc`] with geometric rows of decay [`DEFAULT_RHO`].
pub fn make_ntc_default<T: Real>(n: usize, m: usize, seed: u64) -> Result<ProblemInstance<T>> {
    let row = geometric_row(m, T::lit(DEFAULT_RHO));
    make_ntc(n, m, seed, &row, &row)
}

/// Where distributed-regression data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoSource {
    Libsvm(PathBuf),
    Synthetic { rows: usize, features: usize, seed: u64 },
}

impl DoSource {
    /// Same shapes as the 252 × 14 regression set.
    pub fn synthetic(seed: u64) -> Self {
        DoSource::Synthetic { rows: 252, features: 14, seed }
    }
}

/// Regression split across `blocks` machines that must agree on a common
/// model: block-diagonal `Q`, chain constraints `xᵢ − xᵢ₊₁ = 0`.
pub fn make_do<T: Real>(source: &DoSource, blocks: usize) -> Result<ProblemInstance<T>> {
    if blocks < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 blocks, got {blocks}")));
    }
    let data = match source {
        DoSource::Libsvm(path) => libsvm::read_file::<T>(path)?,
        DoSource::Synthetic { rows, features, seed } => synthetic_regression(*rows, *features, *seed),
    };
    let features = data.features.cols();
    let per_block = data.features.rows() / blocks;
    if per_block == 0 || features == 0 {
        return Err(Error::InvalidParameter("not enough data for the requested blocks".into()));
    }
    let dropped = data.features.rows() - per_block * blocks;
    if dropped > 0 {
        eprintln!("warning: dropping {dropped} trailing rows not divisible into {blocks} blocks");
    }
    let total_rows = per_block * blocks;
    let n = features * blocks;
    let q = Matrix::from_fn(total_rows, n, |i, j| {
        if i / per_block == j / features {
            data.features[(i, j % features)]
        } else {
            T::zero()
        }
    });
    let c = data.targets[..total_rows].to_vec();
    let m = features * (blocks - 1);
    let a = Matrix::from_fn(m, n, |i, j| {
        let (block, f) = (i / features, i % features);
        if j == block * features + f {
            T::one()
        } else if j == (block + 1) * features + f {
            -T::one()
        } else {
            T::zero()
        }
    });
    let ls = LeastSquares::new(q, c)?;
    let constraint = AffineConstraint::new(a, vec![T::zero(); m])?;

    // Shared model from the pooled normal equations.
    let pooled = Matrix::from_fn(total_rows, features, |i, j| data.features[(i, j)]);
    let gram = pooled.gram();
    let rhs = pooled.matvec_t(&data.targets[..total_rows]);
    let local = refine_spd(&gram, &rhs)?;
    let x_star: Vec<T> = (0..n).map(|j| local[j % features]).collect();
    let y_star = dual_from_primal(&constraint, &ls.gradient(&x_star));
    let f_star = ls.eval(&x_star).value();
    ProblemInstance::new(Arc::new(ls), constraint, Family::Do, "do")?.with_reference(ReferenceSolution {
        x_star,
        y_star: Some(y_star),
        f_star,
        provenance: Provenance::NormalEquations,
    })
}

fn synthetic_regression<T: Real>(rows: usize, features: usize, seed: u64) -> libsvm::Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_matrix::<T>(&mut rng, rows, features);
    let w = gaussian_vector::<T>(&mut rng, features);
    let noise = gaussian_vector::<T>(&mut rng, rows);
    let targets = vector::add_scaled(&x.matvec(&w), T::lit(0.1), &noise);
    libsvm::Dataset { features: x, targets }
}

/// Nonnegative least squares written with a split variable:
/// `X = (x, x̃)`, `Ã = [[A, 0], [I, −I]]`, `B = (b, 0)`, objective
/// `½‖Qx − c‖² + ι_{≥0}(x̃)`. The data is drawn as in [`make_iidg`].
pub fn make_pqp<T: Real>(n: usize, m: usize, seed: u64) -> Result<ProblemInstance<T>> {
    check_dims(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = gaussian_matrix(&mut rng, m, n);
    let c = gaussian_vector(&mut rng, m);
    let a = gaussian_matrix::<T>(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);
    let ls = LeastSquares::new(q, c)?;
    let objective = Separable::new(vec![Box::new(ls.clone()), Box::new(NonnegIndicator::new(n))]);
    let eye = Matrix::identity(n);
    let neg_eye = eye.scaled(-T::one());
    let zero = Matrix::zeros(m, n);
    let big_a = Matrix::from_blocks(&[vec![&a, &zero], vec![&eye, &neg_eye]])?;
    let big_b = vector::concat(&b, &vec![T::zero(); n]);
    let constraint = AffineConstraint::new(big_a, big_b)?;
    let problem = ProblemInstance::new(Arc::new(objective), constraint, Family::Pqp, "pqp")?;
    match qp_reference(&problem, &ls, &a, &b) {
        Ok(reference) => problem.with_reference(reference),
        // The random data need not admit a nonnegative feasible point; such
        // instances carry no reference.
        Err(_) => Ok(problem),
    }
}

/// `min ‖x‖₁ s.t. Ax = b` with i.i.d. Gaussian data; no reference.
pub fn make_bp<T: Real>(n: usize, m: usize, seed: u64) -> Result<ProblemInstance<T>> {
    check_dims(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);
    ProblemInstance::new(Arc::new(L1Norm::new(n)), AffineConstraint::new(a, b)?, Family::Bp, "bp")
}

/// The KKT matrix `[[QᵀQ, Aᵀ], [A, 0]]`.
pub fn kkt_matrix<T: Real>(gram: &Matrix<T>, a: &Matrix<T>) -> Result<Matrix<T>> {
    let at = a.transpose();
    let zero = Matrix::zeros(a.rows(), a.rows());
    Matrix::from_blocks(&[vec![gram, &at], vec![a, &zero]])
}

/// Pseudo-inverse solve of a symmetric system with two refinement sweeps.
/// Returns the solution and the numerical rank.
pub fn symmetric_pinv_solve<T: Real>(m: &Matrix<T>, rhs: &[T], rel_cutoff: T) -> (Vec<T>, usize) {
    let e = symmetric_eigen(m);
    let kept = e.nonzero(rel_cutoff);
    let apply = |r: &[T]| {
        let mut out = vec![T::zero(); r.len()];
        for &(k, lambda) in &kept {
            let v = e.vector(k);
            vector::axpy(vector::dot(&v, r) / lambda, &v, &mut out);
        }
        out
    };
    let mut z = apply(rhs);
    for _ in 0..2 {
        let r = vector::sub(rhs, &m.matvec(&z));
        vector::axpy(T::one(), &apply(&r), &mut z);
    }
    (z, kept.len())
}

fn refine_spd<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let ch = Cholesky::new(a)?;
    let mut x = ch.solve(b);
    for _ in 0..2 {
        let r = vector::sub(b, &a.matvec(&x));
        vector::axpy(T::one(), &ch.solve(&r), &mut x);
    }
    Ok(x)
}

/// Least-squares dual `argmin_y ‖Aᵀy + g‖`.
pub fn dual_from_primal<T: Real>(constraint: &AffineConstraint<T>, grad: &[T]) -> Vec<T> {
    let s = svd(&constraint.matrix().transpose());
    let r = s.rank(T::lit(1e-12));
    // Aᵀ = U Σ Vᵀ, so y = −V Σ⁻¹ Uᵀ g.
    let mut y = vec![T::zero(); constraint.rows()];
    for k in 0..r {
        let u = s.u.column(k);
        let coef = -vector::dot(&u, grad) / s.singular_values[k];
        vector::axpy(coef, &s.v.column(k), &mut y);
    }
    y
}

fn least_squares_instance<T: Real>(
    ls: LeastSquares<T>,
    constraint: AffineConstraint<T>,
    family: Family,
    label: &str,
) -> Result<ProblemInstance<T>> {
    let m = kkt_matrix(ls.gram(), constraint.matrix())?;
    let rhs = vector::concat(ls.design_t_target(), constraint.rhs());
    let (z, rank) = symmetric_pinv_solve(&m, &rhs, T::lit(KKT_CUTOFF));
    let n = constraint.cols();
    let f_star = ls.eval(&z[..n]).value();
    let problem = ProblemInstance::new(Arc::new(ls), constraint, family, label)?;
    if rank < m.rows() {
        // Singular KKT system: the saddle set is not a point, leave the
        // optimality gap unavailable.
        return Ok(problem);
    }
    problem.with_reference(ReferenceSolution {
        x_star: z[..n].to_vec(),
        y_star: Some(z[n..].to_vec()),
        f_star,
        provenance: Provenance::NormalEquations,
    })
}

/// Reference for the split-variable QP. A long PDHG run proposes an active
/// set, ordered by the strength of the bound multipliers; a primal-dual
/// active-set loop then fixes it up, solving the equality-constrained
/// problem exactly at each step until the sign conditions hold.
fn qp_reference<T: Real>(
    problem: &ProblemInstance<T>,
    ls: &LeastSquares<T>,
    a: &Matrix<T>,
    b: &[T],
) -> Result<ReferenceSolution<T>> {
    let n = a.cols();
    let steps = pdhg::default_step_sizes(problem.constraint())?;
    let mut cfg = SolveConfig::new(T::lit(1e-11), 400_000, CriterionKind::Kkt);
    cfg.version = PdhgVersion::V2;
    cfg.record_every = usize::MAX;
    let traj = pdhg::solve(problem, &cfg, steps, BetaPolicy::Grid)?;
    let approx = traj.last_point();
    let bound_dual = &approx.y[a.rows()..];
    let mut active: Vec<usize> = (0..n).filter(|&i| approx.x[n + i] == T::zero()).collect();
    active.sort_by(|&i, &j| bound_dual[i].partial_cmp(&bound_dual[j]).unwrap_or(std::cmp::Ordering::Equal));
    active.truncate(n.saturating_sub(a.rows()));

    let tol = T::lit(1e-10);
    for _ in 0..4 * n {
        let Some((x, y1, mult)) = equality_qp(ls, a, b, &active) else {
            // Dependent constraints: release the weakest bound.
            active.pop();
            continue;
        };
        let free_min = (0..n)
            .filter(|i| !active.contains(i))
            .min_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap_or(std::cmp::Ordering::Equal));
        if let Some(i) = free_min.filter(|&i| x[i] < -tol) {
            active.push(i);
            continue;
        }
        let worst =
            (0..active.len()).max_by(|&i, &j| mult[i].partial_cmp(&mult[j]).unwrap_or(std::cmp::Ordering::Equal));
        if let Some(k) = worst.filter(|&k| mult[k] > tol) {
            active.remove(k);
            continue;
        }
        let mut x = x;
        for &i in &active {
            x[i] = T::zero();
        }
        let x_tilde: Vec<T> = x.iter().map(|&v| v.max(T::zero())).collect();
        let x_star = vector::concat(&x, &x_tilde);
        let mut y2 = vec![T::zero(); n];
        for (&i, &l) in active.iter().zip(&mult) {
            y2[i] = l;
        }
        let f_star = problem.objective().eval(&x_star).value();
        return Ok(ReferenceSolution {
            x_star,
            y_star: Some(vector::concat(&y1, &y2)),
            f_star,
            provenance: Provenance::HighAccuracySolve,
        });
    }
    Err(Error::NoConvergence)
}

/// `min ½‖Qx − c‖² s.t. Ax = b, xᵢ = 0 for i in active`, returning `x`, the
/// multiplier of `Ax = b` and those of the bounds in `active` order. `None`
/// when the KKT system is singular.
fn equality_qp<T: Real>(
    ls: &LeastSquares<T>,
    a: &Matrix<T>,
    b: &[T],
    active: &[usize],
) -> Option<(Vec<T>, Vec<T>, Vec<T>)> {
    let n = a.cols();
    let mut rows: Vec<Vec<T>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
    let mut rhs = b.to_vec();
    for &i in active {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        rows.push(e);
        rhs.push(T::zero());
    }
    let c = Matrix::from_rows(&rows).ok()?;
    let m = kkt_matrix(ls.gram(), &c).ok()?;
    let full_rhs = vector::concat(ls.design_t_target(), &rhs);
    let (z, rank) = symmetric_pinv_solve(&m, &full_rhs, T::lit(KKT_CUTOFF));
    if rank < m.rows() {
        return None;
    }
    let duals = &z[n..];
    Some((z[..n].to_vec(), duals[..a.rows()].to_vec(), duals[a.rows()..].to_vec()))
}

/// Declarative description of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub family: Family,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of machines for the distributed family.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Data source for the distributed family; synthetic when absent.
    #[serde(default)]
    pub data: Option<DoSource>,
    /// Covariance decay for the correlated family.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_n() -> usize {
    20
}
fn default_m() -> usize {
    10
}
fn default_blocks() -> usize {
    3
}
fn default_rho() -> f64 {
    DEFAULT_RHO
}

impl InstanceSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self { family, n: 20, m: 10, seed, blocks: 3, data: None, rho: DEFAULT_RHO }
    }

    pub fn build<T: Real>(&self) -> Result<ProblemInstance<T>> {
        match self.family {
            Family::OneDim => make_1d(),
            Family::Iidg => make_iidg(self.n, self.m, self.seed),
            Family::Ntc => {
                let row = geometric_row(self.m, T::lit(self.rho));
                make_ntc(self.n, self.m, self.seed, &row, &row)
            }
            Family::Do => {
                let source = self.data.clone().unwrap_or_else(|| DoSource::synthetic(self.seed));
                make_do(&source, self.blocks)
            }
            Family::Pqp => make_pqp(self.n, self.m, self.seed),
            Family::Bp => make_bp(self.n, self.m, self.seed),
            Family::Custom => Err(Error::InvalidConfig("custom instances cannot be built from a spec".into())),
        }
    }
}

/// Default starting point (the origin) for an instance.
pub fn origin<T: Real>(p: &ProblemInstance<T>) -> PrimalDualPoint<T> {
    p.origin()
}

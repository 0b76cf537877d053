use crate::error::{check_len, Error, Result};
use crate::ext::Ext;
use crate::linalg::{svd, vector, Matrix};
use crate::objective::{ConjugateSplit, Objective, Structure};
use crate::scalar::Real;

/// Relative cutoff below which singular values of `Q` count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Default relative tolerance for membership in `Ran(Qᵀ)`.
pub const RANGE_TOLERANCE: f64 = 1e-8;

/// `f(x) = ½‖Qx − c‖²`, with the thin SVD of `Q` cached for the proximal
/// map, the pseudo-inverse and the range projection.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    design: Matrix<T>,
    target: Vec<T>,
    gram: Matrix<T>,
    design_t_target: Vec<T>,
    // Thin SVD restricted to the numerical rank.
    left: Matrix<T>,
    singular: Vec<T>,
    right: Matrix<T>,
    left_t_target: Vec<T>,
    range_tol: T,
}

impl<T: Real> LeastSquares<T> {
    pub fn new(design: Matrix<T>, target: Vec<T>) -> Result<Self> {
        check_len("least-squares target", design.rows(), target.len())?;
        if design.cols() == 0 {
            return Err(Error::InvalidParameter("least-squares design has no columns".into()));
        }
        let gram = design.gram();
        let design_t_target = design.matvec_t(&target);
        let full = svd(&design);
        let rank = full.rank(T::lit(RANK_CUTOFF));
        let left = Matrix::from_fn(design.rows(), rank, |i, k| full.u[(i, k)]);
        let right = Matrix::from_fn(design.cols(), rank, |i, k| full.v[(i, k)]);
        let singular = full.singular_values[..rank].to_vec();
        let left_t_target = left.matvec_t(&target);
        Ok(Self {
            design,
            target,
            gram,
            design_t_target,
            left,
            singular,
            right,
            left_t_target,
            range_tol: T::lit(RANGE_TOLERANCE),
        })
    }

    /// Overrides the relative tolerance used to decide `μ ∈ Ran(Qᵀ)`.
    pub fn with_range_tolerance(mut self, tol: T) -> Self {
        self.range_tol = tol;
        self
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.design
    }

    pub fn target(&self) -> &[T] {
        &self.target
    }

    /// Cached `QᵀQ`.
    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    /// Cached `Qᵀc`.
    pub fn design_t_target(&self) -> &[T] {
        &self.design_t_target
    }

    pub fn rank(&self) -> usize {
        self.singular.len()
    }

    /// Singular values of `Q` above the rank cutoff, decreasing.
    pub fn singular_values(&self) -> &[T] {
        &self.singular
    }

    /// Orthonormal basis of `Ran(Qᵀ)` stored column-wise.
    pub fn range_basis(&self) -> &Matrix<T> {
        &self.right
    }

    /// `½‖Qx − c‖²` with a dimension check.
    pub fn eval_checked(&self, x: &[T]) -> Result<T> {
        check_len("least-squares point", self.design.cols(), x.len())?;
        Ok(self.value(x))
    }

    fn value(&self, x: &[T]) -> T {
        let r = vector::sub(&self.design.matvec(x), &self.target);
        vector::norm_sq(&r) / T::lit(2.0)
    }

    /// `Qᵀ(Qx − c)`
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let r = vector::sub(&self.design.matvec(x), &self.target);
        self.design.matvec_t(&r)
    }

    /// Orthogonal projection onto `Ran(Qᵀ)`, equal to `Qᵀ(QQᵀ)†Qμ`.
    pub fn range_projection(&self, mu: &[T]) -> Vec<T> {
        let coords = self.right.matvec_t(mu);
        self.right.matvec(&coords)
    }

    /// `(QᵀQ)† μ`
    pub fn gram_pinv_apply(&self, mu: &[T]) -> Vec<T> {
        let mut coords = self.right.matvec_t(mu);
        for (a, &s) in coords.iter_mut().zip(&self.singular) {
            *a /= s * s;
        }
        self.right.matvec(&coords)
    }

    /// Conjugate with an explicit range-membership tolerance.
    pub fn conjugate_with_tol(&self, mu: &[T], tol: T) -> Ext<T> {
        let coords = self.right.matvec_t(mu);
        let inside = self.right.matvec(&coords);
        if vector::dist(mu, &inside) > tol * vector::norm(mu) {
            return Ext::Infinite;
        }
        let mut quad = T::zero();
        let mut lin = T::zero();
        for ((&a, &s), &uc) in coords.iter().zip(&self.singular).zip(&self.left_t_target) {
            quad += (a / s) * (a / s);
            lin += a * uc / s;
        }
        let fitted = self.left.matvec(&self.left_t_target);
        let misfit = vector::norm_sq(&vector::sub(&fitted, &self.target));
        let half = T::lit(0.5);
        Ext::Finite(half * quad + lin - half * misfit)
    }
}

impl<T: Real> Objective<T> for LeastSquares<T> {
    fn dim(&self) -> usize {
        self.design.cols()
    }

    fn name(&self) -> &'static str {
        "least-squares"
    }

    fn eval(&self, x: &[T]) -> Ext<T> {
        Ext::Finite(self.value(x))
    }

    /// `(QᵀQ + I/s)⁻¹(Qᵀc + v/s)` through the cached SVD: the range of `Qᵀ`
    /// is scaled by `1/(σ² + 1/s)` and its complement by `s`.
    fn prox(&self, s: T, v: &[T]) -> Vec<T> {
        let inv_s = T::one() / s;
        let w = vector::add_scaled(&self.design_t_target, inv_s, v);
        let coords = self.right.matvec_t(&w);
        let corr: Vec<T> = coords.iter().zip(&self.singular).map(|(&a, &sv)| a / (sv * sv + inv_s) - s * a).collect();
        let mut out = vector::scale(s, &w);
        vector::axpy(T::one(), &self.right.matvec(&corr), &mut out);
        out
    }

    fn prox_conjugate(&self, s: T, w: &[T]) -> Vec<T> {
        let inv_s = T::one() / s;
        let coords = self.right.matvec_t(w);
        let alpha: Vec<T> = coords
            .iter()
            .zip(&self.singular)
            .zip(&self.left_t_target)
            .map(|((&a, &sv), &uc)| (a * inv_s - uc / sv) / (T::one() / (sv * sv) + inv_s))
            .collect();
        self.right.matvec(&alpha)
    }

    fn conjugate(&self, mu: &[T]) -> Ext<T> {
        self.conjugate_with_tol(mu, self.range_tol)
    }

    fn project_conj_domain(&self, mu: &[T]) -> Vec<T> {
        self.range_projection(mu)
    }

    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T> {
        let r = vector::add(&self.gradient(x), g);
        Ext::Finite(vector::norm_sq(&r))
    }

    /// `(QᵀQ + I/s)⁻¹(∇f(x) + w)`, split over `Ran(Qᵀ)` and its complement.
    fn prox_displacement(&self, s: T, x: &[T], w: &[T]) -> Vec<T> {
        let inv_s = T::one() / s;
        let g = vector::add(&self.gradient(x), w);
        let coords = self.right.matvec_t(&g);
        let inside = self.right.matvec(&coords);
        let scaled: Vec<T> = coords.iter().zip(&self.singular).map(|(&a, &sv)| a / (sv * sv + inv_s)).collect();
        let mut out = vector::scale(s, &vector::sub(&g, &inside));
        vector::axpy(T::one(), &self.right.matvec(&scaled), &mut out);
        out
    }

    /// Uses the prox optimality condition `∇f(p) = βd − g`, which turns the
    /// primal part into `(β/2)‖d‖² + ½‖Qd‖²`.
    fn smoothed_gap_primal(&self, _x: &[T], d: &[T], _g: &[T], beta: T) -> Ext<T> {
        let qd = self.design.matvec(d);
        let half = T::lit(0.5);
        Ext::Finite(half * beta * vector::norm_sq(d) + half * vector::norm_sq(&qd))
    }

    fn smoothness(&self) -> Option<T> {
        Some(self.singular.first().map_or(T::zero(), |&s| s * s))
    }

    fn conjugate_lipschitz(&self) -> Option<T> {
        if self.rank() == 0 {
            Some(T::zero())
        } else {
            None
        }
    }

    fn conjugate_split(&self) -> Option<ConjugateSplit<T>> {
        let l_g = self.singular.last().map_or(T::zero(), |&s| T::one() / (s * s));
        Some(ConjugateSplit { l_f1_star: T::zero(), l_g })
    }

    fn structure(&self) -> Structure<'_, T> {
        Structure::LeastSquares(self)
    }
}

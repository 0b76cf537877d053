//! Orthonormal chart `φ(x − x₀) = Uᵀ(x − x₀)` of an affine set `x₀ + span(S)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{vector, Matrix};
use crate::scalar::Real;

/// Relative norm below which a spanning vector is considered dependent.
const DEPENDENCE_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct AffineChart<T> {
    pub offset: Vec<T>,
    /// Orthonormal basis, one vector per column.
    pub basis: Matrix<T>,
    /// The spanning set had dependent columns that were dropped.
    pub rank_deficient: bool,
}

impl<T: Real> AffineChart<T> {
    /// Orthonormalizes the columns of `spanning` with two passes of
    /// modified Gram–Schmidt.
    pub fn new(offset: Vec<T>, spanning: &Matrix<T>) -> Result<Self> {
        crate::error::check_len("chart offset", spanning.rows(), offset.len())?;
        let scale = (0..spanning.cols()).map(|j| vector::norm(&spanning.column(j))).fold(T::zero(), T::max);
        let mut kept: Vec<Vec<T>> = Vec::new();
        for j in 0..spanning.cols() {
            let mut v = spanning.column(j);
            for _ in 0..2 {
                for u in &kept {
                    let c = vector::dot(u, &v);
                    vector::axpy(-c, u, &mut v);
                }
            }
            let nv = vector::norm(&v);
            if nv > T::lit(DEPENDENCE_CUTOFF) * scale {
                kept.push(vector::scale(T::one() / nv, &v));
            }
        }
        if kept.is_empty() {
            return Err(Error::Degenerate("spanning set is zero".into()));
        }
        let rank_deficient = kept.len() < spanning.cols();
        if rank_deficient {
            eprintln!("warning: spanning set has rank {} < {}, basis recomputed", kept.len(), spanning.cols());
        }
        let basis = Matrix::from_fn(spanning.rows(), kept.len(), |i, j| kept[j][i]);
        Ok(Self { offset, basis, rank_deficient })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// `φ(x − x₀)`
    pub fn chart(&self, x: &[T]) -> Vec<T> {
        self.basis.matvec_t(&vector::sub(x, &self.offset))
    }

    /// `x₀ + φ⁻¹(λ)`
    pub fn embed(&self, lambda: &[T]) -> Vec<T> {
        vector::add(&self.offset, &self.basis.matvec(lambda))
    }

    /// `max |UᵀU − I|`
    pub fn orthonormality_error(&self) -> T {
        let g = self.basis.transpose().matmul(&self.basis);
        let k = g.rows();
        let mut worst = T::zero();
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartReport {
    pub ambient_dim: usize,
    pub chart_dim: usize,
    pub rank_deficient: bool,
    pub orthonormality_error: f64,
    /// `max |‖φ(x−x₀) − φ(x̃−x₀)‖ − ‖x − x̃‖|`
    pub norm_error: f64,
    /// `max ‖J_{φ⁻¹}(λ − λ̃) − (x − x̃)‖`
    pub jacobian_error: f64,
}

impl ChartReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.orthonormality_error <= tol && self.norm_error <= tol && self.jacobian_error <= tol
    }
}

/// Checks the chart identities on random pairs of points of the set.
pub fn diffeomorphism_checks<T: Real, R: Rng>(
    offset: Vec<T>,
    spanning: &Matrix<T>,
    pairs: usize,
    rng: &mut R,
) -> Result<ChartReport> {
    let chart = AffineChart::new(offset, spanning)?;
    let k = chart.dim();
    let mut norm_error = T::zero();
    let mut jacobian_error = T::zero();
    let draw = |rng: &mut R| -> Vec<T> { (0..k).map(|_| T::lit(StandardNormal.sample(rng))).collect() };
    for _ in 0..pairs {
        let x = chart.embed(&draw(rng));
        let xt = chart.embed(&draw(rng));
        let (l, lt) = (chart.chart(&x), chart.chart(&xt));
        let dx = vector::sub(&x, &xt);
        norm_error = norm_error.max((vector::dist(&l, &lt) - vector::norm(&dx)).abs());
        // The Jacobian of φ⁻¹ is the constant basis matrix.
        let mapped = chart.basis.matvec(&vector::sub(&l, &lt));
        jacobian_error = jacobian_error.max(vector::dist(&mapped, &dx));
    }
    Ok(ChartReport {
        ambient_dim: spanning.rows(),
        chart_dim: k,
        rank_deficient: chart.rank_deficient,
        orthonormality_error: chart.orthonormality_error().as_f64(),
        norm_error: norm_error.as_f64(),
        jacobian_error: jacobian_error.as_f64(),
    })
}

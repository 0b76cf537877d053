//! Objective oracles: value, proximal map, Fenchel conjugate, projection onto
//! the conjugate's domain and the minimum-norm stationarity residual.

mod l1;
mod least_squares;
mod nonneg;
mod separable;

pub use l1::{clamp_unit_box, soft_threshold, L1Norm};
pub use least_squares::LeastSquares;
pub use nonneg::NonnegIndicator;
pub use separable::Separable;

use std::fmt::Debug;

use crate::ext::Ext;
use crate::linalg::vector;
use crate::scalar::Real;

/// Constants of the conjugate split `f* = f₁* + g` where `f₁*` is Lipschitz
/// on its domain and `g` has a Lipschitz gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugateSplit<T> {
    /// Lipschitz constant of `f₁*` on its domain.
    pub l_f1_star: T,
    /// Lipschitz constant of `∇g`.
    pub l_g: T,
}

/// Structural description used by independent verifiers that must not reuse
/// the oracle's own proximal code.
#[derive(Clone, Copy, Debug)]
pub enum Structure<'a, T> {
    LeastSquares(&'a LeastSquares<T>),
    L1,
    Nonneg,
    Separable(&'a Separable<T>),
    Opaque,
}

/// A closed convex objective with the operations the criteria need.
///
/// Implementations assume slices of the right length; dimension checks are
/// done once at the problem level.
pub trait Objective<T: Real>: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    fn eval(&self, x: &[T]) -> Ext<T>;

    /// `argmin_u f(u) + ‖u − v‖² / (2s)`
    fn prox(&self, s: T, v: &[T]) -> Vec<T>;

    /// Proximal map of `s·f*`, computed directly rather than through Moreau's
    /// identity so the two can be checked against each other.
    fn prox_conjugate(&self, s: T, w: &[T]) -> Vec<T>;

    fn conjugate(&self, mu: &[T]) -> Ext<T>;

    /// Euclidean projection onto `dom f*`.
    fn project_conj_domain(&self, mu: &[T]) -> Vec<T>;

    /// `‖∂f(x) + g‖₀²`, the squared distance from `−g` to `∂f(x)`.
    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T>;

    /// `x − prox_{s f}(x − s·w)`.
    ///
    /// Overrides avoid forming `x − s·w`, which loses every digit of `x`
    /// once `s` is large.
    fn prox_displacement(&self, s: T, x: &[T], w: &[T]) -> Vec<T> {
        vector::sub(x, &self.prox(s, &vector::add_scaled(x, -s, w)))
    }

    /// `f(x) − f(p) + ⟨d, g⟩ − (β/2)‖d‖²` with `d = x − p` and
    /// `p = prox_{f/β}(x − g/β)`.
    ///
    /// This is the primal part of the self-centered smoothed gap. Overrides
    /// use forms free of cancellation.
    fn smoothed_gap_primal(&self, x: &[T], d: &[T], g: &[T], beta: T) -> Ext<T> {
        let p = vector::sub(x, d);
        generic_gap_primal(self.eval(x), self.eval(&p), d, g, beta)
    }

    /// Lipschitz constant of `∇f`, when `f` is smooth.
    fn smoothness(&self) -> Option<T>;

    /// Lipschitz constant of `f*` on its domain, when it is finite.
    fn conjugate_lipschitz(&self) -> Option<T>;

    fn conjugate_split(&self) -> Option<ConjugateSplit<T>>;

    fn structure(&self) -> Structure<'_, T> {
        Structure::Opaque
    }
}

pub(crate) fn generic_gap_primal<T: Real>(fx: Ext<T>, fp: Ext<T>, d: &[T], g: &[T], beta: T) -> Ext<T> {
    match (fx, fp) {
        (Ext::Infinite, _) => Ext::Infinite,
        // The prox output always lies in dom f.
        (_, Ext::Infinite) => Ext::Finite(T::nan()),
        (Ext::Finite(a), Ext::Finite(b)) => {
            Ext::Finite(a - b + vector::dot(d, g) - beta / T::lit(2.0) * vector::norm_sq(d))
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// Prox optimality: `f(p) + ‖p−v‖²/2s ≤ f(u) + ‖u−v‖²/2s − ‖p−u‖²/2s`.
    pub fn check_prox_optimality<T: Real, R: Rng>(f: &dyn Objective<T>, s: T, v: &[T], rng: &mut R) {
        let p = f.prox(s, v);
        let two_s = T::lit(2.0) * s;
        let lhs = f.eval(&p).value() + vector::norm_sq(&vector::sub(&p, v)) / two_s;
        for _ in 0..100 {
            let u: Vec<T> = p.iter().map(|&pi| pi + T::lit(rng.random_range(-1.0..1.0))).collect();
            let fu = f.eval(&u);
            if fu.is_infinite() {
                continue;
            }
            let rhs = fu.value() + vector::norm_sq(&vector::sub(&u, v)) / two_s
                - vector::norm_sq(&vector::sub(&p, &u)) / two_s;
            assert!(lhs <= rhs + T::lit(1e-9) * (T::one() + rhs.abs()), "prox optimality violated: {lhs} > {rhs}");
        }
    }

    /// Moreau: `prox_{sf}(v) + s·prox_{f*/s}(v/s) = v`.
    pub fn check_moreau<T: Real>(f: &dyn Objective<T>, s: T, v: &[T]) {
        let p = f.prox(s, v);
        let w: Vec<T> = v.iter().map(|&vi| vi / s).collect();
        let q = f.prox_conjugate(T::one() / s, &w);
        for ((&pi, &qi), &vi) in p.iter().zip(&q).zip(v) {
            assert!((pi + s * qi - vi).abs() <= T::lit(1e-9) * (T::one() + vi.abs()));
        }
    }

    /// Projection is idempotent and satisfies the obtuse-angle inequality.
    pub fn check_projection<T: Real, R: Rng>(f: &dyn Objective<T>, mu: &[T], rng: &mut R) {
        let pm = f.project_conj_domain(mu);
        let ppm = f.project_conj_domain(&pm);
        assert!(vector::dist(&pm, &ppm) <= T::lit(1e-10) * (T::one() + vector::norm(&pm)));
        assert!(f.conjugate(&pm).is_finite());
        for _ in 0..100 {
            let raw: Vec<T> = mu.iter().map(|_| T::lit(rng.random_range(-3.0..3.0))).collect();
            let u = f.project_conj_domain(&raw);
            let lhs = vector::dot(&vector::sub(&u, &pm), &vector::sub(&pm, mu));
            assert!(lhs >= T::lit(-1e-10), "projection inequality violated: {lhs}");
        }
    }
}

//! Brute-force proximal maps for cross-checking the closed forms.

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::linalg::vector;
use crate::scalar::Real;

/// Dense grid search around `v` with successive refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub half_width: T,
    pub points: usize,
    pub refinements: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(half_width: T) -> Self {
        Self { half_width, points: 2001, refinements: 3 }
    }

    /// Accuracy of the returned minimizer: the final grid spacing, floored
    /// by what comparing model values can resolve near a quadratic minimum.
    pub fn resolution(&self) -> T {
        let mut step = T::lit(2.0) * self.half_width / T::from_count(self.points - 1);
        for _ in 0..self.refinements {
            step = T::lit(4.0) * step / T::from_count(self.points - 1);
        }
        step.max(T::epsilon().sqrt() * self.half_width)
    }
}

/// Gradient descent with backtracking for smooth objectives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientSpec<T> {
    pub tol: T,
    pub max_iters: usize,
}

/// Coordinate-wise prox of a separable sum `Σ h(uᵢ)` by grid search.
///
/// Errors when a minimizer lands on the edge of the initial window.
pub fn prox_oracle_separable<T: Real>(h: impl Fn(T) -> Ext<T>, s: T, v: &[T], spec: GridSpec<T>) -> Result<Vec<T>> {
    if spec.points < 3 || !(s > T::zero()) {
        return Err(Error::InvalidParameter("grid needs 3 points and a positive step".into()));
    }
    v.iter()
        .map(|&vi| {
            let model = |t: T| h(t).finite().map(|ht| ht + (t - vi) * (t - vi) / (T::lit(2.0) * s));
            let (mut lo, mut hi) = (vi - spec.half_width, vi + spec.half_width);
            for level in 0..=spec.refinements {
                let step = (hi - lo) / T::from_count(spec.points - 1);
                let mut best: Option<(usize, T)> = None;
                for k in 0..spec.points {
                    let t = lo + step * T::from_count(k);
                    if let Some(val) = model(t) {
                        if best.is_none_or(|(_, b)| val < b) {
                            best = Some((k, val));
                        }
                    }
                }
                let (k, _) = best.ok_or(Error::NoConvergence)?;
                let t = lo + step * T::from_count(k);
                if level == 0 && (k == 0 || k == spec.points - 1) && model(lo - step).is_some() {
                    // The true minimizer may lie outside the window.
                    return Err(Error::NoConvergence);
                }
                lo = t - step * T::lit(2.0);
                hi = t + step * T::lit(2.0);
                if level == spec.refinements {
                    return Ok(t);
                }
            }
            unreachable!("loop returns on its last level")
        })
        .collect()
}

/// Prox of a smooth function given with its gradient.
pub fn prox_oracle_smooth<T: Real>(
    f: impl Fn(&[T]) -> T,
    grad: impl Fn(&[T]) -> Vec<T>,
    s: T,
    v: &[T],
    spec: GradientSpec<T>,
) -> Result<Vec<T>> {
    let model = |u: &[T]| f(u) + vector::norm_sq(&vector::sub(u, v)) / (T::lit(2.0) * s);
    let model_grad = |u: &[T]| vector::add_scaled(&grad(u), T::one() / s, &vector::sub(u, v));
    let mut u = v.to_vec();
    let mut step = s;
    for _ in 0..spec.max_iters {
        let g = model_grad(&u);
        let gn = vector::norm_sq(&g);
        if gn.sqrt() <= spec.tol {
            return Ok(u);
        }
        let fu = model(&u);
        loop {
            let cand = vector::add_scaled(&u, -step, &g);
            // Allow roundoff in the decrease test once the model is nearly flat.
            let slack = T::epsilon() * fu.abs();
            if model(&cand) <= fu - step / T::lit(2.0) * gn + slack {
                u = cand;
                step *= T::lit(1.5);
                break;
            }
            step /= T::lit(2.0);
            if step < T::lit(1e-30) {
                return Err(Error::NoConvergence);
            }
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::objective::{LeastSquares, Objective};

    #[test]
    fn abs_value() {
        let spec = GridSpec::new(5.0);
        let u = prox_oracle_separable(|t: f64| Ext::Finite(t.abs()), 1.0, &[2.5], spec).unwrap();
        assert!((u[0] - 1.5).abs() <= spec.resolution(), "{} {}", u[0], spec.resolution());
    }

    #[test]
    fn nonneg_indicator() {
        let h = |t: f64| if t >= 0.0 { Ext::Finite(0.0) } else { Ext::Infinite };
        let u = prox_oracle_separable(h, 1.0, &[-3.0], GridSpec::new(5.0)).unwrap();
        assert!(u[0].abs() < 1e-9);
    }

    #[test]
    fn least_squares_matches() {
        let ls = LeastSquares::new(Matrix::from_diag(&[1.0 / 9.0]), vec![2.0]).unwrap();
        let f = |u: &[f64]| ls.eval(u).value();
        let g = |u: &[f64]| ls.gradient(u);
        let u = prox_oracle_smooth(f, g, 1.0, &[0.0], GradientSpec { tol: 1e-10, max_iters: 10_000 }).unwrap();
        assert!((u[0] - ls.prox(1.0, &[0.0])[0]).abs() < 1e-10);
    }

    #[test]
    fn narrow_window_errors() {
        let r = prox_oracle_separable(|t: f64| Ext::Finite(t * t), 1.0, &[100.0], GridSpec::new(1.0));
        assert!(matches!(r, Err(Error::NoConvergence)));
    }
}

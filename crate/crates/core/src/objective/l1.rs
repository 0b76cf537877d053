use crate::ext::Ext;
use crate::objective::{Objective, Structure};
use crate::scalar::Real;

/// Tolerance on `‖μ‖∞ ≤ 1` when deciding membership in the conjugate domain.
pub const BOX_TOLERANCE: f64 = 1e-9;

/// Component-wise `[|vᵢ| − s]₊ · sgn(vᵢ)`.
pub fn soft_threshold<T: Real>(s: T, v: &[T]) -> Vec<T> {
    v.iter()
        .map(|&vi| {
            let mag = vi.abs() - s;
            if mag > T::zero() {
                mag * vi.signum()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Component-wise clamp to `[−1, 1]`.
pub fn clamp_unit_box<T: Real>(mu: &[T]) -> Vec<T> {
    mu.iter().map(|&m| m.max(-T::one()).min(T::one())).collect()
}

/// `f(x) = ‖x‖₁`. Its conjugate is the indicator of the unit `ℓ∞` ball.
#[derive(Clone, Debug)]
pub struct L1Norm {
    dim: usize,
}

impl L1Norm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Real> Objective<T> for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "l1"
    }

    fn eval(&self, x: &[T]) -> Ext<T> {
        Ext::Finite(x.iter().map(|v| v.abs()).sum())
    }

    fn prox(&self, s: T, v: &[T]) -> Vec<T> {
        soft_threshold(s, v)
    }

    fn prox_conjugate(&self, _s: T, w: &[T]) -> Vec<T> {
        clamp_unit_box(w)
    }

    fn conjugate(&self, mu: &[T]) -> Ext<T> {
        let limit = T::one() + T::lit(BOX_TOLERANCE);
        if mu.iter().all(|m| m.abs() <= limit) {
            Ext::zero()
        } else {
            Ext::Infinite
        }
    }

    fn project_conj_domain(&self, mu: &[T]) -> Vec<T> {
        clamp_unit_box(mu)
    }

    /// `x` where the prox vanishes, `s(w + sgn)` elsewhere; the test
    /// `|x − sw| ≤ s` is done as `|x/s − w| ≤ 1`.
    fn prox_displacement(&self, s: T, x: &[T], w: &[T]) -> Vec<T> {
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| {
                let u = xi / s - wi;
                if u.abs() <= T::one() {
                    xi
                } else {
                    s * (wi + u.signum())
                }
            })
            .collect()
    }

    /// Per coordinate `|x| + xg − (β/2)x²` where the prox vanishes and
    /// `|x| − σx + (β/2)d²` with `σ = sgn(p)` elsewhere.
    fn smoothed_gap_primal(&self, x: &[T], d: &[T], g: &[T], beta: T) -> Ext<T> {
        let half = T::lit(0.5);
        let total = x
            .iter()
            .zip(d)
            .zip(g)
            .map(|((&xi, &di), &gi)| {
                let p = xi - di;
                if p == T::zero() {
                    xi.abs() + xi * gi - half * beta * xi * xi
                } else {
                    xi.abs() - p.signum() * xi + half * beta * di * di
                }
            })
            .sum();
        Ext::Finite(total)
    }

    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T> {
        let total = x
            .iter()
            .zip(g)
            .map(|(&xi, &gi)| {
                let sub = if xi != T::zero() { xi.signum() } else { (-gi).max(-T::one()).min(T::one()) };
                (sub + gi) * (sub + gi)
            })
            .sum();
        Ext::Finite(total)
    }

    fn smoothness(&self) -> Option<T> {
        None
    }

    fn conjugate_lipschitz(&self) -> Option<T> {
        Some(T::zero())
    }

    fn conjugate_split(&self) -> Option<crate::objective::ConjugateSplit<T>> {
        None
    }

    fn structure(&self) -> Structure<'_, T> {
        Structure::L1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::test_support::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn displacement_without_cancellation() {
        let f = L1Norm::new(3);
        let (x, w) = ([0.3, -0.2, 0.0], [0.5, -2.0, 1.5]);
        let d = Objective::<f64>::prox_displacement(&f, 0.5, &x, &w);
        let v = crate::linalg::vector::add_scaled(&x, -0.5, &w);
        let p = soft_threshold(0.5, &v);
        for i in 0..3 {
            assert!((d[i] - (x[i] - p[i])).abs() < 1e-15);
        }
        // With s = 1e10 only the first coordinate keeps p = 0.
        let d = Objective::<f64>::prox_displacement(&f, 1e10, &x, &w);
        assert_eq!(d, vec![0.3, -1e10, 5e9]);
        let g = Objective::<f64>::smoothed_gap_primal(&f, &x, &d, &w, 1e-10).value();
        let expected = (0.3 + 0.3 * 0.5 - 0.5e-10 * 0.09) + (0.2 + 0.2 + 0.5e-10 * 1e20) + 0.5e-10 * 25e18;
        assert!((g - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(1.0, &[2.5]), vec![1.5]);
        assert_eq!(soft_threshold(1.0, &[-0.5]), vec![0.0]);
        assert_eq!(soft_threshold(0.5, &[-2.0, 0.5]), vec![-1.5, 0.0]);
    }

    #[test]
    fn soft_threshold_matches_grid_search() {
        let s = 0.8;
        for &v in &[-2.3_f64, -0.4, 0.0, 0.9, 3.1] {
            let h = 1e-4;
            let best = (-50_000..=50_000)
                .map(|k| k as f64 * h)
                .min_by(|a, b| {
                    let fa = a.abs() + (a - v).powi(2) / (2.0 * s);
                    let fb = b.abs() + (b - v).powi(2) / (2.0 * s);
                    fa.partial_cmp(&fb).unwrap()
                })
                .unwrap();
            assert!((soft_threshold(s, &[v])[0] - best).abs() <= h);
        }
    }

    #[test]
    fn box_projection_examples() {
        assert_eq!(clamp_unit_box(&[0.3, -0.7]), vec![0.3, -0.7]);
        assert_eq!(clamp_unit_box(&[2.0, -3.0]), vec![1.0, -1.0]);
        let once = clamp_unit_box(&[5.0, -0.2, -9.0]);
        assert_eq!(clamp_unit_box(&once), once);
    }

    #[test]
    fn stationarity_examples() {
        let f = L1Norm::new(1);
        assert_eq!(Objective::<f64>::stationarity_residual(&f, &[0.0], &[0.0]), Ext::Finite(0.0));
        assert_eq!(Objective::<f64>::stationarity_residual(&f, &[1.0], &[-1.0]), Ext::Finite(0.0));
        assert_eq!(Objective::<f64>::stationarity_residual(&f, &[0.0], &[1.5]), Ext::Finite(0.25));
    }

    #[test]
    fn stationarity_is_distance_to_subdifferential() {
        let f = L1Norm::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x: Vec<f64> =
                (0..4).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            // Per coordinate, sample the subdifferential densely.
            let mut brute = 0.0;
            for (&xi, &gi) in x.iter().zip(&g) {
                let best = if xi != 0.0 {
                    (xi.signum() + gi).powi(2)
                } else {
                    (0..=2000).map(|k| -1.0 + k as f64 * 1e-3).map(|u| (u + gi).powi(2)).fold(f64::INFINITY, f64::min)
                };
                brute += best;
            }
            let exact = Objective::<f64>::stationarity_residual(&f, &x, &g).value();
            assert!(exact <= brute + 1e-12 && brute - exact < 1e-5);
        }
    }

    #[test]
    fn oracle_invariants() {
        let f = L1Norm::new(6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &s in &[0.1, 1.0, 7.0] {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            check_prox_optimality(&f, s, &v, &mut rng);
            check_moreau(&f, s, &v);
            check_projection(&f, &v, &mut rng);
        }
        assert_eq!(Objective::<f64>::conjugate_lipschitz(&f), Some(0.0));
        assert!(Objective::<f64>::conjugate(&f, &[0.5, 1.5, 0.0, 0.0, 0.0, 0.0]).is_infinite());
    }
}

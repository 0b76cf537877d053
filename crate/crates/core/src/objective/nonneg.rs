use crate::ext::Ext;
use crate::objective::{ConjugateSplit, Objective, Structure};
use crate::scalar::Real;

/// Tolerance on `μ ≤ 0` when deciding membership in the conjugate domain.
pub const ORTHANT_TOLERANCE: f64 = 1e-9;

/// Indicator of the nonnegative orthant. Its conjugate is the indicator of
/// the nonpositive orthant.
#[derive(Clone, Debug)]
pub struct NonnegIndicator {
    dim: usize,
}

impl NonnegIndicator {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Real> Objective<T> for NonnegIndicator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "nonneg-indicator"
    }

    fn eval(&self, x: &[T]) -> Ext<T> {
        if x.iter().all(|&v| v >= T::zero()) {
            Ext::zero()
        } else {
            Ext::Infinite
        }
    }

    fn prox(&self, _s: T, v: &[T]) -> Vec<T> {
        v.iter().map(|&vi| vi.max(T::zero())).collect()
    }

    fn prox_conjugate(&self, _s: T, w: &[T]) -> Vec<T> {
        w.iter().map(|&wi| wi.min(T::zero())).collect()
    }

    fn conjugate(&self, mu: &[T]) -> Ext<T> {
        let tol = T::lit(ORTHANT_TOLERANCE);
        if mu.iter().all(|&m| m <= tol) {
            Ext::zero()
        } else {
            Ext::Infinite
        }
    }

    fn project_conj_domain(&self, mu: &[T]) -> Vec<T> {
        mu.iter().map(|&m| m.min(T::zero())).collect()
    }

    /// `sw` where `x − sw ≥ 0`, `x` elsewhere.
    fn prox_displacement(&self, s: T, x: &[T], w: &[T]) -> Vec<T> {
        x.iter().zip(w).map(|(&xi, &wi)| if xi / s - wi >= T::zero() { s * wi } else { xi }).collect()
    }

    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T> {
        let mut total = T::zero();
        for (&xi, &gi) in x.iter().zip(g) {
            if xi < T::zero() {
                return Ext::Infinite;
            }
            let r = if xi == T::zero() { gi.min(T::zero()) } else { gi };
            total += r * r;
        }
        Ext::Finite(total)
    }

    fn smoothness(&self) -> Option<T> {
        None
    }

    fn conjugate_lipschitz(&self) -> Option<T> {
        Some(T::zero())
    }

    fn conjugate_split(&self) -> Option<ConjugateSplit<T>> {
        Some(ConjugateSplit { l_f1_star: T::zero(), l_g: T::zero() })
    }

    fn structure(&self) -> Structure<'_, T> {
        Structure::Nonneg
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
        let f = NonnegIndicator::new(2);
        let (x, w) = ([0.5, 0.25], [0.25, 1.0]);
        assert_eq!(Objective::<f64>::prox_displacement(&f, 1.0, &x, &w), vec![0.25, 0.25]);
        assert_eq!(Objective::<f64>::prox_displacement(&f, 1e12, &x, &[-1e-13, 1.0]), vec![-0.1, 0.25]);
    }

    #[test]
    fn prox_and_projection_examples() {
        let f = NonnegIndicator::new(2);
        assert_eq!(Objective::<f64>::prox(&f, 1.0, &[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(Objective::<f64>::project_conj_domain(&f, &[0.5, -2.0]), vec![0.0, -2.0]);
        assert_eq!(Objective::<f64>::prox(&f, 1.0, &[-3.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn stationarity_cases() {
        let f = NonnegIndicator::new(1);
        let r = |x: f64, g: f64| Objective::<f64>::stationarity_residual(&f, &[x], &[g]);
        assert_eq!(r(0.0, -2.0), Ext::Finite(4.0));
        assert_eq!(r(0.0, 3.0), Ext::Finite(0.0));
        assert_eq!(r(1.0, 3.0), Ext::Finite(9.0));
        assert!(r(-0.1, 0.0).is_infinite());
    }

    #[test]
    fn oracle_invariants() {
        let f = NonnegIndicator::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &s in &[0.1, 1.0, 9.0] {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            check_prox_optimality(&f, s, &v, &mut rng);
            check_moreau(&f, s, &v);
            check_projection(&f, &v, &mut rng);
        }
    }
}

//! Unconstrained scalar examples separating the measures.

use std::sync::Arc;

use serde::Serialize;

use crate::criteria::{self, SmoothingParams};
use crate::error::Result;
use crate::ext::Ext;
use crate::objective::{ConjugateSplit, L1Norm, Objective};
use crate::problem::{AffineConstraint, Family, PrimalDualPoint, ProblemInstance, Provenance, ReferenceSolution};
use crate::scalar::Real;

/// `f(x) = x` for `x > ε`, `x²/(2ε) + ε/2` otherwise: smooth, minimized at
/// 0 with `f* = ε/2`, and with slope exactly 1 from `x = ε` on.
#[derive(Clone, Copy, Debug)]
pub struct SmoothedRamp<T> {
    pub eps: T,
}

impl<T: Real> SmoothedRamp<T> {
    pub fn value(&self, x: T) -> T {
        if x > self.eps {
            x
        } else {
            x * x / (T::lit(2.0) * self.eps) + self.eps / T::lit(2.0)
        }
    }

    pub fn derivative(&self, x: T) -> T {
        if x > self.eps {
            T::one()
        } else {
            x / self.eps
        }
    }
}

impl<T: Real> Objective<T> for SmoothedRamp<T> {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &'static str {
        "smoothed-ramp"
    }

    fn eval(&self, x: &[T]) -> Ext<T> {
        Ext::Finite(self.value(x[0]))
    }

    fn prox(&self, s: T, v: &[T]) -> Vec<T> {
        // u + s·f′(u) = v on each branch.
        let v = v[0];
        if v <= self.eps + s {
            vec![v / (T::one() + s / self.eps)]
        } else {
            vec![v - s]
        }
    }

    fn prox_conjugate(&self, s: T, w: &[T]) -> Vec<T> {
        // f*(μ) = εμ²/2 − ε/2 on μ ≤ 1.
        vec![(w[0] / (T::one() + s * self.eps)).min(T::one())]
    }

    fn conjugate(&self, mu: &[T]) -> Ext<T> {
        if mu[0] > T::one() {
            Ext::Infinite
        } else {
            Ext::Finite(self.eps * mu[0] * mu[0] / T::lit(2.0) - self.eps / T::lit(2.0))
        }
    }

    fn project_conj_domain(&self, mu: &[T]) -> Vec<T> {
        vec![mu[0].min(T::one())]
    }

    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T> {
        let r = self.derivative(x[0]) + g[0];
        Ext::Finite(r * r)
    }

    fn smoothness(&self) -> Option<T> {
        Some(T::one() / self.eps)
    }

    fn conjugate_lipschitz(&self) -> Option<T> {
        None
    }

    fn conjugate_split(&self) -> Option<ConjugateSplit<T>> {
        None
    }
}

fn unconstrained<T: Real>(objective: Arc<dyn Objective<T>>, label: &str) -> Result<ProblemInstance<T>> {
    ProblemInstance::new(objective, AffineConstraint::unconstrained(1), Family::Custom, label)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktOgRow {
    pub eps: f64,
    /// `f′(ε)` from the closed form.
    pub derivative: f64,
    /// `(f(ε + h) − f(ε))/h`
    pub finite_difference: f64,
    /// `f(ε) − f(0)`
    pub gap: f64,
    /// Optimality gap at `x = ε` from the criteria module.
    pub og: f64,
    /// KKT error at `x = ε` from the criteria module.
    pub kkt: f64,
}

/// At `x = ε` the optimality gap is `ε/2` while the KKT error stays 1.
pub fn counterexample_kkt_vs_og<T: Real>(eps_list: &[T]) -> Result<Vec<KktOgRow>> {
    eps_list
        .iter()
        .map(|&eps| {
            let f = SmoothedRamp { eps };
            let half = eps / T::lit(2.0);
            let p = unconstrained(Arc::new(f), "smoothed-ramp")?.with_reference(ReferenceSolution {
                x_star: vec![T::zero()],
                y_star: Some(Vec::new()),
                f_star: half,
                provenance: Provenance::Analytic,
            })?;
            let z = PrimalDualPoint::new(vec![eps], Vec::new());
            let h = eps * T::lit(1e-6);
            Ok(KktOgRow {
                eps: eps.as_f64(),
                derivative: f.derivative(eps).as_f64(),
                finite_difference: ((f.value(eps + h) - f.value(eps)) / h).as_f64(),
                gap: (f.value(eps) - f.value(T::zero())).as_f64(),
                og: criteria::optimality_gap(&p, &z)?.value.as_f64(),
                kkt: criteria::kkt_error(&p, &z)?.value.as_f64(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktSdgRow {
    pub x: f64,
    /// `|x| − [|x|−1]₊ − ½([|x|−1]₊·sgn(x) − x)²`
    pub formula: f64,
    /// Smoothed gap at `β = (1, 1)` from the criteria module.
    pub sdg: f64,
    pub kkt: f64,
}

/// For `f = |·|` the KKT error is 1 at every `x ≠ 0` while the smoothed gap
/// is `|x| − x²/2` on `|x| ≤ 1`.
pub fn counterexample_kkt_vs_sdg<T: Real>(x_list: &[T]) -> Result<Vec<KktSdgRow>> {
    let p = unconstrained::<T>(Arc::new(L1Norm::new(1)), "abs")?;
    let beta = SmoothingParams::equal(T::one())?;
    x_list
        .iter()
        .map(|&x| {
            let excess = (x.abs() - T::one()).max(T::zero());
            let shrunk = excess * x.signum();
            let formula = x.abs() - excess - T::lit(0.5) * (shrunk - x) * (shrunk - x);
            let z = PrimalDualPoint::new(vec![x], Vec::new());
            Ok(KktSdgRow {
                x: x.as_f64(),
                formula: formula.as_f64(),
                sdg: criteria::smoothed_duality_gap(&p, &z, beta)?.value.as_f64(),
                kkt: criteria::kkt_error(&p, &z)?.value.as_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::test_support::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramp_oracle_is_consistent() {
        let f = SmoothedRamp { eps: 0.1 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in [-1.0, 0.05, 0.1, 0.3, 2.0] {
            check_prox_optimality(&f, 0.5, &[v], &mut rng);
            check_moreau(&f, 0.5, &[v]);
        }
    }

    #[test]
    fn ramp_rows() {
        let rows = counterexample_kkt_vs_og(&[0.1, 1e-6]).unwrap();
        assert_eq!(rows[0].derivative, 1.0);
        assert!((rows[0].gap - 0.05).abs() < 1e-15);
        assert!((rows[1].gap - 5e-7).abs() < 1e-18);
        for r in &rows {
            assert!((r.finite_difference - 1.0).abs() < 1e-5);
            assert!((r.og - r.gap).abs() < 1e-15);
            assert!((r.kkt - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn abs_rows() {
        let rows = counterexample_kkt_vs_sdg(&[0.5, 0.01, 2.0]).unwrap();
        assert!((rows[0].sdg - 0.375).abs() < 1e-12);
        assert!((rows[1].formula - 0.00995).abs() < 1e-12);
        assert!((rows[2].formula - 0.5).abs() < 1e-12);
        for r in &rows {
            assert!((r.sdg - r.formula).abs() < 1e-12);
            assert!((r.kkt - 1.0).abs() < 1e-12);
        }
    }
}

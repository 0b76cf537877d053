//! Smoothed gap computed by solving its inner sup directly.
//!
//! Nothing here calls an objective's `prox`: least-squares blocks are
//! minimized by conjugate gradients with a gradient-norm certificate, scalar
//! blocks by golden-section search on a proven bracket.

use crate::criteria::SmoothingParams;
use crate::error::{Error, Result};
use crate::linalg::vector;
use crate::objective::{LeastSquares, Objective, Structure};
use crate::problem::{PrimalDualPoint, ProblemInstance};
use crate::scalar::Real;

const GOLDEN_ITERS: usize = 200;

/// `𝒢(x̂, ŷ; ẋ, ẏ) = sup L(x̂, y′) − L(x′, ŷ) − (βx/2)‖x′ − ẋ‖² − (βy/2)‖y′ − ẏ‖²`
/// with `L(x, y) = f(x) + ⟨Ax − b, y⟩`.
///
/// `inner_tol` bounds the suboptimality of the inner minimization.
pub fn general_gap<T: Real>(
    problem: &ProblemInstance<T>,
    point: &PrimalDualPoint<T>,
    center: &PrimalDualPoint<T>,
    beta: SmoothingParams<T>,
    inner_tol: T,
) -> Result<T> {
    problem.check_point(point)?;
    problem.check_point(center)?;
    if !(inner_tol > T::zero()) {
        return Err(Error::InvalidParameter("inner tolerance must be positive".into()));
    }
    let c = problem.constraint();
    let f = problem.objective();
    let fx = f.eval(&point.x).finite().ok_or(Error::InvalidParameter("point outside dom f".into()))?;
    // sup over y′ is attained at ẏ + (Ax̂ − b)/βy.
    let r = c.residual(&point.x);
    let upper = fx + vector::dot(&r, &center.y) + vector::norm_sq(&r) / (T::lit(2.0) * beta.beta_y);
    // inf over x′ of f(x′) + ⟨x′, Aᵀŷ⟩ − ⟨b, ŷ⟩ + (βx/2)‖x′ − ẋ‖².
    let w = c.apply_t(&point.y);
    let lower = min_prox_model(f, &w, &center.x, beta.beta_x, inner_tol)? - vector::dot(c.rhs(), &point.y);
    Ok(upper - lower)
}

/// Self-centered smoothed gap by direct maximization.
pub fn sdg_direct<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    beta: SmoothingParams<T>,
    inner_tol: T,
) -> Result<T> {
    general_gap(problem, z, z, beta, inner_tol)
}

/// `min_u f(u) + ⟨w, u⟩ + (β/2)‖u − c‖²`
pub fn min_prox_model<T: Real>(f: &dyn Objective<T>, w: &[T], center: &[T], beta: T, tol: T) -> Result<T> {
    match f.structure() {
        Structure::LeastSquares(ls) => least_squares_min(ls, w, center, beta, tol),
        Structure::L1 => Ok(scalar_blocks(w, center, beta, |t| t.abs(), false)),
        Structure::Nonneg => Ok(scalar_blocks(w, center, beta, |_| T::zero(), true)),
        Structure::Separable(s) => {
            let mut total = T::zero();
            let share = tol / T::from_count(s.parts().len().max(1));
            for (i, part) in s.parts().iter().enumerate() {
                let r = s.block(i);
                total += min_prox_model(part.as_ref(), &w[r.clone()], &center[r], beta, share)?;
            }
            Ok(total)
        }
        Structure::Opaque => Err(Error::NotApplicable("direct smoothed gap needs a known structure")),
    }
}

fn least_squares_min<T: Real>(ls: &LeastSquares<T>, w: &[T], center: &[T], beta: T, tol: T) -> Result<T> {
    let q = ls.design();
    let c = ls.target();
    let apply = |u: &[T]| {
        let mut out = q.matvec_t(&q.matvec(u));
        vector::axpy(beta, u, &mut out);
        out
    };
    // (QᵀQ + βI)u = Qᵀc − w + βc₀
    let mut rhs = q.matvec_t(c);
    vector::axpy(-T::one(), w, &mut rhs);
    vector::axpy(beta, center, &mut rhs);
    let objective = |u: &[T]| {
        let res = vector::sub(&q.matvec(u), c);
        T::lit(0.5) * vector::norm_sq(&res)
            + vector::dot(w, u)
            + beta / T::lit(2.0) * vector::norm_sq(&vector::sub(u, center))
    };
    // φ(u) − φ* ≤ ‖∇φ(u)‖²/(2β) by β-strong convexity.
    let target = T::lit(2.0) * beta * tol;
    let n = center.len();
    let max_iters = 20 * n + 50;
    let mut u = center.to_vec();
    let mut used = 0;
    while used < max_iters {
        // Restarted conjugate gradients.
        let mut g = vector::sub(&rhs, &apply(&u));
        let mut d = g.clone();
        let mut gg = vector::norm_sq(&g);
        if gg <= target {
            return Ok(objective(&u));
        }
        for _ in 0..n.max(1) {
            used += 1;
            let ad = apply(&d);
            let curv = vector::dot(&d, &ad);
            if !(curv > T::zero()) {
                break;
            }
            let step = gg / curv;
            vector::axpy(step, &d, &mut u);
            vector::axpy(-step, &ad, &mut g);
            let next = vector::norm_sq(&g);
            if next <= target {
                break;
            }
            let ratio = next / gg;
            d = vector::add_scaled(&g, ratio, &d);
            gg = next;
        }
    }
    let g = vector::sub(&rhs, &apply(&u));
    if vector::norm_sq(&g) <= target {
        Ok(objective(&u))
    } else {
        Err(Error::InnerSolveFailed { iterations: used })
    }
}

/// Sum over coordinates of `min_t h(t) + wᵢt + (β/2)(t − cᵢ)²`, where `h` is
/// 1-Lipschitz (or the indicator of `t ≥ 0` when `nonneg`).
fn scalar_blocks<T: Real>(w: &[T], center: &[T], beta: T, h: impl Fn(T) -> T, nonneg: bool) -> T {
    w.iter()
        .zip(center)
        .map(|(&wi, &ci)| {
            let phi = |t: T| h(t) + wi * t + beta / T::lit(2.0) * (t - ci) * (t - ci);
            // The minimizer is cᵢ − s/β for a subgradient s of h + wᵢt.
            let reach = (T::one() + wi.abs()) / beta;
            let (lo, hi) = if nonneg { (T::zero(), (ci + reach).max(T::zero())) } else { (ci - reach, ci + reach) };
            let t = golden_section(&phi, lo, hi);
            let mut best = phi(t);
            if nonneg {
                best = best.min(phi(T::zero()));
            }
            best
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Minimizer of a convex scalar function on `[lo, hi]`.
pub fn golden_section<T: Real>(f: &impl Fn(T) -> T, lo: T, hi: T) -> T {
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if !(b - a > T::zero()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    [a, b, mid, c, d]
        .into_iter()
        .min_by(|&x, &y| f(x).partial_cmp(&f(y)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(mid)
}

/// Both sides of the saddle decomposition
/// `𝒢(z) = 𝒢(x, y*; x*, y) + 𝒢(x*, y; x, y*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition<T> {
    pub total: T,
    /// `𝒢(x, y*; x*, y)`
    pub primal_part: T,
    /// `𝒢(x*, y; x, y*)`
    pub dual_part: T,
}

impl<T: Real> Decomposition<T> {
    pub fn error(&self) -> T {
        (self.total - self.primal_part - self.dual_part).abs()
    }

    /// `𝒢(x*, y; x, y*) + 2√(βx𝒢(z))‖x − x*‖`, nonnegative when the lower
    /// bound on the dual part holds.
    pub fn dual_part_slack(&self, beta_x: T, dist_x: T) -> T {
        self.dual_part + T::lit(2.0) * (beta_x * self.total.max(T::zero())).sqrt() * dist_x
    }
}

/// Three direct evaluations around a known saddle point.
pub fn decomposition<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    saddle: &PrimalDualPoint<T>,
    beta: SmoothingParams<T>,
    inner_tol: T,
) -> Result<Decomposition<T>> {
    let total = sdg_direct(problem, z, beta, inner_tol)?;
    let primal_part = general_gap(
        problem,
        &PrimalDualPoint::new(z.x.clone(), saddle.y.clone()),
        &PrimalDualPoint::new(saddle.x.clone(), z.y.clone()),
        beta,
        inner_tol,
    )?;
    let dual_part = general_gap(
        problem,
        &PrimalDualPoint::new(saddle.x.clone(), z.y.clone()),
        &PrimalDualPoint::new(z.x.clone(), saddle.y.clone()),
        beta,
        inner_tol,
    )?;
    Ok(Decomposition { total, primal_part, dual_part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::smoothed_duality_gap;
    use crate::instances::{make_1d, make_bp, make_iidg, make_pqp};
    use crate::oracle::random_point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_section_finds_kink() {
        let t = golden_section(&|t: f64| (t - 0.3).abs() + 0.1 * t * t, -5.0, 5.0);
        assert!((t - 0.3).abs() < 1e-9);
    }

    #[test]
    fn matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let problems = [
            make_1d::<f64>().unwrap(),
            make_iidg(20, 10, 1).unwrap(),
            make_bp(20, 10, 1).unwrap(),
            make_pqp(20, 10, 2).unwrap(),
        ];
        for p in &problems {
            for _ in 0..30 {
                let z = random_point(p, &mut rng);
                let b = SmoothingParams::equal(10f64.powf(rng.random_range(-3.0..2.0))).unwrap();
                let direct = sdg_direct(p, &z, b, 1e-10).unwrap();
                let closed = smoothed_duality_gap(p, &z, b).unwrap().value.value();
                assert!((direct - closed).abs() < 1e-6, "{} {direct} {closed}", p.label());
            }
        }
    }

    #[test]
    fn zero_at_saddle_and_decomposes() {
        let p = make_iidg::<f64>(20, 10, 5).unwrap();
        let r = p.reference().unwrap();
        let saddle = PrimalDualPoint::new(r.x_star.clone(), r.y_star.clone().unwrap());
        let b = SmoothingParams::equal(1.0).unwrap();
        assert!(sdg_direct(&p, &saddle, b, 1e-12).unwrap().abs() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let z = random_point(&p, &mut rng);
            let d = decomposition(&p, &z, &saddle, b, 1e-12).unwrap();
            assert!(d.error() < 1e-6, "{d:?}");
            assert!(d.dual_part_slack(1.0, vector::dist(&z.x, &saddle.x)) >= -1e-6);
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = make_1d::<f64>().unwrap();
        let z = p.origin();
        assert!(sdg_direct(&p, &z, SmoothingParams::equal(1.0).unwrap(), 0.0).is_err());
    }
}

//! Primal-dual hybrid gradient iterations and the stopping loop.

use serde::{Deserialize, Serialize};

use crate::criteria::{self, sdg_surrogate, BetaGrid, CriterionKind, CriterionValue, PointState, SmoothingParams};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::linalg::{operator_norm, vector};
use crate::problem::{AffineConstraint, PrimalDualPoint, ProblemInstance};
use crate::scalar::Real;

/// Primal and dual step sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepSizes<T> {
    pub tau: T,
    pub sigma: T,
}

impl<T: Real> StepSizes<T> {
    /// Checks `τσ‖A‖² < 1`.
    pub fn new(tau: T, sigma: T, op_norm: T) -> Result<Self> {
        if !(tau > T::zero() && sigma > T::zero()) {
            return Err(Error::InvalidParameter("step sizes must be positive".into()));
        }
        if !(tau * sigma * op_norm * op_norm < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "step sizes violate τσ‖A‖² < 1 (τ = {tau}, σ = {sigma}, ‖A‖ = {op_norm})"
            )));
        }
        Ok(Self { tau, sigma })
    }
}

/// `τ = 0.95/‖A‖`, `σ = 1/‖A‖`.
pub fn default_step_sizes<T: Real>(constraint: &AffineConstraint<T>) -> Result<StepSizes<T>> {
    let norm = operator_norm(constraint.matrix())?;
    StepSizes::new(T::lit(0.95) / norm, T::one() / norm, norm)
}

/// Order of the primal and dual updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdhgVersion {
    /// Primal prox first, then dual ascent, then primal correction.
    #[default]
    V1,
    /// Dual ascent first; the returned primal is a prox output.
    V2,
}

fn check_finite<T: Real>(v: &[T], iteration: usize) -> Result<()> {
    if vector::all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate { iteration })
    }
}

fn step_v1_at<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
    iteration: usize,
) -> Result<PrimalDualPoint<T>> {
    let c = problem.constraint();
    let StepSizes { tau, sigma } = steps;
    let aty = c.apply_t(&z.y);
    let x_bar = problem.objective().prox(tau, &vector::add_scaled(&z.x, -tau, &aty));
    check_finite(&x_bar, iteration)?;
    let y_bar = vector::add_scaled(&z.y, sigma, &c.residual(&x_bar));
    let dy = vector::sub(&y_bar, &z.y);
    let x_next = vector::add_scaled(&x_bar, -tau, &c.apply_t(&dy));
    check_finite(&x_next, iteration)?;
    check_finite(&y_bar, iteration)?;
    Ok(PrimalDualPoint::new(x_next, y_bar))
}

fn step_v2_at<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
    iteration: usize,
) -> Result<PrimalDualPoint<T>> {
    let c = problem.constraint();
    let StepSizes { tau, sigma } = steps;
    let y_bar = vector::add_scaled(&z.y, sigma, &c.residual(&z.x));
    let aty = c.apply_t(&y_bar);
    let x_bar = problem.objective().prox(tau, &vector::add_scaled(&z.x, -tau, &aty));
    check_finite(&x_bar, iteration)?;
    let y_next = vector::add_scaled(&y_bar, sigma, &c.apply(&vector::sub(&x_bar, &z.x)));
    check_finite(&y_next, iteration)?;
    Ok(PrimalDualPoint::new(x_bar, y_next))
}

/// One version-1 step: `x̄ = prox_{τf}(x − τAᵀy)`, `ȳ = y + σ(Ax̄ − b)`,
/// `x⁺ = x̄ − τAᵀ(ȳ − y)`, `y⁺ = ȳ`.
pub fn step_v1<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
) -> Result<PrimalDualPoint<T>> {
    problem.check_point(z)?;
    step_v1_at(problem, z, steps, 0)
}

/// One version-2 step: `ȳ = y + σ(Ax − b)`, `x̄ = prox_{τf}(x − τAᵀȳ)`,
/// `y⁺ = ȳ + σA(x̄ − x)`, `x⁺ = x̄`.
pub fn step_v2<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
) -> Result<PrimalDualPoint<T>> {
    problem.check_point(z)?;
    step_v2_at(problem, z, steps, 0)
}

/// One step of `version`; `iteration` labels a non-finite failure.
pub fn advance<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
    version: PdhgVersion,
    iteration: usize,
) -> Result<PrimalDualPoint<T>> {
    match version {
        PdhgVersion::V1 => step_v1_at(problem, z, steps, iteration),
        PdhgVersion::V2 => step_v2_at(problem, z, steps, iteration),
    }
}

/// Threshold convention for the stopping test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateConvention {
    /// Squared measures against `ε²`; the smoothed gap through
    /// `max(𝒢, √(2βy𝒢)) ≤ ε`; optimality gap and feasibility against `ε`.
    #[default]
    Commensurate,
    /// Every measure's raw value against `ε`.
    Raw,
}

/// Smoothing used by the smoothed-gap gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaPolicy<T> {
    Fixed(SmoothingParams<T>),
    /// Best value of the per-iteration grid.
    Grid,
}

/// Solver settings.
#[derive(Clone, Debug)]
pub struct SolveConfig<T> {
    pub epsilon: T,
    pub max_iters: usize,
    /// Measure that gates stopping.
    pub criterion: CriterionKind,
    pub record_every: usize,
    /// Recorded with the run; the iteration itself is deterministic.
    pub seed: u64,
    pub version: PdhgVersion,
    pub gate: GateConvention,
    /// Extra measures stored in the trajectory alongside the gate.
    pub record: Vec<CriterionKind>,
    /// Starting point, the origin when absent.
    pub initial: Option<PrimalDualPoint<T>>,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(epsilon: T, max_iters: usize, criterion: CriterionKind) -> Self {
        Self {
            epsilon,
            max_iters,
            criterion,
            record_every: 1,
            seed: 0,
            version: PdhgVersion::V1,
            gate: GateConvention::Commensurate,
            record: Vec::new(),
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    BudgetExhausted,
}

/// One stored iterate.
#[derive(Clone, Debug)]
pub struct IterateRecord<T> {
    pub iteration: usize,
    pub point: PrimalDualPoint<T>,
    pub criteria: Vec<CriterionValue<T>>,
}

/// Stored iterates of one solve; the last entry is the returned point.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub iterates: Vec<IterateRecord<T>>,
    pub stop_reason: StopReason,
    pub iterations_used: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn last_point(&self) -> &PrimalDualPoint<T> {
        &self.iterates.last().expect("trajectory always holds the final iterate").point
    }
}

/// Evaluates one measure, choosing β per `policy` for the smoothed gap.
///
/// Returns the measure and the score compared with the threshold.
pub fn gate_value<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    kind: CriterionKind,
    policy: BetaPolicy<T>,
    gate: GateConvention,
) -> Result<(CriterionValue<T>, Ext<T>)> {
    let st = PointState::new(problem, z)?;
    gate_with_state(problem, z, &st, kind, policy, gate)
}

fn gate_with_state<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    st: &PointState<T>,
    kind: CriterionKind,
    policy: BetaPolicy<T>,
    gate: GateConvention,
) -> Result<(CriterionValue<T>, Ext<T>)> {
    Ok(match kind {
        CriterionKind::Kkt => {
            let v = criteria::kkt_with_state(problem, z, st);
            let s = v.value;
            (v, s)
        }
        CriterionKind::Pdg => {
            let v = criteria::pdg_with_state(problem, z, st)?;
            let s = v.value;
            (v, s)
        }
        CriterionKind::Fe => {
            let v = criteria::feasibility_error(problem, z)?;
            let s = v.value;
            (v, s)
        }
        CriterionKind::Og => {
            let v = criteria::optimality_gap(problem, z)?;
            // An ε-solution needs both the gap and the feasibility error small.
            let s = v.value.map(|og| og.max(st.fe));
            (v, s)
        }
        CriterionKind::Sdg => {
            let score = |c: &CriterionValue<T>| match gate {
                GateConvention::Commensurate => sdg_surrogate(c.value, c.beta.map_or(T::one(), |b| b.beta_y)),
                GateConvention::Raw => c.value,
            };
            let candidates: Vec<SmoothingParams<T>> = match policy {
                BetaPolicy::Fixed(b) => vec![b],
                BetaPolicy::Grid => BetaGrid::with_feasibility(st.fe).params().collect(),
            };
            let mut best: Option<(CriterionValue<T>, Ext<T>)> = None;
            for b in candidates {
                let v = criteria::sdg_with_state(problem, z, st, b)?;
                let s = score(&v);
                if best.as_ref().is_none_or(|(_, bs)| s < *bs) {
                    best = Some((v, s));
                }
            }
            best.ok_or(Error::Empty("smoothing candidates"))?
        }
    })
}

/// Value the gate score of `kind` is compared against.
pub fn gate_threshold<T: Real>(kind: CriterionKind, gate: GateConvention, eps: T) -> T {
    match (gate, kind) {
        (GateConvention::Commensurate, CriterionKind::Kkt | CriterionKind::Pdg) => eps * eps,
        _ => eps,
    }
}

fn record<T: Real>(
    problem: &ProblemInstance<T>,
    config: &SolveConfig<T>,
    policy: BetaPolicy<T>,
    iteration: usize,
    z: &PrimalDualPoint<T>,
    gate: &CriterionValue<T>,
) -> Result<IterateRecord<T>> {
    let st = PointState::new(problem, z)?;
    let mut criteria = vec![gate.clone()];
    for &k in &config.record {
        if k != config.criterion {
            criteria.push(gate_with_state(problem, z, &st, k, policy, config.gate)?.0);
        }
    }
    Ok(IterateRecord { iteration, point: z.clone(), criteria })
}

/// Runs PDHG from the configured start until the gated measure reaches its
/// threshold or the budget is spent.
pub fn solve<T: Real>(
    problem: &ProblemInstance<T>,
    config: &SolveConfig<T>,
    steps: StepSizes<T>,
    policy: BetaPolicy<T>,
) -> Result<Trajectory<T>> {
    solve_with(problem, config, steps, policy, |_, _| Ok(()))
}

/// Like [`solve`], calling `observer` on every iterate including the start.
pub fn solve_with<T: Real, F>(
    problem: &ProblemInstance<T>,
    config: &SolveConfig<T>,
    steps: StepSizes<T>,
    policy: BetaPolicy<T>,
    mut observer: F,
) -> Result<Trajectory<T>>
where
    F: FnMut(usize, &PrimalDualPoint<T>) -> Result<()>,
{
    config.validate()?;
    if problem.constraint().is_unconstrained() {
        return Err(Error::InvalidParameter("the solver needs at least one constraint".into()));
    }
    if config.criterion == CriterionKind::Og && problem.reference().is_none() {
        return Err(Error::MissingReference(problem.label().to_string()));
    }
    let mut z = match &config.initial {
        Some(z0) => {
            problem.check_point(z0)?;
            z0.clone()
        }
        None => problem.origin(),
    };
    let thr = gate_threshold(config.criterion, config.gate, config.epsilon);
    let mut iterates = Vec::new();
    let mut k = 0;
    loop {
        observer(k, &z)?;
        let (gate, score) = gate_value(problem, &z, config.criterion, policy, config.gate)?;
        let done = score <= Ext::Finite(thr);
        let last = done || k == config.max_iters;
        if last || k % config.record_every == 0 {
            iterates.push(record(problem, config, policy, k, &z, &gate)?);
        }
        if last {
            let stop_reason = if done { StopReason::Converged } else { StopReason::BudgetExhausted };
            return Ok(Trajectory { iterates, stop_reason, iterations_used: k });
        }
        k += 1;
        z = advance(problem, &z, steps, config.version, k)?;
    }
}

/// Runs `max_iters` steps without evaluating any measure and returns every
/// iterate, start included.
pub fn iterate<T: Real>(
    problem: &ProblemInstance<T>,
    start: &PrimalDualPoint<T>,
    steps: StepSizes<T>,
    version: PdhgVersion,
    max_iters: usize,
) -> Result<Vec<PrimalDualPoint<T>>> {
    problem.check_point(start)?;
    let mut out = Vec::with_capacity(max_iters + 1);
    out.push(start.clone());
    for k in 1..=max_iters {
        let z = out.last().expect("nonempty");
        let next = advance(problem, z, steps, version, k)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::linalg::Matrix;
    use crate::objective::{LeastSquares, Objective};
    use crate::problem::Family;
    use std::sync::Arc;

    /// `f = 0` on ℝ², `A = I`, `b = 0`.
    fn linear_problem() -> ProblemInstance<f64> {
        let f = LeastSquares::new(Matrix::zeros(1, 2), vec![0.0]).unwrap();
        let c = AffineConstraint::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        ProblemInstance::new(Arc::new(f) as Arc<dyn Objective<f64>>, c, Family::Custom, "linear").unwrap()
    }

    #[test]
    fn default_steps() {
        let p = instances::make_1d::<f64>().unwrap();
        let s = default_step_sizes(p.constraint()).unwrap();
        assert!((s.tau - 0.95 / 9.0).abs() < 1e-15);
        assert!((s.sigma - 1.0 / 9.0).abs() < 1e-15);
        let id = AffineConstraint::new(Matrix::<f64>::identity(3), vec![0.0; 3]).unwrap();
        let s = default_step_sizes(&id).unwrap();
        assert!((s.tau - 0.95).abs() < 1e-12 && (s.sigma - 1.0).abs() < 1e-12);
        let r = instances::make_iidg::<f64>(20, 10, 1).unwrap();
        let s = default_step_sizes(r.constraint()).unwrap();
        let n = operator_norm(r.constraint().matrix()).unwrap();
        assert!((s.tau * s.sigma * n * n - 0.95).abs() < 1e-12);
        assert!(StepSizes::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn linear_map_closed_forms() {
        let p = linear_problem();
        let steps = StepSizes { tau: 0.5, sigma: 0.8 };
        let (x, y) = ([1.0, -2.0], [0.5, 3.0]);
        let z = PrimalDualPoint::new(x.to_vec(), y.to_vec());
        let v1 = step_v1(&p, &z, steps).unwrap();
        let v2 = step_v2(&p, &z, steps).unwrap();
        for i in 0..2 {
            let x_bar = x[i] - 0.5 * y[i];
            let y_bar = y[i] + 0.8 * x_bar;
            assert!((v1.x[i] - (x_bar - 0.5 * (y_bar - y[i]))).abs() < 1e-15);
            assert!((v1.y[i] - y_bar).abs() < 1e-15);
            let y_bar = y[i] + 0.8 * x[i];
            let x_bar = x[i] - 0.5 * y_bar;
            assert!((v2.x[i] - x_bar).abs() < 1e-15);
            assert!((v2.y[i] - (y_bar + 0.8 * (x_bar - x[i]))).abs() < 1e-15);
        }
    }

    #[test]
    fn one_dim_first_step_by_hand() {
        let p = instances::make_1d::<f64>().unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let z1 = step_v1(&p, &p.origin(), steps).unwrap();
        let tau = 0.95 / 9.0;
        let x_bar = (2.0 / 9.0) / (1.0 / 81.0 + 1.0 / tau);
        let y_bar = (9.0 * x_bar - 7.0) / 9.0;
        let x1 = x_bar - tau * 9.0 * y_bar;
        assert!((z1.x[0] - x1).abs() < 1e-14);
        assert!((z1.y[0] - y_bar).abs() < 1e-14);
    }

    #[test]
    fn saddle_is_fixed_point() {
        for p in [instances::make_1d::<f64>().unwrap(), instances::make_iidg(20, 10, 2).unwrap()] {
            let r = p.reference().unwrap();
            let z = PrimalDualPoint::new(r.x_star.clone(), r.y_star.clone().unwrap());
            let steps = default_step_sizes(p.constraint()).unwrap();
            for next in [step_v1(&p, &z, steps).unwrap(), step_v2(&p, &z, steps).unwrap()] {
                assert!(vector::dist(&next.stacked(), &z.stacked()) < 1e-10);
            }
        }
    }

    #[test]
    fn budget_of_one() {
        let p = instances::make_1d::<f64>().unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let mut cfg = SolveConfig::new(1e-8, 1, CriterionKind::Kkt);
        let t = solve(&p, &cfg, steps, BetaPolicy::Grid).unwrap();
        assert_eq!(t.iterations_used, 1);
        assert_eq!(t.stop_reason, StopReason::BudgetExhausted);
        assert_eq!(t.iterates.last().unwrap().iteration, 1);
        cfg.max_iters = 0;
        assert!(solve(&p, &cfg, steps, BetaPolicy::Grid).is_err());
    }

    #[test]
    fn one_dim_counts() {
        let p = instances::make_1d::<f64>().unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let count = |k| {
            let cfg = SolveConfig::new(1e-8, 1000, k);
            let t = solve(&p, &cfg, steps, BetaPolicy::Grid).unwrap();
            assert_eq!(t.stop_reason, StopReason::Converged);
            t.iterations_used as i64
        };
        assert!((count(CriterionKind::Kkt) - 12).abs() <= 2);
        assert!((count(CriterionKind::Sdg) - 11).abs() <= 2);
        assert!((count(CriterionKind::Pdg) - 13).abs() <= 2);
    }

    #[test]
    fn record_every_keeps_last() {
        let p = instances::make_1d::<f64>().unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let mut cfg = SolveConfig::new(1e-8, 1000, CriterionKind::Pdg);
        cfg.record_every = 5;
        cfg.record = vec![CriterionKind::Kkt, CriterionKind::Sdg];
        let t = solve(&p, &cfg, steps, BetaPolicy::Grid).unwrap();
        let idx: Vec<usize> = t.iterates.iter().map(|r| r.iteration).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*idx.last().unwrap(), t.iterations_used);
        assert!(t.iterates.iter().all(|r| r.criteria.len() == 3));
    }

    #[test]
    fn deterministic() {
        let p = instances::make_iidg::<f64>(20, 10, 3).unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let cfg = SolveConfig::new(1e-6, 500, CriterionKind::Kkt);
        let a = solve(&p, &cfg, steps, BetaPolicy::Grid).unwrap();
        let b = solve(&p, &cfg, steps, BetaPolicy::Grid).unwrap();
        assert_eq!(a.last_point(), b.last_point());
    }
}

//! Optimality measures at a primal-dual point and the smoothing-parameter
//! selection rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::linalg::vector;
use crate::problem::{PrimalDualPoint, ProblemInstance};
use crate::scalar::Real;

/// Smallest value of the fixed smoothing grid.
pub const GRID_MIN: f64 = 1e-8;
/// Largest value of the fixed smoothing grid.
pub const GRID_MAX: f64 = 100.0;
/// Number of log-spaced grid values.
pub const GRID_POINTS: usize = 40;
/// Negative smoothed-gap values down to this magnitude are treated as round-off.
pub const SDG_ROUNDOFF: f64 = 1e-12;

/// Smoothing parameters `β = (βx, βy)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothingParams<T> {
    pub beta_x: T,
    pub beta_y: T,
}

impl<T: Real> SmoothingParams<T> {
    pub fn new(beta_x: T, beta_y: T) -> Result<Self> {
        let ok = |b: T| b.is_finite() && b > T::zero();
        if ok(beta_x) && ok(beta_y) {
            Ok(Self { beta_x, beta_y })
        } else {
            Err(Error::InvalidParameter(format!("smoothing ({beta_x}, {beta_y}) must be positive and finite")))
        }
    }

    pub fn equal(beta: T) -> Result<Self> {
        Self::new(beta, beta)
    }

    pub fn min(&self) -> T {
        self.beta_x.min(self.beta_y)
    }

    pub fn max(&self) -> T {
        self.beta_x.max(self.beta_y)
    }
}

/// Per-iteration smoothing grid: 40 log-spaced values in `[1e-8, 100]` plus
/// the current feasibility error, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaGrid<T> {
    values: Vec<T>,
}

impl<T: Real> BetaGrid<T> {
    /// The 40 fixed values only.
    pub fn fixed() -> Self {
        Self { values: fixed_grid() }
    }

    /// Fixed values plus `fe`, which is dropped when it is zero or not finite.
    pub fn with_feasibility(fe: T) -> Self {
        let mut values = fixed_grid();
        if fe > T::zero() && fe.is_finite() {
            let at = values.partition_point(|&v| v < fe);
            values.insert(at, fe);
        }
        Self { values }
    }

    pub fn from_values(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be positive and finite".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Equal primal and dual smoothing for every grid value.
    pub fn params(&self) -> impl Iterator<Item = SmoothingParams<T>> + '_ {
        self.values.iter().map(|&b| SmoothingParams { beta_x: b, beta_y: b })
    }
}

fn fixed_grid<T: Real>() -> Vec<T> {
    let (lo, hi) = (GRID_MIN.log10(), GRID_MAX.log10());
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS)
        .map(|i| {
            let e = if i + 1 == GRID_POINTS { hi } else { lo + step * i as f64 };
            T::lit(10f64.powf(e))
        })
        .collect()
}

/// Which optimality measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Og,
    Fe,
    Kkt,
    Pdg,
    Sdg,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] =
        [CriterionKind::Og, CriterionKind::Fe, CriterionKind::Kkt, CriterionKind::Pdg, CriterionKind::Sdg];

    pub fn label(self) -> &'static str {
        match self {
            CriterionKind::Og => "og",
            CriterionKind::Fe => "fe",
            CriterionKind::Kkt => "kkt",
            CriterionKind::Pdg => "pdg",
            CriterionKind::Sdg => "sdg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s.to_ascii_lowercase())
    }
}

/// Value of one measure with its witnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionValue<T> {
    pub kind: CriterionKind,
    pub value: Ext<T>,
    /// Smoothed-gap prox point `p`.
    pub p: Option<Vec<T>>,
    /// Projected dual certificate `a`.
    pub a: Option<Vec<T>>,
    pub beta: Option<SmoothingParams<T>>,
}

impl<T: Real> CriterionValue<T> {
    fn scalar(kind: CriterionKind, value: Ext<T>) -> Self {
        Self { kind, value, p: None, a: None, beta: None }
    }
}

/// Quantities shared by all measures at one point.
#[derive(Clone, Debug)]
pub struct PointState<T> {
    /// `Aᵀy`
    pub aty: Vec<T>,
    /// `Ax − b`
    pub residual: Vec<T>,
    /// `‖Ax − b‖`
    pub fe: T,
}

impl<T: Real> PointState<T> {
    pub fn new(problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>) -> Result<Self> {
        problem.check_point(z)?;
        let c = problem.constraint();
        let residual = c.residual(&z.x);
        let fe = vector::norm(&residual);
        Ok(Self { aty: c.apply_t(&z.y), residual, fe })
    }
}

pub fn feasibility_error<T: Real>(problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>) -> Result<CriterionValue<T>> {
    let st = PointState::new(problem, z)?;
    Ok(CriterionValue::scalar(CriterionKind::Fe, Ext::Finite(st.fe)))
}

/// `max(f(x) − f*, 0)`; needs a reference solution.
pub fn optimality_gap<T: Real>(problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>) -> Result<CriterionValue<T>> {
    problem.check_point(z)?;
    let f_star = problem.reference().ok_or_else(|| Error::MissingReference(problem.label().to_string()))?.f_star;
    let og = problem.objective().eval(&z.x).map(|fx| (fx - f_star).max(T::zero()));
    Ok(CriterionValue::scalar(CriterionKind::Og, og))
}

/// Optimality gap and feasibility error.
pub fn ogfe<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
) -> Result<(CriterionValue<T>, CriterionValue<T>)> {
    Ok((optimality_gap(problem, z)?, feasibility_error(problem, z)?))
}

/// `‖∂f(x) + Aᵀy‖₀² + ‖Ax − b‖²`
pub fn kkt_error<T: Real>(problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>) -> Result<CriterionValue<T>> {
    let st = PointState::new(problem, z)?;
    Ok(kkt_with_state(problem, z, &st))
}

pub(crate) fn kkt_with_state<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    st: &PointState<T>,
) -> CriterionValue<T> {
    let stat = problem.objective().stationarity_residual(&z.x, &st.aty);
    CriterionValue::scalar(CriterionKind::Kkt, stat.map(|s| s + st.fe * st.fe))
}

/// `|f(x) + f*(a) + ⟨b, y⟩|² + ‖a + Aᵀy‖² + ‖Ax − b‖²` with
/// `a = Proj_{dom f*}(−Aᵀy)`.
pub fn projected_duality_gap<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
) -> Result<CriterionValue<T>> {
    let st = PointState::new(problem, z)?;
    pdg_with_state(problem, z, &st)
}

pub(crate) fn pdg_with_state<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    st: &PointState<T>,
) -> Result<CriterionValue<T>> {
    let f = problem.objective();
    let neg: Vec<T> = st.aty.iter().map(|&v| -v).collect();
    let a = f.project_conj_domain(&neg);
    let conj = match f.conjugate(&a) {
        Ext::Finite(v) => v,
        Ext::Infinite => return Err(Error::ConjugateOutsideDomain),
    };
    let by = vector::dot(problem.constraint().rhs(), &z.y);
    let proj_err = vector::norm_sq(&vector::add(&a, &st.aty));
    let value = f.eval(&z.x).map(|fx| {
        let gap = fx + conj + by;
        gap * gap + proj_err + st.fe * st.fe
    });
    Ok(CriterionValue { kind: CriterionKind::Pdg, value, p: None, a: Some(a), beta: None })
}

/// Self-centered smoothed gap
/// `f(x) − f(p) + ⟨A(x − p), y⟩ − (βx/2)‖p − x‖² + ‖Ax − b‖²/(2βy)` with
/// `p = prox_{f/βx}(x − Aᵀy/βx)`.
pub fn smoothed_duality_gap<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    beta: SmoothingParams<T>,
) -> Result<CriterionValue<T>> {
    let st = PointState::new(problem, z)?;
    sdg_with_state(problem, z, &st, beta)
}

pub(crate) fn sdg_with_state<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    st: &PointState<T>,
    beta: SmoothingParams<T>,
) -> Result<CriterionValue<T>> {
    let f = problem.objective();
    let bx = beta.beta_x;
    let d = f.prox_displacement(T::one() / bx, &z.x, &st.aty);
    if !vector::all_finite(&d) {
        return Err(Error::NonFiniteProx);
    }
    let p = vector::sub(&z.x, &d);
    let primal = f.smoothed_gap_primal(&z.x, &d, &st.aty, bx);
    let dual = st.fe * st.fe / (T::lit(2.0) * beta.beta_y);
    let value = primal.map(|v| {
        let g = v + dual;
        if g < T::zero() && g >= -T::lit(SDG_ROUNDOFF) {
            T::zero()
        } else {
            g
        }
    });
    Ok(CriterionValue { kind: CriterionKind::Sdg, value, p: Some(p), a: None, beta: Some(beta) })
}

/// Smoothed gap at every grid value.
pub fn sdg_over_grid<T: Real>(
    problem: &ProblemInstance<T>,
    z: &PrimalDualPoint<T>,
    grid: &BetaGrid<T>,
) -> Result<Vec<CriterionValue<T>>> {
    let st = PointState::new(problem, z)?;
    grid.params().map(|b| sdg_with_state(problem, z, &st, b)).collect()
}

/// `max(𝒢, √(2βy𝒢))`, an upper bound on both the feasibility error and the
/// smoothed gap itself.
pub fn sdg_surrogate<T: Real>(gap: Ext<T>, beta_y: T) -> Ext<T> {
    gap.map(|g| {
        let g = g.max(T::zero());
        g.max((T::lit(2.0) * beta_y * g).sqrt())
    })
}

/// How the grid value is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Minimize the right-hand side.
    OneSided,
    /// Minimize right-hand side over left-hand side.
    Ratio,
}

/// One grid value with the two sides of an inequality evaluated at it.
#[derive(Clone, Copy, Debug)]
pub struct BetaCandidate<T> {
    pub beta: SmoothingParams<T>,
    pub lhs: Ext<T>,
    pub rhs: Ext<T>,
}

/// Outcome of [`select_beta`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSelection<T> {
    pub index: usize,
    pub beta: SmoothingParams<T>,
    /// No candidate was admissible, the smallest β was used instead.
    pub fallback: bool,
}

/// Picks the candidate minimizing `rhs` (one-sided) or `rhs/lhs` (ratio).
///
/// Infinite scores are never selected and ties go to the smaller β. With no
/// admissible candidate, the smallest β is returned flagged as a fallback.
pub fn select_beta<T: Real>(candidates: &[BetaCandidate<T>], mode: SelectionMode) -> Result<BetaSelection<T>> {
    if candidates.is_empty() {
        return Err(Error::Empty("beta candidates"));
    }
    let score = |c: &BetaCandidate<T>| -> Option<T> {
        let rhs = c.rhs.finite()?;
        match mode {
            SelectionMode::OneSided => Some(rhs),
            SelectionMode::Ratio => {
                let lhs = c.lhs.finite()?;
                (lhs > T::zero()).then(|| rhs / lhs)
            }
        }
    };
    let mut best: Option<(usize, T)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(s) = score(c).filter(|s| !s.is_nan()) else { continue };
        let better = match best {
            None => true,
            Some((j, bs)) => s < bs || (s == bs && c.beta.beta_x < candidates[j].beta.beta_x),
        };
        if better {
            best = Some((i, s));
        }
    }
    match best {
        Some((index, _)) => Ok(BetaSelection { index, beta: candidates[index].beta, fallback: false }),
        None => {
            let index = candidates
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.beta.beta_x.partial_cmp(&b.1.beta.beta_x).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(i, _)| i)
                .unwrap_or(0);
            Ok(BetaSelection { index, beta: candidates[index].beta, fallback: true })
        }
    }
}

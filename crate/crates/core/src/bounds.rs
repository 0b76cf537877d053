//! Inequalities relating the optimality measures, evaluated at a point.

use serde::{Deserialize, Serialize};

use crate::criteria::{self, BetaCandidate, BetaGrid, CriterionValue, PointState, SelectionMode, SmoothingParams};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::linalg::vector;
use crate::problem::{PrimalDualPoint, ProblemInstance};
use crate::regularity::{lipschitz_constants, EtaModel, RegularityConstants};
use crate::scalar::Real;

/// Relative slack of [`BoundReport::holds`].
pub const RELATIVE_SLACK: f64 = 1e-9;
/// Absolute slack of [`BoundReport::holds`].
pub const ABSOLUTE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "T1_OG_KKT")]
    OgKkt,
    #[serde(rename = "T2_OG_SDG")]
    OgSdg,
    /// The optimality-gap bound with the constant `1 + √(2βx/η)`.
    #[serde(rename = "T2_OG_SDG_stated")]
    OgSdgStated,
    #[serde(rename = "T3_OG_PDG")]
    OgPdg,
    #[serde(rename = "T4_SDG_KKT")]
    SdgKkt,
    #[serde(rename = "T5_KKT_SDG")]
    KktSdg,
    #[serde(rename = "T6_SDG_PDG")]
    SdgPdg,
    #[serde(rename = "T7_PDG_SDG_manifold")]
    PdgSdgManifold,
    #[serde(rename = "P4_PDG_SDG_lipschitz")]
    PdgSdgLipschitz,
    #[serde(rename = "C1_FE_SDG")]
    FeSdg,
    #[serde(rename = "L6_SDG_floor")]
    SdgFloor,
}

impl TheoremId {
    pub const ALL: [TheoremId; 11] = [
        TheoremId::OgKkt,
        TheoremId::OgSdg,
        TheoremId::OgSdgStated,
        TheoremId::OgPdg,
        TheoremId::SdgKkt,
        TheoremId::KktSdg,
        TheoremId::SdgPdg,
        TheoremId::PdgSdgManifold,
        TheoremId::PdgSdgLipschitz,
        TheoremId::FeSdg,
        TheoremId::SdgFloor,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TheoremId::OgKkt => "T1_OG_KKT",
            TheoremId::OgSdg => "T2_OG_SDG",
            TheoremId::OgSdgStated => "T2_OG_SDG_stated",
            TheoremId::OgPdg => "T3_OG_PDG",
            TheoremId::SdgKkt => "T4_SDG_KKT",
            TheoremId::KktSdg => "T5_KKT_SDG",
            TheoremId::SdgPdg => "T6_SDG_PDG",
            TheoremId::PdgSdgManifold => "T7_PDG_SDG_manifold",
            TheoremId::PdgSdgLipschitz => "P4_PDG_SDG_lipschitz",
            TheoremId::FeSdg => "C1_FE_SDG",
            TheoremId::SdgFloor => "L6_SDG_floor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.label() == s)
    }

    /// Whether β is chosen by minimizing the right-hand side (β appears on
    /// the right only) or the ratio.
    pub fn selection_mode(self) -> SelectionMode {
        match self {
            TheoremId::SdgKkt | TheoremId::KktSdg | TheoremId::SdgPdg | TheoremId::SdgFloor => SelectionMode::Ratio,
            _ => SelectionMode::OneSided,
        }
    }

    /// Needs the optimal value.
    pub fn needs_reference(self) -> bool {
        matches!(self, TheoremId::OgKkt | TheoremId::OgSdg | TheoremId::OgSdgStated | TheoremId::OgPdg)
    }
}

/// `rhs/lhs`, with the conventions for degenerate sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio<T> {
    Finite(T),
    /// Infinite right side, or a zero left side under a positive right side.
    Infinite,
    /// `0/0` or a negative left side.
    Undefined,
}

impl<T: Real> Ratio<T> {
    pub fn of(lhs: T, rhs: Ext<T>) -> Self {
        match rhs {
            Ext::Infinite => Ratio::Infinite,
            Ext::Finite(r) => {
                if lhs > T::zero() {
                    Ratio::Finite(r / lhs)
                } else if lhs == T::zero() && r > T::zero() {
                    Ratio::Infinite
                } else {
                    Ratio::Undefined
                }
            }
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Ratio::Finite(v) => v.as_f64(),
            Ratio::Infinite => f64::INFINITY,
            Ratio::Undefined => f64::NAN,
        }
    }
}

/// One inequality `lhs ≤ rhs` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport<T> {
    pub theorem: TheoremId,
    pub lhs: T,
    pub rhs: Ext<T>,
    pub ratio: Ratio<T>,
    pub beta: Option<SmoothingParams<T>>,
    pub holds: bool,
}

impl<T: Real> BoundReport<T> {
    pub fn new(theorem: TheoremId, lhs: T, rhs: Ext<T>, beta: Option<SmoothingParams<T>>) -> Self {
        let holds = match rhs {
            Ext::Infinite => true,
            Ext::Finite(r) => lhs <= r * (T::one() + T::lit(RELATIVE_SLACK)) + T::lit(ABSOLUTE_SLACK),
        };
        Self { theorem, lhs, rhs, ratio: Ratio::of(lhs, rhs), beta, holds }
    }
}

fn two<T: Real>() -> T {
    T::lit(2.0)
}

/// `f(x) − f* ≤ (2/γ)𝒦 + ‖y‖√𝒦`
pub fn bound_t1<T: Real>(og: T, kkt: T, y_norm: T, gamma: T) -> BoundReport<T> {
    let rhs = two::<T>() / gamma * kkt + y_norm * kkt.sqrt();
    BoundReport::new(TheoremId::OgKkt, og, Ext::Finite(rhs), None)
}

/// `f(x) − f* ≤ (1 + 2√(βx/η))𝒢 + √(2βy)‖y‖√𝒢`
pub fn bound_t2<T: Real>(og: T, gap: T, y_norm: T, beta: SmoothingParams<T>, eta: T) -> BoundReport<T> {
    let c = two::<T>() * (beta.beta_x / eta).sqrt();
    t2_with_constant(TheoremId::OgSdg, og, gap, y_norm, beta, c)
}

/// [`bound_t2`] with the constant `√(2βx/η)`.
pub fn bound_t2_stated<T: Real>(og: T, gap: T, y_norm: T, beta: SmoothingParams<T>, eta: T) -> BoundReport<T> {
    let c = (two::<T>() * beta.beta_x / eta).sqrt();
    t2_with_constant(TheoremId::OgSdgStated, og, gap, y_norm, beta, c)
}

fn t2_with_constant<T: Real>(
    id: TheoremId,
    og: T,
    gap: T,
    y_norm: T,
    beta: SmoothingParams<T>,
    c: T,
) -> BoundReport<T> {
    let g = gap.max(T::zero());
    let rhs = (T::one() + c) * g + (two::<T>() * beta.beta_y).sqrt() * y_norm * g.sqrt();
    BoundReport::new(id, og, Ext::Finite(rhs), Some(beta))
}

/// `f(x) − f* ≤ (1 + ‖x‖ + √(2/η)·√((1+‖x‖+‖y‖)√𝒟 + 𝒟/(2β_min)))·√𝒟`
pub fn bound_t3<T: Real>(og: T, pdg: T, x_norm: T, y_norm: T, beta: SmoothingParams<T>, eta: T) -> BoundReport<T> {
    let sd = pdg.sqrt();
    let inner = (T::one() + x_norm + y_norm) * sd + pdg / (two::<T>() * beta.min());
    let rhs = (T::one() + x_norm + (two::<T>() / eta).sqrt() * inner.sqrt()) * sd;
    BoundReport::new(TheoremId::OgPdg, og, Ext::Finite(rhs), Some(beta))
}

/// `max(1/βx, 1/(2βy))`
pub fn lower_smoothing_factor<T: Real>(beta: SmoothingParams<T>) -> T {
    (T::one() / beta.beta_x).max(T::one() / (two::<T>() * beta.beta_y))
}

/// `max(2(L+βx)²/βx, 2βy)`
pub fn upper_smoothing_factor<T: Real>(beta: SmoothingParams<T>, l: T) -> T {
    let s = l + beta.beta_x;
    (two::<T>() * s * s / beta.beta_x).max(two::<T>() * beta.beta_y)
}

/// `𝒢 ≤ max(1/βx, 1/(2βy))·𝒦`
pub fn bound_t4<T: Real>(gap: T, kkt: Ext<T>, beta: SmoothingParams<T>) -> BoundReport<T> {
    let rhs = kkt.map(|k| lower_smoothing_factor(beta) * k);
    BoundReport::new(TheoremId::SdgKkt, gap, rhs, Some(beta))
}

/// `𝒦 ≤ max(2(L+βx)²/βx, 2βy)·𝒢`; the right side is infinite when `f` is
/// not smooth.
pub fn bound_t5<T: Real>(kkt: T, gap: T, beta: SmoothingParams<T>, l: Option<T>) -> BoundReport<T> {
    let rhs = match l {
        Some(l) => Ext::Finite(upper_smoothing_factor(beta, l) * gap.max(T::zero())),
        None => Ext::Infinite,
    };
    BoundReport::new(TheoremId::KktSdg, kkt, rhs, Some(beta))
}

/// `𝒢 ≤ (1+‖x‖+‖y‖)√𝒟 + 𝒟/(2β_min)`
pub fn bound_t6<T: Real>(gap: T, pdg: T, x_norm: T, y_norm: T, beta: SmoothingParams<T>) -> BoundReport<T> {
    let rhs = (T::one() + x_norm + y_norm) * pdg.sqrt() + pdg / (two::<T>() * beta.min());
    BoundReport::new(TheoremId::SdgPdg, gap, Ext::Finite(rhs), Some(beta))
}

/// `𝒟 ≤ ((3+βx·L_g)𝒢 + (√(2βx)(2‖x‖+L_{f₁*}) + √(2βy)‖y‖)√𝒢)² + 2β_max𝒢`
pub fn bound_t7<T: Real>(
    pdg: T,
    gap: T,
    x_norm: T,
    y_norm: T,
    beta: SmoothingParams<T>,
    l_g: T,
    l_f1_star: T,
) -> BoundReport<T> {
    let g = gap.max(T::zero());
    let lin = (T::lit(3.0) + beta.beta_x * l_g) * g;
    let coef = (two::<T>() * beta.beta_x).sqrt() * (two::<T>() * x_norm + l_f1_star)
        + (two::<T>() * beta.beta_y).sqrt() * y_norm;
    let s = lin + coef * g.sqrt();
    let rhs = s * s + two::<T>() * beta.max() * g;
    BoundReport::new(TheoremId::PdgSdgManifold, pdg, Ext::Finite(rhs), Some(beta))
}

/// `𝒟 ≤ (𝒢 + (√(2βx)(‖x‖+L_{f*}) + √(2βy)‖y‖)√𝒢)² + 2β_max𝒢`
pub fn bound_p4<T: Real>(
    pdg: T,
    gap: T,
    x_norm: T,
    y_norm: T,
    beta: SmoothingParams<T>,
    l_f_star: T,
) -> BoundReport<T> {
    let g = gap.max(T::zero());
    let coef = (two::<T>() * beta.beta_x).sqrt() * (x_norm + l_f_star) + (two::<T>() * beta.beta_y).sqrt() * y_norm;
    let s = g + coef * g.sqrt();
    let rhs = s * s + two::<T>() * beta.max() * g;
    BoundReport::new(TheoremId::PdgSdgLipschitz, pdg, Ext::Finite(rhs), Some(beta))
}

/// `‖Ax − b‖ ≤ √(2βy𝒢)`
pub fn bound_c1<T: Real>(fe: T, gap: T, beta: SmoothingParams<T>) -> BoundReport<T> {
    let rhs = (two::<T>() * beta.beta_y * gap.max(T::zero())).sqrt();
    BoundReport::new(TheoremId::FeSdg, fe, Ext::Finite(rhs), Some(beta))
}

/// `(βx/2)‖x − p‖² + ‖Ax − b‖²/(2βy) ≤ 𝒢`
pub fn bound_l6<T: Real>(step_sq: T, fe: T, gap: T, beta: SmoothingParams<T>) -> BoundReport<T> {
    let floor = beta.beta_x / two::<T>() * step_sq + fe * fe / (two::<T>() * beta.beta_y);
    BoundReport::new(TheoremId::SdgFloor, floor, Ext::Finite(gap), Some(beta))
}

/// Mean and spread of the finite ratios of one inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioStats {
    pub theorem: TheoremId,
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
    pub infinite_count: usize,
    pub undefined_count: usize,
}

/// Population mean and standard deviation of the finite ratios.
pub fn ratio_stats<T: Real>(reports: &[BoundReport<T>]) -> Result<RatioStats> {
    let first = reports.first().ok_or(Error::Empty("bound reports"))?;
    if reports.iter().any(|r| r.theorem != first.theorem) {
        return Err(Error::InvalidParameter("reports of different inequalities".into()));
    }
    let mut finite = Vec::new();
    let (mut infinite, mut undefined) = (0, 0);
    for r in reports {
        match r.ratio {
            Ratio::Finite(v) if v.is_finite() => finite.push(v.as_f64()),
            Ratio::Finite(_) | Ratio::Infinite => infinite += 1,
            Ratio::Undefined => undefined += 1,
        }
    }
    if finite.is_empty() {
        return Err(Error::NoFiniteRatios { infinite, undefined });
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(RatioStats {
        theorem: first.theorem,
        mean,
        std_dev: var.sqrt(),
        count: finite.len(),
        infinite_count: infinite,
        undefined_count: undefined,
    })
}

/// Everything measured at one point that the inequalities consume.
#[derive(Clone, Debug)]
pub struct PointMeasures<T> {
    /// `f(x) − f*`, unclamped.
    pub og: Option<T>,
    pub fe: T,
    pub kkt: Ext<T>,
    pub pdg: T,
    pub x_norm: T,
    pub y_norm: T,
    /// Smoothed gap at every grid value, aligned with the grid.
    pub gaps: Vec<CriterionValue<T>>,
    pub grid: BetaGrid<T>,
}

/// Evaluates every applicable inequality along a trajectory of one instance.
#[derive(Debug)]
pub struct BoundEvaluator<'a, T> {
    problem: &'a ProblemInstance<T>,
    constants: RegularityConstants<T>,
    /// η at each fixed grid value.
    etas: Vec<(T, T)>,
}

impl<'a, T: Real> BoundEvaluator<'a, T> {
    pub fn new(problem: &'a ProblemInstance<T>) -> Result<Self> {
        let constants = lipschitz_constants(problem)?;
        let model = EtaModel::for_instance(problem);
        let etas = BetaGrid::<T>::fixed()
            .values()
            .iter()
            .map(|&b| Ok((b, model.eta(SmoothingParams::equal(b)?)?)))
            .collect::<Result<_>>()?;
        Ok(Self { problem, constants, etas })
    }

    pub fn constants(&self) -> &RegularityConstants<T> {
        &self.constants
    }

    /// Inequalities this instance supports, in report order.
    pub fn theorems(&self) -> Vec<TheoremId> {
        TheoremId::ALL
            .into_iter()
            .filter(|t| !t.needs_reference() || self.problem.reference().is_some())
            .filter(|t| match t {
                TheoremId::PdgSdgManifold => self.constants.l_f1_star.is_some() && self.constants.l_g.is_some(),
                TheoremId::PdgSdgLipschitz => self.constants.l_f_star.is_some(),
                _ => true,
            })
            .collect()
    }

    pub fn measures(&self, z: &PrimalDualPoint<T>) -> Result<PointMeasures<T>> {
        let p = self.problem;
        let st = PointState::new(p, z)?;
        let og = p.reference().map(|r| p.objective().eval(&z.x).value() - r.f_star);
        let kkt = criteria::kkt_with_state(p, z, &st).value;
        let pdg = criteria::pdg_with_state(p, z, &st)?.value.value();
        let grid = BetaGrid::with_feasibility(st.fe);
        let gaps = grid.params().map(|b| criteria::sdg_with_state(p, z, &st, b)).collect::<Result<_>>()?;
        Ok(PointMeasures {
            og,
            fe: st.fe,
            kkt,
            pdg,
            x_norm: vector::norm(&z.x),
            y_norm: vector::norm(&z.y),
            gaps,
            grid,
        })
    }

    /// One report per supported inequality, each at its selected β.
    pub fn evaluate(&self, z: &PrimalDualPoint<T>) -> Result<Vec<BoundReport<T>>> {
        let m = self.measures(z)?;
        self.theorems().into_iter().map(|t| self.report(t, z, &m)).collect()
    }

    fn report(&self, theorem: TheoremId, z: &PrimalDualPoint<T>, m: &PointMeasures<T>) -> Result<BoundReport<T>> {
        let c = &self.constants;
        let og = || m.og.ok_or_else(|| Error::MissingReference(self.problem.label().to_string()));
        if theorem == TheoremId::OgKkt {
            let rhs_kkt = m.kkt.value();
            return Ok(bound_t1(og()?, rhs_kkt, m.y_norm, c.gamma.value));
        }
        let gap_at = |v: &CriterionValue<T>| v.value.value();
        let by_beta = |f: &dyn Fn(SmoothingParams<T>, T) -> BoundReport<T>| -> Vec<BoundReport<T>> {
            m.grid.params().zip(&m.gaps).map(|(b, v)| f(b, gap_at(v))).collect()
        };
        let reports: Vec<BoundReport<T>> = match theorem {
            TheoremId::OgKkt => unreachable!(),
            TheoremId::OgSdg | TheoremId::OgSdgStated | TheoremId::OgPdg => {
                let og = og()?;
                // η is cached on the fixed grid only.
                let mut out = Vec::with_capacity(self.etas.len());
                for &(b, eta) in &self.etas {
                    let beta = SmoothingParams::equal(b)?;
                    let idx = m.grid.values().iter().position(|&v| v == b).expect("fixed value in grid");
                    let g = gap_at(&m.gaps[idx]);
                    out.push(match theorem {
                        TheoremId::OgSdg => bound_t2(og, g, m.y_norm, beta, eta),
                        TheoremId::OgSdgStated => bound_t2_stated(og, g, m.y_norm, beta, eta),
                        _ => bound_t3(og, m.pdg, m.x_norm, m.y_norm, beta, eta),
                    });
                }
                out
            }
            TheoremId::SdgKkt => by_beta(&|b, g| bound_t4(g, m.kkt, b)),
            TheoremId::KktSdg => by_beta(&|b, g| bound_t5(m.kkt.value(), g, b, c.l)),
            TheoremId::SdgPdg => by_beta(&|b, g| bound_t6(g, m.pdg, m.x_norm, m.y_norm, b)),
            TheoremId::PdgSdgManifold => {
                let (l_g, l_f1) = c.l_g.zip(c.l_f1_star).ok_or(Error::NotApplicable("separable conjugate"))?;
                by_beta(&|b, g| bound_t7(m.pdg, g, m.x_norm, m.y_norm, b, l_g, l_f1))
            }
            TheoremId::PdgSdgLipschitz => {
                let l = c.l_f_star.ok_or(Error::NotApplicable("Lipschitz conjugate"))?;
                by_beta(&|b, g| bound_p4(m.pdg, g, m.x_norm, m.y_norm, b, l))
            }
            TheoremId::FeSdg => by_beta(&|b, g| bound_c1(m.fe, g, b)),
            TheoremId::SdgFloor => m
                .grid
                .params()
                .zip(&m.gaps)
                .map(|(b, v)| {
                    let p = v.p.as_deref().expect("smoothed gap carries its prox point");
                    bound_l6(vector::norm_sq(&vector::sub(&z.x, p)), m.fe, gap_at(v), b)
                })
                .collect(),
        };
        let candidates: Vec<BetaCandidate<T>> = reports
            .iter()
            .map(|r| BetaCandidate { beta: r.beta.expect("smoothed bound"), lhs: Ext::Finite(r.lhs), rhs: r.rhs })
            .collect();
        let sel = criteria::select_beta(&candidates, theorem.selection_mode())?;
        Ok(reports[sel.index])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_1d, make_bp, make_iidg, make_pqp};
    use crate::pdhg::{default_step_sizes, iterate, PdhgVersion};

    fn beta(b: f64) -> SmoothingParams<f64> {
        SmoothingParams::equal(b).unwrap()
    }

    #[test]
    fn saddle_values_hold() {
        let b = beta(1.0);
        for r in [
            bound_t1(0.0, 0.0, 1.0, 1e-8),
            bound_t2(0.0, 0.0, 1.0, b, 1e-8),
            bound_t3(0.0, 0.0, 1.0, 1.0, b, 1e-8),
            bound_t4(0.0, Ext::Finite(0.0), b),
            bound_t5(0.0, 0.0, b, Some(1.0)),
            bound_t6(0.0, 0.0, 1.0, 1.0, b),
            bound_t7(0.0, 0.0, 1.0, 1.0, b, 1.0, 0.0),
            bound_p4(0.0, 0.0, 1.0, 1.0, b, 0.0),
            bound_c1(0.0, 0.0, b),
            bound_l6(0.0, 0.0, 0.0, b),
        ] {
            assert!(r.holds, "{r:?}");
            assert_eq!(r.rhs, Ext::Finite(0.0));
            assert_eq!(r.ratio, Ratio::Undefined);
        }
    }

    #[test]
    fn factors() {
        assert_eq!(lower_smoothing_factor(beta(1.0)), 1.0);
        assert_eq!(upper_smoothing_factor(beta(1.0), 0.0), 2.0);
        let r = bound_t5(1.0, 1.0, beta(1.0), None);
        assert_eq!(r.rhs, Ext::Infinite);
        assert_eq!(r.ratio, Ratio::Infinite);
        assert!(r.holds);
    }

    #[test]
    fn limits_and_scaling() {
        // βx → 0 drops the η term.
        let r = bound_t2(0.0, 4.0, 1.0, SmoothingParams::new(1e-300, 0.5).unwrap(), 1.0);
        assert!((r.rhs.value() - 6.0_f64).abs() < 1e-12);
        assert!(bound_t2_stated(0.0, 4.0, 1.0, beta(2.0), 1.0).rhs < bound_t2(0.0, 4.0, 1.0, beta(2.0), 1.0).rhs);
        // √βy scaling of the feasibility bound.
        let a = bound_c1(0.0, 2.0, SmoothingParams::new(1.0, 1.0).unwrap()).rhs.value();
        let b = bound_c1(0.0, 2.0, SmoothingParams::new(1.0, 4.0).unwrap()).rhs.value();
        assert!((b / a - 2.0_f64).abs() < 1e-14);
        // Large γ⁻¹ inflates the first bound.
        assert!((bound_t1(1.0, 1e-4, 0.0, 1e-8).rhs.value() - 2e4_f64).abs() < 1e-6);
        assert_eq!(bound_t3(0.5, 0.0, 1.0, 1.0, beta(1.0), 1.0).rhs, Ext::Finite(0.0));
        assert_eq!(bound_t6(0.5, 0.0, 1.0, 1.0, beta(1.0)).rhs, Ext::Finite(0.0));
    }

    #[test]
    fn lipschitz_bound_is_tighter() {
        for &(g, x, y, b) in &[(0.1, 1.0, 2.0, 0.5), (3.0, 0.0, 1.0, 2.0), (1e-6, 5.0, 5.0, 1e-3)] {
            let t7 = bound_t7(0.0, g, x, y, beta(b), 0.0, 0.7).rhs.value();
            let p4 = bound_p4(0.0, g, x, y, beta(b), 0.7).rhs.value();
            assert!(p4 <= t7);
        }
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(Ratio::of(0.0, Ext::Finite(1.0)), Ratio::Infinite);
        assert_eq!(Ratio::of(0.0, Ext::Finite(0.0)), Ratio::<f64>::Undefined);
        assert_eq!(Ratio::of(-1.0, Ext::Finite(1.0)), Ratio::Undefined);
        assert_eq!(Ratio::of(2.0, Ext::Finite(1.0)), Ratio::Finite(0.5));
    }

    #[test]
    fn stats() {
        let b = Some(beta(1.0));
        let mk = |lhs: f64, rhs: Ext<f64>| BoundReport::new(TheoremId::SdgKkt, lhs, rhs, b);
        let s = ratio_stats(&[mk(1.0, Ext::Finite(3.0)), mk(2.0, Ext::Finite(6.0))]).unwrap();
        assert_eq!((s.mean, s.std_dev, s.count), (3.0, 0.0, 2));
        let s = ratio_stats(&[mk(1.0, Ext::Finite(2.0)), mk(1.0, Ext::Infinite), mk(1.0, Ext::Finite(4.0))]).unwrap();
        assert_eq!((s.mean, s.std_dev, s.infinite_count), (3.0, 1.0, 1));
        assert!(matches!(
            ratio_stats(&[mk(1.0, Ext::Infinite)]),
            Err(Error::NoFiniteRatios { infinite: 1, undefined: 0 })
        ));
        assert!(ratio_stats::<f64>(&[]).is_err());
        let other = BoundReport::new(TheoremId::FeSdg, 1.0, Ext::Finite(1.0), b);
        assert!(ratio_stats(&[mk(1.0, Ext::Finite(1.0)), other]).is_err());
    }

    #[test]
    fn applicable_sets() {
        let bp = make_bp::<f64>(20, 10, 1).unwrap();
        let e = BoundEvaluator::new(&bp).unwrap();
        let t = e.theorems();
        assert!(t.contains(&TheoremId::PdgSdgLipschitz));
        assert!(!t.contains(&TheoremId::PdgSdgManifold));
        assert!(!t.contains(&TheoremId::OgKkt));
        let qp = make_pqp::<f64>(20, 10, 2).unwrap();
        let t = BoundEvaluator::new(&qp).unwrap().theorems();
        assert!(t.contains(&TheoremId::PdgSdgManifold) && t.contains(&TheoremId::OgKkt));
        assert!(!t.contains(&TheoremId::PdgSdgLipschitz));
    }

    #[test]
    fn one_dim_trajectory_holds_and_t4_ratio() {
        let p = make_1d::<f64>().unwrap();
        let e = BoundEvaluator::new(&p).unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let pts = iterate(&p, &p.origin(), steps, PdhgVersion::V1, 14).unwrap();
        let mut t4 = Vec::new();
        for z in &pts {
            for r in e.evaluate(z).unwrap() {
                assert!(r.holds, "{r:?}");
                if r.theorem == TheoremId::SdgKkt {
                    t4.push(r);
                }
            }
        }
        let s = ratio_stats(&t4).unwrap();
        assert!(s.mean > 1.76 / 3.0 && s.mean < 1.76 * 3.0, "{s:?}");
    }

    #[test]
    fn random_trajectories_hold() {
        for p in [make_iidg::<f64>(20, 10, 2).unwrap(), make_bp(20, 10, 2).unwrap()] {
            let e = BoundEvaluator::new(&p).unwrap();
            let steps = default_step_sizes(p.constraint()).unwrap();
            for z in iterate(&p, &p.origin(), steps, PdhgVersion::V1, 300).unwrap().iter().step_by(7) {
                for r in e.evaluate(z).unwrap() {
                    assert!(r.holds, "{r:?}");
                }
            }
        }
    }
}

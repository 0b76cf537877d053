//! Independent verifiers for the criteria, bounds and regularity constants.

pub mod chart;
pub mod counterexamples;
pub mod gap;
pub mod probe;
pub mod prox;
pub mod witness;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, SmoothingParams};
use crate::error::{Error, Result};
use crate::instances::{DoSource, InstanceSpec};
use crate::linalg::{vector, Matrix};
use crate::objective::Structure;
use crate::problem::{Family, PrimalDualPoint, ProblemInstance};
use crate::regularity::{self, SaddleSet};

pub use chart::{diffeomorphism_checks, AffineChart, ChartReport};
pub use counterexamples::{counterexample_kkt_vs_og, counterexample_kkt_vs_sdg, KktOgRow, KktSdgRow};
pub use gap::{decomposition, general_gap, sdg_direct, Decomposition};
pub use probe::{pdhg_instability_probe, GateOutcome, InstabilityReport};
pub use prox::{prox_oracle_separable, prox_oracle_smooth, GradientSpec, GridSpec};
pub use witness::{GapWitness, WitnessResiduals};

pub const SDG_TOLERANCE: f64 = 1e-6;
pub const WITNESS_TOLERANCE: f64 = 1e-9;
pub const CERTIFICATE_SLACK: f64 = 1e-8;
pub const QUADRATIC_FORM_TOLERANCE: f64 = 1e-7;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-6;
pub const COUNTEREXAMPLE_TOLERANCE: f64 = 1e-12;
pub const CHART_TOLERANCE: f64 = 1e-10;

/// Smoothing parameters are drawn log-uniformly from this range.
const BETA_LOG10_RANGE: (f64, f64) = (-3.0, 2.0);

/// Which checks to run and on how many samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    pub instances: Vec<InstanceSpec>,
    pub seed: u64,
    pub sdg_samples: usize,
    pub witness_samples: usize,
    pub regularity_samples: usize,
    pub decomposition_samples: usize,
    pub inner_tol: f64,
    /// Basis-pursuit instance for the update-order probe; skipped when absent.
    pub probe: Option<InstanceSpec>,
    pub probe_epsilon: f64,
    pub probe_budget: usize,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            instances: desk_instances(),
            seed: 0,
            sdg_samples: 100,
            witness_samples: 1000,
            regularity_samples: 1000,
            decomposition_samples: 20,
            inner_tol: 1e-10,
            probe: Some(InstanceSpec::new(Family::Bp, BP_PROBE_SEED)),
            probe_epsilon: 1e-8,
            probe_budget: 100_000,
        }
    }
}

/// Seed of the basis-pursuit instance used by the update-order probe.
pub const BP_PROBE_SEED: u64 = 5;

/// Quadratic-program seed whose constraint set is feasible.
pub const QP_SEED: u64 = 2;

/// One instance per family at desk scale.
pub fn desk_instances() -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for family in Family::ALL {
        let seed = if family == Family::Pqp { QP_SEED } else { 1 };
        let mut spec = InstanceSpec::new(family, seed);
        if family == Family::Do {
            spec.data = Some(DoSource::Synthetic { rows: 252, features: 10, seed });
        }
        out.push(spec);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdgCheck {
    pub samples: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub samples: usize,
    pub worst: WitnessResiduals,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityCheck {
    pub samples: usize,
    pub gamma: f64,
    pub eta: f64,
    /// `min ‖∇L(z)‖ − γ·dist(z, 𝒵*)`
    pub min_msr_slack: f64,
    /// `min 𝒢(z) − (η/2)·dist(z, 𝒵*)²`
    pub min_qeb_slack: f64,
    /// Largest relative gap between the quadratic model and the smoothed gap.
    pub max_quadratic_form_error: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionCheck {
    pub samples: usize,
    pub max_error: f64,
    /// `min 𝒢(x*, y; x, y*) + 2√(βx𝒢(z))‖x − x*‖`
    pub min_dual_part_slack: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyReport {
    pub label: String,
    pub family: Family,
    pub sdg: SdgCheck,
    pub witness: WitnessCheck,
    pub regularity: Option<RegularityCheck>,
    pub decomposition: Option<DecompositionCheck>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub kkt_vs_og: Vec<KktOgRow>,
    pub kkt_vs_sdg: Vec<KktSdgRow>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub families: Vec<FamilyReport>,
    pub counterexamples: CounterexampleReport,
    pub probe: Option<InstabilityReport>,
    pub probe_passed: Option<bool>,
    pub charts: Vec<ChartReport>,
    pub passed: bool,
}

fn log_beta(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(BETA_LOG10_RANGE.0..BETA_LOG10_RANGE.1))
}

/// Uniform point in `[−2, 2]^(n+m)`, reflected into the nonnegative orthant
/// when it falls outside `dom f` (the only restricted domain among the
/// families).
pub fn random_point(p: &ProblemInstance<f64>, rng: &mut ChaCha8Rng) -> PrimalDualPoint<f64> {
    let mut x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
    if !p.objective().eval(&x).is_finite() {
        x.iter_mut().for_each(|v| *v = v.abs());
    }
    PrimalDualPoint::new(x, (0..p.dual_dim()).map(|_| rng.random_range(-2.0..2.0)).collect())
}

fn random_samples(
    p: &ProblemInstance<f64>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(PrimalDualPoint<f64>, SmoothingParams<f64>)>> {
    (0..count)
        .map(|_| {
            let z = random_point(p, rng);
            Ok((z, SmoothingParams::new(log_beta(rng), log_beta(rng))?))
        })
        .collect()
}

/// Closed-form smoothed gap against direct maximization.
pub fn check_sdg(p: &ProblemInstance<f64>, samples: usize, inner_tol: f64, rng: &mut ChaCha8Rng) -> Result<SdgCheck> {
    let pts = random_samples(p, samples, rng)?;
    let errors: Vec<f64> = pts
        .par_iter()
        .map(|(z, b)| {
            let closed = criteria::smoothed_duality_gap(p, z, *b)?.value.value();
            Ok((sdg_direct(p, z, *b, inner_tol)? - closed).abs())
        })
        .collect::<Result<_>>()?;
    let tolerance = SDG_TOLERANCE.max(10.0 * inner_tol);
    let max_abs_error = errors.into_iter().fold(0.0, f64::max);
    Ok(SdgCheck { samples, max_abs_error, tolerance, passed: max_abs_error <= tolerance })
}

pub fn check_witnesses(p: &ProblemInstance<f64>, samples: usize, rng: &mut ChaCha8Rng) -> Result<WitnessCheck> {
    let pts = random_samples(p, samples, rng)?;
    let residuals: Vec<WitnessResiduals> =
        pts.par_iter().map(|(z, b)| GapWitness::new(p, z, *b)?.residuals(p, z)).collect::<Result<_>>()?;
    let worst = residuals.iter().fold(
        WitnessResiduals {
            moreau: f64::NEG_INFINITY,
            projection_norms: f64::NEG_INFINITY,
            norm_identity: f64::NEG_INFINITY,
            projection_inner: f64::NEG_INFINITY,
            witness_distance: f64::NEG_INFINITY,
            gap_floor: f64::NEG_INFINITY,
            fenchel_young: f64::NEG_INFINITY,
        },
        |acc, r| acc.worst(r),
    );
    Ok(WitnessCheck { samples, worst, passed: worst.within(WITNESS_TOLERANCE) })
}

/// Sub-regularity and error-bound certificates near the saddle set of a
/// constrained least-squares instance; `None` for other structures.
pub fn check_regularity(
    p: &ProblemInstance<f64>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<RegularityCheck>> {
    let Structure::LeastSquares(ls) = p.objective().structure() else {
        return Ok(None);
    };
    let saddle = SaddleSet::new(ls, p.constraint())?;
    let gamma = regularity::msr_gamma(ls, p.constraint().matrix())?;
    let unit = SmoothingParams::equal(1.0)?;
    let eta = regularity::eta_for_smoothing(ls, p.constraint(), unit)?;
    let star = saddle.point.stacked();
    let near: Vec<PrimalDualPoint<f64>> = (0..samples)
        .map(|_| {
            let r = 10f64.powf(rng.random_range(-4.0..0.0));
            let z: Vec<f64> = star.iter().map(|&v| v + r * rng.random_range(-1.0..1.0)).collect();
            PrimalDualPoint::from_stacked(&z, p.dim())
        })
        .collect();
    let far = random_samples(p, samples, rng)?;
    let slacks: Vec<(f64, f64)> = near
        .par_iter()
        .map(|z| {
            let d = saddle.distance(z);
            let g = criteria::smoothed_duality_gap(p, z, unit)?.value.value();
            Ok((saddle.gradient_norm(z) - gamma * d, g - eta / 2.0 * d * d))
        })
        .collect::<Result<_>>()?;
    let qf_errors: Vec<f64> = far
        .par_iter()
        .map(|(z, b)| {
            let model = regularity::quadratic_form(ls, p.constraint(), *b)?;
            let direct = criteria::smoothed_duality_gap(p, z, *b)?.value.value();
            Ok((model.value(z) - direct).abs() / direct.abs().max(1.0))
        })
        .collect::<Result<_>>()?;
    let min_msr_slack = slacks.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let min_qeb_slack = slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max_quadratic_form_error = qf_errors.into_iter().fold(0.0, f64::max);
    Ok(Some(RegularityCheck {
        samples,
        gamma,
        eta,
        min_msr_slack,
        min_qeb_slack,
        max_quadratic_form_error,
        passed: min_msr_slack >= -CERTIFICATE_SLACK
            && min_qeb_slack >= -CERTIFICATE_SLACK
            && max_quadratic_form_error <= QUADRATIC_FORM_TOLERANCE,
    }))
}

/// Saddle decomposition and the lower bound on its dual part; `None`
/// without a reference primal-dual pair.
pub fn check_decomposition(
    p: &ProblemInstance<f64>,
    samples: usize,
    inner_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<DecompositionCheck>> {
    let Some(saddle) = p.reference().and_then(|r| Some(PrimalDualPoint::new(r.x_star.clone(), r.y_star.clone()?)))
    else {
        return Ok(None);
    };
    let pts = random_samples(p, samples, rng)?;
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|(z, b)| {
            let d = decomposition(p, z, &saddle, *b, inner_tol)?;
            Ok((d.error(), d.dual_part_slack(b.beta_x, vector::dist(&z.x, &saddle.x))))
        })
        .collect::<Result<_>>()?;
    let max_error = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_dual_part_slack = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(Some(DecompositionCheck {
        samples,
        max_error,
        min_dual_part_slack,
        passed: max_error <= DECOMPOSITION_TOLERANCE && min_dual_part_slack >= -DECOMPOSITION_TOLERANCE,
    }))
}

pub fn check_family(spec: &InstanceSpec, config: &VerificationConfig, index: u64) -> Result<FamilyReport> {
    let p = spec.build::<f64>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(index));
    let sdg = check_sdg(&p, config.sdg_samples, config.inner_tol, &mut rng)?;
    let witness = check_witnesses(&p, config.witness_samples, &mut rng)?;
    let regularity = check_regularity(&p, config.regularity_samples, &mut rng)?;
    let decomposition = check_decomposition(&p, config.decomposition_samples, config.inner_tol, &mut rng)?;
    let passed =
        sdg.passed && witness.passed && regularity.is_none_or(|r| r.passed) && decomposition.is_none_or(|d| d.passed);
    Ok(FamilyReport {
        label: p.label().to_string(),
        family: p.family(),
        sdg,
        witness,
        regularity,
        decomposition,
        passed,
    })
}

/// ε from 1e-1 to 1e-8.
pub fn ramp_epsilons() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

pub fn check_counterexamples() -> Result<CounterexampleReport> {
    let kkt_vs_og = counterexample_kkt_vs_og(&ramp_epsilons())?;
    let xs = [0.5, 0.1, 0.01, -0.5, -0.1, -0.01];
    let kkt_vs_sdg = counterexample_kkt_vs_sdg(&xs)?;
    let tol = COUNTEREXAMPLE_TOLERANCE;
    let og_ok = kkt_vs_og.iter().all(|r| {
        r.derivative == 1.0
            && (r.gap - r.eps / 2.0).abs() <= tol
            && (r.og - r.eps / 2.0).abs() <= tol
            && (r.kkt - 1.0).abs() <= tol
    });
    let sdg_ok = kkt_vs_sdg.iter().all(|r| {
        let expected = r.x.abs() - r.x * r.x / 2.0;
        (r.kkt - 1.0).abs() <= tol && (r.sdg - expected).abs() <= tol && (r.formula - expected).abs() <= tol
    });
    Ok(CounterexampleReport { kkt_vs_og, kkt_vs_sdg, passed: og_ok && sdg_ok })
}

/// Identity chart, the range of `Qᵀ` for the one-dimensional instance, and a
/// random 10-dimensional subspace of ℝ²⁰.
pub fn check_charts(seed: u64) -> Result<Vec<ChartReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = InstanceSpec::new(Family::OneDim, 0).build::<f64>()?;
    let Structure::LeastSquares(ls) = one.objective().structure() else {
        return Err(Error::NotApplicable("chart of a non-least-squares instance"));
    };
    let span = Matrix::from_fn(20, 10, |_, _| StandardNormal.sample(&mut rng));
    let offset: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(vec![
        diffeomorphism_checks(vec![0.0; 5], &Matrix::identity(5), 100, &mut rng)?,
        diffeomorphism_checks(vec![0.0], &ls.design().transpose(), 100, &mut rng)?,
        diffeomorphism_checks(offset, &span, 100, &mut rng)?,
    ])
}

pub fn run_verification(config: &VerificationConfig) -> Result<VerificationReport> {
    if config.instances.is_empty() {
        return Err(Error::InvalidConfig("no instances to verify".into()));
    }
    if !(config.inner_tol > 0.0) {
        return Err(Error::InvalidConfig("inner tolerance must be positive".into()));
    }
    let families = config
        .instances
        .par_iter()
        .enumerate()
        .map(|(k, spec)| check_family(spec, config, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let counterexamples = check_counterexamples()?;
    let probe = match &config.probe {
        Some(spec) => {
            let p = spec.build::<f64>()?;
            Some(pdhg_instability_probe(&p, config.probe_epsilon, config.probe_budget)?)
        }
        None => None,
    };
    let probe_passed = probe.as_ref().map(InstabilityReport::separated);
    let charts = check_charts(config.seed)?;
    let passed = families.iter().all(|f| f.passed)
        && counterexamples.passed
        && probe_passed.unwrap_or(true)
        && charts.iter().all(|c| c.passed(CHART_TOLERANCE));
    Ok(VerificationReport { seed: config.seed, families, counterexamples, probe, probe_passed, charts, passed })
}

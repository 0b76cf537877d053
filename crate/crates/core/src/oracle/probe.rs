//! Sensitivity of the KKT gate to the PDHG update order on basis pursuit.

use serde::Serialize;

use crate::criteria::CriterionKind;
use crate::error::{Error, Result};
use crate::pdhg::{self, BetaPolicy, PdhgVersion, SolveConfig, StopReason};
use crate::problem::ProblemInstance;
use crate::scalar::Real;

/// Below this magnitude a nonzero primal entry counts as near zero.
pub const NEAR_ZERO: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateOutcome {
    pub version: PdhgVersion,
    pub criterion: CriterionKind,
    pub fired: bool,
    pub iterations: usize,
    /// Entries of the returned primal point that are exactly zero.
    pub exact_zeros: usize,
    /// Nonzero entries with magnitude below [`NEAR_ZERO`].
    pub near_zeros: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub epsilon: f64,
    pub budget: usize,
    pub runs: Vec<GateOutcome>,
}

impl InstabilityReport {
    pub fn outcome(&self, version: PdhgVersion, criterion: CriterionKind) -> Option<&GateOutcome> {
        self.runs.iter().find(|r| r.version == version && r.criterion == criterion)
    }

    /// Version-1 KKT never fires while version-2 KKT and both smoothed-gap
    /// runs do, and version 2 produces exact zeros.
    pub fn separated(&self) -> bool {
        let fired = |v, c| self.outcome(v, c).map(|o| o.fired);
        fired(PdhgVersion::V1, CriterionKind::Kkt) == Some(false)
            && fired(PdhgVersion::V2, CriterionKind::Kkt) == Some(true)
            && fired(PdhgVersion::V1, CriterionKind::Sdg) == Some(true)
            && fired(PdhgVersion::V2, CriterionKind::Sdg) == Some(true)
            && self.outcome(PdhgVersion::V2, CriterionKind::Kkt).is_some_and(|o| o.exact_zeros > 0)
    }
}

/// Runs both versions with the KKT and smoothed-gap gates.
pub fn pdhg_instability_probe<T: Real>(
    problem: &ProblemInstance<T>,
    epsilon: T,
    budget: usize,
) -> Result<InstabilityReport> {
    if budget < 10_000 {
        return Err(Error::InvalidParameter(format!("budget {budget} below 10000")));
    }
    let steps = pdhg::default_step_sizes(problem.constraint())?;
    let mut runs = Vec::new();
    for version in [PdhgVersion::V1, PdhgVersion::V2] {
        for criterion in [CriterionKind::Kkt, CriterionKind::Sdg] {
            let mut cfg = SolveConfig::new(epsilon, budget, criterion);
            cfg.version = version;
            cfg.record_every = usize::MAX;
            let t = pdhg::solve(problem, &cfg, steps, BetaPolicy::Grid)?;
            let x = &t.last_point().x;
            runs.push(GateOutcome {
                version,
                criterion,
                fired: t.stop_reason == StopReason::Converged,
                iterations: t.iterations_used,
                exact_zeros: x.iter().filter(|&&v| v == T::zero()).count(),
                near_zeros: x.iter().filter(|&&v| v != T::zero() && v.abs() < T::lit(NEAR_ZERO)).count(),
            });
        }
    }
    Ok(InstabilityReport { epsilon: epsilon.as_f64(), budget, runs })
}

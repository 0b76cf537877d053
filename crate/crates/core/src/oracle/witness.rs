//! Witness vectors behind the projected-gap bound and their identities.

use serde::Serialize;

use crate::criteria::{self, PointState, SmoothingParams};
use crate::error::{Error, Result};
use crate::linalg::vector;
use crate::problem::{PrimalDualPoint, ProblemInstance};
use crate::scalar::Real;

/// Witnesses at one `(z, β)`.
#[derive(Clone, Debug)]
pub struct GapWitness<T> {
    /// `prox_{f/βx}(x − Aᵀy/βx)`
    pub p: Vec<T>,
    /// `βx(x − p)`, obtained from the conjugate's prox as
    /// `prox_{βx f*}(βx·x − Aᵀy) + Aᵀy`.
    pub p_star: Vec<T>,
    /// `−Aᵀy + βx(x − p)`, a subgradient of `f` at `p`.
    pub a_tilde: Vec<T>,
    /// `Proj_{dom f*}(−Aᵀy)`
    pub a: Vec<T>,
    pub aty: Vec<T>,
    pub gap: T,
    pub beta: SmoothingParams<T>,
}

/// Residuals of the witness identities; each is nonpositive (or zero for
/// the identities) when the relation holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WitnessResiduals {
    /// `‖p + p*/βx − x‖` relative to `1 + ‖x‖ + ‖Aᵀy‖/βx`
    pub moreau: f64,
    /// `‖a + Aᵀy‖ − ‖ã + Aᵀy‖`
    pub projection_norms: f64,
    /// `|‖ã + Aᵀy‖ − ‖p*‖|`
    pub norm_identity: f64,
    /// `⟨−Aᵀy − a, ã − a⟩`
    pub projection_inner: f64,
    /// `‖a − ã‖ − ‖p*‖`
    pub witness_distance: f64,
    /// `‖p*‖² − 2βx𝒢`
    pub gap_floor: f64,
    /// `|f(p) + f*(ã) − ⟨p, ã⟩|` relative to the magnitudes involved
    pub fenchel_young: f64,
}

impl WitnessResiduals {
    pub fn worst(&self, other: &Self) -> Self {
        Self {
            moreau: self.moreau.max(other.moreau),
            projection_norms: self.projection_norms.max(other.projection_norms),
            norm_identity: self.norm_identity.max(other.norm_identity),
            projection_inner: self.projection_inner.max(other.projection_inner),
            witness_distance: self.witness_distance.max(other.witness_distance),
            gap_floor: self.gap_floor.max(other.gap_floor),
            fenchel_young: self.fenchel_young.max(other.fenchel_young),
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        [
            self.moreau,
            self.projection_norms,
            self.norm_identity,
            self.projection_inner,
            self.witness_distance,
            self.gap_floor,
            self.fenchel_young,
        ]
        .iter()
        .all(|&v| v <= tol)
    }
}

impl<T: Real> GapWitness<T> {
    pub fn new(problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>, beta: SmoothingParams<T>) -> Result<Self> {
        let st = PointState::new(problem, z)?;
        let sdg = criteria::smoothed_duality_gap(problem, z, beta)?;
        let p = sdg.p.expect("smoothed gap carries its prox point");
        let pdg = criteria::projected_duality_gap(problem, z)?;
        let a = pdg.a.expect("projected gap carries its certificate");
        let bx = beta.beta_x;
        let f = problem.objective();
        let arg = vector::add_scaled(&vector::scale(bx, &z.x), -T::one(), &st.aty);
        let mut p_star = f.prox_conjugate(bx, &arg);
        vector::axpy(T::one(), &st.aty, &mut p_star);
        let a_tilde = vector::add_scaled(&vector::scale(bx, &vector::sub(&z.x, &p)), -T::one(), &st.aty);
        Ok(Self { p, p_star, a_tilde, a, aty: st.aty, gap: sdg.value.value(), beta })
    }

    pub fn residuals(&self, problem: &ProblemInstance<T>, z: &PrimalDualPoint<T>) -> Result<WitnessResiduals> {
        let bx = self.beta.beta_x;
        let recon = vector::add_scaled(&self.p, T::one() / bx, &self.p_star);
        // The two prox maps round at the scale of their own arguments.
        let moreau_scale = T::one() + vector::norm(&z.x) + vector::norm(&self.aty) / bx;
        let moreau = vector::dist(&recon, &z.x) / moreau_scale;
        let shifted_a = vector::norm(&vector::add(&self.a, &self.aty));
        let shifted_tilde = vector::norm(&vector::add(&self.a_tilde, &self.aty));
        let p_star_norm = vector::norm(&self.p_star);
        let neg: Vec<T> = self.aty.iter().map(|&v| -v).collect();
        let inner = vector::dot(&vector::sub(&neg, &self.a), &vector::sub(&self.a_tilde, &self.a));
        let f = problem.objective();
        let fp = f.eval(&self.p).finite().ok_or(Error::NonFiniteProx)?;
        let conj = f.conjugate(&self.a_tilde).finite().ok_or(Error::ConjugateOutsideDomain)?;
        let pa = vector::dot(&self.p, &self.a_tilde);
        let scale = T::one() + fp.abs() + conj.abs() + pa.abs();
        Ok(WitnessResiduals {
            moreau: moreau.as_f64(),
            projection_norms: (shifted_a - shifted_tilde).as_f64(),
            norm_identity: (shifted_tilde - p_star_norm).abs().as_f64(),
            projection_inner: inner.as_f64(),
            witness_distance: (vector::dist(&self.a, &self.a_tilde) - p_star_norm).as_f64(),
            gap_floor: (p_star_norm * p_star_norm - T::lit(2.0) * bx * self.gap).as_f64(),
            fenchel_young: ((fp + conj - pa).abs() / scale).as_f64(),
        })
    }
}

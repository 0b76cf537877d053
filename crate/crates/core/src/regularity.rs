//! Regularity constants used by the bound theorems: the metric
//! sub-regularity constant γ, the quadratic-error-bound constant η of the
//! smoothed gap, and the Lipschitz constants of `f`, `f₁*` and `g`.

use serde::Serialize;

use crate::criteria::SmoothingParams;
use crate::error::{Error, Result};
use crate::instances::{kkt_matrix, symmetric_pinv_solve, KKT_CUTOFF};
use crate::linalg::{symmetric_eigen, vector, Cholesky, Matrix};
use crate::objective::{LeastSquares, Structure};
use crate::pdhg::StepSizes;
use crate::problem::{AffineConstraint, PrimalDualPoint, ProblemInstance};
use crate::scalar::Real;

/// Relative cutoff separating zero from nonzero eigenvalues.
pub const EIGEN_CUTOFF: f64 = 1e-10;
/// Value used for γ and η when they cannot be computed.
pub const DEFAULT_CONSTANT: f64 = 1e-8;
/// Negative eigenvalues of the quadratic form tolerated relative to its norm.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    Computed,
    /// The conventional `10⁻⁸` for families without a closed form.
    DeclaredDefault,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constant<T> {
    pub value: T,
    pub source: ConstantSource,
}

impl<T: Real> Constant<T> {
    pub fn computed(value: T) -> Self {
        Self { value, source: ConstantSource::Computed }
    }

    pub fn declared_default() -> Self {
        Self { value: T::lit(DEFAULT_CONSTANT), source: ConstantSource::DeclaredDefault }
    }
}

/// Constants of one instance. `eta` is the value at unit smoothing; use
/// [`EtaModel`] for other β.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityConstants<T> {
    pub gamma: Constant<T>,
    pub eta: Constant<T>,
    /// Lipschitz constant of `∇f`; absent for non-smooth objectives.
    pub l: Option<T>,
    pub l_g: Option<T>,
    pub l_f1_star: Option<T>,
    /// Lipschitz constant of `f*` on its domain.
    pub l_f_star: Option<T>,
}

/// `min |λ|` over the nonzero eigenvalues of `[[QᵀQ, Aᵀ], [A, 0]]`.
pub fn msr_gamma<T: Real>(ls: &LeastSquares<T>, a: &Matrix<T>) -> Result<T> {
    let m = kkt_matrix(ls.gram(), a)?;
    let e = symmetric_eigen(&m);
    e.nonzero(T::lit(EIGEN_CUTOFF))
        .into_iter()
        .map(|(_, l)| l.abs())
        .reduce(T::min)
        .ok_or_else(|| Error::Degenerate("KKT matrix is numerically zero".into()))
}

/// The self-centered smoothed gap of a constrained least-squares problem
/// written as `zᵀHz + ⟨v, z⟩ + constant`.
#[derive(Clone, Debug)]
pub struct QuadraticFormModel<T> {
    pub h: Matrix<T>,
    pub v: Vec<T>,
    pub constant: T,
    /// `QᵀQ + βx·I`
    pub b: Matrix<T>,
    pub m_xx: Matrix<T>,
    pub m_xy: Matrix<T>,
    pub m_yy: Matrix<T>,
    pub v_x: Vec<T>,
    pub v_y: Vec<T>,
    pub beta: SmoothingParams<T>,
}

impl<T: Real> QuadraticFormModel<T> {
    pub fn value(&self, z: &PrimalDualPoint<T>) -> T {
        let s = z.stacked();
        vector::dot(&s, &self.h.matvec(&s)) + vector::dot(&self.v, &s) + self.constant
    }

    /// `(λ_min⁺(H), λ_min(H))`
    pub fn spectrum_bounds(&self) -> Result<(T, T)> {
        let e = symmetric_eigen(&self.h);
        let scale = e.max_abs_value();
        let lowest = e.values.first().copied().unwrap_or(T::zero());
        if lowest < -T::lit(PSD_TOLERANCE) * scale {
            return Err(Error::IndefiniteQuadraticForm { min_eigenvalue: lowest.as_f64() });
        }
        let positive = e
            .values
            .iter()
            .copied()
            .filter(|&l| l > T::lit(EIGEN_CUTOFF) * scale)
            .reduce(T::min)
            .ok_or_else(|| Error::Degenerate("quadratic form is zero".into()))?;
        Ok((positive, lowest))
    }

    /// `λ_min⁺(H) / 2`
    pub fn eta(&self) -> Result<T> {
        Ok(self.spectrum_bounds()?.0 / T::lit(2.0))
    }
}

/// Quadratic form of the smoothed gap with smoothing `beta` used as is.
pub fn quadratic_form<T: Real>(
    ls: &LeastSquares<T>,
    constraint: &AffineConstraint<T>,
    beta: SmoothingParams<T>,
) -> Result<QuadraticFormModel<T>> {
    let a = constraint.matrix();
    let n = a.cols();
    let half = T::lit(0.5);
    let (bx, by) = (beta.beta_x, beta.beta_y);
    let gram = ls.gram();
    let b = gram.add(&Matrix::identity(n).scaled(bx));
    let chol = Cholesky::new(&b)?;
    let b_inv = solve_columns(&chol, &Matrix::identity(n));
    let b_inv_at = solve_columns(&chol, &a.transpose());
    let ata = a.transpose().matmul(a);

    let m_xx = gram
        .scaled(half)
        .add(&ata.scaled(T::one() / (T::lit(2.0) * by)))
        .add(&b_inv.scaled(bx * bx * half))
        .sub(&Matrix::identity(n).scaled(bx * half));
    let m_xy = a.transpose().sub(&b_inv_at.scaled(bx));
    let m_yy = a.matmul(&b_inv_at).scaled(half);

    let qtc = ls.design_t_target();
    let b_inv_qtc = chol.solve(qtc);
    // The linear term also collects −Aᵀb/βy from the feasibility part.
    let mut v_x = vector::sub(&vector::scale(bx, &b_inv_qtc), qtc);
    vector::axpy(-T::one() / by, &a.matvec_t(constraint.rhs()), &mut v_x);
    let v_y: Vec<T> = a.matvec(&b_inv_qtc).iter().map(|&v| -v).collect();
    let constant = half * vector::dot(qtc, &b_inv_qtc) + vector::norm_sq(constraint.rhs()) / (T::lit(2.0) * by);

    let half_xy = m_xy.scaled(half);
    let half_yx = half_xy.transpose();
    let h = Matrix::from_blocks(&[vec![&m_xx, &half_xy], vec![&half_yx, &m_yy]])?;
    // Average the two triangles so H is symmetric to round-off.
    let h = h.add(&h.transpose()).scaled(half);
    let v = vector::concat(&v_x, &v_y);
    Ok(QuadraticFormModel { h, v, constant, b, m_xx, m_xy, m_yy, v_x, v_y, beta })
}

fn solve_columns<T: Real>(chol: &Cholesky<T>, rhs: &Matrix<T>) -> Matrix<T> {
    let cols: Vec<Vec<T>> = (0..rhs.cols()).map(|j| chol.solve(&rhs.column(j))).collect();
    Matrix::from_fn(rhs.rows(), rhs.cols(), |i, j| cols[j][i])
}

/// η for the step-scaled smoothing `(βx/τ, βy/σ)` together with its model.
pub fn qeb_eta<T: Real>(
    ls: &LeastSquares<T>,
    constraint: &AffineConstraint<T>,
    beta: SmoothingParams<T>,
    steps: StepSizes<T>,
) -> Result<(T, QuadraticFormModel<T>)> {
    let effective = SmoothingParams::new(beta.beta_x / steps.tau, beta.beta_y / steps.sigma)?;
    let model = quadratic_form(ls, constraint, effective)?;
    Ok((model.eta()?, model))
}

/// η at the smoothing the criteria module evaluates, with no step scaling.
pub fn eta_for_smoothing<T: Real>(
    ls: &LeastSquares<T>,
    constraint: &AffineConstraint<T>,
    beta: SmoothingParams<T>,
) -> Result<T> {
    quadratic_form(ls, constraint, beta)?.eta()
}

/// η as a function of β for one instance.
#[derive(Clone, Debug)]
pub enum EtaModel<'a, T> {
    LeastSquares { ls: &'a LeastSquares<T>, constraint: &'a AffineConstraint<T> },
    Constant(T),
}

impl<'a, T: Real> EtaModel<'a, T> {
    pub fn for_instance(problem: &'a ProblemInstance<T>) -> Self {
        match problem.objective().structure() {
            Structure::LeastSquares(ls) => EtaModel::LeastSquares { ls, constraint: problem.constraint() },
            _ => EtaModel::Constant(T::lit(DEFAULT_CONSTANT)),
        }
    }

    pub fn eta(&self, beta: SmoothingParams<T>) -> Result<T> {
        match self {
            EtaModel::LeastSquares { ls, constraint } => eta_for_smoothing(ls, constraint, beta),
            EtaModel::Constant(v) => Ok(*v),
        }
    }
}

/// Lipschitz and regularity constants of an instance.
pub fn lipschitz_constants<T: Real>(problem: &ProblemInstance<T>) -> Result<RegularityConstants<T>> {
    let f = problem.objective();
    let split = f.conjugate_split();
    let (gamma, eta) = match f.structure() {
        Structure::LeastSquares(ls) => {
            let gamma = msr_gamma(ls, problem.constraint().matrix())?;
            let eta = eta_for_smoothing(ls, problem.constraint(), SmoothingParams::equal(T::one())?)?;
            (Constant::computed(gamma), Constant::computed(eta))
        }
        _ => (Constant::declared_default(), Constant::declared_default()),
    };
    Ok(RegularityConstants {
        gamma,
        eta,
        l: f.smoothness(),
        l_g: split.map(|s| s.l_g),
        l_f1_star: split.map(|s| s.l_f1_star),
        l_f_star: f.conjugate_lipschitz(),
    })
}

/// Saddle set of a constrained least-squares problem, `z* + ker 𝓜`.
#[derive(Clone, Debug)]
pub struct SaddleSet<T> {
    pub point: PrimalDualPoint<T>,
    /// Orthonormal kernel basis, one vector per column.
    pub kernel: Matrix<T>,
    /// The KKT matrix `𝓜`.
    pub kkt: Matrix<T>,
    /// `(Qᵀc, b)`
    pub rhs: Vec<T>,
}

impl<T: Real> SaddleSet<T> {
    pub fn new(ls: &LeastSquares<T>, constraint: &AffineConstraint<T>) -> Result<Self> {
        let kkt = kkt_matrix(ls.gram(), constraint.matrix())?;
        let rhs = vector::concat(ls.design_t_target(), constraint.rhs());
        let (z, _) = symmetric_pinv_solve(&kkt, &rhs, T::lit(KKT_CUTOFF));
        let e = symmetric_eigen(&kkt);
        let cutoff = T::lit(EIGEN_CUTOFF) * e.max_abs_value();
        let null: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k].abs() <= cutoff).collect();
        let dim = kkt.rows();
        let kernel = Matrix::from_fn(dim, null.len(), |i, j| e.vectors[(i, null[j])]);
        Ok(Self { point: PrimalDualPoint::from_stacked(&z, constraint.cols()), kernel, kkt, rhs })
    }

    /// Orthogonal projection of `z` onto the saddle set.
    pub fn project(&self, z: &PrimalDualPoint<T>) -> PrimalDualPoint<T> {
        let star = self.point.stacked();
        let w = vector::sub(&z.stacked(), &star);
        let mut out = star;
        for k in 0..self.kernel.cols() {
            let u = self.kernel.column(k);
            vector::axpy(vector::dot(&u, &w), &u, &mut out);
        }
        PrimalDualPoint::from_stacked(&out, self.point.x.len())
    }

    pub fn distance(&self, z: &PrimalDualPoint<T>) -> T {
        vector::dist(&z.stacked(), &self.project(z).stacked())
    }

    /// `‖𝓜z − (Qᵀc, b)‖`, the norm of the Lagrangian's gradient map.
    pub fn gradient_norm(&self, z: &PrimalDualPoint<T>) -> T {
        vector::norm(&vector::sub(&self.kkt.matvec(&z.stacked()), &self.rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::smoothed_duality_gap;
    use crate::instances::{make_1d, make_bp, make_iidg, make_pqp};
    use crate::pdhg::default_step_sizes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ls_of(p: &ProblemInstance<f64>) -> &LeastSquares<f64> {
        match p.objective().structure() {
            Structure::LeastSquares(ls) => ls,
            _ => panic!("not least squares"),
        }
    }

    #[test]
    fn gamma_one_dim() {
        let p = make_1d::<f64>().unwrap();
        let g = msr_gamma(ls_of(&p), p.constraint().matrix()).unwrap();
        let t = 1.0 / 81.0;
        let expected = ((t * t + 4.0 * 81.0_f64).sqrt() - t) / 2.0;
        assert!((g - expected).abs() < 1e-12);
        assert!((g - 8.99383).abs() < 1e-5);
    }

    #[test]
    fn gamma_identity_blocks() {
        let n = 4;
        let ls = LeastSquares::new(Matrix::<f64>::identity(n), vec![0.0; n]).unwrap();
        let g = msr_gamma(&ls, &Matrix::identity(n)).unwrap();
        assert!((g - (5.0_f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_under_scaling_matches_fresh_solve() {
        let p = make_iidg::<f64>(20, 10, 3).unwrap();
        let ls = ls_of(&p);
        let a = p.constraint().matrix().scaled(3.0);
        let g = msr_gamma(ls, &a).unwrap();
        let e = symmetric_eigen(&kkt_matrix(ls.gram(), &a).unwrap());
        let cut = 1e-10 * e.max_abs_value();
        let fresh = e.values.iter().map(|v| v.abs()).filter(|&v| v > cut).fold(f64::INFINITY, f64::min);
        assert!((g - fresh).abs() < 1e-12 * fresh.max(1.0));
    }

    #[test]
    fn degenerate_kkt_errors() {
        let ls = LeastSquares::new(Matrix::<f64>::zeros(1, 2), vec![0.0]).unwrap();
        assert!(matches!(msr_gamma(&ls, &Matrix::zeros(1, 2)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn quadratic_form_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [make_1d::<f64>().unwrap(), make_iidg(20, 10, 2).unwrap(), make_iidg(8, 12, 5).unwrap()] {
            let ls = ls_of(&p);
            for _ in 0..100 {
                let beta = SmoothingParams::new(
                    10f64.powf(rng.random_range(-3.0..2.0)),
                    10f64.powf(rng.random_range(-3.0..2.0)),
                )
                .unwrap();
                let model = quadratic_form(ls, p.constraint(), beta).unwrap();
                assert!(model.h.asymmetry() < 1e-10 * model.h.max_abs().max(1.0));
                let z = PrimalDualPoint::new(
                    (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    (0..p.dual_dim()).map(|_| rng.random_range(-2.0..2.0)).collect(),
                );
                let direct = smoothed_duality_gap(&p, &z, beta).unwrap().value.value();
                let q = model.value(&z);
                assert!((q - direct).abs() <= 1e-7 * direct.abs().max(1.0), "{q} vs {direct}");
            }
        }
    }

    #[test]
    fn quadratic_form_vanishes_on_saddle() {
        let p = make_iidg::<f64>(20, 10, 6).unwrap();
        let ls = ls_of(&p);
        let s = SaddleSet::new(ls, p.constraint()).unwrap();
        let model = quadratic_form(ls, p.constraint(), SmoothingParams::equal(0.5).unwrap()).unwrap();
        let v = model.value(&s.point);
        assert!(v.abs() <= 1e-9, "{v}");
    }

    #[test]
    fn step_scaled_eta() {
        let p = make_1d::<f64>().unwrap();
        let steps = default_step_sizes(p.constraint()).unwrap();
        let (eta, model) = qeb_eta(ls_of(&p), p.constraint(), SmoothingParams::equal(1.0).unwrap(), steps).unwrap();
        assert_eq!(model.h.rows(), 2);
        assert!(eta > 0.0);
        assert!((model.beta.beta_x - 1.0 / steps.tau).abs() < 1e-12);
    }

    #[test]
    fn certificates_near_saddle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [make_1d::<f64>().unwrap(), make_iidg(20, 10, 4).unwrap()] {
            let ls = ls_of(&p);
            let s = SaddleSet::new(ls, p.constraint()).unwrap();
            let gamma = msr_gamma(ls, p.constraint().matrix()).unwrap();
            let beta = SmoothingParams::equal(1.0).unwrap();
            let eta = eta_for_smoothing(ls, p.constraint(), beta).unwrap();
            let star = s.point.stacked();
            for _ in 0..200 {
                let r = 10f64.powf(rng.random_range(-4.0..0.0));
                let z: Vec<f64> = star.iter().map(|&v| v + r * rng.random_range(-1.0..1.0)).collect();
                let z = PrimalDualPoint::from_stacked(&z, p.dim());
                let d = s.distance(&z);
                assert!(s.gradient_norm(&z) >= gamma * d - 1e-8);
                let g = smoothed_duality_gap(&p, &z, beta).unwrap().value.value();
                assert!(g >= eta / 2.0 * d * d - 1e-8);
            }
        }
    }

    #[test]
    fn constants_by_family() {
        let p = make_1d::<f64>().unwrap();
        let c = lipschitz_constants(&p).unwrap();
        assert!((c.l.unwrap() - 1.0 / 81.0).abs() < 1e-15);
        assert_eq!(c.gamma.source, ConstantSource::Computed);
        let bp = lipschitz_constants(&make_bp::<f64>(20, 10, 1).unwrap()).unwrap();
        assert_eq!(bp.l, None);
        assert_eq!(bp.l_f_star, Some(0.0));
        assert_eq!(bp.gamma, Constant::declared_default());
        assert_eq!(bp.eta.value, 1e-8);
        let qp = lipschitz_constants(&make_pqp::<f64>(20, 10, 2).unwrap()).unwrap();
        assert_eq!(qp.l_f1_star, Some(0.0));
        assert_eq!(qp.l, None);
        assert_eq!(qp.eta.source, ConstantSource::DeclaredDefault);
    }

    #[test]
    fn saddle_projection_is_idempotent() {
        let p = make_iidg::<f64>(20, 10, 9).unwrap();
        let s = SaddleSet::new(ls_of(&p), p.constraint()).unwrap();
        let z = PrimalDualPoint::new(vec![1.0; 20], vec![-1.0; 10]);
        let once = s.project(&z);
        assert!(vector::dist(&s.project(&once).stacked(), &once.stacked()) < 1e-12);
        assert!(s.gradient_norm(&once) < 1e-8);
    }
}

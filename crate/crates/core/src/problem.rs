//! Problem data: `min f(x) s.t. Ax = b` and its primal-dual points.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::linalg::{vector, Matrix};
use crate::objective::Objective;
use crate::scalar::Real;

/// Linear constraint `Ax = b`.
#[derive(Clone, Debug)]
pub struct AffineConstraint<T> {
    matrix: Matrix<T>,
    rhs: Vec<T>,
}

impl<T: Real> AffineConstraint<T> {
    /// Requires at least one row and one column.
    pub fn new(matrix: Matrix<T>, rhs: Vec<T>) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::InvalidParameter(format!("constraint matrix is {}x{}", matrix.rows(), matrix.cols())));
        }
        check_len("constraint rhs", matrix.rows(), rhs.len())?;
        Ok(Self { matrix, rhs })
    }

    /// The empty constraint on `ℝⁿ`. Only meaningful for criteria evaluation,
    /// the solver rejects it.
    pub fn unconstrained(n: usize) -> Self {
        Self { matrix: Matrix::zeros(0, n), rhs: Vec::new() }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// `Ax − b`
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        let mut r = self.matrix.matvec(x);
        vector::axpy(-T::one(), &self.rhs, &mut r);
        r
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.matvec(x)
    }

    pub fn apply_t(&self, y: &[T]) -> Vec<T> {
        self.matrix.matvec_t(y)
    }
}

/// Primal-dual point `z = (x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimalDualPoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> PrimalDualPoint<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        Self { x, y }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { x: vec![T::zero(); n], y: vec![T::zero(); m] }
    }

    /// Stacked vector `(x, y)`.
    pub fn stacked(&self) -> Vec<T> {
        vector::concat(&self.x, &self.y)
    }

    pub fn from_stacked(z: &[T], n: usize) -> Self {
        Self { x: z[..n].to_vec(), y: z[n..].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        vector::all_finite(&self.x) && vector::all_finite(&self.y)
    }
}

/// How a reference solution was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    NormalEquations,
    HighAccuracySolve,
}

/// Known primal solution, with an optional dual solution.
#[derive(Clone, Debug)]
pub struct ReferenceSolution<T> {
    pub x_star: Vec<T>,
    pub y_star: Option<Vec<T>>,
    pub f_star: T,
    pub provenance: Provenance,
}

/// Problem family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    #[serde(rename = "1d")]
    OneDim,
    Iidg,
    Ntc,
    Do,
    Pqp,
    Bp,
    Custom,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::OneDim, Family::Iidg, Family::Ntc, Family::Do, Family::Pqp, Family::Bp];

    pub fn label(self) -> &'static str {
        match self {
            Family::OneDim => "1d",
            Family::Iidg => "iidg",
            Family::Ntc => "ntc",
            Family::Do => "do",
            Family::Pqp => "pqp",
            Family::Bp => "bp",
            Family::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().chain([Family::Custom]).find(|f| f.label() == s)
    }

    /// Families whose objective is a plain least-squares term.
    pub fn is_least_squares(self) -> bool {
        matches!(self, Family::OneDim | Family::Iidg | Family::Ntc | Family::Do)
    }
}

/// Objective, constraint and optional reference.
#[derive(Clone, Debug)]
pub struct ProblemInstance<T> {
    objective: Arc<dyn Objective<T>>,
    constraint: AffineConstraint<T>,
    reference: Option<ReferenceSolution<T>>,
    label: String,
    family: Family,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(
        objective: Arc<dyn Objective<T>>,
        constraint: AffineConstraint<T>,
        family: Family,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_len("constraint columns", objective.dim(), constraint.cols())?;
        Ok(Self { objective, constraint, reference: None, label: label.into(), family })
    }

    /// Attaches a reference after checking feasibility and the optimal value.
    pub fn with_reference(mut self, reference: ReferenceSolution<T>) -> Result<Self> {
        check_len("reference point", self.dim(), reference.x_star.len())?;
        if let Some(y) = &reference.y_star {
            check_len("reference dual", self.constraint.rows(), y.len())?;
        }
        let fe = vector::norm(&self.constraint.residual(&reference.x_star));
        let tol = T::lit(1e-8) * (T::one() + vector::norm(self.constraint.rhs()));
        if fe > tol {
            return Err(Error::InvalidParameter(format!("reference infeasible: ‖Ax*−b‖ = {fe}")));
        }
        let fx = self.objective.eval(&reference.x_star).value();
        if (fx - reference.f_star).abs() > T::lit(1e-10) * (T::one() + fx.abs()) {
            return Err(Error::InvalidParameter("reference optimal value inconsistent".into()));
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn objective(&self) -> &dyn Objective<T> {
        self.objective.as_ref()
    }

    pub fn constraint(&self) -> &AffineConstraint<T> {
        &self.constraint
    }

    pub fn reference(&self) -> Option<&ReferenceSolution<T>> {
        self.reference.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Primal dimension.
    pub fn dim(&self) -> usize {
        self.constraint.cols()
    }

    /// Dual dimension.
    pub fn dual_dim(&self) -> usize {
        self.constraint.rows()
    }

    pub fn check_point(&self, z: &PrimalDualPoint<T>) -> Result<()> {
        check_len("primal point", self.dim(), z.x.len())?;
        check_len("dual point", self.dual_dim(), z.y.len())
    }

    pub fn origin(&self) -> PrimalDualPoint<T> {
        PrimalDualPoint::zeros(self.dim(), self.dual_dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{L1Norm, LeastSquares};

    #[test]
    fn constraint_validation() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(AffineConstraint::new(a.clone(), vec![1.0]).is_ok());
        assert!(AffineConstraint::new(a, vec![1.0, 2.0]).is_err());
        assert!(AffineConstraint::<f64>::new(Matrix::zeros(0, 2), vec![]).is_err());
        let free = AffineConstraint::<f64>::unconstrained(3);
        assert!(free.is_unconstrained());
        assert!(free.residual(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn instance_checks() {
        let a = Matrix::from_rows(&[vec![9.0]]).unwrap();
        let c = AffineConstraint::new(a, vec![7.0]).unwrap();
        let f = LeastSquares::new(Matrix::from_diag(&[1.0 / 9.0]), vec![2.0]).unwrap();
        let p = ProblemInstance::new(Arc::new(f.clone()), c.clone(), Family::OneDim, "1d").unwrap();
        let x = 7.0 / 9.0;
        let good = ReferenceSolution {
            x_star: vec![x],
            y_star: None,
            f_star: f.eval(&[x]).value(),
            provenance: Provenance::Analytic,
        };
        let p = p.with_reference(good.clone()).unwrap();
        assert!(p.check_point(&PrimalDualPoint::new(vec![0.0], vec![0.0])).is_ok());
        assert!(p.check_point(&PrimalDualPoint::new(vec![0.0, 1.0], vec![0.0])).is_err());
        let bad = ReferenceSolution { x_star: vec![0.5], ..good };
        let q = ProblemInstance::new(Arc::new(f), c.clone(), Family::OneDim, "1d").unwrap();
        assert!(q.with_reference(bad).is_err());
        let wrong_dim = ProblemInstance::<f64>::new(Arc::new(L1Norm::new(2)), c, Family::Bp, "bp");
        assert!(wrong_dim.is_err());
    }

    #[test]
    fn family_labels_round_trip() {
        for f in Family::ALL {
            assert_eq!(Family::parse(f.label()), Some(f));
        }
        assert_eq!(Family::parse("nope"), None);
    }
}

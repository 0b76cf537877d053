use crate::ext::Ext;
use crate::objective::{ConjugateSplit, Objective, Structure};
use crate::scalar::Real;

/// Block-separable sum `f(x₁, …, x_k) = Σ fᵢ(xᵢ)`.
///
/// Every operation acts block-wise: the prox, the conjugate-domain projection
/// and the conjugate prox are concatenations, values and residuals add up.
#[derive(Debug)]
pub struct Separable<T> {
    parts: Vec<Box<dyn Objective<T>>>,
    offsets: Vec<usize>,
}

impl<T: Real> Separable<T> {
    pub fn new(parts: Vec<Box<dyn Objective<T>>>) -> Self {
        let mut offsets = Vec::with_capacity(parts.len() + 1);
        offsets.push(0);
        for p in &parts {
            let last = *offsets.last().unwrap_or(&0);
            offsets.push(last + p.dim());
        }
        Self { parts, offsets }
    }

    pub fn parts(&self) -> &[Box<dyn Objective<T>>] {
        &self.parts
    }

    /// Index range of block `i`.
    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    fn map_blocks(&self, v: &[T], f: impl Fn(&dyn Objective<T>, &[T]) -> Vec<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(v.len());
        for (i, part) in self.parts.iter().enumerate() {
            out.extend(f(part.as_ref(), &v[self.block(i)]));
        }
        out
    }

    fn sum_blocks(&self, f: impl Fn(&dyn Objective<T>, std::ops::Range<usize>) -> Ext<T>) -> Ext<T> {
        let mut total = T::zero();
        for (i, part) in self.parts.iter().enumerate() {
            match f(part.as_ref(), self.block(i)) {
                Ext::Infinite => return Ext::Infinite,
                Ext::Finite(v) => total += v,
            }
        }
        Ext::Finite(total)
    }
}

impl<T: Real> Objective<T> for Separable<T> {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn name(&self) -> &'static str {
        "separable"
    }

    fn eval(&self, x: &[T]) -> Ext<T> {
        self.sum_blocks(|f, r| f.eval(&x[r]))
    }

    fn prox(&self, s: T, v: &[T]) -> Vec<T> {
        self.map_blocks(v, |f, b| f.prox(s, b))
    }

    fn prox_conjugate(&self, s: T, w: &[T]) -> Vec<T> {
        self.map_blocks(w, |f, b| f.prox_conjugate(s, b))
    }

    fn conjugate(&self, mu: &[T]) -> Ext<T> {
        self.sum_blocks(|f, r| f.conjugate(&mu[r]))
    }

    fn project_conj_domain(&self, mu: &[T]) -> Vec<T> {
        self.map_blocks(mu, |f, b| f.project_conj_domain(b))
    }

    fn stationarity_residual(&self, x: &[T], g: &[T]) -> Ext<T> {
        self.sum_blocks(|f, r| f.stationarity_residual(&x[r.clone()], &g[r]))
    }

    fn prox_displacement(&self, s: T, x: &[T], w: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len());
        for (i, part) in self.parts.iter().enumerate() {
            let r = self.block(i);
            out.extend(part.prox_displacement(s, &x[r.clone()], &w[r]));
        }
        out
    }

    fn smoothed_gap_primal(&self, x: &[T], d: &[T], g: &[T], beta: T) -> Ext<T> {
        self.sum_blocks(|f, r| f.smoothed_gap_primal(&x[r.clone()], &d[r.clone()], &g[r], beta))
    }

    fn smoothness(&self) -> Option<T> {
        self.parts.iter().map(|p| p.smoothness()).try_fold(T::zero(), |m, l| l.map(|l| m.max(l)))
    }

    fn conjugate_lipschitz(&self) -> Option<T> {
        self.parts
            .iter()
            .map(|p| p.conjugate_lipschitz())
            .try_fold(T::zero(), |acc, l| l.map(|l| acc + l * l))
            .map(|s| s.sqrt())
    }

    fn conjugate_split(&self) -> Option<ConjugateSplit<T>> {
        let mut l_f1_sq = T::zero();
        let mut l_g = T::zero();
        for p in &self.parts {
            let split = p.conjugate_split()?;
            l_f1_sq += split.l_f1_star * split.l_f1_star;
            l_g = l_g.max(split.l_g);
        }
        Some(ConjugateSplit { l_f1_star: l_f1_sq.sqrt(), l_g })
    }

    fn structure(&self) -> Structure<'_, T> {
        Structure::Separable(self)
    }
}

//! Small dense linear algebra: row-major matrices, vector kernels, Jacobi
//! eigen/SVD solvers, Cholesky and power iteration.
//!
//! Problem sizes in this crate are a few dozen rows, so the algorithms favour
//! accuracy over asymptotic speed.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Vector kernels on plain slices.
pub mod vector {
    use crate::scalar::Real;

    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&u, &v)| u * v).sum()
    }

    pub fn norm_sq<T: Real>(a: &[T]) -> T {
        dot(a, a)
    }

    pub fn norm<T: Real>(a: &[T]) -> T {
        norm_sq(a).sqrt()
    }

    pub fn norm_inf<T: Real>(a: &[T]) -> T {
        a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&u, &v)| u - v).collect()
    }

    pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&u, &v)| u + v).collect()
    }

    pub fn scale<T: Real>(s: T, a: &[T]) -> Vec<T> {
        a.iter().map(|&v| s * v).collect()
    }

    /// `y += s * x`
    pub fn axpy<T: Real>(s: T, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi += s * xi;
        }
    }

    /// `a + s * b`
    pub fn add_scaled<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&u, &v)| u + s * v).collect()
    }

    pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum::<T>().sqrt()
    }

    pub fn concat<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        out.extend_from_slice(a);
        out.extend_from_slice(b);
        out
    }

    pub fn all_finite<T: Real>(a: &[T]) -> bool {
        a.iter().all(|v| v.is_finite())
    }
}

use vector::{dot, norm};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        crate::error::check_len("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data: data.to_vec() })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            crate::error::check_len("matrix row", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Assembles a block matrix. Blocks in one block-row share a row count and
    /// blocks in one block-column share a column count.
    pub fn from_blocks(blocks: &[Vec<&Matrix<T>>]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Ok(Self::zeros(0, 0));
        };
        let widths: Vec<usize> = first.iter().map(|b| b.cols).collect();
        let cols = widths.iter().sum();
        let rows = blocks.iter().map(|r| r.first().map_or(0, |b| b.rows)).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for brow in blocks {
            crate::error::check_len("block row length", widths.len(), brow.len())?;
            let h = brow[0].rows;
            let mut c0 = 0;
            for (b, &w) in brow.iter().zip(&widths) {
                crate::error::check_len("block rows", h, b.rows)?;
                crate::error::check_len("block cols", w, b.cols)?;
                for i in 0..h {
                    for j in 0..w {
                        out[(r0 + i, c0 + j)] = b[(i, j)];
                    }
                }
                c0 += w;
            }
            r0 += h;
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `A x`
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn matvec_t(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != T::zero() {
                vector::axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                vector::axpy(a, other.row(k), dst);
            }
        }
        out
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for (j, &rj) in r.iter().enumerate() {
                if rj == T::zero() {
                    continue;
                }
                for (k, &rk) in r.iter().enumerate().skip(j) {
                    out.data[j * self.cols + k] += rj * rk;
                }
            }
        }
        for j in 0..self.cols {
            for k in 0..j {
                out.data[j * self.cols + k] = out.data[k * self.cols + j];
            }
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| s * v).collect() }
    }

    pub fn add(&self, other: &Matrix<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        vector::norm_inf(&self.data)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == T::zero())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored column-wise, matching `values`.
    pub vectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }

    pub fn max_abs_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Eigenvalues whose magnitude exceeds `rel_cutoff * max|λ|`, paired with
    /// their indices.
    pub fn nonzero(&self, rel_cutoff: T) -> Vec<(usize, T)> {
        let cut = rel_cutoff * self.max_abs_value();
        self.values.iter().copied().enumerate().filter(|&(_, v)| v.abs() > cut).collect()
    }
}

/// Cyclic Jacobi eigenvalue algorithm for symmetric matrices.
///
/// Only the upper triangle of `a` is read.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> SymmetricEigen<T> {
    assert_eq!(a.rows(), a.cols(), "eigen-decomposition needs a square matrix");
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)] * m[(i, j)]).sum();
        let diag: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with `k = min(m, n)`
/// triplets sorted by decreasing singular value.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub singular_values: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `rel_cutoff * σ_max`.
    pub fn rank(&self, rel_cutoff: T) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or_else(T::zero);
        self.singular_values.iter().filter(|&&s| s > rel_cutoff * smax).count()
    }
}

/// One-sided Jacobi (Hestenes) SVD.
pub fn svd<T: Real>(a: &Matrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> =
        (0..n).map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = vector::norm_sq(&w[p]);
                let beta = vector::norm_sq(&w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for cols in [&mut w, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<T> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let singular_values: Vec<T> = order.iter().map(|&j| sv[j]).collect();
    let u = Matrix::from_fn(m, n, |i, k| {
        let j = order[k];
        if sv[j] > T::zero() {
            w[j][i] / sv[j]
        } else {
            T::zero()
        }
    });
    let vm = Matrix::from_fn(n, n, |i, k| v[order[k]][i]);
    Svd { u, singular_values, v: vm }
}

/// Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        crate::error::check_len("cholesky square", a.rows(), a.cols())?;
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lower.rows();
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = l[(i, k)];
                let zk = z[k];
                z[i] -= lik * zk;
            }
            z[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = l[(k, i)];
                let zk = z[k];
                z[i] -= lki * zk;
            }
            z[i] /= l[(i, i)];
        }
        z
    }
}

/// Spectral norm `‖A‖₂` by power iteration on `AᵀA`.
///
/// Stops when successive estimates of `‖A‖²` agree to relative `1e-9`, or
/// after 10 000 iterations.
pub fn operator_norm<T: Real>(a: &Matrix<T>) -> Result<T> {
    if a.rows() == 0 || a.cols() == 0 || a.is_zero() {
        return Err(Error::ZeroOperator);
    }
    let n = a.cols();
    // Deterministic start with no special alignment to coordinate axes.
    let golden = 0.618_033_988_749_894_9_f64;
    let mut v: Vec<T> = (0..n).map(|i| T::lit(1.0 + ((i as f64 + 1.0) * golden).fract())).collect();
    let mut prev = T::zero();
    let tol = T::lit(1e-9);
    for _ in 0..10_000 {
        let nv = norm(&v);
        if nv == T::zero() {
            return Err(Error::NoConvergence);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let w = a.matvec_t(&a.matvec(&v));
        let lambda = dot(&v, &w);
        if (lambda - prev).abs() <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        prev = lambda;
        v = w;
    }
    Ok(prev.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn to_na(a: &Matrix<f64>) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
    }

    #[test]
    fn matvec_and_transpose_agree() {
        let a = random(4, 3, 1);
        let x = [0.5, -1.0, 2.0];
        let y = [1.0, 0.0, -2.0, 3.0];
        let at = a.transpose();
        assert_eq!(a.matvec_t(&y), at.matvec(&y));
        let lhs = dot(&a.matvec(&x), &y);
        let rhs = dot(&x, &a.matvec_t(&y));
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn gram_matches_matmul() {
        let a = random(5, 3, 2);
        let g = a.gram();
        let h = a.transpose().matmul(&a);
        assert!(g.sub(&h).max_abs() < 1e-14);
        assert_eq!(g.asymmetry(), 0.0);
    }

    #[test]
    fn blocks_assemble() {
        let i2 = Matrix::<f64>::identity(2);
        let z = Matrix::zeros(2, 2);
        let m = Matrix::from_blocks(&[vec![&i2, &z], vec![&z, &i2]]).unwrap();
        assert_eq!(m, Matrix::identity(4));
        let bad = Matrix::zeros(3, 2);
        assert!(Matrix::from_blocks(&[vec![&i2, &bad]]).is_err());
    }

    #[test]
    fn eigen_matches_nalgebra() {
        let b = random(6, 6, 3);
        let a = b.add(&b.transpose());
        let e = symmetric_eigen(&a);
        let mut reference: Vec<f64> = to_na(&a).symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in e.values.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        for k in 0..6 {
            let v = e.vector(k);
            let av = a.matvec(&v);
            for (p, q) in av.iter().zip(&v) {
                assert!((p - e.values[k] * q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_of_indefinite_two_by_two() {
        let t = 1.0 / 81.0;
        let a = Matrix::from_rows(&[vec![t, 9.0], vec![9.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&a);
        let disc = (t * t + 4.0 * 81.0_f64).sqrt();
        assert!((e.values[0] - (t - disc) / 2.0).abs() < 1e-13);
        assert!((e.values[1] - (t + disc) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn svd_reconstructs_and_matches_nalgebra() {
        for (r, c, seed) in [(7, 4, 4), (3, 8, 5), (5, 5, 6)] {
            let a = random(r, c, seed);
            let s = svd(&a);
            let k = r.min(c);
            assert_eq!(s.singular_values.len(), k);
            let rebuilt =
                Matrix::from_fn(r, c, |i, j| (0..k).map(|l| s.u[(i, l)] * s.singular_values[l] * s.v[(j, l)]).sum());
            assert!(rebuilt.sub(&a).max_abs() < 1e-13);
            let mut reference: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
            reference.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (x, y) in s.singular_values.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12);
            }
            let vtv = s.v.transpose().matmul(&s.v);
            assert!(vtv.sub(&Matrix::identity(k)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn svd_rank_of_deficient_matrix() {
        let b = random(6, 2, 7);
        let c = random(2, 5, 8);
        let a = b.matmul(&c);
        assert_eq!(svd(&a).rank(1e-10), 2);
    }

    #[test]
    fn cholesky_solves() {
        let b = random(5, 5, 9);
        let a = b.gram().add(&Matrix::identity(5));
        let ch = Cholesky::new(&a).unwrap();
        let rhs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x = ch.solve(&rhs);
        let r = vector::sub(&a.matvec(&x), &rhs);
        assert!(norm(&r) < 1e-12);
        let neg = Matrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(Cholesky::new(&neg), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Matrix::<f64>::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::<f64>::from_diag(&[3.0, 1.0]);
        assert!((operator_norm(&d).unwrap() - 3.0).abs() < 1e-9);
        let a = random(10, 20, 10);
        let smax = to_na(&a).singular_values().max();
        assert!((operator_norm(&a).unwrap() - smax).abs() < 1e-7);
        assert!(matches!(operator_norm(&Matrix::<f64>::zeros(2, 2)), Err(Error::ZeroOperator)));
    }
}

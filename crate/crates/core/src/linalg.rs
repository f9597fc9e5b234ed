//! Dense complex linear algebra on small square matrices.
//!
//! Storage is row-major. The matrices in this crate are at most a few
//! hundred rows (the vectorized Liouvillian), so plain Gaussian elimination
//! with partial pivoting is adequate.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major rows. Panics when the rows are ragged.
    pub fn from_rows<const N: usize>(rows: [[Complex<T>; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    /// Wraps row-major data. Fails when `data.len() != dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim)
            .map(|i| self[(i, i)])
            .fold(Complex::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (self - &self.adjoint()).max_abs() <= tol
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (self - &self.transpose()).max_abs() <= tol
    }

    pub fn mat_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.dim];
        self.mat_vec_into(v, &mut out);
        out
    }

    /// `out = self * v` without allocating.
    #[inline]
    pub fn mat_vec_into(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        debug_assert_eq!(v.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let mut acc = Complex::zero();
            for (a, x) in row.iter().zip(v) {
                acc += *a * *x;
            }
            *o = acc;
        }
    }

    /// Solves `self * x = b` by LU decomposition with partial pivoting.
    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let lu = Lu::new(self)?;
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = Lu::new(self)?;
        let n = self.dim;
        let mut inv = Self::zeros(n);
        let mut e = vec![Complex::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = Complex::zero());
            e[j] = Complex::one();
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> Complex<T> {
        match Lu::new(self) {
            Ok(lu) => lu.determinant(),
            Err(_) => Complex::zero(),
        }
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> Self {
        let norm = self.norm_one();
        let half = T::lit(0.5);
        let mut squarings = 0u32;
        let mut scale = T::one();
        while norm * scale > half {
            scale *= half;
            squarings += 1;
        }
        let a = self.scale(Complex::new(scale, T::zero()));
        let mut result = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=30 {
            term = &term * &a;
            term = term.scale(Complex::new(T::one() / T::lit(k as f64), T::zero()));
            result = result + term.clone();
            if term.max_abs() <= T::eps() * result.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        result
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<T: Real> Mul for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: ComplexMatrix<T>) -> ComplexMatrix<T> {
        &self * &rhs
    }
}

impl<T: Real> Add for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(mut self, rhs: ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
        self
    }
}

impl<T: Real> Sub for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(mut self, rhs: ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= *b;
        }
        self
    }
}

impl<'a, T: Real> Sub<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        self.clone() - rhs.clone()
    }
}

impl<'a, T: Real> Add<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        self.clone() + rhs.clone()
    }
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "({:+.6e}{:+.6e}i) ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// LU factorization `P A = L U` with partial pivoting.
pub struct Lu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
    sign_flips: usize,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &ComplexMatrix<T>) -> Result<Self> {
        let n = a.dim;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0;
        let scale = a.max_abs();
        if scale.is_zero() && n > 0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        let tiny = scale * T::eps() * T::lit(n.max(1) as f64) * T::lit(1e-3);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tiny {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign_flips += 1;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            sign_flips,
        })
    }

    #[allow(clippy::needless_range_loop)] // triangular sweeps read clearer indexed
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Smallest over largest pivot magnitude; a cheap rank indicator.
    pub fn pivot_ratio(&self) -> T {
        let mags = (0..self.n).map(|i| self.lu[i * self.n + i].norm());
        let (lo, hi) = mags.fold((T::infinity(), T::zero()), |(lo, hi), m| {
            (lo.min(m), hi.max(m))
        });
        if hi > T::zero() {
            lo / hi
        } else {
            T::zero()
        }
    }

    pub fn determinant(&self) -> Complex<T> {
        let mut det = Complex::one();
        for i in 0..self.n {
            det *= self.lu[i * self.n + i];
        }
        if self.sign_flips % 2 == 1 {
            -det
        } else {
            det
        }
    }
}

/// Squared Euclidean norm of a complex vector.
#[inline]
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian inner product `<a|b>`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

/// Solves the dense real system `a x = b` (`a` row-major `n x n`) by
/// Gaussian elimination with partial pivoting.
pub fn solve_real<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Singular(
            "matrix and right-hand side sizes differ".into(),
        ));
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::eps() * T::lit(n.max(1) as f64) * T::lit(1e-3);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                m[i * n + k]
                    .abs()
                    .partial_cmp(&m[j * n + k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if !(m[p * n + k].abs() > tiny) {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let u = m[k * n + j];
                m[i * n + j] -= f * u;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
    }
    Ok(x)
}

/// Inverse of a dense real `n x n` matrix.
pub fn invert_real<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut inv = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = solve_real(a, &e)?;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

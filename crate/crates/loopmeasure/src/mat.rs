//! Small dense complex matrices.
//!
//! Loop coefficients are 2x2 or 3x3 and the largest system solved is the
//! block-Toeplitz matrix of the factorization (at most a few dozen rows), so
//! a plain row-major store with partial-pivoting LU is all that is needed.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{lit, Real, C};

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    /// Matrix unit `E_ij` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = C::one();
        m
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        Mat { rows, cols, data }
    }

    /// 2x2 matrix `(a, b; c, d)`.
    pub fn m2(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Mat { rows: 2, cols: 2, data: vec![a, b, c, d] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn scale_re(&self, s: T) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.conj()).collect() }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols).map(|j| (0..self.rows).fold(T::zero(), |s, i| s + self[(i, j)].norm())).fold(T::zero(), T::max)
    }

    /// Frobenius norm squared, `trace(X X^dagger)`.
    pub fn frobenius_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |s, v| s + v.norm_sqr())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn det(&self) -> C<T> {
        match Lu::factor(self) {
            Ok(lu) => lu.det(),
            Err(_) => C::zero(),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        Lu::factor(self).ok().map(|lu| lu.inverse())
    }

    /// Copies a `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn expm(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        let norm = self.norm1().to_f64().unwrap_or(f64::INFINITY);
        let mut squarings = 0u32;
        if norm > 0.5 {
            squarings = (norm / 0.5).log2().ceil() as u32;
        }
        let a = self.scale_re(lit::<T>(0.5f64.powi(squarings as i32)));
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..=24 {
            term = (&term * &a).scale_re(lit::<T>(1.0 / k as f64));
            sum += &term;
            if term.norm_max() <= T::epsilon() * sum.norm_max() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Real> Mul<&'a Mat<T>> for &'a Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &'a Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Mul for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Mat<T>) -> Mat<T> {
        &self * &rhs
    }
}

impl<'a, T: Real> Add<&'a Mat<T>> for &'a Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &'a Mat<T>) -> Mat<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a, T: Real> Sub<&'a Mat<T>> for &'a Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &'a Mat<T>) -> Mat<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Real> Add for Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Mat<T>) -> Mat<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Mat<T>) -> Mat<T> {
        &self - &rhs
    }
}

impl<'a, T: Real> AddAssign<&'a Mat<T>> for Mat<T> {
    fn add_assign(&mut self, rhs: &'a Mat<T>) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
    }
}

impl<'a, T: Real> SubAssign<&'a Mat<T>> for Mat<T> {
    fn sub_assign(&mut self, rhs: &'a Mat<T>) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= *b;
        }
    }
}

impl<T: Real> Neg for &Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| -v).collect() }
    }
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign: T,
}

/// Marker error for an exactly or numerically singular pivot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularMatrix;

impl<T: Real> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Result<Self, SingularMatrix> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = a.norm_max();
        let tiny = T::epsilon() * lit::<T>(n as f64) * scale;
        for k in 0..n {
            let (p, best) =
                (k..n).map(|i| (i, lu[(i, k)].norm())).fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tiny || best == T::zero() {
                return Err(SingularMatrix);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu.data[i * n + j] -= f * u;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> C<T> {
        let n = self.lu.rows;
        (0..n).fold(Complex::new(self.sign, T::zero()), |acc, i| acc * self.lu[(i, i)])
    }

    /// Solves `A X = B` for a block of right-hand sides.
    pub fn solve(&self, b: &Mat<T>) -> Mat<T> {
        let n = self.lu.rows;
        assert_eq!(b.rows, n);
        let m = b.cols;
        let mut x = Mat::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l.is_zero() {
                    continue;
                }
                for j in 0..m {
                    let v = x[(k, j)];
                    x.data[i * m + j] -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                if u.is_zero() {
                    continue;
                }
                for j in 0..m {
                    let v = x[(k, j)];
                    x.data[i * m + j] -= u * v;
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x.data[i * m + j] /= d;
            }
        }
        x
    }

    pub fn inverse(&self) -> Mat<T> {
        self.solve(&Mat::identity(self.lu.rows))
    }
}

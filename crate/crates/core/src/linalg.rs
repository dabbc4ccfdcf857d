//! Small dense and banded linear-algebra kernels.
//!
//! Everything here is deliberately simple: the meshes this crate targets are
//! desk scale, factorizations are computed once and reused across time steps,
//! and all reductions run in a fixed order so repeated runs are bit-identical.
//! The kernels are generic over [`Scalar`] so the same code paths serve the
//! real time stepper and the complex resolvent probes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field element usable by the factorization kernels.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
{
    const ZERO: Self;
    const ONE: Self;

    fn from_re(x: f64) -> Self;
    /// Modulus used for pivot selection and degeneracy checks.
    fn modulus(self) -> f64;
    /// Multiplication by a real scale factor.
    fn scale(self, s: f64) -> Self;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_re(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);

    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMat<S = f64> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::ZERO; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![S::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = S::ZERO;
            let row = self.row(i);
            for (a, b) in row.iter().zip(x.iter()) {
                acc += *a * *b;
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorization with partial pivoting. Consumes the matrix.
    pub fn lu(mut self) -> Result<LuFactors<S>> {
        if self.rows != self.cols {
            return Err(Error::SingularSystem(format!(
                "LU of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut piv = Vec::with_capacity(n);
        let mut scale_ref = 0.0f64;
        for k in 0..n {
            let mut p = k;
            let mut best = self.get(k, k).modulus();
            for i in k + 1..n {
                let m = self.get(i, k).modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            scale_ref = scale_ref.max(best);
            if best <= f64::MIN_POSITIVE.max(1e-300) || best <= 1e-14 * scale_ref.max(1.0) * 0.0 {
                return Err(Error::SingularSystem(format!(
                    "zero pivot at column {k} (|pivot| = {best:e})"
                )));
            }
            if p != k {
                for j in 0..n {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            piv.push(p);
            let inv_pivot = S::ONE / self.get(k, k);
            for i in k + 1..n {
                let factor = self.get(i, k) * inv_pivot;
                self.set(i, k, factor);
                if factor != S::ZERO {
                    for j in k + 1..n {
                        let v = self.get(k, j) * factor;
                        let cur = self.get(i, j);
                        self.set(i, j, cur - v);
                    }
                }
            }
        }
        Ok(LuFactors { lu: self, piv })
    }
}

/// LU factors with pivot record, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactors<S = f64> {
    lu: DenseMat<S>,
    piv: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    pub fn size(&self) -> usize {
        self.lu.rows
    }

    pub fn solve_in_place(&self, b: &mut [S]) {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        // forward
        for i in 1..n {
            let mut acc = b[i];
            let row = self.lu.row(i);
            for (j, bj) in b.iter().enumerate().take(i) {
                acc -= row[j] * *bj;
            }
            b[i] = acc;
        }
        // backward
        for i in (0..n).rev() {
            let mut acc = b[i];
            let row = self.lu.row(i);
            for j in i + 1..n {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Tridiagonal matrix given by its three diagonals.
#[derive(Debug, Clone)]
pub struct Tridiag<S = f64> {
    /// Sub-diagonal, length n-1 (entry k couples row k+1 to column k).
    pub sub: Vec<S>,
    /// Main diagonal, length n.
    pub diag: Vec<S>,
    /// Super-diagonal, length n-1.
    pub sup: Vec<S>,
}

impl<S: Scalar> Tridiag<S> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut y = vec![S::ZERO; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Banded LU with partial pivoting (bandwidth grows to two
    /// super-diagonals under row swaps).
    pub fn factor(&self) -> Result<TridiagFactors<S>> {
        let n = self.n();
        let mut d = self.diag.clone();
        let mut u1 = self.sup.clone();
        let mut u2 = vec![S::ZERO; n.saturating_sub(2)];
        let mut l = vec![S::ZERO; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let mut sub = self.sub.clone();

        for k in 0..n.saturating_sub(1) {
            let below = sub[k];
            if below.modulus() > d[k].modulus() {
                swapped[k] = true;
                std::mem::swap(&mut d[k], &mut sub[k]);
                // row k and k+1 swap their remaining entries
                std::mem::swap(&mut u1[k], &mut d[k + 1]);
                if k + 2 < n {
                    std::mem::swap(&mut u1[k + 1], &mut u2[k]);
                }
            }
            if d[k].modulus() == 0.0 {
                return Err(Error::SingularSystem(format!(
                    "zero pivot in tridiagonal factorization at row {k}"
                )));
            }
            let factor = sub[k] / d[k];
            l[k] = factor;
            let correction = factor * u1[k];
            d[k + 1] -= correction;
            if k + 2 < n {
                u1[k + 1] -= factor * u2[k];
            }
        }
        if n > 0 && d[n - 1].modulus() == 0.0 {
            return Err(Error::SingularSystem(
                "zero pivot in tridiagonal factorization at last row".into(),
            ));
        }
        Ok(TridiagFactors {
            d,
            u1,
            u2,
            l,
            swapped,
        })
    }
}

/// Factored tridiagonal system.
#[derive(Debug, Clone)]
pub struct TridiagFactors<S = f64> {
    d: Vec<S>,
    u1: Vec<S>,
    u2: Vec<S>,
    l: Vec<S>,
    swapped: Vec<bool>,
}

impl<S: Scalar> TridiagFactors<S> {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn solve_in_place(&self, b: &mut [S]) {
        let n = self.d.len();
        assert_eq!(b.len(), n);
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let bk = b[k];
            b[k + 1] -= self.l[k] * bk;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * b[i + 2];
            }
            b[i] = acc / self.d[i];
        }
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in ascending order with matching
/// eigenvector columns.
pub fn jacobi_symmetric_eig(a: &DenseMat<f64>) -> Result<(Vec<f64>, DenseMat<f64>)> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMat::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-15 * scale;
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m.get(i, j).abs());
            }
        }
        if off <= tol {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
            let vals: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
            let mut vecs = DenseMat::zeros(n, n);
            for (col, &src) in order.iter().enumerate() {
                for r in 0..n {
                    vecs.set(r, col, v.get(r, src));
                }
            }
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    Err(Error::IterationStagnation {
        iterations: max_sweeps,
    })
}

/// Deterministic pseudo-random stream (splitmix64). Used wherever probe
/// vectors are needed so runs stay reproducible.
#[derive(Debug, Clone)]
pub struct DetRng(u64);

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        let u = self.next_u64() >> 11; // 53 bits
        (u as f64) / ((1u64 << 52) as f64) - 1.0
    }
}

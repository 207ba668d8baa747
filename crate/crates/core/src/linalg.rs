//! Dense Hermitian matrices and a cyclic Jacobi eigensolver.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix stored row-major, intended to hold Hermitian data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HermitianMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> HermitianMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    /// Builds the matrix from its upper triangle; the lower triangle is the
    /// conjugate mirror and the diagonal is forced real.
    pub fn from_upper<F: FnMut(usize, usize) -> Complex<T>>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            let d = f(i, i);
            m.data[i * n + i] = Complex::new(d.re, T::zero());
            for j in i + 1..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v.conj();
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        Self::from_upper(diag.len(), |i, j| {
            if i == j {
                Complex::new(diag[i], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i).re).collect()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_off_diagonal(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    worst = worst.max(self.get(i, j).norm());
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }

    /// `v^H A v` (real part; the imaginary part vanishes for Hermitian `A`).
    pub fn quad_form(&self, v: &[Complex<T>]) -> T {
        let av = self.mul_vec(v);
        v.iter()
            .zip(&av)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
            .re
    }

    /// `D A D` for the real diagonal `D = diag(scale)`.
    pub fn congruence_diagonal(&self, scale: &[T]) -> Self {
        let n = self.n;
        Self::from_upper(n, |i, j| self.get(i, j) * (scale[i] * scale[j]))
    }

    /// Leading principal submatrix of size `m`.
    pub fn leading(&self, m: usize) -> Self {
        Self::from_upper(m.min(self.n), |i, j| self.get(i, j))
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies the
/// classical real Jacobi rotation. Sweeps run in a fixed order so results are
/// deterministic.
pub fn hermitian_eigen<T: Real>(matrix: &HermitianMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = matrix.dim();
    ensure!(
        matrix.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        Numerical,
        "matrix has non-finite entries"
    );
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut a = matrix.data.clone();
    let mut v = vec![zero; n * n];
    for i in 0..n {
        v[i * n + i] = one;
    }
    let frob: T = a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let eps = T::epsilon();
    let mut converged = n <= 1;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off.sqrt() <= eps * frob || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag == T::zero() {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                if mag <= eps * T::lit(0.01) * (app.abs() + aqq.abs()) {
                    a[p * n + q] = zero;
                    a[q * n + p] = zero;
                    continue;
                }
                let phase = apq / mag; // e^{i phi}
                let ph_conj = phase.conj(); // e^{-i phi}
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = akp * c - akq * ph_conj * s;
                    let new_kq = akp * s + akq * ph_conj * c;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp.conj();
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq.conj();
                }
                a[p * n + p] = Complex::new(app - t * mag, T::zero());
                a[q * n + q] = Complex::new(aqq + t * mag, T::zero());
                a[p * n + q] = zero;
                a[q * n + p] = zero;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * ph_conj * s;
                    v[k * n + q] = vkp * s + vkq * ph_conj * c;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .re
            .partial_cmp(&a[j * n + j].re)
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = order.iter().map(|&col| (0..n).map(|k| v[k * n + col]).collect()).collect();
    Ok(HermitianEigen { values, vectors })
}

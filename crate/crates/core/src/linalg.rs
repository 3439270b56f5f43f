//! Small dense matrices and the symmetric eigensolver behind the propagators.
//!
//! Register dimensions stay below 2^12, and the operators that occur are real
//! symmetric in the computational basis (σ_x and σ_z terms only), so a cyclic
//! Jacobi sweep is accurate and plenty fast. Jacobi never rotates a pair whose
//! coupling is exactly zero, which keeps block-diagonal structure intact: the
//! eigenvectors of a Hamiltonian that commutes with the control σ_z operators
//! stay inside a single control sector.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::Real;

/// Dense square real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> RMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in (r + 1)..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    /// Largest absolute row sum; bounds the spectral radius.
    pub fn norm_inf(&self) -> T {
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .fold(T::zero(), |acc, v| acc + v.abs())
            })
            .fold(T::zero(), T::max)
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                let row = &self.data[r * self.dim..(r + 1) * self.dim];
                row.iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&h, &x)| acc + x * h)
            })
            .collect()
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }
}

impl<T> Index<(usize, usize)> for RMatrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for RMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.dim + c]
    }
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn from_real(m: &RMatrix<T>) -> Self {
        Self::from_fn(m.dim(), |r, c| Complex::new(m[(r, c)], T::zero()))
    }

    /// |ψ⟩⟨ψ|
    pub fn outer(psi: &[Complex<T>]) -> Self {
        Self::from_fn(psi.len(), |r, c| psi[r] * psi[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                let out_row = &mut out.data[r * n..(r + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    /// U · self · U†
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn max_hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
/// Column `k` of `vectors` is the eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: RMatrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// `exp(-i A t) = V diag(e^{-i λ t}) Vᵀ`.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        let n = self.values.len();
        let phases: Vec<Complex<T>> = self
            .values
            .iter()
            .map(|&l| Complex::from_polar(T::one(), -l * t))
            .collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, |r, c| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &p) in phases.iter().enumerate() {
                let w = v[(r, k)] * v[(c, k)];
                if w != T::zero() {
                    acc += p * w;
                }
            }
            acc
        })
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for real symmetric matrices.
///
/// Panics if the input is not square-symmetric to within a loose tolerance;
/// callers build their matrices symmetric by construction.
pub fn symmetric_eigen<T: Real>(a: &RMatrix<T>) -> SymmetricEigen<T> {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = RMatrix::identity(n);

    let scale = m.norm_inf().max(T::min_positive_value());
    debug_assert!(
        m.max_asymmetry() <= scale * T::lit(1e-9),
        "symmetric_eigen requires a symmetric matrix"
    );
    let tol = T::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // rotation angle that annihilates a[p][q]
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
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = RMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> RMatrix<f64> {
        // xorshift, enough for a test fixture
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = RMatrix::zeros(n);
        for r in 0..n {
            for c in r..n {
                let x = next();
                m[(r, c)] = x;
                m[(c, r)] = x;
            }
        }
        m
    }

    #[test]
    fn reconstructs_input() {
        for seed in 1..6 {
            let a = random_symmetric(8, seed);
            let e = symmetric_eigen(&a);
            for r in 0..8 {
                for c in 0..8 {
                    let rec: f64 = (0..8)
                        .map(|k| e.vectors[(r, k)] * e.values[k] * e.vectors[(c, k)])
                        .sum();
                    assert!((rec - a[(r, c)]).abs() < 1e-12);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let e = symmetric_eigen(&random_symmetric(6, 42));
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = (0..6).map(|k| e.vectors[(k, i)] * e.vectors[(k, j)]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_structure_preserved() {
        // two decoupled 2x2 blocks with identical spectra
        let mut a = RMatrix::<f64>::zeros(4);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = -1.0;
        a[(0, 1)] = 0.5;
        a[(1, 0)] = 0.5;
        a[(2, 2)] = 1.0;
        a[(3, 3)] = -1.0;
        a[(2, 3)] = 0.5;
        a[(3, 2)] = 0.5;
        let e = symmetric_eigen(&a);
        for k in 0..4 {
            let upper = e.vectors[(0, k)].abs() + e.vectors[(1, k)].abs();
            let lower = e.vectors[(2, k)].abs() + e.vectors[(3, k)].abs();
            assert!(upper == 0.0 || lower == 0.0, "eigenvector {k} mixes blocks");
        }
    }

    #[test]
    fn propagator_is_unitary() {
        let a = random_symmetric(4, 7);
        let u = symmetric_eigen(&a).propagator(1.3);
        let prod = u.matmul(&u.adjoint());
        assert!(prod.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn propagator_matches_taylor_series() {
        let a = random_symmetric(3, 11);
        let t = 0.7;
        let u = symmetric_eigen(&a).propagator(t);
        // exp(-iAt) by a long Taylor series
        let ca = CMatrix::from_real(&a);
        let mut term = CMatrix::<f64>::identity(3);
        let mut sum = CMatrix::<f64>::identity(3);
        for k in 1..40 {
            term = term.matmul(&ca);
            let f = Complex::new(0.0, -t / k as f64);
            for z in term.data.iter_mut() {
                *z *= f;
            }
            for (s, z) in sum.data.iter_mut().zip(term.data.iter()) {
                *s += *z;
            }
        }
        assert!(u.max_abs_diff(&sum) < 1e-12);
    }
}

//! Register states over `n` qubits.
//!
//! Basis convention: qubit `k` is bit `n-1-k` of the basis index, so the
//! bit string "10" on two qubits is index 2. A qubit's σ_z eigenvalue is +1
//! on |1⟩ and −1 on |0⟩.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Largest register handled as a dense pure state.
pub const MAX_PURE_QUBITS: usize = 12;
/// Largest register handled as a dense density matrix.
pub const MAX_MIXED_QUBITS: usize = 7;

const STATE_TOL: f64 = 1e-9;

/// Computational-basis assignment, one entry per qubit (`true` = |1⟩).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// All `2^n` assignments in index order.
    pub fn all(n: usize) -> impl Iterator<Item = Bits> {
        (0..1usize << n).map(move |i| Bits::from_index(n, i))
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        Self((0..n).map(|k| index >> (n - 1 - k) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn set(&mut self, k: usize, value: bool) {
        self.0[k] = value;
    }

    /// σ_z eigenvalue of qubit `k`, as ±1.
    pub fn z<T: Real>(&self, k: usize) -> T {
        if self.0[k] {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn parity(&self) -> bool {
        self.0.iter().filter(|&&b| b).count() % 2 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::BitString {
                    input: s.to_owned(),
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }
}

impl TryFrom<String> for Bits {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Bits> for String {
    fn from(b: Bits) -> String {
        b.to_string()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Pure state vector or density matrix on an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub enum RegisterState<T> {
    Pure { n_qubits: usize, amplitudes: Vec<Complex<T>> },
    Mixed { n_qubits: usize, rho: CMatrix<T> },
}

/// Pure computational basis state |bits⟩.
pub fn make_basis_state<T: Real>(n: usize, bits: &Bits) -> Result<RegisterState<T>> {
    if bits.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bits.len(),
        });
    }
    if n > MAX_PURE_QUBITS {
        return Err(Error::TooLarge {
            n_qubits: n,
            limit: MAX_PURE_QUBITS,
        });
    }
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n];
    amplitudes[bits.index()] = Complex::new(T::one(), T::zero());
    Ok(RegisterState::Pure {
        n_qubits: n,
        amplitudes,
    })
}

/// Bit mask of qubit `k` in an `n`-qubit basis index.
#[inline]
pub(crate) fn qubit_mask(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

impl<T: Real> RegisterState<T> {
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "state vector length {dim} is not a power of two"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let state = Self::Pure {
            n_qubits,
            amplitudes,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn from_density_matrix(rho: CMatrix<T>) -> Result<Self> {
        let dim = rho.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "density matrix dimension {dim} is not a power of two"
            )));
        }
        let state = Self::Mixed {
            n_qubits: dim.trailing_zeros() as usize,
            rho,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pure { n_qubits, .. } | Self::Mixed { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure { .. })
    }

    pub fn amplitudes(&self) -> Option<&[Complex<T>]> {
        match self {
            Self::Pure { amplitudes, .. } => Some(amplitudes),
            Self::Mixed { .. } => None,
        }
    }

    /// Density-matrix form of the same state.
    pub fn to_mixed(&self) -> Result<Self> {
        match self {
            Self::Pure {
                n_qubits,
                amplitudes,
            } => {
                if *n_qubits > MAX_MIXED_QUBITS {
                    return Err(Error::TooLarge {
                        n_qubits: *n_qubits,
                        limit: MAX_MIXED_QUBITS,
                    });
                }
                Ok(Self::Mixed {
                    n_qubits: *n_qubits,
                    rho: CMatrix::outer(amplitudes),
                })
            }
            Self::Mixed { .. } => Ok(self.clone()),
        }
    }

    pub fn density_matrix(&self) -> Result<CMatrix<T>> {
        match self.to_mixed()? {
            Self::Mixed { rho, .. } => Ok(rho),
            Self::Pure { .. } => unreachable!("to_mixed returns a mixed state"),
        }
    }

    /// Σ|a|² for pure states, Re tr ρ for mixed states.
    pub fn norm(&self) -> T {
        match self {
            Self::Pure { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).sum(),
            Self::Mixed { rho, .. } => rho.trace().re,
        }
    }

    /// Checks normalization, and for density matrices Hermiticity and
    /// positivity (via the diagonal and 2×2 principal minors).
    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(STATE_TOL);
        let norm = self.norm();
        if (norm - T::one()).abs() > tol {
            return Err(Error::Numerical(format!("state norm {norm} differs from 1")));
        }
        if let Self::Mixed { rho, .. } = self {
            if rho.max_hermitian_defect() > tol {
                return Err(Error::Numerical("density matrix is not Hermitian".into()));
            }
            if rho.trace().im.abs() > tol {
                return Err(Error::Numerical("density matrix trace is not real".into()));
            }
            let n = rho.dim();
            for i in 0..n {
                if rho[(i, i)].re < -tol {
                    return Err(Error::Numerical("negative population".into()));
                }
                for j in (i + 1)..n {
                    let minor = rho[(i, i)].re * rho[(j, j)].re - rho[(i, j)].norm_sqr();
                    if minor < -tol {
                        return Err(Error::Numerical("density matrix is not positive".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits() {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits(),
            });
        }
        Ok(())
    }

    /// Marginal probability of measuring qubit `qubit` in |1⟩.
    pub fn probability_one(&self, qubit: usize) -> Result<T> {
        self.check_qubit(qubit)?;
        let mask = qubit_mask(self.n_qubits(), qubit);
        let p: T = match self {
            Self::Pure { amplitudes, .. } => amplitudes
                .iter()
                .enumerate()
                .filter(|(i, _)| i & mask != 0)
                .map(|(_, a)| a.norm_sqr())
                .sum(),
            Self::Mixed { rho, .. } => (0..rho.dim())
                .filter(|i| i & mask != 0)
                .map(|i| rho[(i, i)].re)
                .sum(),
        };
        Ok(p.max(T::zero()).min(T::one()))
    }

    /// Probability that the listed qubits are found in the given bits.
    pub fn probability_of(&self, qubits: &[usize], bits: &[bool]) -> Result<T> {
        assert_eq!(qubits.len(), bits.len());
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let n = self.n_qubits();
        let matches = |i: usize| {
            qubits
                .iter()
                .zip(bits)
                .all(|(&q, &b)| (i & qubit_mask(n, q) != 0) == b)
        };
        Ok(match self {
            Self::Pure { amplitudes, .. } => amplitudes
                .iter()
                .enumerate()
                .filter(|(i, _)| matches(*i))
                .map(|(_, a)| a.norm_sqr())
                .sum(),
            Self::Mixed { rho, .. } => (0..rho.dim())
                .filter(|&i| matches(i))
                .map(|i| rho[(i, i)].re)
                .sum(),
        })
    }

    /// Full population vector over the computational basis.
    pub fn populations(&self) -> Vec<T> {
        match self {
            Self::Pure { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).collect(),
            Self::Mixed { rho, .. } => (0..rho.dim()).map(|i| rho[(i, i)].re).collect(),
        }
    }

    /// Applies a single-qubit unitary `u` (row-major 2×2) to `qubit`.
    pub fn apply_single_qubit(&mut self, qubit: usize, u: &[[Complex<T>; 2]; 2]) -> Result<()> {
        self.check_qubit(qubit)?;
        let n = self.n_qubits();
        let mask = qubit_mask(n, qubit);
        match self {
            Self::Pure { amplitudes, .. } => apply_to_vector(amplitudes, mask, u),
            Self::Mixed { rho, .. } => {
                let dim = rho.dim();
                // rows: ρ → Uρ
                for c in 0..dim {
                    for i0 in (0..dim).filter(|i| i & mask == 0) {
                        let i1 = i0 | mask;
                        let a0 = rho[(i0, c)];
                        let a1 = rho[(i1, c)];
                        rho[(i0, c)] = u[0][0] * a0 + u[0][1] * a1;
                        rho[(i1, c)] = u[1][0] * a0 + u[1][1] * a1;
                    }
                }
                // columns: Uρ → UρU†
                for r in 0..dim {
                    for j0 in (0..dim).filter(|j| j & mask == 0) {
                        let j1 = j0 | mask;
                        let a0 = rho[(r, j0)];
                        let a1 = rho[(r, j1)];
                        rho[(r, j0)] = a0 * u[0][0].conj() + a1 * u[0][1].conj();
                        rho[(r, j1)] = a0 * u[1][0].conj() + a1 * u[1][1].conj();
                    }
                }
            }
        }
        Ok(())
    }

    /// Overlap |⟨a|b⟩|² for pure states; tr(ρσ) when either is mixed
    /// (equal to the fidelity whenever one side is pure).
    pub fn overlap(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        match (self, other) {
            (Self::Pure { amplitudes: a, .. }, Self::Pure { amplitudes: b, .. }) => {
                let inner = a
                    .iter()
                    .zip(b)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y);
                Ok(inner.norm_sqr())
            }
            _ => {
                let ra = self.density_matrix()?;
                let rb = other.density_matrix()?;
                let n = ra.dim();
                let mut acc = Complex::new(T::zero(), T::zero());
                for r in 0..n {
                    for c in 0..n {
                        acc += ra[(r, c)] * rb[(c, r)];
                    }
                }
                Ok(acc.re)
            }
        }
    }
}

pub(crate) fn apply_to_vector<T: Real>(
    amplitudes: &mut [Complex<T>],
    mask: usize,
    u: &[[Complex<T>; 2]; 2],
) {
    for i0 in (0..amplitudes.len()).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        let a0 = amplitudes[i0];
        let a1 = amplitudes[i1];
        amplitudes[i0] = u[0][0] * a0 + u[0][1] * a1;
        amplitudes[i1] = u[1][0] * a0 + u[1][1] * a1;
    }
}

/// Common single-qubit gates.
pub mod gates {
    use num_complex::Complex;

    use crate::scalar::Real;

    pub type Gate<T> = [[Complex<T>; 2]; 2];

    fn c<T: Real>(re: T, im: T) -> Complex<T> {
        Complex::new(re, im)
    }

    pub fn hadamard<T: Real>() -> Gate<T> {
        let h = T::FRAC_1_SQRT_2();
        let z = T::zero();
        [[c(h, z), c(h, z)], [c(h, z), c(-h, z)]]
    }

    pub fn pauli_x<T: Real>() -> Gate<T> {
        let (o, z) = (T::one(), T::zero());
        [[c(z, z), c(o, z)], [c(o, z), c(z, z)]]
    }

    /// exp(−i θ/2 (cos φ σ_x + sin φ σ_y)): a resonant pulse of area θ with
    /// carrier phase φ.
    pub fn rotation<T: Real>(theta: T, phi: T) -> Gate<T> {
        let half = theta / T::lit(2.0);
        let (s, co) = half.sin_cos();
        let z = T::zero();
        // −i sinθ/2 (cosφ σx + sinφ σy) has off-diagonals −i s e^{∓iφ}
        let upper = c(z, -s) * Complex::from_polar(T::one(), -phi);
        let lower = c(z, -s) * Complex::from_polar(T::one(), phi);
        [[c(co, z), upper], [lower, c(co, z)]]
    }
}

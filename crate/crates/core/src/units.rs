//! Angular-frequency newtype. All Hamiltonian terms are stored in rad/s.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// An angular frequency in rad/s. A "2π × 37.5 Hz" coupling is stored as
/// `2π·37.5`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct AngularFrequency<T>(pub T);

impl<T: Real> AngularFrequency<T> {
    pub const fn new(rad_per_s: T) -> Self {
        Self(rad_per_s)
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    /// Builds from an ordinary frequency in Hz, i.e. `2π · hz`.
    pub fn from_hz(hz: T) -> Self {
        Self(T::TAU() * hz)
    }

    pub fn rad_per_s(self) -> T {
        self.0
    }

    /// Ordinary frequency in Hz.
    pub fn hz(self) -> T {
        self.0 / T::TAU()
    }

    pub fn abs(self) -> Self {
        Self(self.0.abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl<T: Real> Add for AngularFrequency<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for AngularFrequency<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for AngularFrequency<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl<T: Real> Mul<T> for AngularFrequency<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self(self.0 * rhs)
    }
}

/// Ratio of two frequencies is dimensionless.
impl<T: Real> Div for AngularFrequency<T> {
    type Output = T;
    fn div(self, rhs: Self) -> T {
        self.0 / rhs.0
    }
}

impl<T: Real> fmt::Display for AngularFrequency<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π×{} Hz", self.hz())
    }
}

//! Second-order jets: a value with its input gradient and Hessian.
//!
//! [`Jet2`] doubles as a small forward-mode number type. Closed-form
//! solutions and source terms are written once over [`Scalar`] and evaluated
//! either on plain `f64` or on jets, which gives their exact derivatives
//! without finite differences.

use std::ops::{Add, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar field at one point.
///
/// The Hessian is stored densely in row-major order (`d×d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// The coordinate function `x ↦ x_axis` evaluated at `value`.
    pub fn variable(value: f64, axis: usize, dim: usize) -> Self {
        let mut jet = Self::constant(value, dim);
        jet.grad[axis] = 1.0;
        jet
    }

    /// Coordinate jets for every axis of a point.
    pub fn coordinates(x: &[f64]) -> Vec<Self> {
        let d = x.len();
        x.iter()
            .enumerate()
            .map(|(i, &xi)| Self::variable(xi, i, d))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn laplacian(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.hess[i * d + i]).sum()
    }

    /// Largest `|H_ij − H_ji|`.
    pub fn hess_asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..i {
                worst = worst.max((self.hess[i * d + j] - self.hess[j * d + i]).abs());
            }
        }
        worst
    }

    /// Composition `g ∘ self` given `g`, `g'`, `g''` at `self.value`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        let d = self.dim();
        let mut out = Self::constant(g0, d);
        for i in 0..d {
            out.grad[i] = g1 * self.grad[i];
            for j in 0..d {
                out.hess[i * d + j] =
                    g2 * self.grad[i] * self.grad[j] + g1 * self.hess[i * d + j];
            }
        }
        out
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            value: f(self.value, other.value),
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&other.hess)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

/// Cotangent on jet space: the derivative of a scalar functional of a jet
/// with respect to each jet entry.
#[derive(Debug, Clone, PartialEq)]
pub struct JetCotangent {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl JetCotangent {
    pub fn zeros(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.grad.iter_mut().for_each(|g| *g *= factor);
        self.hess.iter_mut().for_each(|h| *h *= factor);
        self
    }

    /// `⟨self, jet⟩`, the directional derivative along a jet perturbation.
    pub fn pair(&self, jet: &Jet2) -> f64 {
        self.value * jet.value
            + dot(&self.grad, &jet.grad)
            + dot(&self.hess, &jet.hess)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimal field interface for closed-form expressions.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn sinh(&self) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet2 {
    fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }
    fn value(&self) -> f64 {
        self.value
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(self.value * rhs.value, d);
        for i in 0..d {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
            for j in 0..d {
                let k = i * d + j;
                out.hess[k] = self.hess[k] * rhs.value
                    + self.value * rhs.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: f64) -> Jet2 {
        self.value += rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(mut self, rhs: f64) -> Jet2 {
        self.value *= rhs;
        self.grad.iter_mut().for_each(|g| *g *= rhs);
        self.hess.iter_mut().for_each(|h| *h *= rhs);
        self
    }
}

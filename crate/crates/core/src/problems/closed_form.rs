//! Closed-form fields (exact solutions, sources, initial data), generic over
//! [`Scalar`] so they can be evaluated on `f64` or on jets.

use std::f64::consts::PI;

use crate::autodiff::{Jet2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `sin(πx)·exp(−π²κt)` on `(x, t)`.
    HeatDecay { diffusivity: f64 },
    /// `sin(πx)·sinh(πy)/sinh(π)`.
    LaplaceSinh,
    /// `Σ_{i<j} x_i x_j`.
    PairwiseProducts,
    /// `Π_i sin(πx_i)`.
    SineProduct,
    /// `2π²·s + s³` with `s = sin(πx)sin(πy)`.
    CubicPoissonSource,
    /// `−sin(πx)`.
    NegSine,
    /// `x²·cos(πx)`.
    SquaredCosine,
    Zero,
}

impl ClosedForm {
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let zero = || x[0].clone() * 0.0;
        match *self {
            ClosedForm::HeatDecay { diffusivity } => {
                (x[0].clone() * PI).sin() * (x[1].clone() * (-PI * PI * diffusivity)).exp()
            }
            ClosedForm::LaplaceSinh => {
                (x[0].clone() * PI).sin() * (x[1].clone() * PI).sinh() * (1.0 / PI.sinh())
            }
            ClosedForm::PairwiseProducts => {
                let mut acc = zero();
                for i in 0..x.len() {
                    for j in i + 1..x.len() {
                        acc = acc + x[i].clone() * x[j].clone();
                    }
                }
                acc
            }
            ClosedForm::SineProduct => sine_product(x),
            ClosedForm::CubicPoissonSource => {
                let s = sine_product(x);
                s.clone() * (2.0 * PI * PI) + s.clone() * s.clone() * s
            }
            ClosedForm::NegSine => (x[0].clone() * PI).sin() * -1.0,
            ClosedForm::SquaredCosine => x[0].clone() * x[0].clone() * (x[0].clone() * PI).cos(),
            ClosedForm::Zero => zero(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// Exact jet at `x`.
    pub fn jet(&self, x: &[f64]) -> Jet2 {
        self.eval(&Jet2::coordinates(x))
    }
}

fn sine_product<T: Scalar>(x: &[T]) -> T {
    let mut acc = (x[0].clone() * PI).sin();
    for xi in &x[1..] {
        acc = acc * (xi.clone() * PI).sin();
    }
    acc
}

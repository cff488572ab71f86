//! Pointwise differential operators acting on second-order jets.
//!
//! Time-dependent problems use coordinates `(x, t)`: axis 0 is space and
//! axis 1 is time.

use std::fmt;

use crate::autodiff::{Jet2, JetCotangent};

/// A differential operator evaluated pointwise from the jet of `u`.
pub trait PointOperator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Highest derivative order the operator reads.
    fn order(&self) -> usize;

    fn apply(&self, jet: &Jet2, x: &[f64]) -> f64;

    /// Derivative of [`apply`](Self::apply) with respect to the jet entries.
    fn cotangent(&self, jet: &Jet2, x: &[f64]) -> JetCotangent;
}

/// `u` itself (Dirichlet data, periodic value matching).
#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl PointOperator for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn order(&self) -> usize {
        0
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        jet.value
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let mut cot = JetCotangent::zeros(jet.dim());
        cot.value = 1.0;
        cot
    }
}

/// `∂u/∂x_axis` (periodic slope matching).
#[derive(Debug, Clone, Copy)]
pub struct AxisSlope {
    pub axis: usize,
}

impl PointOperator for AxisSlope {
    fn name(&self) -> &'static str {
        "axis-slope"
    }
    fn order(&self) -> usize {
        1
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        jet.grad[self.axis]
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let mut cot = JetCotangent::zeros(jet.dim());
        cot.grad[self.axis] = 1.0;
        cot
    }
}

/// `Δu`.
#[derive(Debug, Clone, Copy)]
pub struct Laplacian;

impl PointOperator for Laplacian {
    fn name(&self) -> &'static str {
        "laplacian"
    }
    fn order(&self) -> usize {
        2
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        jet.laplacian()
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let d = jet.dim();
        let mut cot = JetCotangent::zeros(d);
        for i in 0..d {
            cot.hess[i * d + i] = 1.0;
        }
        cot
    }
}

/// `u_t − κ u_xx`.
#[derive(Debug, Clone, Copy)]
pub struct Heat {
    pub diffusivity: f64,
}

impl PointOperator for Heat {
    fn name(&self) -> &'static str {
        "heat"
    }
    fn order(&self) -> usize {
        2
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        jet.grad[1] - self.diffusivity * jet.hess[0]
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let mut cot = JetCotangent::zeros(jet.dim());
        cot.grad[1] = 1.0;
        cot.hess[0] = -self.diffusivity;
        cot
    }
}

/// Viscous Burgers: `u_t + u u_x − ν u_xx`.
#[derive(Debug, Clone, Copy)]
pub struct Burgers {
    pub viscosity: f64,
}

impl PointOperator for Burgers {
    fn name(&self) -> &'static str {
        "burgers"
    }
    fn order(&self) -> usize {
        2
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        jet.grad[1] + jet.value * jet.grad[0] - self.viscosity * jet.hess[0]
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let mut cot = JetCotangent::zeros(jet.dim());
        cot.value = jet.grad[0];
        cot.grad[0] = jet.value;
        cot.grad[1] = 1.0;
        cot.hess[0] = -self.viscosity;
        cot
    }
}

/// `−Δu + u³`.
#[derive(Debug, Clone, Copy)]
pub struct CubicPoisson;

impl PointOperator for CubicPoisson {
    fn name(&self) -> &'static str {
        "cubic-poisson"
    }
    fn order(&self) -> usize {
        2
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        -jet.laplacian() + jet.value.powi(3)
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let d = jet.dim();
        let mut cot = JetCotangent::zeros(d);
        cot.value = 3.0 * jet.value * jet.value;
        for i in 0..d {
            cot.hess[i * d + i] = -1.0;
        }
        cot
    }
}

/// Allen–Cahn: `u_t − D u_xx + k u³ − k u`.
#[derive(Debug, Clone, Copy)]
pub struct AllenCahn {
    pub diffusion: f64,
    pub reaction: f64,
}

impl PointOperator for AllenCahn {
    fn name(&self) -> &'static str {
        "allen-cahn"
    }
    fn order(&self) -> usize {
        2
    }
    fn apply(&self, jet: &Jet2, _x: &[f64]) -> f64 {
        let u = jet.value;
        jet.grad[1] - self.diffusion * jet.hess[0] + self.reaction * (u * u * u - u)
    }
    fn cotangent(&self, jet: &Jet2, _x: &[f64]) -> JetCotangent {
        let mut cot = JetCotangent::zeros(jet.dim());
        let u = jet.value;
        cot.value = self.reaction * (3.0 * u * u - 1.0);
        cot.grad[1] = 1.0;
        cot.hess[0] = -self.diffusion;
        cot
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_jet() -> Jet2 {
        Jet2 {
            value: 0.8,
            grad: vec![-0.3, 1.7],
            hess: vec![0.9, 0.2, 0.2, -1.4],
        }
    }

    /// Every cotangent must be the exact linearization of `apply`.
    #[test]
    fn cotangents_linearize_apply() {
        let ops: Vec<Box<dyn PointOperator>> = vec![
            Box::new(Identity),
            Box::new(AxisSlope { axis: 1 }),
            Box::new(Laplacian),
            Box::new(Heat { diffusivity: 0.25 }),
            Box::new(Burgers { viscosity: 0.01 }),
            Box::new(CubicPoisson),
            Box::new(AllenCahn {
                diffusion: 1e-4,
                reaction: 5.0,
            }),
        ];
        let jet = sample_jet();
        let x = [0.1, 0.2];
        let h = 1e-6;
        for op in &ops {
            let cot = op.cotangent(&jet, &x);
            let n = 1 + jet.grad.len() + jet.hess.len();
            for k in 0..n {
                let perturb = |s: f64| {
                    let mut j = jet.clone();
                    match k {
                        0 => j.value += s,
                        k if k <= 2 => j.grad[k - 1] += s,
                        k => j.hess[k - 3] += s,
                    }
                    op.apply(&j, &x)
                };
                let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                let exact = match k {
                    0 => cot.value,
                    k if k <= 2 => cot.grad[k - 1],
                    k => cot.hess[k - 3],
                };
                assert!((fd - exact).abs() < 1e-8, "{} entry {k}", op.name());
            }
        }
    }
}

//! Cole–Hopf reference solution of the viscous Burgers equation
//! `u_t + u u_x = ν u_xx`, `u(x, 0) = −sin(πx)`, `u(±1, t) = 0`.
//!
//! With the heat-kernel substitution `η = √(4νt)·s`,
//!
//! ```text
//! u(x,t) = −∫ sin(π(x−η)) F(x−η) e^{−s²} ds / ∫ F(x−η) e^{−s²} ds,
//! F(y) = exp(−cos(πy) / (2πν))
//! ```
//!
//! Both integrals are evaluated with composite Gauss–Legendre quadrature on
//! `s ∈ [−S_MAX, S_MAX]`, with the exponent shifted by its maximum so the
//! `e^{±1/(2πν)}` factors never overflow.

use std::f64::consts::PI;

/// Burgers viscosity of the benchmark, `0.01/π`.
pub const BURGERS_VISCOSITY: f64 = 0.01 / PI;

const S_MAX: f64 = 10.0;
const PANELS: usize = 400;
const NODES: usize = 12;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Reference solution of the benchmark Burgers problem.
pub fn burgers_reference(x: f64, t: f64) -> f64 {
    burgers_cole_hopf(x, t, BURGERS_VISCOSITY)
}

pub fn burgers_cole_hopf(x: f64, t: f64, viscosity: f64) -> f64 {
    if t <= 0.0 {
        return -(PI * x).sin();
    }
    let width = (4.0 * viscosity * t).sqrt();
    let inv = 1.0 / (2.0 * PI * viscosity);
    let (gl_x, gl_w) = gauss_legendre(NODES);
    let h = 2.0 * S_MAX / PANELS as f64;

    let mut samples = Vec::with_capacity(PANELS * NODES);
    let mut max_exponent = f64::NEG_INFINITY;
    for panel in 0..PANELS {
        let mid = -S_MAX + (panel as f64 + 0.5) * h;
        for (&node, &w) in gl_x.iter().zip(&gl_w) {
            let s = mid + 0.5 * h * node;
            let y = x - width * s;
            let exponent = -(PI * y).cos() * inv - s * s;
            max_exponent = max_exponent.max(exponent);
            samples.push((y, exponent, 0.5 * h * w));
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (y, exponent, w) in samples {
        let weight = w * (exponent - max_exponent).exp();
        num += (PI * y).sin() * weight;
        den += weight;
    }
    -num / den
}

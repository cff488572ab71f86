//! Reconstruction-error curves and the rank selectors built on them.
//!
//! For SVD factors `A = V diag(σ) Uᵀ` and a sample-space vector `g`,
//! `RCE_N = ‖g − V_N V_Nᵀ g‖ / √S` where `V_N` keeps the first `N` sample
//! columns. With `c = Vᵀg`,
//!
//! ```text
//! S·RCE_N² = ‖g − V c‖² + Σ_{p>N} c_p²
//! ```
//!
//! which is evaluated as a suffix sum so small tails keep full relative
//! precision (`‖g‖² − Σ_{p≤N} c_p²` cancels catastrophically once the curve
//! drops many decades below `RCE_0`).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SvdFactors;

/// Default relative tolerance for [`flattening_span`].
pub const DEFAULT_FLATTEN_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RceCurve {
    /// `RCE_0 … RCE_r`.
    pub values: Vec<f64>,
    /// `σ_1 … σ_r`.
    pub singular_values: Vec<f64>,
    /// `c = Vᵀg`.
    pub coefficients: Vec<f64>,
    pub sample_count: usize,
}

impl RceCurve {
    pub fn rank_dim(&self) -> usize {
        self.singular_values.len()
    }

    /// `(1/S) Σ_{M<p≤N} c_p²`, the energy of the coefficient block `(M, N]`.
    pub fn segment_energy(&self, m: usize, n: usize) -> f64 {
        let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
        self.coefficients[lo..hi].iter().map(|c| c * c).sum::<f64>() / self.sample_count as f64
    }

    /// Largest upward step `values[N+1] − values[N]` (zero for a
    /// non-increasing curve).
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub r_int: usize,
    pub r_eps: usize,
    pub elbow: usize,
    pub n_flat: usize,
    pub is_flattened_to_zero: bool,
}

pub fn reconstruction_errors(factors: &SvdFactors, g: &DVector<f64>) -> Result<RceCurve> {
    let s = factors.sample_count();
    if g.len() != s {
        return Err(Error::DimensionMismatch {
            what: "reconstruction target",
            expected: s,
            actual: g.len(),
        });
    }
    let c = factors.sample_side.tr_mul(g);
    let r = c.len();
    let orth = (g - &factors.sample_side * &c).norm_squared();
    let scale = 1.0 / s as f64;

    let mut values = vec![0.0; r + 1];
    let mut tail = orth;
    for n in (1..=r).rev() {
        values[n] = (tail * scale).sqrt();
        tail += c[n - 1] * c[n - 1];
    }
    values[0] = g.norm() * scale.sqrt();
    Ok(RceCurve {
        values,
        singular_values: factors.singular_values.iter().copied().collect(),
        coefficients: c.iter().copied().collect(),
        sample_count: s,
    })
}

/// `#{j ≥ 1 : RCE_j ≤ σ_j}`.
pub fn intersection_rank(curve: &RceCurve) -> usize {
    curve.values[1..]
        .iter()
        .zip(&curve.singular_values)
        .filter(|(v, s)| v <= s)
        .count()
}

/// `#{j ≥ 1 : RCE_j ≥ ε}`.
pub fn precision_rank(curve: &RceCurve, eps: f64) -> usize {
    curve.values[1..].iter().filter(|&&v| v >= eps).count()
}

/// Index (1-based) of the point farthest from the chord of `(xs, fs)` on
/// the clockwise side; ties go to the smallest index.
pub fn find_elbow(xs: &[f64], fs: &[f64]) -> Result<usize> {
    let m = xs.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "elbow search needs at least 2 points, got {m}"
        )));
    }
    if fs.len() != m {
        return Err(Error::DimensionMismatch {
            what: "elbow ordinates",
            expected: m,
            actual: fs.len(),
        });
    }
    let nx = fs[m - 1] - fs[0];
    let ny = xs[0] - xs[m - 1];
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..m {
        let score = nx * (xs[j] - xs[0]) + ny * (fs[j] - fs[0]);
        if score > best_score {
            best_score = score;
            best = j;
        }
    }
    Ok(best + 1)
}

/// Elbow of a singular-value spectrum over its strictly positive entries,
/// with `x = 1…m` and `f = log10 σ` (or `σ` when `log_scale` is false).
/// Spectra with fewer than two positive values return their positive count.
pub fn spectrum_elbow(singular_values: &[f64], log_scale: bool) -> usize {
    let positive: Vec<f64> = singular_values.iter().copied().filter(|&s| s > 0.0).collect();
    if positive.len() < 2 {
        return positive.len();
    }
    let xs: Vec<f64> = (1..=positive.len()).map(|i| i as f64).collect();
    let fs: Vec<f64> = if log_scale {
        positive.iter().map(|s| s.log10()).collect()
    } else {
        positive
    };
    find_elbow(&xs, &fs).expect("at least two points")
}

/// Smallest `N ≤ r_cutoff` with `RCE_N − RCE_{r_cutoff} ≤ tol_rel·RCE_0`.
pub fn flattening_span(curve: &RceCurve, r_cutoff: usize, tol_rel: f64) -> usize {
    let r_cutoff = r_cutoff.min(curve.rank_dim());
    let floor = curve.values[r_cutoff];
    let tol = tol_rel * curve.values[0];
    (0..=r_cutoff)
        .find(|&n| curve.values[n] - floor <= tol)
        .unwrap_or(r_cutoff)
}

/// All selectors for one curve. `r_cutoff` is the cutoff the flattening
/// span is measured against.
pub fn rank_report(curve: &RceCurve, eps: f64, r_cutoff: usize, tol_rel: f64) -> RankReport {
    let n_flat = flattening_span(curve, r_cutoff, tol_rel);
    RankReport {
        r_int: intersection_rank(curve),
        r_eps: precision_rank(curve, eps),
        elbow: spectrum_elbow(&curve.singular_values, true),
        n_flat,
        is_flattened_to_zero: n_flat == 0,
    }
}

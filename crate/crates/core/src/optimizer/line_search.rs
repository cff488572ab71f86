//! One-dimensional step-size search: a geometric probe grid followed by
//! golden-section refinement around the best probe.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearchConfig {
    /// Largest step probed.
    pub eta_max: f64,
    /// Probes `eta_max·2^{-k}` for `k = 0..=grid_depth`.
    pub grid_depth: u32,
    /// Golden-section iterations inside the best bracket.
    pub refine_iters: u32,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            eta_max: 2.0,
            grid_depth: 20,
            refine_iters: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub eta: f64,
    pub loss: f64,
    /// Every positive probe was non-finite; `eta` is 0.
    pub stalled: bool,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `loss_fn` over `[0, eta_max]`. Non-finite values count as
/// `+∞`; the returned point is the best one evaluated, so its loss never
/// exceeds `loss_fn(0)`.
pub fn line_search(mut loss_fn: impl FnMut(f64) -> f64, config: &LineSearchConfig) -> LineSearchResult {
    let mut evaluations = 0;
    let mut eval = |eta: f64| {
        evaluations += 1;
        let v = loss_fn(eta);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let f0 = eval(0.0);
    let mut grid = vec![0.0];
    grid.extend((0..=config.grid_depth).rev().map(|k| config.eta_max * 0.5f64.powi(k as i32)));
    let mut values = vec![f0];
    values.extend(grid[1..].iter().map(|&eta| eval(eta)));

    if values[1..].iter().all(|v| v.is_infinite()) {
        return LineSearchResult {
            eta: 0.0,
            loss: f0,
            stalled: true,
            evaluations,
        };
    }

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let mut best_eta = grid[best];
    let mut best_loss = values[best];

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    if hi > lo {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best_loss {
                best_loss = f;
                best_eta = x;
            }
        }
        for _ in 0..config.refine_iters {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = eval(x1);
                if f1 < best_loss {
                    best_loss = f1;
                    best_eta = x1;
                }
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = eval(x2);
                if f2 < best_loss {
                    best_loss = f2;
                    best_eta = x2;
                }
            }
        }
    }

    LineSearchResult {
        eta: best_eta,
        loss: best_loss,
        stalled: false,
        evaluations,
    }
}

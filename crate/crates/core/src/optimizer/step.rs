//! A single natural-gradient step `θ ← θ − η·φ⁺_k r` with line search.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::line_search::{line_search, LineSearchConfig};
use crate::autodiff::{residual_vector, JetModel, ResidualBundle};
use crate::error::Result;
use crate::problems::PdeProblem;
use crate::spectral::{apply_pseudoinverse, SpectralFilter, SvdFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMarker {
    /// The truncated pseudo-inverse annihilated the residual.
    ZeroDirection,
    /// Every line-search probe produced a non-finite loss.
    StallWarning,
    /// The requested cutoff exceeded the rank dimension.
    RankClamped { requested: usize, used: usize },
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub params: Vec<f64>,
    pub eta: f64,
    pub cutoff: usize,
    pub loss_before: f64,
    pub loss_after: f64,
    pub direction_norm: f64,
    pub markers: Vec<StepMarker>,
}

/// `U diag(1/σ)_{≤k} Vᵀ r`, plus a clamp marker when `k > r`.
pub fn truncated_direction(
    factors: &SvdFactors,
    residual: &DVector<f64>,
    r_cutoff: usize,
) -> Result<(DVector<f64>, Option<StepMarker>)> {
    let r = factors.rank_dim();
    let clamp = (r_cutoff > r).then_some(StepMarker::RankClamped {
        requested: r_cutoff,
        used: r,
    });
    let d = apply_pseudoinverse(factors, SpectralFilter::HardCutoffByRank(r_cutoff.min(r)), residual)?;
    Ok((d, clamp))
}

pub(crate) fn half_square(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

pub fn anagram_step(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: &[f64],
    bundle: &ResidualBundle,
    factors: &SvdFactors,
    r_cutoff: usize,
    config: &LineSearchConfig,
) -> Result<StepOutcome> {
    let (d, clamp) = truncated_direction(factors, &bundle.residual, r_cutoff)?;
    let mut markers: Vec<StepMarker> = clamp.into_iter().collect();
    let loss_before = bundle.loss();
    let direction_norm = d.norm();
    if direction_norm == 0.0 {
        markers.push(StepMarker::ZeroDirection);
        return Ok(StepOutcome {
            params: params.to_vec(),
            eta: 0.0,
            cutoff: r_cutoff.min(factors.rank_dim()),
            loss_before,
            loss_after: loss_before,
            direction_norm,
            markers,
        });
    }

    let shifted = |eta: f64| -> Vec<f64> {
        params.iter().zip(d.iter()).map(|(p, di)| p - eta * di).collect()
    };
    let result = line_search(
        |eta| {
            if eta == 0.0 {
                return loss_before;
            }
            residual_vector(problem, model, &shifted(eta))
                .map(|r| half_square(&r))
                .unwrap_or(f64::INFINITY)
        },
        config,
    );
    if result.stalled {
        markers.push(StepMarker::StallWarning);
    }
    let params = if result.eta == 0.0 {
        params.to_vec()
    } else {
        shifted(result.eta)
    };
    Ok(StepOutcome {
        params,
        eta: result.eta,
        cutoff: r_cutoff.min(factors.rank_dim()),
        loss_before,
        loss_after: result.loss,
        direction_norm,
        markers,
    })
}

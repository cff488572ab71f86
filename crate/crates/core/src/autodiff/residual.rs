//! Residual vector and its parameter Jacobian (the feature matrix).
//!
//! Interior rows carry weight `1/√S_D` and boundary rows `1/√S_B`, so that
//! `½‖residual‖²` equals the empirical loss.

use nalgebra::{DMatrix, DVector};

use super::JetModel;
use crate::error::{Error, Result};
use crate::problems::{CollocationRow, PdeProblem};

#[derive(Debug, Clone)]
pub struct ResidualBundle {
    /// Weighted residuals, interior rows first.
    pub residual: DVector<f64>,
    /// `∂residual/∂θ`, one row per residual.
    pub feature: DMatrix<f64>,
    pub interior_rows: usize,
    pub boundary_rows: usize,
}

impl ResidualBundle {
    pub fn sample_count(&self) -> usize {
        self.residual.len()
    }

    /// `½‖residual‖²`.
    pub fn loss(&self) -> f64 {
        0.5 * self.residual.norm_squared()
    }
}

fn check(problem: &PdeProblem, model: &dyn JetModel, params: &[f64]) -> Result<()> {
    if params.len() != model.param_count() {
        return Err(Error::DimensionMismatch {
            what: "parameter vector",
            expected: model.param_count(),
            actual: params.len(),
        });
    }
    if model.input_dim() != problem.input_dim {
        return Err(Error::DimensionMismatch {
            what: "model input dimension",
            expected: problem.input_dim,
            actual: model.input_dim(),
        });
    }
    let order = problem.max_order();
    if order > 2 {
        return Err(Error::DerivativeOrder(order));
    }
    Ok(())
}

fn map_rows<T: Send>(
    problem: &PdeProblem,
    f: impl Fn(&CollocationRow, f64) -> T + Sync + Send,
) -> Vec<T> {
    let rows: Vec<(&CollocationRow, f64)> = problem.weighted_rows().collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_iter().map(|&(r, w)| f(r, w)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.iter().map(|&(r, w)| f(r, w)).collect()
    }
}

pub fn residual_vector(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: &[f64],
) -> Result<DVector<f64>> {
    check(problem, model, params)?;
    let values = map_rows(problem, |row, w| w * row.residual(model, params));
    Ok(DVector::from_vec(values))
}

pub fn residual_bundle(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: &[f64],
) -> Result<ResidualBundle> {
    check(problem, model, params)?;
    let p = model.param_count();
    let rows = map_rows(problem, |row, w| {
        let mut grad = vec![0.0; p];
        let r = row.linearize(model, params, &mut grad);
        for g in grad.iter_mut() {
            *g *= w;
        }
        (w * r, grad)
    });
    let s = rows.len();
    let mut residual = DVector::zeros(s);
    let mut feature = DMatrix::zeros(s, p);
    for (i, (r, grad)) in rows.into_iter().enumerate() {
        residual[i] = r;
        for (j, g) in grad.into_iter().enumerate() {
            feature[(i, j)] = g;
        }
    }
    Ok(ResidualBundle {
        residual,
        feature,
        interior_rows: problem.interior_count(),
        boundary_rows: problem.boundary_count(),
    })
}

/// `ℓ(θ) = 1/(2S_D) Σ r_D² + 1/(2S_B) Σ r_B²`, summed term by term.
pub fn empirical_loss(problem: &PdeProblem, model: &dyn JetModel, params: &[f64]) -> Result<f64> {
    check(problem, model, params)?;
    let mut interior = 0.0;
    for row in &problem.interior {
        interior += row.residual(model, params).powi(2);
    }
    let mut boundary = 0.0;
    for row in &problem.boundary {
        boundary += row.residual(model, params).powi(2);
    }
    let mut loss = 0.0;
    if !problem.interior.is_empty() {
        loss += interior / (2.0 * problem.interior_count() as f64);
    }
    if !problem.boundary.is_empty() {
        loss += boundary / (2.0 * problem.boundary_count() as f64);
    }
    Ok(loss)
}

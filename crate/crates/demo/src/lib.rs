//! WebAssembly bindings for a small interactive page (`www/index.html`).
//!
//! Every export takes plain numbers/strings and returns a JSON string so the
//! page needs no generated glue beyond `wasm-bindgen`'s own.
//!
//! Build with
//! `cargo build -p anagram-demo --target wasm32-unknown-unknown --release`
//! followed by `wasm-bindgen --target web --out-dir www/pkg`.

use anagram_core::autodiff::{init_params, Activation, Mlp, MlpSpec};
use anagram_core::diagnostics::{intersection_rank, precision_rank, spectrum_elbow};
use anagram_core::optimizer::{evaluate, train, Strategy, TrainConfig};
use anagram_core::problems::{build_problem, GridSpec, PdeProblem};
use anagram_core::spectral::{filtered_inverse_spectrum, SpectralFilter};
use nalgebra::DVector;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest interior grid the page may request per axis.
pub const MAX_GRID: usize = 16;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Serialize)]
pub struct Snapshot {
    pub problem: String,
    pub samples: usize,
    pub params: usize,
    pub sigma: Vec<f64>,
    pub rce: Vec<f64>,
    pub r_int: usize,
    pub r_eps: usize,
    pub elbow: usize,
}

#[derive(Debug, Serialize)]
pub struct TracePoint {
    pub t: usize,
    pub loss: f64,
    pub rel_l2: Option<f64>,
    pub r_min: usize,
    pub r_max: usize,
    pub phase: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub points: Vec<TracePoint>,
    pub termination: &'static str,
    pub final_loss: f64,
}

#[derive(Debug, Serialize)]
pub struct FilterCurve {
    pub sigma: Vec<f64>,
    pub hard: Vec<f64>,
    pub ridge: Vec<f64>,
}

fn setup(problem: &str, grid: usize, width: usize, seed: u64) -> Result<(PdeProblem, Mlp, Vec<f64>), String> {
    let grid = grid.clamp(2, MAX_GRID);
    let spec_grid = if problem == "laplace5d" {
        GridSpec::uniform(5, 3.min(grid), 3.min(grid))
    } else {
        GridSpec::uniform(2, grid, grid)
    };
    let pde = build_problem(problem, &spec_grid).map_err(|e| e.to_string())?;
    let spec = MlpSpec::new(pde.input_dim, vec![width.clamp(1, 64)], Activation::Tanh, seed);
    let params = init_params(&spec).map_err(|e| e.to_string())?.0;
    let model = Mlp::new(spec).map_err(|e| e.to_string())?;
    Ok((pde, model, params))
}

/// Spectrum and reconstruction curve at a fresh initialization.
pub fn snapshot(problem: &str, grid: usize, width: usize, seed: u64, epsilon: f64) -> Result<Snapshot, String> {
    let (pde, model, params) = setup(problem, grid, width, seed)?;
    let ev = evaluate(&pde, &model, &params).map_err(|e| e.to_string())?;
    let c = &ev.curve;
    Ok(Snapshot {
        problem: pde.name.clone(),
        samples: ev.bundle.sample_count(),
        params: params.len(),
        sigma: c.singular_values.clone(),
        rce: c.values.clone(),
        r_int: intersection_rank(c),
        r_eps: precision_rank(c, epsilon),
        elbow: spectrum_elbow(&c.singular_values, true),
    })
}

/// Short training run; `strategy` is `adaptive`, `principled` or a fixed
/// threshold written as a number.
pub fn trace(problem: &str, grid: usize, width: usize, seed: u64, iterations: usize, strategy: &str) -> Result<Trace, String> {
    let strategy = match strategy {
        "adaptive" => Strategy::Adaptive,
        "principled" => Strategy::PrincipledAdaptive,
        other => Strategy::FixedCutoff {
            alpha: other
                .parse()
                .map_err(|_| format!("unknown strategy `{other}`"))?,
        },
    };
    let (pde, model, params) = setup(problem, grid, width, seed)?;
    let config = TrainConfig {
        max_iterations: iterations.min(MAX_ITERATIONS),
        strategy,
        keep_curves: false,
        ..TrainConfig::default()
    };
    let run = train(&pde, &model, params, &config).map_err(|e| e.to_string())?;
    Ok(Trace {
        points: run
            .records
            .iter()
            .map(|r| TracePoint {
                t: r.t,
                loss: r.train_loss,
                rel_l2: r.rel_l2,
                r_min: r.r_min,
                r_max: r.r_max,
                phase: r.phase.as_str(),
            })
            .collect(),
        termination: run.termination.as_str(),
        final_loss: run.final_loss,
    })
}

/// Hard-cutoff and ridge inverse spectra over a log-spaced `σ` range.
pub fn filters(alpha: f64, samples: usize, points: usize) -> Result<FilterCurve, String> {
    let n = points.clamp(2, 2000);
    let sigma: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(2.0 - 10.0 * i as f64 / (n - 1) as f64))
        .collect();
    let s = DVector::from_vec(sigma.clone());
    let hard = filtered_inverse_spectrum(&s, SpectralFilter::HardCutoffByThreshold(alpha)).map_err(|e| e.to_string())?;
    let ridge = filtered_inverse_spectrum(
        &s,
        SpectralFilter::Ridge {
            alpha,
            sample_count: samples.max(1),
        },
    )
    .map_err(|e| e.to_string())?;
    Ok(FilterCurve {
        sigma,
        hard: hard.values.iter().copied().collect(),
        ridge: ridge.values.iter().copied().collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rceSnapshot)]
pub fn rce_snapshot_js(problem: &str, grid: usize, width: usize, seed: u32, epsilon: f64) -> Result<String, JsValue> {
    to_js(snapshot(problem, grid, width, seed as u64, epsilon))
}

#[wasm_bindgen(js_name = trainingTrace)]
pub fn training_trace_js(problem: &str, grid: usize, width: usize, seed: u32, iterations: usize, strategy: &str) -> Result<String, JsValue> {
    to_js(trace(problem, grid, width, seed as u64, iterations, strategy))
}

#[wasm_bindgen(js_name = filterCurves)]
pub fn filter_curves_js(alpha: f64, samples: usize, points: usize) -> Result<String, JsValue> {
    to_js(filters(alpha, samples, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_curve_starts_at_root_mse() {
        let s = snapshot("heat", 4, 4, 1, 1e-10).unwrap();
        assert_eq!(s.rce.len(), s.sigma.len() + 1);
        assert!(s.rce.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn unknown_inputs_are_errors() {
        assert!(snapshot("wave", 4, 4, 1, 1e-10).is_err());
        assert!(trace("heat", 4, 4, 1, 2, "fast").is_err());
        assert!(filters(0.0, 4, 10).is_err());
    }
}

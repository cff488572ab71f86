//! Training loops: fixed threshold cutoff, the single adaptive cutoff, and
//! the dual-cutoff adaptive strategy.
//!
//! Each loop records one [`IterationRecord`] per iteration describing the
//! state *before* that iteration's step(s). Spectra and reconstruction
//! curves use `φ = √S·feature` and `g = √S·residual`, so `RCE_0² = 2ℓ` is
//! the training MSE reported everywhere.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::line_search::LineSearchConfig;
use super::policy::{cutoff_policy_update, CutoffState, Phase};
use super::step::{anagram_step, StepMarker, StepOutcome};
use crate::autodiff::{residual_bundle, JetModel, ResidualBundle};
use crate::diagnostics::{
    flattening_span, intersection_rank, precision_rank, reconstruction_errors, spectrum_elbow,
    RceCurve, DEFAULT_FLATTEN_TOL,
};
use crate::error::{Error, Result};
use crate::problems::{relative_l2_on, PdeProblem, ReferenceGrid};
use crate::spectral::{rank_from_threshold, thin_svd, SvdFactors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Strategy {
    /// Keep every component with `σ ≥ alpha`.
    FixedCutoff { alpha: f64 },
    /// Dual cutoff `(r_max, r_min)` with ignition, ascent and stage separation.
    Adaptive,
    /// Single cutoff: the intersection rank until its RCE falls below `ε`,
    /// then the precision rank.
    PrincipledAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub line_search: LineSearchConfig,
    pub strategy: Strategy,
    /// Initial `r_max` from the elbow of `log10 σ` (false: raw `σ`).
    pub elbow_log_scale: bool,
    pub flatten_tol: f64,
    /// Keep the full RCE curve in every record.
    pub keep_curves: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-10,
            max_iterations: 2000,
            line_search: LineSearchConfig::default(),
            strategy: Strategy::Adaptive,
            elbow_log_scale: true,
            flatten_tol: DEFAULT_FLATTEN_TOL,
            keep_curves: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.line_search.eta_max > 0.0) {
            return bad("line_search.eta_max must be positive");
        }
        if !(0.0..1.0).contains(&self.flatten_tol) {
            return bad("flatten_tol must lie in [0, 1)");
        }
        if let Strategy::FixedCutoff { alpha } = self.strategy {
            if !(alpha > 0.0) {
                return bad("fixed cutoff alpha must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    /// `RCE_0² = 2ℓ(θ_t)`.
    pub train_loss: f64,
    pub rel_l2: Option<f64>,
    pub r_min: usize,
    pub r_max: usize,
    pub r_int: usize,
    pub r_eps: usize,
    pub elbow: usize,
    /// Flattening span against the previous iteration's (lower) cutoff.
    pub n_flat: usize,
    /// Step size of the last step taken (0 when none was taken).
    pub eta: f64,
    /// Step sizes of every step taken this iteration, in order.
    pub etas: Vec<f64>,
    pub phase: Phase,
    pub markers: Vec<StepMarker>,
    pub curve: Option<RceCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// Adaptive strategy: `r_min = 0` with `RCE_0 < ε`.
    BoosterReturn,
    /// Fixed cutoff: MSE ≤ ε²; single adaptive cutoff: precision rank 0.
    TargetReached,
    IterationCap,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::BoosterReturn => "booster-return",
            TerminationReason::TargetReached => "target-reached",
            TerminationReason::IterationCap => "iteration-cap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::BoosterReturn, Self::TargetReached, Self::IterationCap]
            .into_iter()
            .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub params: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub termination: TerminationReason,
    /// Training MSE `RCE_0²` at the returned parameters.
    pub final_loss: f64,
    pub final_rel_l2: Option<f64>,
    pub iterations: usize,
    /// Reconstruction curve at the returned parameters.
    pub final_curve: RceCurve,
}

/// Residuals, spectrum and reconstruction curve at one parameter vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub bundle: ResidualBundle,
    /// Factors of the bundle's feature matrix (spectrum not rescaled).
    pub factors: SvdFactors,
    /// Reconstruction curve of `g = √S·residual` against `φ = √S·feature`.
    pub curve: RceCurve,
}

impl Evaluation {
    pub fn mse(&self) -> f64 {
        self.curve.values[0].powi(2)
    }
}

pub fn evaluate(problem: &PdeProblem, model: &dyn JetModel, params: &[f64]) -> Result<Evaluation> {
    let bundle = residual_bundle(problem, model, params)?;
    let root_s = (bundle.sample_count() as f64).sqrt();
    let factors = thin_svd(&bundle.feature)?;
    // rescaling only multiplies the spectrum; the singular vectors are shared
    let mut scaled = factors.clone();
    scaled.singular_values *= root_s;
    let g: DVector<f64> = &bundle.residual * root_s;
    let curve = reconstruction_errors(&scaled, &g)?;
    debug_assert!(
        (curve.values[0].powi(2) - 2.0 * bundle.loss()).abs()
            <= 1e-12 * (2.0 * bundle.loss()).max(f64::MIN_POSITIVE)
    );
    Ok(Evaluation {
        params: params.to_vec(),
        bundle,
        factors,
        curve,
    })
}

fn same_params(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Shared loop state. Evaluations and steps are pure functions of the
/// parameters, so both are reused when the parameters did not move.
struct Trainer<'a> {
    problem: &'a PdeProblem,
    model: &'a dyn JetModel,
    config: &'a TrainConfig,
    grid: Option<ReferenceGrid>,
    params: Vec<f64>,
    current: Option<Evaluation>,
    last_step: Option<(Vec<f64>, usize, StepOutcome)>,
}

impl<'a> Trainer<'a> {
    fn new(
        problem: &'a PdeProblem,
        model: &'a dyn JetModel,
        params: Vec<f64>,
        config: &'a TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            problem,
            model,
            config,
            grid: problem.default_reference_grid().ok(),
            params,
            current: None,
            last_step: None,
        })
    }

    fn evaluation(&mut self) -> Result<&Evaluation> {
        let stale = match &self.current {
            Some(ev) => !same_params(&ev.params, &self.params),
            None => true,
        };
        if stale {
            self.current = Some(evaluate(self.problem, self.model, &self.params)?);
        }
        Ok(self.current.as_ref().unwrap())
    }

    fn rel_l2(&self) -> Option<f64> {
        let grid = self.grid.as_ref()?;
        Some(relative_l2_on(grid, |x| self.model.jet(&self.params, x).value))
    }

    fn step(&mut self, cutoff: usize) -> Result<StepOutcome> {
        if let Some((p, c, out)) = &self.last_step {
            if *c == cutoff && same_params(p, &self.params) {
                let out = out.clone();
                self.params = out.params.clone();
                return Ok(out);
            }
        }
        self.evaluation()?;
        let ev = self.current.as_ref().unwrap();
        let out = anagram_step(
            self.problem,
            self.model,
            &self.params,
            &ev.bundle,
            &ev.factors,
            cutoff,
            &self.config.line_search,
        )?;
        self.last_step = Some((self.params.clone(), cutoff, out.clone()));
        self.params = out.params.clone();
        Ok(out)
    }

    fn record(&self, t: usize, ev_curve: &RceCurve, ranks: Ranks, phase: Phase) -> IterationRecord {
        IterationRecord {
            t,
            train_loss: ev_curve.values[0].powi(2),
            rel_l2: self.rel_l2(),
            r_min: ranks.r_min,
            r_max: ranks.r_max,
            r_int: ranks.r_int,
            r_eps: ranks.r_eps,
            elbow: spectrum_elbow(&ev_curve.singular_values, self.config.elbow_log_scale),
            n_flat: ranks.n_flat,
            eta: 0.0,
            etas: Vec::new(),
            phase,
            markers: Vec::new(),
            curve: self.config.keep_curves.then(|| ev_curve.clone()),
        }
    }

    fn take_steps(&mut self, record: &mut IterationRecord, cutoffs: &[usize]) -> Result<()> {
        for &cutoff in cutoffs {
            let out = self.step(cutoff)?;
            if out.markers.contains(&StepMarker::StallWarning) {
                log::warn!("{}: line search stalled at t = {}", self.problem.name, record.t);
            }
            record.eta = out.eta;
            record.etas.push(out.eta);
            record.markers.extend(out.markers);
        }
        Ok(())
    }

    fn finish(
        mut self,
        records: Vec<IterationRecord>,
        termination: TerminationReason,
    ) -> Result<RunResult> {
        let curve = self.evaluation()?.curve.clone();
        Ok(RunResult {
            final_loss: curve.values[0].powi(2),
            final_rel_l2: self.rel_l2(),
            iterations: records.len(),
            final_curve: curve,
            params: self.params,
            records,
            termination,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranks {
    r_min: usize,
    r_max: usize,
    r_int: usize,
    r_eps: usize,
    n_flat: usize,
}

/// Runs the strategy named in `config`.
pub fn train(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: Vec<f64>,
    config: &TrainConfig,
) -> Result<RunResult> {
    match config.strategy {
        Strategy::FixedCutoff { alpha } => fixed_cutoff_run(problem, model, params, alpha, config),
        Strategy::Adaptive => amstramgram_run(problem, model, params, config),
        Strategy::PrincipledAdaptive => principled_run(problem, model, params, config),
    }
}

/// Baseline: cutoff `#{σ ≥ alpha}` every iteration, stopping once the
/// MSE reaches `ε²`.
pub fn fixed_cutoff_run(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: Vec<f64>,
    alpha: f64,
    config: &TrainConfig,
) -> Result<RunResult> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("fixed cutoff alpha must be positive".into()));
    }
    let mut trainer = Trainer::new(problem, model, params, config)?;
    let eps = config.epsilon;
    let mut records = Vec::new();
    let mut prev_cut = None;
    for t in 0..config.max_iterations {
        let curve = trainer.evaluation()?.curve.clone();
        let sigma = DVector::from_column_slice(&curve.singular_values);
        let cut = rank_from_threshold(&sigma, alpha);
        let ranks = Ranks {
            r_min: cut,
            r_max: cut,
            r_int: intersection_rank(&curve),
            r_eps: precision_rank(&curve, eps),
            n_flat: flattening_span(&curve, prev_cut.unwrap_or(cut), config.flatten_tol),
        };
        let mut record = trainer.record(t, &curve, ranks, Phase::Fixed);
        if record.train_loss <= eps * eps {
            records.push(record);
            return trainer.finish(records, TerminationReason::TargetReached);
        }
        trainer.take_steps(&mut record, &[cut])?;
        records.push(record);
        prev_cut = Some(cut);
    }
    trainer.finish(records, TerminationReason::IterationCap)
}

/// Single adaptive cutoff: the intersection rank while its reconstruction
/// error exceeds `ε`, the precision rank afterwards; stops when the
/// precision rank reaches 0.
pub fn principled_run(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: Vec<f64>,
    config: &TrainConfig,
) -> Result<RunResult> {
    let mut trainer = Trainer::new(problem, model, params, config)?;
    let eps = config.epsilon;
    let mut records = Vec::new();
    let mut prev_cut = None;
    for t in 0..config.max_iterations {
        let curve = trainer.evaluation()?.curve.clone();
        let r1 = intersection_rank(&curve);
        let r2 = precision_rank(&curve, eps);
        let (cut, phase) = if curve.values[r1] > eps {
            (r1, Phase::Ascent)
        } else {
            (r2, Phase::StageSeparation)
        };
        let ranks = Ranks {
            r_min: cut,
            r_max: cut,
            r_int: r1,
            r_eps: r2,
            n_flat: flattening_span(&curve, prev_cut.unwrap_or(cut), config.flatten_tol),
        };
        let mut record = trainer.record(t, &curve, ranks, phase);
        if r2 == 0 {
            records.push(record);
            return trainer.finish(records, TerminationReason::TargetReached);
        }
        trainer.take_steps(&mut record, &[cut])?;
        records.push(record);
        prev_cut = Some(cut);
    }
    trainer.finish(records, TerminationReason::IterationCap)
}

/// Dual-cutoff adaptive strategy. Each iteration updates the cutoff state
/// from fresh ranks, then steps with `r_max` and, after re-evaluating,
/// with `r_min`.
pub fn amstramgram_run(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: Vec<f64>,
    config: &TrainConfig,
) -> Result<RunResult> {
    let mut trainer = Trainer::new(problem, model, params, config)?;
    let eps = config.epsilon;
    let (r_dim, elbow) = {
        let ev = trainer.evaluation()?;
        (
            ev.factors.rank_dim(),
            spectrum_elbow(&ev.curve.singular_values, config.elbow_log_scale),
        )
    };
    let mut state = CutoffState::initial(elbow.min(r_dim), eps);
    let mut prev_r_min = None;
    let mut records = Vec::new();
    for t in 0..config.max_iterations {
        let curve = trainer.evaluation()?.curve.clone();
        let r1 = intersection_rank(&curve);
        let r2 = precision_rank(&curve, eps);
        state = cutoff_policy_update(&state, r1, r2, prev_r_min);
        state.r_max = state.r_max.min(r_dim);
        let ranks = Ranks {
            r_min: state.r_min,
            r_max: state.r_max,
            r_int: r1,
            r_eps: r2,
            n_flat: flattening_span(&curve, prev_r_min.unwrap_or(state.r_min), config.flatten_tol),
        };
        let mut record = trainer.record(t, &curve, ranks, state.phase);
        log::debug!(
            "{} t={t} mse={:.3e} r_min={} r_max={} phase={}",
            problem.name,
            record.train_loss,
            state.r_min,
            state.r_max,
            state.phase.as_str()
        );
        if state.r_min == 0 && curve.values[0] < eps {
            records.push(record);
            return trainer.finish(records, TerminationReason::BoosterReturn);
        }
        trainer.take_steps(&mut record, &[state.r_max, state.r_min])?;
        records.push(record);
        prev_r_min = Some(state.r_min);
    }
    trainer.finish(records, TerminationReason::IterationCap)
}

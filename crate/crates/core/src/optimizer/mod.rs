//! Natural-gradient steps, the cutoff policy, and the training loops.

mod line_search;
mod policy;
mod run;
mod step;

pub use line_search::{line_search, LineSearchConfig, LineSearchResult};
pub use policy::{cutoff_policy_update, CutoffState, Phase};
pub use run::{
    amstramgram_run, evaluate, fixed_cutoff_run, principled_run, train, Evaluation,
    IterationRecord, RunResult, Strategy, TerminationReason, TrainConfig,
};
pub use step::{anagram_step, truncated_direction, StepMarker, StepOutcome};

//! Executes an experiment: one training run per `(problem, seed)` pair,
//! each writing its artifacts to `<output>/<problem>/seed-<k>/`.

use std::path::{Path, PathBuf};

use anagram_core::autodiff::{init_params, Mlp, MlpSpec};
use anagram_core::optimizer::{train, RunResult, Strategy, TrainConfig};
use anagram_core::problems::build_problem;
use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemConfig};
use crate::records::{parse_rce, parse_records, records_csv, rce_csv, Summary};
use crate::svg::{loss_chart, rce_chart};

pub const RECORDS_FILE: &str = "records.csv";
pub const RCE_FILE: &str = "rce_curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn strategy_label(strategy: &Strategy) -> String {
    match strategy {
        Strategy::FixedCutoff { alpha } => format!("fixed-cutoff({alpha:e})"),
        Strategy::Adaptive => "adaptive".into(),
        Strategy::PrincipledAdaptive => "principled-adaptive".into(),
    }
}

pub fn run_dir(output: &Path, problem: &str, seed: u64) -> PathBuf {
    output.join(problem).join(format!("seed-{seed}"))
}

fn train_one(cfg: &ExperimentConfig, problem: &ProblemConfig, seed: u64) -> Result<RunResult> {
    let grid = problem.grid_spec()?;
    let pde = build_problem(&problem.name, &grid)?;
    let spec = MlpSpec::new(
        pde.input_dim,
        cfg.model.hidden_widths.clone(),
        cfg.model.activation,
        seed,
    );
    let params = init_params(&spec)?.0;
    let model = Mlp::new(spec)?;
    Ok(train(&pde, &model, params, &cfg.train)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs one seed and writes its artifacts. Errors inside training are
/// recorded in the summary rather than returned.
pub fn run_seed(cfg: &ExperimentConfig, output: &Path, problem: &ProblemConfig, seed: u64) -> Result<Summary> {
    let dir = run_dir(output, &problem.name, seed);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut summary = Summary {
        problem: problem.name.clone(),
        seed,
        strategy: strategy_label(&cfg.train.strategy),
        epsilon: cfg.train.epsilon,
        status: "ok".into(),
        final_mse: None,
        final_rel_l2: None,
        iterations: None,
        termination: None,
        error: None,
    };
    log::info!("{} seed {seed}: training", problem.name);
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| train_one(cfg, problem, seed)))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(anyhow!("training panicked: {msg}"))
        });
    match outcome {
        Ok(run) => {
            write(&dir.join(RECORDS_FILE), &records_csv(&run.records)?)?;
            write(&dir.join(RCE_FILE), &rce_csv(&run.records)?)?;
            summary.final_mse = Some(run.final_loss);
            summary.final_rel_l2 = run.final_rel_l2;
            summary.iterations = Some(run.iterations);
            summary.termination = Some(run.termination.as_str().into());
            log::info!(
                "{} seed {seed}: {} after {} iterations, mse {:.3e}",
                problem.name,
                run.termination.as_str(),
                run.iterations,
                run.final_loss
            );
        }
        Err(e) => {
            log::error!("{} seed {seed} failed: {e:#}", problem.name);
            summary.status = "failed".into();
            summary.error = Some(format!("{e:#}"));
        }
    }
    write(&dir.join(SUMMARY_FILE), &summary.to_json())?;
    if summary.is_ok() && cfg.plots.enabled {
        if let Err(e) = write_plots(&dir, &cfg.plots.rce_iterations) {
            log::warn!("{}: plotting failed: {e:#}", dir.display());
        }
    }
    Ok(summary)
}

/// Runs every `(problem, seed)` pair on a pool of `threads` workers
/// (`None`: rayon's default). Summaries come back in config order.
pub fn run_experiment(cfg: &ExperimentConfig, output: &Path, threads: Option<usize>) -> Result<Vec<Summary>> {
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    write(
        &output.join("config.toml"),
        &toml::to_string(cfg).context("serializing the resolved config")?,
    )?;
    let jobs: Vec<(&ProblemConfig, u64)> = cfg
        .problems
        .iter()
        .flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    pool.install(|| {
        jobs.par_iter()
            .map(|(p, s)| run_seed(cfg, output, p, *s))
            .collect()
    })
}

/// Maps requested iterations (negative: from the end) onto recorded ones,
/// falling back to the nearest recorded iteration.
pub fn resolve_iterations(requested: &[i64], available: &[usize]) -> Vec<usize> {
    let (Some(&first), Some(&last)) = (available.first(), available.last()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for &k in requested {
        let target = if k < 0 { last as i64 + 1 + k } else { k };
        let want = target.clamp(first as i64, last as i64) as usize;
        let nearest = *available
            .iter()
            .min_by_key(|&&a| (a.abs_diff(want), a))
            .expect("non-empty");
        if nearest as i64 != target {
            log::warn!("iteration {k} not recorded; using {nearest}");
        }
        if !out.contains(&nearest) {
            out.push(nearest);
        }
    }
    out
}

/// Renders `loss.svg` and `rce_t<k>.svg` from the CSV files in `dir`.
pub fn write_plots(dir: &Path, iterations: &[i64]) -> Result<Vec<PathBuf>> {
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
    };
    let rows = parse_records(&read(RECORDS_FILE)?)?;
    let summary = Summary::load(&dir.join(SUMMARY_FILE)).ok();
    let epsilon = summary
        .as_ref()
        .map(|s| s.epsilon)
        .unwrap_or_else(|| TrainConfig::default().epsilon);
    let title = summary
        .as_ref()
        .map(|s| format!("{} seed {} ({})", s.problem, s.seed, s.strategy))
        .unwrap_or_else(|| dir.display().to_string());
    let mut written = Vec::new();
    let path = dir.join("loss.svg");
    write(&path, &loss_chart(&title, &rows, epsilon).render())?;
    written.push(path);

    let curves = match read(RCE_FILE) {
        Ok(text) => parse_rce(&text)?,
        Err(e) => {
            log::warn!("{e:#}; skipping RCE plots");
            return Ok(written);
        }
    };
    let available: Vec<usize> = curves.keys().copied().collect();
    for t in resolve_iterations(iterations, &available) {
        let path = dir.join(format!("rce_t{t}.svg"));
        write(&path, &rce_chart(&format!("{title}, iteration {t}"), &curves[&t], epsilon).render())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_resolution() {
        let avail = [0, 1, 2, 5, 9];
        assert_eq!(resolve_iterations(&[0, -1], &avail), vec![0, 9]);
        assert_eq!(resolve_iterations(&[4], &avail), vec![5]);
        assert_eq!(resolve_iterations(&[3], &avail), vec![2]);
        assert_eq!(resolve_iterations(&[100, -100], &avail), vec![9, 0]);
        assert!(resolve_iterations(&[0], &[]).is_empty());
    }

    #[test]
    fn labels() {
        assert_eq!(strategy_label(&Strategy::FixedCutoff { alpha: 1e-3 }), "fixed-cutoff(1e-3)");
        assert_eq!(run_dir(Path::new("o"), "heat", 2), Path::new("o/heat/seed-2"));
    }
}

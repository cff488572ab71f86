use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anagram_cli::config::ExperimentConfig;
use anagram_cli::runner::{run_experiment, write_plots, RECORDS_FILE};
use anagram_cli::stats::{aggregate, collect_summaries, render_csv, render_text};
use anagram_cli::{OUTPUT_DIR_ENV, THREADS_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anagram", version, about = "Natural-gradient PINN benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every (problem, seed) pair of a TOML experiment file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` and the ANAGRAM_OUTPUT_DIR variable.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads; overrides the ANAGRAM_THREADS variable.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize the runs found below the given directories.
    Table {
        dirs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render SVG charts for one run directory (or its records.csv).
    Plot {
        run: PathBuf,
        /// Iterations for RCE snapshots; negative values count from the end.
        #[arg(long = "iteration", allow_negative_numbers = true)]
        iterations: Vec<i64>,
    },
    /// Run the fast invariant checks.
    Selftest,
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn init_logging(level: Option<&str>) {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if let Some(level) = level.and_then(|l| l.parse::<log::LevelFilter>().ok()) {
        builder.filter_level(level);
    }
    let _ = builder.format_timestamp(None).try_init();
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!("{THREADS_ENV}: expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn run(config: &Path, output_dir: Option<PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config).map_err(|e| Failure::Config(e.0))?;
    init_logging(cfg.log_level.as_deref());
    let output = output_dir
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output_dir.clone());
    let threads = match threads {
        Some(0) => return Err(Failure::Config("--threads: must be positive".into())),
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    let summaries = run_experiment(&cfg, &output, threads)?;
    let failed: Vec<_> = summaries.iter().filter(|s| !s.is_ok()).collect();
    print!("{}", render_text(&aggregate(&summaries)));
    if failed.is_empty() {
        Ok(())
    } else {
        for s in &failed {
            eprintln!(
                "{} seed {}: {}",
                s.problem,
                s.seed,
                s.error.as_deref().unwrap_or("failed")
            );
        }
        Err(Failure::Runtime(anyhow::anyhow!("{} of {} runs failed", failed.len(), summaries.len())))
    }
}

fn table(dirs: &[PathBuf], csv: Option<PathBuf>) -> Result<(), Failure> {
    init_logging(None);
    let mut summaries = Vec::new();
    for d in dirs {
        match collect_summaries(d) {
            Ok(found) if found.is_empty() => log::warn!("{}: no summary files found", d.display()),
            Ok(found) => summaries.extend(found),
            Err(e) => log::warn!("{}: {e:#}; skipped", d.display()),
        }
    }
    let rows = aggregate(&summaries);
    print!("{}", render_text(&rows));
    if let Some(path) = csv {
        std::fs::write(&path, render_csv(&rows)?)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    }
    Ok(())
}

fn plot(run: &Path, iterations: &[i64]) -> Result<(), Failure> {
    init_logging(None);
    let dir = if run.file_name().is_some_and(|n| n == RECORDS_FILE) {
        run.parent().unwrap_or(Path::new(".")).to_path_buf()
    } else {
        run.to_path_buf()
    };
    let default = [0, -1];
    let iterations = if iterations.is_empty() { &default[..] } else { iterations };
    for p in write_plots(&dir, iterations)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn selftest() -> Result<(), Failure> {
    init_logging(None);
    let outcomes = anagram_core::checks::run_all();
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow::anyhow!("{failed} checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir, threads } => run(&config, output_dir, threads),
        Command::Table { dirs, csv } => table(&dirs, csv),
        Command::Plot { run, iterations } => plot(&run, &iterations),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Aggregation of per-seed summaries into mean ± std tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::records::{format_float, Summary};

/// Running mean and sample variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Sample standard deviation (`n − 1` denominator); zero for one value.
    pub fn std(&self) -> Option<f64> {
        match self.count {
            0 => None,
            1 => Some(0.0),
            n => Some((self.m2 / (n - 1) as f64).sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub problem: String,
    pub strategy: String,
    pub seeds: usize,
    pub failed: usize,
    pub mse: (Option<f64>, Option<f64>),
    pub rel_l2: (Option<f64>, Option<f64>),
    pub iterations: Option<f64>,
}

/// Groups successful summaries by `(problem, strategy)`, sorted by key.
pub fn aggregate(summaries: &[Summary]) -> Vec<TableRow> {
    #[derive(Default)]
    struct Acc {
        mse: Welford,
        l2: Welford,
        iters: Welford,
        failed: usize,
    }
    let mut groups: BTreeMap<(String, String), Acc> = BTreeMap::new();
    for s in summaries {
        let acc = groups.entry((s.problem.clone(), s.strategy.clone())).or_default();
        if !s.is_ok() {
            acc.failed += 1;
            continue;
        }
        if let Some(x) = s.final_mse {
            acc.mse.push(x);
        }
        if let Some(x) = s.final_rel_l2 {
            acc.l2.push(x);
        }
        if let Some(n) = s.iterations {
            acc.iters.push(n as f64);
        }
    }
    groups
        .into_iter()
        .map(|((problem, strategy), a)| TableRow {
            problem,
            strategy,
            seeds: a.mse.count(),
            failed: a.failed,
            mse: (a.mse.mean(), a.mse.std()),
            rel_l2: (a.l2.mean(), a.l2.std()),
            iterations: a.iters.mean(),
        })
        .collect()
}

fn short(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into())
}

pub fn render_text(rows: &[TableRow]) -> String {
    let mut out = format!(
        "{:<12} {:<20} {:>5} {:>6} {:>21} {:>21} {:>9}\n",
        "problem", "strategy", "seeds", "failed", "mse (mean ± std)", "rel_l2 (mean ± std)", "iters"
    );
    for r in rows {
        out += &format!(
            "{:<12} {:<20} {:>5} {:>6} {:>21} {:>21} {:>9}\n",
            r.problem,
            r.strategy,
            r.seeds,
            r.failed,
            format!("{} ± {}", short(r.mse.0), short(r.mse.1)),
            format!("{} ± {}", short(r.rel_l2.0), short(r.rel_l2.1)),
            r.iterations.map(|n| format!("{n:.1}")).unwrap_or_else(|| "-".into()),
        );
    }
    out
}

pub fn render_csv(rows: &[TableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "problem",
        "strategy",
        "seeds",
        "failed",
        "mse_mean",
        "mse_std",
        "rel_l2_mean",
        "rel_l2_std",
        "iterations_mean",
    ])?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.strategy.clone(),
            r.seeds.to_string(),
            r.failed.to_string(),
            opt(r.mse.0),
            opt(r.mse.1),
            opt(r.rel_l2.0),
            opt(r.rel_l2.1),
            opt(r.iterations),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Every `summary.json` below `root`, in path order. Unreadable files are
/// reported and skipped.
pub fn collect_summaries(root: &Path) -> Result<Vec<Summary>> {
    let mut paths = Vec::new();
    walk(root, &mut paths)?;
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        match Summary::load(&p) {
            Ok(s) => out.push(s),
            Err(e) => log::warn!("skipping {}: {e:#}", p.display()),
        }
    }
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "summary.json") {
            out.push(path);
        }
    }
    Ok(())
}

//! On-disk run artifacts: records CSV, RCE-curve sidecar CSV and the
//! summary file.
//!
//! Both CSV files start with one `#` comment line carrying the schema
//! version and a generation timestamp, followed by a fixed header row.
//! Floats are written with 17 significant digits so they round-trip.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anagram_core::optimizer::IterationRecord;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_COLUMNS: [&str; 10] = [
    "t",
    "train_loss",
    "rel_l2",
    "r_min",
    "r_max",
    "r_int",
    "r_eps",
    "elbow",
    "eta",
    "phase",
];
pub const RCE_COLUMNS: [&str; 4] = ["iteration", "N", "rce", "sigma"];

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn header_line(kind: &str) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# anagram {kind} schema={SCHEMA_VERSION} version={} generated_unix={now}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn to_csv(kind: &str, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let body = String::from_utf8(w.into_inner().context("flushing CSV")?)?;
    Ok(header_line(kind) + &body)
}

pub fn records_csv(records: &[IterationRecord]) -> Result<String> {
    to_csv(
        "records",
        &RECORDS_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.t.to_string(),
                format_float(r.train_loss),
                r.rel_l2.map(format_float).unwrap_or_default(),
                r.r_min.to_string(),
                r.r_max.to_string(),
                r.r_int.to_string(),
                r.r_eps.to_string(),
                r.elbow.to_string(),
                format_float(r.eta),
                r.phase.as_str().to_string(),
            ]
        }),
    )
}

/// One row per `(iteration, N)`; `sigma` is empty for `N = 0`.
pub fn rce_csv(records: &[IterationRecord]) -> Result<String> {
    let rows = records.iter().filter_map(|r| r.curve.as_ref().map(|c| (r.t, c))).flat_map(|(t, c)| {
        c.values.iter().enumerate().map(move |(n, &v)| {
            vec![
                t.to_string(),
                n.to_string(),
                format_float(v),
                if n == 0 {
                    String::new()
                } else {
                    format_float(c.singular_values[n - 1])
                },
            ]
        })
    });
    to_csv("rce-curves", &RCE_COLUMNS, rows)
}

/// A parsed row of the records CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub t: usize,
    pub train_loss: f64,
    pub rel_l2: Option<f64>,
    pub r_min: usize,
    pub r_max: usize,
    pub r_int: usize,
    pub r_eps: usize,
    pub elbow: usize,
    pub eta: f64,
    pub phase: String,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn check_header(r: &mut csv::Reader<&[u8]>, expected: &[&str], what: &str) -> Result<()> {
    let header = r.headers()?.clone();
    if header.iter().ne(expected.iter().copied()) {
        bail!("{what}: unexpected header {:?}", header.iter().collect::<Vec<_>>());
    }
    Ok(())
}

fn float(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .with_context(|| format!("not a number: `{field}`"))
}

fn optional_float(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        float(field).map(Some)
    }
}

pub fn parse_records(text: &str) -> Result<Vec<RecordRow>> {
    let mut r = reader(text);
    check_header(&mut r, &RECORDS_COLUMNS, "records CSV")?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let parse = || -> Result<RecordRow> {
            Ok(RecordRow {
                t: f(0).parse()?,
                train_loss: float(f(1))?,
                rel_l2: optional_float(f(2))?,
                r_min: f(3).parse()?,
                r_max: f(4).parse()?,
                r_int: f(5).parse()?,
                r_eps: f(6).parse()?,
                elbow: f(7).parse()?,
                eta: float(f(8))?,
                phase: f(9).to_string(),
            })
        };
        rows.push(parse().with_context(|| format!("records CSV data row {}", i + 1))?);
    }
    Ok(rows)
}

/// One point of an RCE curve as stored in the sidecar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcePoint {
    pub n: usize,
    pub rce: f64,
    pub sigma: Option<f64>,
}

pub fn parse_rce(text: &str) -> Result<BTreeMap<usize, Vec<RcePoint>>> {
    let mut r = reader(text);
    check_header(&mut r, &RCE_COLUMNS, "RCE CSV")?;
    let mut curves: BTreeMap<usize, Vec<RcePoint>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let parse = || -> Result<(usize, RcePoint)> {
            Ok((
                f(0).parse()?,
                RcePoint {
                    n: f(1).parse()?,
                    rce: float(f(2))?,
                    sigma: optional_float(f(3))?,
                },
            ))
        };
        let (t, p) = parse().with_context(|| format!("RCE CSV data row {}", i + 1))?;
        curves.entry(t).or_default().push(p);
    }
    Ok(curves)
}

/// Key-value outcome of one `(problem, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub seed: u64,
    pub strategy: String,
    pub epsilon: f64,
    pub status: String,
    pub final_mse: Option<f64>,
    pub final_rel_l2: Option<f64>,
    pub iterations: Option<usize>,
    pub termination: Option<String>,
    pub error: Option<String>,
}

impl Summary {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

/// Drops the leading comment line (timestamp) for byte comparisons.
pub fn strip_header_line(text: &str) -> &str {
    match text.strip_prefix('#') {
        Some(rest) => rest.split_once('\n').map(|(_, body)| body).unwrap_or(""),
        None => text,
    }
}

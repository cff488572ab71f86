//! Minimal deterministic SVG line charts. The same input always renders
//! to the same bytes: coordinates are printed with two decimals and no
//! timestamps or random ids are embedded.

use std::fmt::Write;

use crate::records::{RcePoint, RecordRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(label, y)`.
    pub hlines: Vec<(String, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

impl Chart {
    fn y_value(&self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            None
        } else if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            Some(y)
        }
    }

    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.hlines.iter().map(|h| h.1))
            .filter_map(|y| self.y_value(y));
        let (mut x0, mut x1) = xs
            .filter(|x| x.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil();
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );

        // y ticks
        let y_ticks: Vec<f64> = if self.log_y {
            let stride = ((y1 - y0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut k = y0;
            while k <= y1 + 1e-9 {
                v.push(k);
                k += stride;
            }
            v
        } else {
            let step = nice_step(y1 - y0);
            let mut v = Vec::new();
            let mut k = (y0 / step).ceil() * step;
            while k <= y1 + 1e-9 * step {
                v.push(k);
                k += step;
            }
            v
        };
        for y in y_ticks {
            let label = if self.log_y { format!("1e{}", y.round() as i64) } else { format!("{y:.3}") };
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT,
                py(y),
                LEFT + pw,
                py(y),
                LEFT - 4.0,
                py(y) + 4.0
            );
        }
        let step = nice_step(x1 - x0);
        let mut k = (x0 / step).ceil() * step;
        while k <= x1 + 1e-9 * step {
            let label = if step >= 1.0 { format!("{}", k.round() as i64) } else { format!("{k:.2}") };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                px(k),
                TOP + ph + 16.0
            );
            k += step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (label, y) in &self.hlines {
            if let Some(v) = self.y_value(*y) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}">{}</text>"##,
                    LEFT,
                    py(v),
                    LEFT + pw,
                    py(v),
                    LEFT + pw + 4.0,
                    py(v) + 4.0,
                    escape(label)
                );
            }
        }

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            // points that cannot be drawn split the polyline
            let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &s.points {
                match self.y_value(y) {
                    Some(v) if x.is_finite() => segments.last_mut().unwrap().push((px(x), py(v))),
                    _ => {
                        if !segments.last().unwrap().is_empty() {
                            segments.push(Vec::new());
                        }
                    }
                }
            }
            for seg in segments.iter().filter(|s| !s.is_empty()) {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                if seg.len() == 1 {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                        seg[0].0, seg[0].1
                    );
                } else {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
            }
            let ly = TOP + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + pw + 8.0,
                LEFT + pw + 26.0,
                LEFT + pw + 30.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Training MSE and relative L2 error against iteration.
pub fn loss_chart(title: &str, rows: &[RecordRow], epsilon: f64) -> Chart {
    Chart {
        title: title.to_string(),
        x_label: "iteration".into(),
        y_label: "value".into(),
        log_y: true,
        series: vec![
            Series {
                name: "train MSE".into(),
                points: rows.iter().map(|r| (r.t as f64, r.train_loss)).collect(),
            },
            Series {
                name: "relative L2".into(),
                points: rows
                    .iter()
                    .map(|r| (r.t as f64, r.rel_l2.unwrap_or(f64::NAN)))
                    .collect(),
            },
        ],
        hlines: vec![("ε²".into(), epsilon * epsilon)],
    }
}

/// RCE curve of one iteration with the singular values overlaid.
pub fn rce_chart(title: &str, curve: &[RcePoint], epsilon: f64) -> Chart {
    Chart {
        title: title.to_string(),
        x_label: "N".into(),
        y_label: "value".into(),
        log_y: true,
        series: vec![
            Series {
                name: "RCE_N".into(),
                points: curve.iter().map(|p| (p.n as f64, p.rce)).collect(),
            },
            Series {
                name: "σ_N".into(),
                points: curve
                    .iter()
                    .filter_map(|p| p.sigma.map(|s| (p.n as f64, s)))
                    .collect(),
            },
        ],
        hlines: vec![("ε".into(), epsilon)],
    }
}

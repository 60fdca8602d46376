//! Minimal deterministic SVG line plots.

use std::fmt::Write;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { label: label.into(), x, y }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, name: &str) -> CliResult<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() {
                return Err(CliError::Plot(format!("non-finite {name} value {v}")));
            }
            if log && v <= 0.0 {
                return Err(CliError::Plot(format!("{name} value {v} cannot be shown on a log axis")));
            }
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            let pad = if log { 0.5 } else { 0.5 * lo.abs().max(1.0) };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Ok(Self { lo, hi, log })
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick values: decades on log axes spanning at least one, otherwise
    /// five evenly spaced positions.
    fn ticks(&self) -> Vec<f64> {
        if self.log && self.hi - self.lo >= 1.0 {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 6 + 1).max(1);
            (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..5)
                .map(|i| {
                    let t = self.lo + (self.hi - self.lo) * (i as f64 + 0.5) / 5.0;
                    if self.log {
                        10f64.powf(t)
                    } else {
                        t
                    }
                })
                .collect()
        }
    }
}

/// Renders the series as a standalone SVG document with axes and a legend.
/// Output depends only on the input, byte for byte.
pub fn emit_plot(series: &[Series], style: &PlotStyle) -> CliResult<String> {
    if series.is_empty() {
        return Err(CliError::Plot("no series".into()));
    }
    for s in series {
        if s.x.is_empty() {
            return Err(CliError::Plot(format!("series `{}` is empty", s.label)));
        }
        if s.x.len() != s.y.len() {
            return Err(CliError::Plot(format!(
                "series `{}` is ragged: {} x values, {} y values",
                s.label,
                s.x.len(),
                s.y.len()
            )));
        }
    }
    let xa = Axis::new(series.iter().flat_map(|s| s.x.iter().copied()), style.log_x, "x")?;
    let ya = Axis::new(series.iter().flat_map(|s| s.y.iter().copied()), style.log_y, "y")?;
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |v: f64| LEFT + xa.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;

    let mut o = String::new();
    let w = &mut o;
    // writes into a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        num(WIDTH / 2.0),
        escape(&style.title)
    );
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(pw),
        num(ph)
    );
    for t in xa.ticks() {
        let x = num(px(t));
        let _ = writeln!(w, r##"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}" stroke="#dddddd"/>"##, num(TOP + ph));
        let _ = writeln!(w, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, num(TOP + ph + 16.0), tick_label(t));
    }
    for t in ya.ticks() {
        let y = num(py(t));
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##, num(LEFT + pw));
        let _ = writeln!(w, r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#, num(LEFT - 6.0), tick_label(t));
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(LEFT + pw / 2.0),
        num(HEIGHT - 18.0),
        escape(&style.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        num(TOP + ph / 2.0),
        num(TOP + ph / 2.0),
        escape(&style.y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if s.x.len() > 1 {
            let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(&x, &y)| format!("{},{}", num(px(x)), num(py(y)))).collect();
            let _ = writeln!(
                w,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for (&x, &y) in s.x.iter().zip(&s.y) {
            let _ = writeln!(w, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, num(px(x)), num(py(y)));
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let lx = LEFT + pw - 150.0;
        let _ = writeln!(
            w,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
            num(lx),
            num(ly),
            num(lx + 20.0),
            num(ly)
        );
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
            num(lx + 26.0),
            num(ly),
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(o)
}

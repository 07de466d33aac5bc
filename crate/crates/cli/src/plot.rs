//! Self-contained SVG scatter-and-line plots of two CSV columns. Output depends only on
//! the table and the spec, so identical input gives identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 58.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
}

impl PlotSpec {
    pub fn log_log(x: &str, y: &str, title: &str) -> Self {
        Self { x: x.into(), y: y.into(), log_x: true, log_y: true, title: title.into() }
    }
}

/// A CSV file held as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers().map_err(|e| CliError::Output(format!("csv header: {e}")))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Output(format!("csv record: {e}")))?;
        Ok(Self { headers, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&bytes)
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!("column '{name}' not found; columns: {}", self.headers.join(", ")))
        })
    }
}

/// Reads `csv`, renders the plot and writes `out`. Nothing is written on error.
pub fn emit_plot(csv: &Path, spec: &PlotSpec, out: &Path) -> Result<()> {
    let svg = render_svg(&Table::read(csv)?, spec)?;
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    ticks: Vec<f64>,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            let v = if log { v.log10() } else { v };
            (a.min(v), b.max(v))
        });
        if hi - lo < 1e-12 {
            let pad = if log { 0.5 } else { lo.abs().max(1.0) * 0.1 };
            lo -= pad;
            hi += pad;
        }
        let ticks = if log {
            let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
            lo = a as f64;
            hi = b as f64;
            (a..=b).map(f64::from).collect()
        } else {
            let raw = (hi - lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            lo = (lo / step).floor() * step;
            hi = (hi / step).ceil() * step;
            let n = ((hi - lo) / step).round() as usize;
            (0..=n).map(|i| lo + i as f64 * step).collect()
        };
        Self { log, lo, hi, ticks }
    }

    fn fraction(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, t: f64) -> String {
        if self.log {
            format!("1e{}", t as i32)
        } else {
            let s = format!("{:.6}", t);
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" { "0".into() } else { s.into() }
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `spec.y` against `spec.x`. Rows with an empty, non-numeric, or (on a log axis)
/// non-positive entry are skipped; an empty table or no plottable row is an error.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    let xi = table.column(&spec.x)?;
    let yi = table.column(&spec.y)?;
    if table.rows.is_empty() {
        return Err(CliError::Usage("table has no rows to plot".into()));
    }
    let usable = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let mut pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter_map(|row| {
            let x = row.get(xi)?.parse::<f64>().ok()?;
            let y = row.get(yi)?.parse::<f64>().ok()?;
            (usable(x, spec.log_x) && usable(y, spec.log_y)).then_some((x, y))
        })
        .collect();
    if pts.is_empty() {
        return Err(CliError::Usage(format!("no plottable rows for {} against {}", spec.y, spec.x)));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let ax = Axis::new(pts.iter().map(|p| p.0), spec.log_x);
    let ay = Axis::new(pts.iter().map(|p| p.1), spec.log_y);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |v: f64| LEFT + ax.fraction(v) * pw;
    let sy = |v: f64| TOP + (1.0 - ay.fraction(v)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&spec.title));
    for &t in &ax.ticks {
        let x = LEFT + (t - ax.lo) / (ax.hi - ax.lo) * pw;
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, ax.label(t));
    }
    for &t in &ay.ticks {
        let y = TOP + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph;
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, ay.label(t));
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    let scale = |log: bool| if log { " (log)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&spec.x),
        scale(spec.log_x)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y),
        scale(spec.log_y)
    );
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##, path.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

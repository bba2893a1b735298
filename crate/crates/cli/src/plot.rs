//! Static SVG 1.1 line and scatter charts of CSV tables.

use std::fmt::Write;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
pub enum PlotKind {
    Line,
    Scatter,
    /// `ratio` against `lambda` with the `constant` column as a reference line.
    QuasiCount,
    /// `E` against `t`, one curve per branch `j`.
    Fan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub lines: bool,
    pub x: String,
    pub y: String,
    pub group: Option<String>,
    pub hline: Option<String>,
    pub title: String,
}

impl PlotSpec {
    /// Column choices of a preset, each overridable.
    pub fn for_kind(kind: PlotKind, x: Option<String>, y: Option<String>, group: Option<String>) -> Result<Self, CliError> {
        let (dx, dy, dg, hline, title, lines) = match kind {
            PlotKind::Line => (None, None, None, None, "", true),
            PlotKind::Scatter => (None, None, None, None, "", false),
            PlotKind::QuasiCount => (Some("lambda"), Some("ratio"), None, Some("constant"), "quasimode count / lambda^2", true),
            PlotKind::Fan => (Some("t"), Some("E"), Some("j"), None, "eigenvalue branches", true),
        };
        let need = |v: Option<String>, d: Option<&str>, what: &str| {
            v.or(d.map(String::from))
                .ok_or_else(|| CliError::validation(format!("plot: --{what} is required for this kind")))
        };
        let x = need(x, dx, "x")?;
        let y = need(y, dy, "y")?;
        let title = if title.is_empty() { format!("{y} vs {x}") } else { title.to_string() };
        Ok(Self { lines, x, y, group: group.or(dg.map(String::from)), hline: hline.map(String::from), title })
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step of roughly `span/5` from `{1, 2, 5}·10^k`.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    mag * if m < 1.5 { 1.0 } else if m < 3.5 { 2.0 } else if m < 7.5 { 5.0 } else { 10.0 }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(text: &str) -> Result<Table, CliError> {
    let bad = |e: csv::Error| CliError::validation(format!("plot: malformed CSV: {e}"));
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers: Vec<String> = rd.headers().map_err(bad)?.iter().map(|s| s.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::validation("plot: malformed CSV: missing header row"));
    }
    let mut rows = Vec::new();
    for r in rd.records() {
        rows.push(r.map_err(bad)?.iter().map(|s| s.trim().to_string()).collect());
    }
    Ok(Table { headers, rows })
}

impl Table {
    fn column(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("plot: column {name:?} not in header {:?}", self.headers)))
    }
}

/// Parses a cell; blank cells are missing values.
fn cell(row: &[String], col: usize, line: usize) -> Result<Option<f64>, CliError> {
    let s = row[col].as_str();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::validation(format!("plot: malformed CSV: row {line}: {s:?} is not a number")))
}

pub fn plot(csv_text: &str, spec: &PlotSpec) -> Result<String, CliError> {
    let table = read_table(csv_text)?;
    let xc = table.column(&spec.x)?;
    let yc = table.column(&spec.y)?;
    let gc = spec.group.as_deref().map(|g| table.column(g)).transpose()?;
    let hc = spec.hline.as_deref().map(|g| table.column(g)).transpose()?;

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut reference = None;
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        if let Some(h) = hc {
            if let Some(v) = cell(row, h, line)? {
                reference.get_or_insert(v);
            }
        }
        let key = gc.map_or(String::new(), |g| row[g].clone());
        let (Some(x), Some(y)) = (cell(row, xc, line)?, cell(row, yc, line)?) else { continue };
        match series.iter_mut().find(|s| s.0 == key) {
            Some(s) => s.1.push((x, y)),
            None => series.push((key, vec![(x, y)])),
        }
    }

    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)).chain(reference));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(&spec.title)
    );
    // axes
    let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax1:.2}" y2="{ay0:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax0:.2}" y2="{ay1:.2}"/>"#);
    for t in ticks(x0, x1) {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{ay0:.2}" x2="{0:.2}" y2="{1:.2}"/>"#, px(t), ay0 + 5.0);
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{ax0:.2}" y2="{1:.2}"/>"#, ax0 - 5.0, py(t));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
    for t in ticks(x0, x1) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(t), ay0 + 18.0, label(t));
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ax0 - 8.0, py(t) + 4.0, label(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        (ax0 + ax1) / 2.0,
        H - 14.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        (ay0 + ay1) / 2.0,
        escape(&spec.y)
    );
    let _ = writeln!(s, "</g>");

    if let Some(r) = reference {
        let _ = writeln!(
            s,
            r##"<line x1="{ax0:.2}" y1="{0:.2}" x2="{ax1:.2}" y2="{0:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
            py(r)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{} = {}</text>"#,
            ax1 - 4.0,
            py(r) - 5.0,
            escape(spec.hline.as_deref().unwrap_or("")),
            label(r)
        );
    }
    for (k, (_, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if spec.lines {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        } else {
            for &(x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, px(x), py(y));
            }
        }
    }
    if let Some(g) = &spec.group {
        if series.len() <= 12 {
            for (k, (key, _)) in series.iter().enumerate() {
                let y = TOP + 14.0 * k as f64 + 10.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" fill="{}">{} = {}</text>"#,
                    ax0 + 8.0,
                    PALETTE[k % PALETTE.len()],
                    escape(g),
                    escape(key)
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(nice_step(1.0), 0.2);
        assert_eq!(nice_step(300.0), 50.0);
        assert_eq!(label(0.30000000000000004), "0.3");
    }
}

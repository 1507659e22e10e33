//! CSV and SVG writers. All numbers use Rust's shortest round-trip float
//! formatting, so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Empty cell for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => HarnessError::io(path, e),
        other => HarnessError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

/// Probability 0 → blue, 1 → red.
fn heat_colour(p: f64) -> String {
    let p = if p.is_finite() { p.clamp(0.0, 1.0) } else { 0.0 };
    let r = (255.0 * p).round() as u8;
    let b = (255.0 * (1.0 - p)).round() as u8;
    format!("#{r:02x}00{b:02x}")
}

const CELL: f64 = 36.0;
const MARGIN: f64 = 60.0;

/// Heatmap with columns indexed by `xs` and rows by `ys` (lowest `y` at the
/// bottom). `values[row][col]` are probabilities.
pub fn heatmap_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let width = MARGIN * 2.0 + CELL * xs.len() as f64 + 50.0;
    let height = MARGIN * 2.0 + CELL * ys.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (row, y) in ys.iter().enumerate() {
        let top = MARGIN + CELL * (ys.len() - 1 - row) as f64;
        for (col, _) in xs.iter().enumerate() {
            let p = values[row][col];
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{top}" width="{CELL}" height="{CELL}" fill="{}"><title>{}</title></rect>"#,
                MARGIN + CELL * col as f64,
                heat_colour(p),
                fmt_f64(p)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{y:.2}</text>"#,
            MARGIN - 4.0,
            top + CELL / 2.0 + 4.0
        );
    }
    let bottom = MARGIN + CELL * ys.len() as f64;
    for (col, x) in xs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{x:.2}</text>"#,
            MARGIN + CELL * (col as f64 + 0.5),
            bottom + 14.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN + CELL * xs.len() as f64 / 2.0,
        bottom + 32.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        MARGIN + CELL * ys.len() as f64 / 2.0,
        MARGIN + CELL * ys.len() as f64 / 2.0,
        escape(y_label)
    );
    // colour bar
    let bar_x = MARGIN + CELL * xs.len() as f64 + 16.0;
    let bar_h = CELL * ys.len() as f64;
    for i in 0..20 {
        let p = 1.0 - (i as f64 + 0.5) / 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x}" y="{}" width="12" height="{}" fill="{}"/>"#,
            MARGIN + bar_h * i as f64 / 20.0,
            bar_h / 20.0,
            heat_colour(p)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">1</text>"#, bar_x + 16.0, MARGIN + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">0</text>"#, bar_x + 16.0, MARGIN + bar_h);
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot with optional log₁₀ axes. Non-positive values are dropped on
/// log axes.
pub fn line_plot_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    log_x: bool,
    log_y: bool,
) -> String {
    let (w, h) = (560.0, 380.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_x || x > 0.0) && (!log_y || y > 0.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, p)| p.iter().filter(|p| usable(p)).map(|&(x, y)| (tx(x), ty(y))))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| left + (w - left - right) * (x - x0) / (x1 - x0);
    let py = |y: f64| h - bottom - (h - top - bottom) * (y - y0) / (y1 - y0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        (w - right + left) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for (i, v) in [(0, x0), (1, x1)] {
        let shown = if log_x { 10f64.powf(v) } else { v };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="{}">{shown:.3e}</text>"#,
            px(v),
            h - bottom + 14.0,
            if i == 0 { "start" } else { "end" }
        );
    }
    for v in [y0, y1] {
        let shown = if log_y { 10f64.powf(v) } else { v };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{shown:.3e}</text>"#,
            left - 4.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        (w - right + left) / 2.0,
        h - 12.0,
        escape(x_label),
        if log_x { " (log)" } else { "" }
    );
    let mid = (top + h - bottom) / 2.0;
    let _ = writeln!(
        s,
        r#"<text x="16" y="{mid}" text-anchor="middle" transform="rotate(-90 16 {mid})">{}{}</text>"#,
        escape(y_label),
        if log_y { " (log)" } else { "" }
    );
    for (i, (label, points)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{},{}", px(tx(x)), py(ty(y))))
            .collect();
        if !coords.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                coords.join(" ")
            );
            for c in &coords {
                let (cx, cy) = c.split_once(',').expect("coordinate pair");
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{colour}"/>"#);
            }
        }
        let ly = top + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{colour}"/>"#,
            w - right + 12.0,
            ly - 8.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            w - right + 28.0,
            ly + 1.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

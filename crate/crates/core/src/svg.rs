//! Minimal SVG renderings of the CSV outputs. Figures only; the CSV files
//! are the data of record.

use std::fmt::Write;

use crate::stability::{RegionLabel, StabilityGrid};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 40.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
}

/// Line plot of several named series against a shared x axis.
pub fn line_plot(title: &str, x: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let (x0, x1) = bounds(x.iter().copied());
    let (y0, y1) = bounds(series.iter().flat_map(|(_, ys)| ys.iter().copied()));
    let px = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title);
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = x
            .iter()
            .zip(ys)
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{name}</text>"#,
            W - PAD - 60.0,
            PAD + 14.0 * k as f64
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">x: [{x0}, {x1}]  y: [{y0:.4}, {y1:.4}]</text>"#,
        H - 10.0
    );
    out.push_str("</svg>\n");
    out
}

fn region_color(label: RegionLabel) -> &'static str {
    match label {
        RegionLabel::Unstable => "#d62728",
        RegionLabel::StableFirstOnly => "#f2d024",
        RegionLabel::StableSecondOnly => "#1f77b4",
        RegionLabel::StableBoth => "#2ca02c",
    }
}

/// Region map in the (alpha, delta) plane, alpha horizontal; an optional
/// star marks `(star, star)`.
pub fn region_map(grid: &StabilityGrid, star: Option<f64>) -> String {
    let (a0, a1) = bounds(grid.alphas.iter().copied());
    let (d0, d1) = bounds(grid.deltas.iter().copied());
    let cw = (W - 2.0 * PAD) / grid.alphas.len() as f64;
    let ch = (H - 2.0 * PAD) / grid.deltas.len() as f64;
    let mut out = String::new();
    header(&mut out, &format!("beta = {}, xi = {}", grid.beta, grid.xi));
    for ai in 0..grid.alphas.len() {
        for di in 0..grid.deltas.len() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                PAD + ai as f64 * cw,
                H - PAD - (di + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                region_color(grid.label(ai, di))
            );
        }
    }
    if let Some(s) = star {
        // cells span (value - step, value]
        let extent = |lo: f64, hi: f64, n: usize| {
            let step = if n > 1 {
                (hi - lo) / (n - 1) as f64
            } else {
                hi
            };
            (hi - step * n as f64, hi)
        };
        let (ea0, ea1) = extent(a0, a1, grid.alphas.len());
        let (ed0, ed1) = extent(d0, d1, grid.deltas.len());
        let x = PAD + (s - ea0) / (ea1 - ea0) * (W - 2.0 * PAD);
        let y = H - PAD - (s - ed0) / (ed1 - ed0) * (H - 2.0 * PAD);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="18" text-anchor="middle" dominant-baseline="middle">&#9733;</text>"#
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">alpha: [{a0}, {a1}]  delta: [{d0}, {d1}]</text>"#,
        H - 10.0
    );
    out.push_str("</svg>\n");
    out
}

/// Scatter of (x, y) points with a diagonal; `filled` points drawn solid.
pub fn scatter(title: &str, points: &[(f64, f64, bool)]) -> String {
    let (lo, hi) = bounds(points.iter().flat_map(|p| [p.0, p.1]));
    let px = |v: f64| PAD + (v - lo) / (hi - lo) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4"/>"#,
        px(lo),
        py(lo),
        px(hi),
        py(hi)
    );
    for &(x, y, filled) in points {
        let fill = if filled { "#1f77b4" } else { "none" };
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" stroke="#1f77b4" fill="{fill}"/>"##,
            px(x),
            py(y)
        );
    }
    out.push_str("</svg>\n");
    out
}

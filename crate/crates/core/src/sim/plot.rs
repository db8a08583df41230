//! Standalone SVG line charts of mean residual with ±1 standard-error bars.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Method, ResidualStats, ResidualType};
use crate::error::{ensure, Result};

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotAxis {
    Sigma,
    M,
}

impl PlotAxis {
    fn value(self, r: &ResidualStats) -> f64 {
        match self {
            PlotAxis::Sigma => r.sigma,
            PlotAxis::M => r.m as f64,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlotAxis::Sigma => "σ",
            PlotAxis::M => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            title: None,
        }
    }
}

fn series_label(method: Method, kind: ResidualType) -> String {
    match kind {
        ResidualType::MeanOfReconstructions => format!("{} ({})", method.as_str(), kind.as_str()),
        _ => method.as_str().to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders the chart: one polyline per (method, residual type), one error bar
/// per row.
pub fn render_svg(rows: &[ResidualStats], axis: PlotAxis, opts: &PlotOptions) -> Result<String> {
    ensure(!rows.is_empty(), || {
        "cannot plot an empty result set".into()
    })?;
    ensure(opts.width >= 200 && opts.height >= 150, || {
        "plot must be at least 200x150".into()
    })?;

    let mut series: BTreeMap<(Method, ResidualType), Vec<&ResidualStats>> = BTreeMap::new();
    for r in rows {
        series
            .entry((r.method, r.residual_type))
            .or_default()
            .push(r);
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| axis.value(a).total_cmp(&axis.value(b)));
    }

    let (mut x_lo, mut x_hi) = rows
        .iter()
        .map(|r| axis.value(r))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if x_hi - x_lo <= 0.0 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let y_hi = rows
        .iter()
        .map(|r| r.mean_residual + r.se_residual)
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let y_hi = if y_hi > 0.0 { y_hi * 1.05 } else { 1.0 };

    let w = opts.width as f64;
    let h = opts.height as f64;
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |v: f64| MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| MARGIN_TOP + plot_h - (v / y_hi) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(title) = &opts.title {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            w / 2.0,
            escape(title)
        );
    }

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{x0:.1}" y1="{y0:.1}" x2="{:.1}" y2="{y0:.1}"/><line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{MARGIN_TOP:.1}"/></g>"#,
        x0 + plot_w
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = f * y_hi;
        let px = sx(xv);
        let py = sy(yv);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + plot_w / 2.0,
        h - 15.0,
        axis.label()
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="20" y="{:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {:.1})">mean residual</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (idx, ((method, kind), points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(axis.value(r)), sy(r.mean_residual)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-method="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&series_label(*method, *kind)),
            coords.join(" ")
        );
        for r in points {
            let px = sx(axis.value(r));
            let lo = (r.mean_residual - r.se_residual).max(0.0);
            let hi = r.mean_residual + r.se_residual;
            let _ = writeln!(
                svg,
                r#"<line class="error-bar" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sy(lo),
                sy(hi),
                sy(r.mean_residual)
            );
        }
    }

    let lx = MARGIN_LEFT + plot_w - 190.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (idx, (method, kind)) in series.keys().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let ly = MARGIN_TOP + 10.0 + idx as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ly - 2.0,
            lx + 20.0,
            ly + 4.0,
            escape(&series_label(*method, *kind))
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(
    rows: &[ResidualStats],
    axis: PlotAxis,
    opts: &PlotOptions,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(rows, axis, opts)?;
    std::fs::write(path, svg)?;
    Ok(())
}

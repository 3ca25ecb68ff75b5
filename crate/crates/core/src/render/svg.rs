//! Log-log roofline plots as standalone SVG 1.1.
//!
//! # Coordinate transform
//!
//! The plot area spans `[MARGIN_LEFT, width - MARGIN_RIGHT]` horizontally
//! and `[MARGIN_TOP, height - MARGIN_BOTTOM]` vertically. A data point
//! `(x, y)` in ranges `[x_min, x_max]`, `[y_min, y_max]` maps to
//!
//! ```text
//! px = MARGIN_LEFT + (log10 x - log10 x_min) / (log10 x_max - log10 x_min) * plot_width
//! py = (height - MARGIN_BOTTOM) - (log10 y - log10 y_min) / (log10 y_max - log10 y_min) * plot_height
//! ```
//!
//! When a range is not given it is fitted to the data (the ridge point, the
//! achieved points, and the compute ceiling) and padded by half a decade on
//! each side: `[min / 10^0.5, max * 10^0.5]`.
//!
//! Coordinates are written with three decimals. Output depends only on the
//! model and options.

use crate::error::{Error, Result};
use crate::metrics::IntensityMode;
use crate::model::RooflineModel;

pub const MARGIN_LEFT: f64 = 80.0;
pub const MARGIN_RIGHT: f64 = 220.0;
pub const MARGIN_TOP: f64 = 50.0;
pub const MARGIN_BOTTOM: f64 = 60.0;

/// Half a decade, as a multiplicative factor.
pub const AUTO_RANGE_PAD: f64 = 3.162_277_660_168_379_5;

const PALETTE: [&str; 8] = [
    "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width_px: u32,
    pub height_px: u32,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Defaults to "Instructions per Byte" or "Instructions per Transaction".
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    /// Defaults to "<GPU> Instruction Roofline".
    pub title: Option<String>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            width_px: 800,
            height_px: 600,
            x_range: None,
            y_range: None,
            x_label: None,
            y_label: None,
            title: None,
        }
    }
}

pub fn default_x_label(mode: IntensityMode) -> &'static str {
    match mode {
        IntensityMode::PerTransaction => "Instructions per Transaction",
        _ => "Instructions per Byte",
    }
}

/// Log-log mapping from data space to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTransform {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl LogTransform {
    pub fn px(&self, x: f64) -> f64 {
        let (lo, hi) = (self.x_range.0.log10(), self.x_range.1.log10());
        self.left + (x.log10() - lo) / (hi - lo) * (self.right - self.left)
    }

    pub fn py(&self, y: f64) -> f64 {
        let (lo, hi) = (self.y_range.0.log10(), self.y_range.1.log10());
        self.bottom - (y.log10() - lo) / (hi - lo) * (self.bottom - self.top)
    }
}

fn positive(v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonPositiveValue(v))
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<(f64, f64)> {
    if r.0 > 0.0 && r.0 < r.1 && r.1.is_finite() {
        Ok(r)
    } else {
        Err(Error::InvalidPlotOptions(format!(
            "{name} must satisfy 0 < min < max, got ({}, {})",
            r.0, r.1
        )))
    }
}

fn fit(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    (lo / AUTO_RANGE_PAD, hi * AUTO_RANGE_PAD)
}

/// The transform `render_svg` would use for `model` and `opts`.
pub fn plot_transform(model: &RooflineModel, opts: &PlotOptions) -> Result<LogTransform> {
    if opts.width_px as f64 <= MARGIN_LEFT + MARGIN_RIGHT
        || opts.height_px as f64 <= MARGIN_TOP + MARGIN_BOTTOM
    {
        return Err(Error::InvalidPlotOptions(format!(
            "canvas {}x{} is smaller than the margins",
            opts.width_px, opts.height_px
        )));
    }
    let peak = positive(model.ceilings.peak_gips)?;
    let ridge = positive(model.ridge_intensity)?;
    for p in &model.points {
        positive(p.intensity)?;
        positive(p.gips)?;
    }
    let x_range = match opts.x_range {
        Some(r) => check_range("x_range", r)?,
        None => fit(std::iter::once(ridge).chain(model.points.iter().map(|p| p.intensity))),
    };
    let y_range = match opts.y_range {
        Some(r) => check_range("y_range", r)?,
        None => fit(std::iter::once(peak).chain(model.points.iter().map(|p| p.gips))),
    };
    Ok(LogTransform {
        x_range,
        y_range,
        left: MARGIN_LEFT,
        right: opts.width_px as f64 - MARGIN_RIGHT,
        top: MARGIN_TOP,
        bottom: opts.height_px as f64 - MARGIN_BOTTOM,
    })
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

fn decade_label(k: i32) -> String {
    match k {
        0..=3 => format!("1{}", "0".repeat(k as usize)),
        -3..=-1 => format!("0.{}1", "0".repeat((-k - 1) as usize)),
        _ => format!("1e{k}"),
    }
}

fn decades(range: (f64, f64)) -> std::ops::RangeInclusive<i32> {
    // nudge so exact powers of ten at the edges are included
    let lo = (range.0.log10() - 1e-9).ceil() as i32;
    let hi = (range.1.log10() + 1e-9).floor() as i32;
    lo..=hi
}

/// Vertices of a roof `min(peak, bw × x)` clipped to the plot ranges.
fn roof_vertices(peak: f64, bw: f64, t: &LogTransform) -> Vec<(f64, f64)> {
    let (x_min, x_max) = t.x_range;
    let (y_min, y_max) = t.y_range;
    let ridge = peak / bw;
    let x_start = x_min.max(y_min / bw).min(x_max);
    let mut xs = vec![x_start];
    if ridge > x_start && ridge < x_max {
        xs.push(ridge);
    }
    xs.push(x_max);
    xs.into_iter()
        .map(|x| (x, peak.min(bw * x).clamp(y_min, y_max)))
        .collect()
}

fn polyline_points(vertices: &[(f64, f64)], t: &LogTransform) -> String {
    vertices
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", t.px(x), t.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders `model` as an SVG document.
pub fn render_svg(model: &RooflineModel, opts: &PlotOptions) -> Result<String> {
    let t = plot_transform(model, opts)?;
    let (w, h) = (opts.width_px, opts.height_px);
    let mode = model.intensity_mode;
    let x_label = opts
        .x_label
        .clone()
        .unwrap_or_else(|| default_x_label(mode).to_string());
    let y_label = opts.y_label.clone().unwrap_or_else(|| "GIPS".to_string());
    let title = opts
        .title
        .clone()
        .unwrap_or_else(|| format!("{} Instruction Roofline", model.gpu.name));

    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#.into());
    line(format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    ));
    line(format!(
        r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
    ));

    line(r##"<g id="grid" stroke="#dddddd" stroke-width="1">"##.into());
    let mut tick_labels = Vec::new();
    for k in decades(t.x_range) {
        let x = t.px(10f64.powi(k));
        line(format!(
            r#"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}"/>"#,
            t.top, t.bottom
        ));
        tick_labels.push(format!(
            r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            t.bottom + 16.0,
            decade_label(k)
        ));
    }
    for k in decades(t.y_range) {
        let y = t.py(10f64.powi(k));
        line(format!(
            r#"<line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}"/>"#,
            t.left, t.right
        ));
        tick_labels.push(format!(
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            t.left - 6.0,
            y + 4.0,
            decade_label(k)
        ));
    }
    line("</g>".into());

    line(r#"<g id="axes">"#.into());
    line(format!(
        r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        t.left,
        t.top,
        t.right - t.left,
        t.bottom - t.top
    ));
    for l in tick_labels {
        line(l);
    }
    line(format!(
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-size="16">{}</text>"#,
        (t.left + t.right) / 2.0,
        t.top - 20.0,
        escape(&title)
    ));
    line(format!(
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
        (t.left + t.right) / 2.0,
        f64::from(h) - 16.0,
        escape(&x_label)
    ));
    let (yl_x, yl_y) = (20.0, (t.top + t.bottom) / 2.0);
    line(format!(
        r#"<text x="{yl_x:.3}" y="{yl_y:.3}" text-anchor="middle" transform="rotate(-90 {yl_x:.3} {yl_y:.3})">{}</text>"#,
        escape(&y_label)
    ));
    line("</g>".into());

    let peak = model.ceilings.peak_gips;
    let bw = model.bandwidth();
    let bw_unit = if mode == IntensityMode::PerTransaction {
        "GTXN/s"
    } else {
        "GB/s"
    };
    line(r#"<g id="roofline">"#.into());
    line(format!(
        r##"<polyline points="{}" fill="none" stroke="#1f3b73" stroke-width="2"/>"##,
        polyline_points(&roof_vertices(peak, bw, &t), &t)
    ));
    for c in &model.level_ceilings {
        if let Some(level_bw) = model.bandwidth_for(c.level) {
            line(format!(
                r##"<polyline points="{}" fill="none" stroke="#1f3b73" stroke-width="1" stroke-dasharray="6 4"/>"##,
                polyline_points(&roof_vertices(peak, level_bw, &t), &t)
            ));
        }
    }
    line(format!(
        r#"<text x="{:.3}" y="{:.3}" text-anchor="end">Peak {:.3} GIPS</text>"#,
        t.right - 4.0,
        t.py(peak.clamp(t.y_range.0, t.y_range.1)) - 6.0,
        peak
    ));
    line(format!(
        r#"<text x="{:.3}" y="{:.3}">HBM {:.3} {bw_unit}</text>"#,
        t.left + 4.0,
        t.bottom - 6.0,
        bw
    ));
    line("</g>".into());

    line(r#"<g id="points">"#.into());
    for (i, p) in model.points.iter().enumerate() {
        line(format!(
            r##"<circle cx="{:.3}" cy="{:.3}" r="5" fill="{}" stroke="#000000" stroke-width="0.5"/>"##,
            t.px(p.intensity),
            t.py(p.gips),
            PALETTE[i % PALETTE.len()]
        ));
    }
    line("</g>".into());

    line(r#"<g id="legend">"#.into());
    for (i, p) in model.points.iter().enumerate() {
        let y = t.top + 10.0 + 20.0 * i as f64;
        let x = t.right + 20.0;
        line(format!(
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="5" fill="{}"/>"#,
            PALETTE[i % PALETTE.len()]
        ));
        line(format!(
            r#"<text x="{:.3}" y="{:.3}">{}</text>"#,
            x + 10.0,
            y + 4.0,
            escape(&format!("{}@{}", p.kernel_name, p.memory_level))
        ));
    }
    line("</g>".into());
    line("</svg>".into());
    Ok(s)
}

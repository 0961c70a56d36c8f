//! Data map rendering: variability on x, confidence on y, one point per
//! sample colored by how many epochs it was predicted correctly.
//!
//! Axes are fixed at x in [0, 0.5] and y in [0, 1] so maps from different
//! runs line up. Output is plain SVG 1.1 text built without any drawing
//! library; the same input always produces the same bytes.

use std::fmt::Write as _;

use crate::dynamics::TrainingDynamics;
use crate::error::{Error, Result};

pub const X_MAX: f64 = 0.5;
pub const Y_MAX: f64 = 1.0;

/// Blue (never correct) through red (always correct).
const BASE_PALETTE: [&str; 11] = [
    "#313695", "#4575b4", "#74add1", "#abd9e9", "#e0f3f8", "#ffffbf", "#fee090", "#fdae61", "#f46d43", "#d73027",
    "#a50026",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

impl Margins {
    pub fn uniform(px: f64) -> Self {
        Self { top: px, right: px, bottom: px, left: px }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapStyle {
    pub width_px: u32,
    pub height_px: u32,
    pub point_radius_px: f64,
    /// One color per correctness level `0..=E`.
    pub palette: Vec<String>,
    pub margins: Margins,
}

impl MapStyle {
    pub fn for_epochs(epochs: usize) -> Self {
        Self {
            width_px: 800,
            height_px: 600,
            point_radius_px: 1.5,
            palette: default_palette(epochs),
            margins: Margins { top: 40.0, right: 40.0, bottom: 60.0, left: 70.0 },
        }
    }

    fn plot_rect(&self) -> Result<(f64, f64, f64, f64)> {
        let m = &self.margins;
        let w = f64::from(self.width_px) - m.left - m.right;
        let h = f64::from(self.height_px) - m.top - m.bottom;
        let ok = [m.top, m.right, m.bottom, m.left].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok || !(w > 0.0 && h > 0.0) || !(self.point_radius_px > 0.0) {
            return Err(Error::Config("map style leaves no room for the plot".into()));
        }
        Ok((m.left, m.top, w, h))
    }

    /// Pixel position of a (variability, confidence) point.
    pub fn project(&self, variability: f64, confidence: f64) -> Result<(f64, f64)> {
        let (x0, y0, w, h) = self.plot_rect()?;
        let vx = variability.clamp(0.0, X_MAX) / X_MAX;
        let vy = confidence.clamp(0.0, Y_MAX) / Y_MAX;
        Ok((x0 + vx * w, y0 + (1.0 - vy) * h))
    }
}

impl Default for MapStyle {
    fn default() -> Self {
        Self::for_epochs(6)
    }
}

/// `epochs + 1` colors sampled evenly from a fixed diverging ramp.
pub fn default_palette(epochs: usize) -> Vec<String> {
    let last = BASE_PALETTE.len() - 1;
    (0..=epochs)
        .map(|i| {
            let idx = (i * last + epochs / 2).checked_div(epochs).unwrap_or(last);
            BASE_PALETTE[idx].to_string()
        })
        .collect()
}

fn px(v: f64) -> String {
    format!("{v:.3}")
}

pub fn render_map(dynamics: &[TrainingDynamics], style: &MapStyle) -> Result<String> {
    let (x0, y0, w, h) = style.plot_rect()?;
    let epochs = match dynamics.first() {
        Some(d) => {
            if let Some(other) = dynamics.iter().find(|x| x.epochs != d.epochs) {
                return Err(Error::Data(format!(
                    "mixed epoch counts: {} has {}, {} has {}",
                    d.guid, d.epochs, other.guid, other.epochs
                )));
            }
            if style.palette.len() != d.epochs + 1 {
                return Err(Error::Config(format!(
                    "palette has {} colors, need {} for {} epochs",
                    style.palette.len(),
                    d.epochs + 1,
                    d.epochs
                )));
            }
            d.epochs
        }
        None => style.palette.len().saturating_sub(1),
    };
    if style.palette.is_empty() {
        return Err(Error::Config("empty palette".into()));
    }
    for c in &style.palette {
        if c.contains(['"', '<', '>', '&']) {
            return Err(Error::Config(format!("invalid color `{c}`")));
        }
    }

    let (width, height) = (style.width_px, style.height_px);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##);

    // Grid, ticks and tick labels.
    let _ = writeln!(svg, r##"<g id="axes" stroke="#000000" stroke-width="1" fill="none">"##);
    for i in 0..=5 {
        let x = x0 + w * f64::from(i) / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#dddddd"/>"##,
            px(x),
            px(y0),
            px(y0 + h)
        );
        let _ = writeln!(svg, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#, px(x), px(y0 + h), px(y0 + h + 5.0));
    }
    for i in 0..=10 {
        let y = y0 + h - h * f64::from(i) / 10.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}" stroke="#dddddd"/>"##,
            px(y),
            px(x0),
            px(x0 + w)
        );
        let _ = writeln!(svg, r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}"/>"#, px(y), px(x0 - 5.0), px(x0));
    }
    let _ = writeln!(svg, r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#, px(x0), px(y0), px(w), px(h));
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r##"<g id="tick-labels" fill="#000000">"##);
    for i in 0..=5 {
        let x = x0 + w * f64::from(i) / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{:.1}</text>"#,
            px(x),
            px(y0 + h + 18.0),
            f64::from(i) / 10.0
        );
    }
    for i in 0..=10 {
        let y = y0 + h - h * f64::from(i) / 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#,
            px(x0 - 8.0),
            px(y + 4.0),
            f64::from(i) / 10.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">variability</text>"#,
        px(x0 + w / 2.0),
        px(y0 + h + 42.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{0}" y="{1}" text-anchor="middle" font-size="14" transform="rotate(-90 {0} {1})">confidence</text>"#,
        px(x0 - 45.0),
        px(y0 + h / 2.0)
    );
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="points" stroke="none">"#);
    let r = px(style.point_radius_px);
    for d in dynamics {
        let (cx, cy) = style.project(d.variability, d.confidence)?;
        let level = d.correct_epochs().min(epochs);
        let _ = writeln!(
            svg,
            r#"<circle cx="{}" cy="{}" r="{r}" fill="{}"/>"#,
            px(cx),
            px(cy),
            style.palette[level]
        );
    }
    let _ = writeln!(svg, "</g>");

    // Legend, inside the top-right corner of the plot.
    let rows = style.palette.len();
    let lw = 110.0;
    let lx = x0 + w - lw - 8.0;
    let ly = y0 + 8.0;
    let _ = writeln!(svg, r#"<g id="legend">"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#ffffff" fill-opacity="0.85" stroke="#999999"/>"##,
        px(lx),
        px(ly),
        px(lw),
        px(22.0 + 16.0 * rows as f64)
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}">correctness</text>"#, px(lx + 8.0), px(ly + 15.0));
    for (i, color) in style.palette.iter().enumerate() {
        let ry = ly + 22.0 + 16.0 * i as f64;
        let label = if epochs == 0 { "-".to_string() } else { format!("{:.2}", i as f64 / epochs as f64) };
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{label}</text>"#,
            px(lx + 8.0),
            px(ry),
            px(lx + 24.0),
            px(ry + 9.0)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

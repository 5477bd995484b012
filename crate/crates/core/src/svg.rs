//! Minimal SVG writer used for heatmaps and path overlays.

use std::fmt::Write;

pub struct SvgCanvas {
    width: f64,
    height: f64,
    body: String,
}

impl SvgCanvas {
    pub fn new(width: f64, height: f64) -> Self {
        SvgCanvas {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"/>"#
        )
        .unwrap();
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width:.3}"/>"#,
            a.0, a.1, b.0, b.1
        )
        .unwrap();
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dash: Option<&str>) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let dash = dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.3}"{dash} stroke-linejoin="round"/>"#,
            pts.join(" ")
        )
        .unwrap();
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="{fill}"/>"#
        )
        .unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, fill: &str, content: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-size="{size:.3}" font-family="sans-serif" fill="{fill}">{}</text>"#,
            escape(content)
        )
        .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.3}\" height=\"{h:.3}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Gray level for a value in `[0, 1]`; 1 is white.
pub fn gray(v: f64) -> String {
    let c = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{c:02x}{c:02x}{c:02x}")
}

/// Red (0) to green (1) ramp.
pub fn ramp(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = ((1.0 - v) * 220.0).round() as u8;
    let g = (v * 200.0).round() as u8;
    format!("#{r:02x}{g:02x}40")
}

/// Fixed palette for teams and path variants.
pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    COLORS[i % COLORS.len()]
}

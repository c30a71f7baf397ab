//! Static SVG plots: heatmaps, polylines, scatter and a legend.

use std::fmt::Write as _;

use opticroute_core::{Point2, ScalarField2D};

/// Fixed line palette; index modulo 8.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Largest number of heatmap cells drawn along either axis.
const MAX_CELLS: usize = 160;

const MARGIN: f64 = 40.0;
const LEGEND_WIDTH: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stroke {
    Solid,
    Dashed,
}

pub struct Plot {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    scale: f64,
    title: String,
    body: String,
    legend: Vec<(String, usize, Stroke)>,
}

fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Blue to yellow ramp over `t` in [0, 1].
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

impl Plot {
    /// Plot area covering the world rectangle, at most `max_px` pixels on
    /// its longer side.
    pub fn new(title: &str, x_min: f64, x_max: f64, y_min: f64, y_max: f64, max_px: f64) -> Self {
        let span = (x_max - x_min).max(y_max - y_min).max(f64::MIN_POSITIVE);
        Plot {
            x_min,
            x_max,
            y_min,
            y_max,
            scale: max_px / span,
            title: title.to_string(),
            body: String::new(),
            legend: Vec::new(),
        }
    }

    pub fn for_field(title: &str, field: &ScalarField2D) -> Self {
        let s = field.spec();
        Plot::new(title, s.x_min, s.x_max(), s.y_min, s.y_max(), 640.0)
    }

    fn px(&self, p: Point2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.x_min) * self.scale,
            MARGIN + (self.y_max - p.y) * self.scale,
        )
    }

    fn plot_size(&self) -> (f64, f64) {
        (
            (self.x_max - self.x_min) * self.scale,
            (self.y_max - self.y_min) * self.scale,
        )
    }

    /// Color-mapped cells, downsampled to at most [`MAX_CELLS`] per axis.
    /// With `log` the ramp is linear in the logarithm of the value.
    pub fn heatmap(&mut self, field: &ScalarField2D, log: bool) {
        let spec = *field.spec();
        let map = |v: f64| if log { v.max(f64::MIN_POSITIVE).ln() } else { v };
        let (lo, hi) = (map(field.min()), map(field.max()));
        let stride = spec.nx.max(spec.ny).div_ceil(MAX_CELLS).max(1);
        let cell = spec.h * stride as f64 * self.scale;
        for j in (0..spec.ny).step_by(stride) {
            for i in (0..spec.nx).step_by(stride) {
                let t = if hi > lo {
                    (map(field.at(i, j)) - lo) / (hi - lo)
                } else {
                    0.5
                };
                let (cx, cy) = self.px(spec.node(i, j));
                let _ = writeln!(
                    self.body,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    cx - cell / 2.0,
                    cy - cell / 2.0,
                    cell + 0.3,
                    cell + 0.3,
                    ramp(t)
                );
            }
        }
        let _ = writeln!(
            self.body,
            r#"<!-- heatmap range {} .. {}{} -->"#,
            field.min(),
            field.max(),
            if log { " (log scale)" } else { "" }
        );
    }

    pub fn polyline(&mut self, points: &[Point2], palette_index: usize, width: f64, stroke: Stroke) {
        if points.len() < 2 {
            return;
        }
        let mut coords = String::with_capacity(points.len() * 16);
        for p in points {
            let (x, y) = self.px(*p);
            let _ = write!(coords, "{x:.2},{y:.2} ");
        }
        let dash = match stroke {
            Stroke::Solid => "",
            Stroke::Dashed => r#" stroke-dasharray="6,4""#,
        };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{width}"{dash}/>"#,
            coords.trim_end(),
            color(palette_index)
        );
    }

    pub fn scatter(&mut self, points: &[Point2], radius: f64, fill: &str) {
        for p in points {
            let (x, y) = self.px(*p);
            let _ = writeln!(
                self.body,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{fill}"/>"#
            );
        }
    }

    pub fn circle(&mut self, center: Point2, radius: f64, palette_index: usize) {
        let (x, y) = self.px(center);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            radius * self.scale,
            color(palette_index)
        );
    }

    /// A filled dot with a text label next to it.
    pub fn marker(&mut self, p: Point2, label: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/><text x="{:.2}" y="{:.2}" font-size="13">{}</text>"#,
            x + 6.0,
            y - 6.0,
            escape(label)
        );
    }

    pub fn legend(&mut self, label: &str, palette_index: usize, stroke: Stroke) {
        self.legend.push((label.to_string(), palette_index, stroke));
    }

    pub fn finish(&self) -> String {
        let (w, h) = self.plot_size();
        let total_w = w + 2.0 * MARGIN + LEGEND_WIDTH;
        let total_h = h + 2.0 * MARGIN;
        let mut out = String::with_capacity(self.body.len() + 2048);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.2} {total_h:.2}" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{:.2}" font-size="15">{}</text>"#,
            MARGIN - 14.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{w:.2}" height="{h:.2}"/></clipPath>"#
        );
        let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
        out.push_str(&self.body);
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#
        );
        for (x, y, anchor, text) in [
            (MARGIN, MARGIN + h + 16.0, "start", format!("x={}", self.x_min)),
            (MARGIN + w, MARGIN + h + 16.0, "end", format!("x={}", self.x_max)),
            (MARGIN - 4.0, MARGIN + h, "end", format!("{}", self.y_min)),
            (MARGIN - 4.0, MARGIN + 10.0, "end", format!("{}", self.y_max)),
        ] {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{y:.2}" font-size="11" text-anchor="{anchor}">{text}</text>"#
            );
        }
        let lx = MARGIN + w + 16.0;
        for (k, (label, idx, stroke)) in self.legend.iter().enumerate() {
            let y = MARGIN + 10.0 + 20.0 * k as f64;
            let dash = if *stroke == Stroke::Dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2.5"{dash}/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
                lx + 24.0,
                color(*idx),
                lx + 30.0,
                y + 4.0,
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

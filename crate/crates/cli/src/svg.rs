//! Minimal standalone SVG 1.1 plots: polylines, markers and cells on
//! linear or logarithmic axes.

use std::fmt::Write as _;

pub const GREEN: &str = "#1a9641";
pub const RED: &str = "#d7191c";
pub const BLUE: &str = "#2c7bb6";
pub const GREY: &str = "#888888";
pub const ORANGE: &str = "#fdae61";

pub enum Layer {
    Line {
        points: Vec<[f64; 2]>,
        colour: &'static str,
        width: f64,
        dashed: bool,
        label: Option<String>,
    },
    Markers {
        points: Vec<[f64; 2]>,
        colour: &'static str,
        radius: f64,
        label: Option<String>,
    },
    /// Axis-aligned cell from `lo` to `hi` in data coordinates, with text.
    Cell {
        lo: [f64; 2],
        hi: [f64; 2],
        fill: String,
        text: String,
    },
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub layers: Vec<Layer>,
    /// Fixed data ranges; computed from the layers when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            layers: Vec::new(),
            x_range: None,
            y_range: None,
        }
    }

    pub fn line(mut self, points: Vec<[f64; 2]>, colour: &'static str, label: Option<&str>) -> Self {
        self.layers.push(Layer::Line {
            points,
            colour,
            width: 1.5,
            dashed: false,
            label: label.map(str::to_string),
        });
        self
    }

    pub fn dashed(mut self, points: Vec<[f64; 2]>, colour: &'static str, label: Option<&str>) -> Self {
        self.layers.push(Layer::Line {
            points,
            colour,
            width: 1.0,
            dashed: true,
            label: label.map(str::to_string),
        });
        self
    }

    pub fn markers(mut self, points: Vec<[f64; 2]>, colour: &'static str, label: Option<&str>) -> Self {
        self.layers.push(Layer::Markers {
            points,
            colour,
            radius: 4.0,
            label: label.map(str::to_string),
        });
        self
    }

    fn tx(&self, v: f64) -> f64 {
        if self.log_x {
            v.log10()
        } else {
            v
        }
    }

    fn ty(&self, v: f64) -> f64 {
        if self.log_y {
            v.log10()
        } else {
            v
        }
    }

    fn data_ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut add = |p: [f64; 2]| {
            let (x, y) = (self.tx(p[0]), self.ty(p[1]));
            if x.is_finite() && y.is_finite() {
                xr = (xr.0.min(x), xr.1.max(x));
                yr = (yr.0.min(y), yr.1.max(y));
            }
        };
        for layer in &self.layers {
            match layer {
                Layer::Line { points, .. } | Layer::Markers { points, .. } => {
                    points.iter().for_each(|p| add(*p))
                }
                Layer::Cell { lo, hi, .. } => {
                    add(*lo);
                    add(*hi);
                }
            }
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                let m = 0.04 * (r.1 - r.0);
                (r.0 - m, r.1 + m)
            }
        };
        let xr = self.x_range.map(|(a, b)| (self.tx(a), self.tx(b))).unwrap_or_else(|| pad(xr));
        let yr = self.y_range.map(|(a, b)| (self.ty(a), self.ty(b))).unwrap_or_else(|| pad(yr));
        (xr, yr)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_ranges();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (self.tx(x) - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (self.ty(y) - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#
        );
        // axes frame and ticks
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        for (v, label) in ticks(x0, x1, self.log_x) {
            let px = LEFT + (v - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                escape(&label)
            );
        }
        for (v, label) in ticks(y0, y1, self.log_y) {
            let py = TOP + ph - (v - y0) / (y1 - y0) * ph;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        let mut legend = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Line {
                    points,
                    colour,
                    width,
                    dashed,
                    label,
                } => {
                    // split at non-finite points
                    for run in points.split(|p| !(self.tx(p[0]).is_finite() && self.ty(p[1]).is_finite())) {
                        if run.len() < 2 {
                            continue;
                        }
                        let mut pts = String::new();
                        for p in run {
                            let _ = write!(pts, "{:.2},{:.2} ", sx(p[0]), sy(p[1]));
                        }
                        let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
                        let _ = writeln!(
                            s,
                            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="{width}"{dash}/>"#,
                            pts.trim_end()
                        );
                    }
                    if let Some(l) = label {
                        legend.push((l.clone(), *colour));
                    }
                }
                Layer::Markers {
                    points,
                    colour,
                    radius,
                    label,
                } => {
                    for p in points {
                        let (x, y) = (sx(p[0]), sy(p[1]));
                        if x.is_finite() && y.is_finite() {
                            let _ = writeln!(
                                s,
                                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{colour}" stroke="black" stroke-width="0.5"/>"#
                            );
                        }
                    }
                    if let Some(l) = label {
                        legend.push((l.clone(), *colour));
                    }
                }
                Layer::Cell { lo, hi, fill, text } => {
                    let (xa, xb) = (sx(lo[0]), sx(hi[0]));
                    let (ya, yb) = (sy(hi[1]), sy(lo[1]));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="white"/><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                        xa.min(xb),
                        ya.min(yb),
                        (xb - xa).abs(),
                        (yb - ya).abs(),
                        0.5 * (xa + xb),
                        0.5 * (ya + yb) + 4.0,
                        escape(text)
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
        for (i, (label, colour)) in legend.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let x = LEFT + pw - 150.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{colour}" stroke-width="3"/><text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif">{}</text>"#,
                x + 18.0,
                x + 24.0,
                y + 4.0,
                escape(label)
            );
        }
        let _ = writeln!(s, "</svg>");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions in transformed coordinates, with labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        if b >= a {
            return (a..=b).map(|k| (k as f64, format!("1e{k}"))).collect();
        }
    }
    let span = hi - lo;
    if !(span > 0.0) {
        return Vec::new();
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            let label = if v == 0.0 {
                "0".to_string()
            } else {
                format!("{v:.decimals$}")
            };
            (v, label)
        })
        .collect()
}

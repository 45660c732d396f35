//! Minimal native SVG rendering: line plots with markers and heat maps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self { label: label.into(), points, color: color.to_string(), dashed: false }
    }

    /// Keeps about `max` evenly spaced points, always including the last.
    pub fn thin(mut self, max: usize) -> Self {
        let stride = self.points.len().div_ceil(max.max(1)).max(1);
        if stride > 1 {
            let last = *self.points.last().expect("non-empty");
            self.points = self.points.iter().copied().step_by(stride).collect();
            if self.points.last() != Some(&last) {
                self.points.push(last);
            }
        }
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Drawn as circles on top of the lines.
    pub markers: Vec<Series>,
}

/// Data-to-pixel map of the plotting area.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(out, "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y0 - y1);
    for t in ticks(f.x.0, f.x.1, 6) {
        let x = f.px(t);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y0 + 5.0);
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", y0 + 18.0, label(t));
    }
    for t in ticks(f.y.0, f.y.1, 6) {
        let y = f.py(t);
        let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>", x0 - 5.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", x0 - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

impl LinePlot {
    pub fn render(&self) -> String {
        let all = || self.series.iter().chain(&self.markers).flat_map(|s| s.points.iter());
        let frame = Frame {
            x: extent(all().map(|p| p.0)),
            y: extent(all().map(|p| p.1)),
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &frame, &self.x_label, &self.y_label);
        for s in &self.series {
            let mut d = String::new();
            for (i, (x, y)) in s.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, frame.px(*x), frame.py(*y));
            }
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>", d.trim_end(), s.color);
        }
        for s in &self.markers {
            for (x, y) in &s.points {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\" stroke=\"black\"/>",
                    frame.px(*x),
                    frame.py(*y),
                    s.color
                );
            }
        }
        for (i, s) in self.series.iter().chain(&self.markers).enumerate() {
            let y = TOP + 10.0 + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            let _ = writeln!(out, "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"14\" height=\"4\" fill=\"{}\"/>", y - 4.0, s.color);
            let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{y:.2}\">{}</text>", x + 20.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Values on a regular grid; `values[i][j]` is column `i` (x) and row `j` (y).
#[derive(Debug, Clone)]
pub struct HeatMap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Vec<Vec<f64>>,
}

/// Linear blend through a dark-blue to yellow ramp.
fn color(u: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let s = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let w = s - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + w * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

impl HeatMap {
    pub fn render(&self) -> String {
        let frame = Frame { x: self.x_range, y: self.y_range };
        let (lo, hi) = extent(self.values.iter().flatten().copied());
        let mut out = String::new();
        header(&mut out, &self.title);
        let cols = self.values.len().max(1);
        let cw = (frame.px(self.x_range.1) - frame.px(self.x_range.0)) / cols as f64;
        for (i, col) in self.values.iter().enumerate() {
            let rh = (frame.py(self.y_range.0) - frame.py(self.y_range.1)) / col.len().max(1) as f64;
            for (j, v) in col.iter().enumerate() {
                let x = frame.px(self.x_range.0) + i as f64 * cw;
                let y = frame.py(self.y_range.0) - (j + 1) as f64 * rh;
                let _ = writeln!(
                    out,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    cw + 0.3,
                    rh + 0.3,
                    color((v - lo) / (hi - lo))
                );
            }
        }
        axes(&mut out, &frame, &self.x_label, &self.y_label);
        let bar_x = WIDTH - RIGHT + 20.0;
        let bar_h = HEIGHT - TOP - BOTTOM;
        for k in 0..50 {
            let y = TOP + bar_h * (1.0 - (k + 1) as f64 / 50.0);
            let _ = writeln!(
                out,
                "<rect x=\"{bar_x:.2}\" y=\"{y:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
                bar_h / 50.0 + 0.3,
                color((k as f64 + 0.5) / 50.0)
            );
        }
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", bar_x + 22.0, TOP + 10.0, label(hi));
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", bar_x + 22.0, TOP + bar_h, label(lo));
        out.push_str("</svg>\n");
        out
    }
}

//! Minimal SVG emitter for sweep curves and stem plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 45.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Stem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub style: Style,
    pub series: Vec<Series>,
    /// Fixed y range; computed from the data when `None`.
    pub y_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, style: Style) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            style,
            series: Vec::new(),
            y_range: None,
        }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }

    /// Renders a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        self.render_into(&mut out, 0.0);
        out.push_str("</svg>\n");
        out
    }

    /// Renders several plots stacked vertically in one document.
    pub fn stack_svg(plots: &[Plot]) -> String {
        let total = HEIGHT * plots.len() as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total}" viewBox="0 0 {WIDTH} {total}">"#
        );
        for (i, p) in plots.iter().enumerate() {
            p.render_into(&mut out, HEIGHT * i as f64);
        }
        out.push_str("</svg>\n");
        out
    }

    fn render_into(&self, out: &mut String, top: f64) {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = extent(all().map(|p| p.0));
        let (y0, y1) = self.y_range.unwrap_or_else(|| {
            let (lo, hi) = extent(all().map(|p| p.1));
            if self.style == Style::Stem {
                (lo.min(0.0), hi.max(0.0))
            } else {
                (lo, hi)
            }
        });
        let left = MARGIN_LEFT;
        let right = WIDTH - MARGIN_RIGHT;
        let upper = top + MARGIN_Y;
        let lower = top + HEIGHT - MARGIN_Y;
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| lower - (y.clamp(y0, y1) - y0) / (y1 - y0) * (lower - upper);

        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
            (left + right) / 2.0,
            top + 25.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{left}" y="{upper}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            right - left,
            lower - upper
        );
        for t in 0..=TICKS {
            let f = t as f64 / TICKS as f64;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{:.3}</text>"#,
                sx(xv),
                lower + 16.0,
                xv
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{:.3}</text>"#,
                left - 6.0,
                sy(yv) + 4.0,
                yv
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            (left + right) / 2.0,
            lower + 34.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {0})">{1}</text>"#,
            (upper + lower) / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let finite = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite());
            match self.style {
                Style::Line => {
                    let pts: Vec<String> = finite.map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                        pts.join(" ")
                    );
                }
                Style::Stem => {
                    for &(x, y) in finite {
                        let _ = writeln!(
                            out,
                            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/><circle cx="{0:.2}" cy="{2:.2}" r="3" fill="{color}"/>"#,
                            sx(x),
                            sy(0.0),
                            sy(y)
                        );
                    }
                }
            }
            let ly = upper + 12.0 + 18.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
                right + 12.0,
                ly - 10.0,
                right + 30.0,
                ly,
                escape(&s.label)
            );
        }
    }
}

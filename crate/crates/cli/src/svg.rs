use std::fmt::Write as _;

use capgeo::Vec2;

const SIZE: f64 = 480.0;
const SCALE: f64 = 210.0;

fn map(p: Vec2) -> (f64, f64) {
    (SIZE / 2.0 + SCALE * p.x, SIZE / 2.0 - SCALE * p.y)
}

/// A picture of the chart disk with overlaid polylines.
pub struct Plot {
    body: String,
}

impl Plot {
    pub fn new(title: &str) -> Self {
        let mut body = String::new();
        let c = SIZE / 2.0;
        writeln!(body, r##"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"##).unwrap();
        writeln!(body, r##"<circle cx="{c}" cy="{c}" r="{SCALE}" fill="#f4f4f4" stroke="black" stroke-width="1.5"/>"##).unwrap();
        writeln!(body, r##"<text x="12" y="22" font-family="sans-serif" font-size="14">{}</text>"##, escape(title)).unwrap();
        Plot { body }
    }

    pub fn polyline(&mut self, pts: &[Vec2], color: &str, width: f64) {
        let mut d = String::new();
        for p in pts {
            let (x, y) = map(*p);
            write!(d, "{x:.3},{y:.3} ").unwrap();
        }
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            d.trim_end()
        )
        .unwrap();
    }

    pub fn dot(&mut self, p: Vec2, color: &str) {
        let (x, y) = map(p);
        writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{color}"/>"#).unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Palette cycled over multiple curves.
pub fn color(i: usize) -> &'static str {
    const C: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    C[i % C.len()]
}

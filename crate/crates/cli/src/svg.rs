//! Minimal SVG figures: histogram, scatter with fit, Bland–Altman, heatmap.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Maps data coordinates onto the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        M + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * M)
    }
}

fn extent(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{b:.1}" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel));
    for (v, p) in [(f.x.0, f.px(f.x.0)), (f.x.1, f.px(f.x.1))] {
        let _ = writeln!(s, r#"<text x="{p:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#, H - M + 14.0);
    }
    for (v, p) in [(f.y.0, f.py(f.y.0)), (f.y.1, f.py(f.y.1))] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{p:.1}" text-anchor="end">{v:.2}</text>"#, M - 4.0);
    }
    s
}

fn hline(s: &mut String, f: &Frame, y: f64, color: &str, dash: bool) {
    let d = if dash { r#" stroke-dasharray="4 3""# } else { "" };
    let _ = writeln!(s, r#"<line x1="{M}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="{color}"{d}/>"#, W - M, py = f.py(y));
}

pub fn histogram(values: &[f64], bins: usize, title: &str, xlabel: &str) -> String {
    let bins = bins.max(1);
    let (lo, hi) = extent(values);
    let (lo, hi) = if values.is_empty() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let f = Frame::new((lo, hi), (0.0, top));
    let mut s = open(title, xlabel, "count", &f);
    for (i, c) in counts.iter().enumerate() {
        let x0 = f.px(lo + i as f64 * width);
        let x1 = f.px(lo + (i + 1) as f64 * width);
        let y = f.py(*c as f64);
        let _ = writeln!(s, r##"<rect x="{x0:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="#4a7ab5" stroke="white"/>"##, x1 - x0, f.py(0.0) - y);
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot; `curve` is drawn as a polyline through its points.
pub fn scatter(x: &[f64], y: &[f64], curve: Option<&[(f64, f64)]>, title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut ys = y.to_vec();
    if let Some(c) = curve {
        ys.extend(c.iter().map(|p| p.1));
    }
    let f = Frame::new(extent(x), extent(&ys));
    let mut s = open(title, xlabel, ylabel, &f);
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, r##"<circle cx="{:.1}" cy="{:.1}" r="1.6" fill="#4a7ab5" fill-opacity="0.5"/>"##, f.px(*a), f.py(*b));
    }
    if let Some(c) = curve {
        let pts: Vec<String> = c.iter().map(|(a, b)| format!("{:.1},{:.1}", f.px(*a), f.py(*b))).collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##, pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

pub fn bland_altman(means: &[f64], diffs: &[f64], bias: f64, lower: f64, upper: f64, title: &str) -> String {
    let mut ys = diffs.to_vec();
    ys.extend([lower, upper]);
    let f = Frame::new(extent(means), extent(&ys));
    let mut s = open(title, "mean of model and human", "model − human", &f);
    for (m, d) in means.iter().zip(diffs) {
        let _ = writeln!(s, r##"<circle cx="{:.1}" cy="{:.1}" r="2" fill="#4a7ab5"/>"##, f.px(*m), f.py(*d));
    }
    hline(&mut s, &f, bias, "#c0392b", false);
    hline(&mut s, &f, lower, "#7f8c8d", true);
    hline(&mut s, &f, upper, "#7f8c8d", true);
    s.push_str("</svg>\n");
    s
}

/// Grid cells shaded by value relative to the grid maximum.
pub fn heatmap(grid: &[Vec<f64>], title: &str) -> String {
    let rows = grid.len().max(1);
    let cols = grid.first().map_or(1, |r| r.len().max(1));
    let top = grid.iter().flatten().copied().fold(0.0, f64::max);
    let f = Frame::new((0.0, cols as f64), (0.0, rows as f64));
    let mut s = open(title, "patch column", "patch row", &f);
    for (i, row) in grid.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let shade = if top > 0.0 { v / top } else { 0.0 };
            let level = (255.0 * (1.0 - shade)).round() as u8;
            let (x0, x1) = (f.px(j as f64), f.px(j as f64 + 1.0));
            let (y0, y1) = (f.py((rows - i) as f64), f.py((rows - i - 1) as f64));
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="rgb(255,{level},{level})"><title>{v:.4}</title></rect>"#,
                x1 - x0,
                y1 - y0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

//! Minimal SVG line charts: Monte Carlo as markers, theory as lines.

use std::fmt::Write;

use crate::config::Axis;
use crate::run::Row;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub markers: Vec<(f64, f64)>,
    pub line: Vec<(f64, f64)>,
}

/// Groups the rows of one quantity by (λ, tₐ) and, for position-resolved
/// quantities, by t.
pub fn series_of(rows: &[Row], quantity: &str) -> Vec<Series> {
    let mut out: Vec<(String, Series)> = vec![];
    for r in rows.iter().filter(|r| r.quantity == quantity) {
        let mut key = format!("λ={}", r.lambda);
        if let Some(ta) = r.t_a {
            key += &format!(" tₐ={ta}");
        }
        let pos = r.x.is_some();
        if pos {
            if let Some(t) = r.t {
                key += &format!(" t={t}");
            }
        }
        let Some(x) = (if pos { r.x } else { r.t }) else {
            continue;
        };
        let idx = match out.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                out.push((
                    key.clone(),
                    Series {
                        label: key,
                        markers: vec![],
                        line: vec![],
                    },
                ));
                out.len() - 1
            }
        };
        let s = &mut out[idx].1;
        if let Some(y) = r.mc_estimate {
            s.markers.push((x, y));
        }
        if let Some(y) = r.theory_exact.or(r.theory_asymptotic) {
            s.line.push((x, y));
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

struct Scale {
    lo: f64,
    hi: f64,
    axis: Axis,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, axis: Axis, from: f64, to: f64) -> Scale {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (axis == Axis::Linear || *v > 0.0)) {
            let v = if axis == Axis::Log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        if axis == Axis::Log {
            lo = lo.floor();
            hi = hi.ceil();
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Scale { lo, hi, axis, from, to }
    }

    fn map(&self, v: f64) -> Option<f64> {
        let v = match self.axis {
            Axis::Log if v > 0.0 => v.log10(),
            Axis::Log => return None,
            Axis::Linear => v,
        };
        v.is_finite()
            .then(|| self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.axis {
            Axis::Log => {
                let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i32;
                (self.lo as i32..=self.hi as i32)
                    .step_by(step as usize)
                    .map(|e| (10f64.powi(e), format!("1e{e}")))
                    .collect()
            }
            Axis::Linear => {
                let raw = (self.hi - self.lo) / 6.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
                let mut v = (self.lo / step).ceil() * step;
                let mut out = vec![];
                while v <= self.hi + 1e-9 * step {
                    let label = format!("{}", (v / step).round() * step);
                    out.push((v, label));
                    v += step;
                }
                out
            }
        }
    }
}

pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], x_axis: Axis, y_axis: Axis) -> String {
    let all = || series.iter().flat_map(|s| s.markers.iter().chain(&s.line));
    let xs = Scale::new(all().map(|p| p.0), x_axis, LEFT, W - RIGHT);
    let ys = Scale::new(all().map(|p| p.1), y_axis, H - BOTTOM, TOP);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - RIGHT - LEFT,
        H - BOTTOM - TOP
    );
    for (v, label) in xs.ticks() {
        if let Some(px) = xs.map(v) {
            let _ = writeln!(s, r##"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="#ccc"/>"##, TOP, H - BOTTOM);
            let _ = writeln!(s, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{label}</text>"#, H - BOTTOM + 16.0);
        }
    }
    for (v, label) in ys.ticks() {
        if let Some(py) = ys.map(v) {
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#ccc"/>"##, W - RIGHT);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 6.0, py + 4.0);
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 18.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .line
            .iter()
            .filter_map(|&(x, y)| Some(format!("{:.1},{:.1}", xs.map(x)?, ys.map(y)?)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        for &(x, y) in &ser.markers {
            if let (Some(px), Some(py)) = (xs.map(x), ys.map(y)) {
                let _ = writeln!(s, r#"<circle cx="{px:.1}" cy="{py:.1}" r="2.5" fill="none" stroke="{color}"/>"#);
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>"#, lx + 18.0);
        let _ = writeln!(s, r#"<circle cx="{}" cy="{ly}" r="2.5" fill="none" stroke="{color}"/>"#, lx + 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

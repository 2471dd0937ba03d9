//! Minimal SVG line and box plots. CSV output stays canonical; these are previews.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Draw markers instead of a line.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
            markers: false,
        }
    }
}

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

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(out: &mut String, title: &str, comment: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<!--\n{}-->", escape(comment).replace("--", "- -"));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y0:.1} V{y1:.1} H{x1:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let v = f.y.0 + (f.y.1 - f.y.0) * i as f64 / TICKS as f64;
        let y = f.py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e5e5e5"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0,
            x0 - 6.0,
            y + 4.0,
            tick_label(v)
        );
        if x_ticks {
            let v = f.x.0 + (f.x.1 - f.x.0) * i as f64 / TICKS as f64;
            let x = f.px(v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{y1:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                y1 + 5.0,
                y1 + 18.0,
                tick_label(v)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn legend(out: &mut String, labels: &[(String, &str, bool)]) {
    for (i, (label, c, dashed)) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let dash = if *dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{c}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 22.0,
            x + 28.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Line plot of several series against shared axes.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    comment: &str,
) -> String {
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut xl, mut xh, mut yl, mut yh) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    let f = Frame {
        x: padded(xl, xh),
        y: padded(yl.min(0.0), yh),
    };

    let mut out = String::new();
    open(&mut out, title, comment);
    axes(&mut out, &f, x_label, y_label, true);
    let mut labels = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let c = color(i);
        let finite: Vec<_> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        if s.markers {
            for p in &finite {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#,
                    f.px(p.0),
                    f.py(p.1)
                );
            }
        }
        if !finite.is_empty() {
            let mut d = String::new();
            for (j, p) in finite.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.1},{:.1}",
                    if j == 0 { "M" } else { " L" },
                    f.px(p.0),
                    f.py(p.1)
                );
            }
            let dash = if s.dashed {
                r#" stroke-dasharray="5,3""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>"#
            );
        }
        if !s.label.is_empty() {
            labels.push((s.label.clone(), c, s.dashed));
        }
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Five-number summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    /// Quartiles by linear interpolation between order statistics. `None` for an
    /// empty sample.
    pub fn from_sample(sample: &[f64]) -> Option<Self> {
        if sample.is_empty() {
            return None;
        }
        let mut v = sample.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let (lo, frac) = (h.floor() as usize, h - h.floor());
            if lo + 1 < v.len() {
                v[lo] + frac * (v[lo + 1] - v[lo])
            } else {
                v[lo]
            }
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// One box per `(group, member)`; groups are laid out left to right and members of a
/// group share its slot, each in its own color.
pub fn box_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    groups: &[(String, Vec<Option<BoxStats>>)],
    members: &[String],
    comment: &str,
) -> String {
    let (mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in groups.iter().flat_map(|g| g.1.iter().flatten()) {
        yl = yl.min(b.min);
        yh = yh.max(b.max);
    }
    let f = Frame {
        x: (0.0, groups.len().max(1) as f64),
        y: padded(yl.min(0.0), yh.max(1.0)),
    };
    let mut out = String::new();
    open(&mut out, title, comment);
    axes(&mut out, &f, x_label, y_label, false);
    let slot = (WIDTH - LEFT - RIGHT) / groups.len().max(1) as f64;
    let width = (slot * 0.8 / members.len().max(1) as f64).min(28.0);
    for (g, (label, boxes)) in groups.iter().enumerate() {
        let center = f.px(g as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{center:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            escape(label)
        );
        let start = center - width * boxes.len() as f64 / 2.0;
        for (m, b) in boxes.iter().enumerate() {
            let Some(b) = b else { continue };
            let c = color(m);
            let x = start + width * m as f64;
            let mid = x + width / 2.0;
            let _ = writeln!(
                out,
                r#"<line x1="{mid:.1}" y1="{:.1}" x2="{mid:.1}" y2="{:.1}" stroke="{c}"/><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{c}" fill-opacity="0.3" stroke="{c}"/><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}" stroke-width="2"/>"#,
                f.py(b.max),
                f.py(b.min),
                x + 1.0,
                f.py(b.q3),
                (width - 2.0).max(1.0),
                (f.py(b.q1) - f.py(b.q3)).max(0.5),
                x + 1.0,
                f.py(b.median),
                x + width - 1.0,
                f.py(b.median)
            );
        }
    }
    let labels: Vec<_> = members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), color(i), false))
        .collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

//! Minimal SVG charts. Coordinates are printed with fixed precision so the
//! bytes depend only on the data.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    out: String,
}

impl Frame {
    fn new(title: &str, digest: &str, x: (f64, f64), y: (f64, f64)) -> Frame {
        let pad = |(a, b): (f64, f64)| if (b - a).abs() < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x);
        let (y0, y1) = pad(y);
        let mut out = String::new();
        let _ = write!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <!-- manifest_digest={digest} -->\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            W / 2.0,
            escape(title)
        );
        Frame { x0, x1, y0, y1, out }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self, xlabel: &str, ylabel: &str, xticks: &[(f64, String)], yticks: &[(f64, String)]) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(self.out, "<path d=\"M{l:.1} {t:.1}V{b:.1}H{r:.1}\" fill=\"none\" stroke=\"black\"/>");
        for (v, label) in xticks {
            let x = self.px(*v);
            let _ = writeln!(
                self.out,
                "<line x1=\"{x:.1}\" y1=\"{b:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                b + 5.0,
                b + 19.0,
                escape(label)
            );
        }
        for (v, label) in yticks {
            let y = self.py(*v);
            let _ = writeln!(
                self.out,
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{l:.1}\" y2=\"{y:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                l - 5.0,
                l - 8.0,
                y + 4.0,
                escape(label)
            );
        }
        let _ = writeln!(
            self.out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            (l + r) / 2.0,
            H - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.out,
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }

    fn legend(&mut self, labels: &[&str]) {
        for (i, label) in labels.iter().enumerate() {
            let y = TOP + 8.0 + 16.0 * i as f64;
            let x = W - RIGHT - 150.0;
            let _ = writeln!(
                self.out,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                y - 9.0,
                PALETTE[i % PALETTE.len()],
                x + 15.0,
                y,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn short(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).map(|v| (v, short(v))).collect()
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (lo.floor() as i32..=hi.ceil() as i32)
        .filter(|&e| (e as f64) >= lo - 1e-9 && (e as f64) <= hi + 1e-9)
        .map(|e| (e as f64, format!("1e{e}")))
        .collect()
}

/// One CCDF series: label, points `(x, P(X ≥ x))`, and an optional fitted
/// power law `(alpha, xmin)` drawn as a line over the tail.
pub struct CcdfSeries<'a> {
    pub label: &'a str,
    pub points: &'a [(u64, f64)],
    pub fit: Option<(f64, u64)>,
}

/// Log-log complementary CDF.
pub fn ccdf_svg(title: &str, digest: &str, series: &[CcdfSeries]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0 && p.1 > 0.0);
    let (mut xlo, mut xhi, mut ylo) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        xlo = xlo.min((x as f64).log10());
        xhi = xhi.max((x as f64).log10());
        ylo = ylo.min(y.log10());
    }
    if !xlo.is_finite() {
        (xlo, xhi) = (0.0, 1.0);
    }
    let (xlo, xhi, ylo) = (xlo.floor(), xhi.ceil().max(xlo.floor() + 1.0), ylo.floor().min(-1.0));
    let mut f = Frame::new(title, digest, (xlo, xhi), (ylo, 0.0));
    f.axes("degree", "P(X ≥ x)", &decade_ticks(xlo, xhi), &decade_ticks(ylo, 0.0));
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for &(x, y) in s.points.iter().filter(|p| p.0 > 0 && p.1 > 0.0) {
            let _ = writeln!(
                f.out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{colour}\" fill-opacity=\"0.6\"/>",
                f.px((x as f64).log10()),
                f.py(y.log10())
            );
        }
        if let Some((alpha, xmin)) = s.fit {
            // anchor the line at the empirical CCDF value at xmin
            let anchor = s.points.iter().find(|p| p.0 >= xmin).map(|p| p.1).unwrap_or(1.0);
            let lx0 = (xmin.max(1) as f64).log10();
            let ly0 = anchor.log10();
            let ly1 = (ly0 - (alpha - 1.0) * (xhi - lx0)).max(ylo);
            let lx1 = lx0 + (ly0 - ly1) / (alpha - 1.0).max(1e-9);
            let _ = writeln!(
                f.out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{colour}\" stroke-dasharray=\"6 3\"/>",
                f.px(lx0),
                f.py(ly0),
                f.px(lx1),
                f.py(ly1)
            );
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label).collect();
    f.legend(&labels);
    f.finish()
}

/// Equal-width histogram over `[lo, hi]`.
pub fn histogram_svg(title: &str, digest: &str, values: &[f64], bins: usize, lo: f64, hi: f64) -> String {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let k = (((v - lo) / (hi - lo)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[k] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut f = Frame::new(title, digest, (lo, hi), (0.0, top));
    f.axes("score", "nodes", &linear_ticks(lo, hi), &linear_ticks(0.0, top));
    let width = (hi - lo) / bins as f64;
    for (k, &c) in counts.iter().enumerate() {
        let (a, b) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
        let (x0, x1, y0, y1) = (f.px(a), f.px(b), f.py(c as f64), f.py(0.0));
        let _ = writeln!(
            f.out,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"white\"/>",
            x1 - x0,
            y1 - y0,
            PALETTE[0]
        );
    }
    f.finish()
}

/// Labelled 2-d scatter coloured by group.
pub fn scatter_svg(title: &str, digest: &str, points: &[(String, f64, f64, usize)]) -> String {
    let bounds = |sel: fn(&(String, f64, f64, usize)) -> f64| {
        let (lo, hi) = points.iter().map(sel).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
        if lo.is_finite() {
            let pad = 0.05 * (hi - lo).max(1e-9);
            (lo - pad, hi + pad)
        } else {
            (0.0, 1.0)
        }
    };
    let (xb, yb) = (bounds(|p| p.1), bounds(|p| p.2));
    let mut f = Frame::new(title, digest, xb, yb);
    f.axes("dimension 1", "dimension 2", &linear_ticks(xb.0, xb.1), &linear_ticks(yb.0, yb.1));
    for (label, x, y, g) in points {
        let (cx, cy) = (f.px(*x), f.py(*y));
        let _ = writeln!(
            f.out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{}</text>",
            PALETTE[g % PALETTE.len()],
            cx + 5.0,
            cy - 5.0,
            escape(label)
        );
    }
    let groups = points.iter().map(|p| p.3).max().map(|m| m + 1).unwrap_or(0);
    let labels: Vec<String> = (0..groups).map(|g| format!("cluster {}", g + 1)).collect();
    f.legend(&labels.iter().map(String::as_str).collect::<Vec<_>>());
    f.finish()
}

//! Self-contained SVG figures.
//!
//! Output depends only on the input data: coordinates are printed with two
//! decimals, colors come from a fixed palette and nothing time-dependent is
//! emitted, so rendering the same report twice gives identical bytes.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];
const POSITIVE: &str = "#d62728";
const NEGATIVE: &str = "#1f77b4";
const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fixed-precision coordinate; `-0.00` is printed as `0.00`.
fn n(x: f64) -> String {
    let s = format!("{:.2}", if x.is_finite() { x } else { 0.0 });
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn num_label(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

struct Doc {
    body: String,
    width: f64,
    height: f64,
}

impl Doc {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut d = Doc {
            body: String::new(),
            width,
            height,
        };
        d.text(width / 2.0, 22.0, "middle", title, "title");
        d
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str, class: &str) {
        let _ = writeln!(
            self.body,
            "<text class=\"{class}\" x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            n(x),
            n(y),
            esc(s)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, class: &str) {
        let _ = writeln!(
            self.body,
            "<rect class=\"{class}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            n(x),
            n(y),
            n(w.max(0.0)),
            n(h.max(0.0))
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, class: &str) {
        let _ = writeln!(
            self.body,
            "<line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"/>",
            n(x1),
            n(y1),
            n(x2),
            n(y2)
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            w = n(self.width),
            h = n(self.height),
        )
    }
}

/// White-to-blue ramp for `t` in [0, 1].
fn blues(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Blue (low) to red (high) ramp for `t` in [0, 1].
fn coolwarm(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(30.0, 214.0), lerp(136.0, 39.0), lerp(229.0, 40.0))
}

/// Heatmap of a confusion matrix with the count written in every cell.
pub fn confusion_heatmap(title: &str, class_names: &[String], counts: &[Vec<u64>]) -> String {
    let k = counts.len();
    let cell = if k > 12 { 28.0 } else { 44.0 };
    let left = 150.0;
    let top = 50.0;
    let size = cell * k as f64;
    let mut d = Doc::new(left + size + 40.0, top + size + 130.0, title);
    let max = counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            // Log scale keeps small off-diagonal counts visible next to large diagonals.
            let t = (1.0 + c as f64).ln() / (1.0 + max).ln();
            let (x, y) = (left + j as f64 * cell, top + i as f64 * cell);
            d.rect(x, y, cell, cell, &blues(t), "cell");
            let ink = if t > 0.6 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                d.body,
                "<text class=\"count\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{ink}\" {FONT}>{c}</text>",
                n(x + cell / 2.0),
                n(y + cell / 2.0 + 4.0)
            );
        }
    }
    for (i, name) in class_names.iter().enumerate().take(k) {
        d.text(left - 6.0, top + i as f64 * cell + cell / 2.0 + 4.0, "end", name, "tick");
        let (x, y) = (left + i as f64 * cell + cell / 2.0, top + size + 8.0);
        let _ = writeln!(
            d.body,
            "<text class=\"tick\" x=\"{}\" y=\"{}\" text-anchor=\"end\" transform=\"rotate(-45 {} {})\" {FONT}>{}</text>",
            n(x),
            n(y),
            n(x),
            n(y),
            esc(name)
        );
    }
    d.text(left + size / 2.0, top + size + 120.0, "middle", "Predicted", "axis-label");
    d.text(14.0, top - 10.0, "start", "Actual", "axis-label");
    d.finish()
}

pub struct RocSeries<'a> {
    pub label: &'a str,
    pub auc: Option<f64>,
    pub fpr: &'a [f64],
    pub tpr: &'a [f64],
}

/// One ROC polyline per series with a legend giving each AUC.
pub fn roc_overlay(title: &str, series: &[RocSeries]) -> String {
    let (left, top, size) = (60.0, 40.0, 400.0);
    let legend_h = 18.0 * series.len() as f64;
    let mut d = Doc::new(left + size + 260.0, (top + size + 60.0).max(top + legend_h + 20.0), title);
    axes(&mut d, left, top, size, size);
    d.line(left, top + size, left + size, top, "#999999", "chance");
    for (s_idx, s) in series.iter().enumerate() {
        let mut pts = String::new();
        for (x, y) in s.fpr.iter().zip(s.tpr) {
            let _ = write!(pts, "{},{} ", n(left + x * size), n(top + size - y * size));
        }
        let _ = writeln!(
            d.body,
            "<polyline class=\"roc-curve\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            pts.trim_end(),
            color(s_idx)
        );
        let ly = top + 10.0 + 18.0 * s_idx as f64;
        d.line(left + size + 20.0, ly, left + size + 40.0, ly, color(s_idx), "legend-swatch");
        let auc = s.auc.map_or_else(|| "n/a".to_string(), num_label);
        d.text(left + size + 46.0, ly + 4.0, "start", &format!("{} (AUC = {auc})", s.label), "legend");
    }
    d.text(left + size / 2.0, top + size + 40.0, "middle", "False Positive Rate", "axis-label");
    d.text(left - 40.0, top + size / 2.0, "middle", "TPR", "axis-label");
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        d.text(left + v * size, top + size + 16.0, "middle", &format!("{v:.2}"), "tick");
        d.text(left - 6.0, top + size - v * size + 4.0, "end", &format!("{v:.2}"), "tick");
    }
    d.finish()
}

fn axes(d: &mut Doc, left: f64, top: f64, w: f64, h: f64) {
    d.line(left, top + h, left + w, top + h, "#000000", "axis");
    d.line(left, top, left, top + h, "#000000", "axis");
}

/// Horizontal bars, largest first as given. Optional error whiskers.
pub fn importance_bars(title: &str, x_label: &str, items: &[(String, f64)], err: Option<&[f64]>) -> String {
    let (left, top, w) = (200.0, 40.0, 400.0);
    let row = 24.0;
    let h = row * items.len().max(1) as f64;
    let mut d = Doc::new(left + w + 60.0, top + h + 50.0, title);
    axes(&mut d, left, top, w, h);
    let max = items
        .iter()
        .enumerate()
        .map(|(i, (_, v))| v.abs() + err.and_then(|e| e.get(i)).copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    let scale = if max > 0.0 { w / max } else { 0.0 };
    for (i, (name, v)) in items.iter().enumerate() {
        let y = top + i as f64 * row + 4.0;
        d.rect(left, y, v.max(0.0) * scale, row - 8.0, color(0), "bar");
        if let Some(e) = err.and_then(|e| e.get(i)) {
            let cy = y + (row - 8.0) / 2.0;
            d.line(left + (v - e).max(0.0) * scale, cy, left + (v + e) * scale, cy, "#000000", "whisker");
        }
        d.text(left - 6.0, y + row / 2.0, "end", name, "tick");
    }
    d.text(left + w / 2.0, top + h + 36.0, "middle", x_label, "axis-label");
    if max > 0.0 {
        d.text(left + w, top + h + 16.0, "end", &num_label(max), "tick");
    }
    d.text(left, top + h + 16.0, "start", "0", "tick");
    d.finish()
}

pub struct StripRow<'a> {
    pub name: &'a str,
    /// `(contribution, feature value)` per explained row.
    pub points: &'a [(f64, f64)],
}

/// One horizontal strip per feature, a dot per row colored by the
/// feature's value rank within the strip.
pub fn shap_strip(title: &str, rows: &[StripRow]) -> String {
    let (left, top, w) = (200.0, 40.0, 480.0);
    let row_h = 28.0;
    let h = row_h * rows.len().max(1) as f64;
    let mut d = Doc::new(left + w + 80.0, top + h + 50.0, title);
    let max = rows
        .iter()
        .flat_map(|r| r.points.iter().map(|p| p.0.abs()))
        .fold(0.0, f64::max);
    let scale = if max > 0.0 { (w / 2.0) / max } else { 0.0 };
    let mid = left + w / 2.0;
    d.line(mid, top, mid, top + h, "#999999", "zero");
    d.line(left, top + h, left + w, top + h, "#000000", "axis");
    for (i, r) in rows.iter().enumerate() {
        let cy = top + i as f64 * row_h + row_h / 2.0;
        d.text(left - 6.0, cy + 4.0, "end", r.name, "tick");
        let mut order: Vec<usize> = (0..r.points.len()).collect();
        order.sort_by(|&a, &b| r.points[a].1.total_cmp(&r.points[b].1).then(a.cmp(&b)));
        let denom = (r.points.len().max(2) - 1) as f64;
        let mut rank = vec![0.0; r.points.len()];
        for (pos, &p) in order.iter().enumerate() {
            rank[p] = pos as f64 / denom;
        }
        for (p_idx, (phi, _)) in r.points.iter().enumerate() {
            // Deterministic vertical jitter from the row position.
            let jitter = ((p_idx * 7919) % 17) as f64 - 8.0;
            let _ = writeln!(
                d.body,
                "<circle class=\"dot\" cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.7\"/>",
                n(mid + phi * scale),
                n(cy + jitter * 0.8),
                coolwarm(rank[p_idx])
            );
        }
    }
    d.text(mid, top + h + 36.0, "middle", "SHAP value (impact on model output)", "axis-label");
    if max > 0.0 {
        d.text(left, top + h + 16.0, "start", &num_label(-max), "tick");
        d.text(left + w, top + h + 16.0, "end", &num_label(max), "tick");
    }
    d.text(left + w + 10.0, top + 10.0, "start", "high", "legend");
    d.text(left + w + 10.0, top + h, "start", "low", "legend");
    d.finish()
}

/// Signed contributions as horizontal bars around zero: positive in red,
/// negative in blue.
pub fn force_bars(title: &str, subtitle: &str, items: &[(String, f64)]) -> String {
    let (left, top, w) = (260.0, 56.0, 420.0);
    let row = 24.0;
    let h = row * items.len().max(1) as f64;
    let mut d = Doc::new(left + w + 60.0, top + h + 50.0, title);
    d.text((left + w + 60.0) / 2.0, 40.0, "middle", subtitle, "subtitle");
    let max = items.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let scale = if max > 0.0 { (w / 2.0) / max } else { 0.0 };
    let mid = left + w / 2.0;
    d.line(mid, top, mid, top + h, "#000000", "zero");
    for (i, (name, v)) in items.iter().enumerate() {
        let y = top + i as f64 * row + 4.0;
        let (x, fill) = if *v >= 0.0 { (mid, POSITIVE) } else { (mid + v * scale, NEGATIVE) };
        d.rect(x, y, v.abs() * scale, row - 8.0, fill, "bar");
        d.text(left - 6.0, y + row / 2.0, "end", name, "tick");
        // Labels sit on the far side of the zero line from the bar.
        let (lx, anchor) = if *v >= 0.0 { (mid - 4.0, "end") } else { (mid + 4.0, "start") };
        d.text(lx, y + row / 2.0, anchor, &num_label(*v), "value");
    }
    d.finish()
}

//! Self-contained SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use super::run::{McSummary, Phase, TimingSummary};
use crate::analysis::ErrorTrace;
use crate::error::{Error, Result};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
/// Smallest value shown on a log axis; exact zeros are drawn here.
const LOG_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
}

impl PlotSpec {
    /// Error norm against step on a log axis.
    pub fn error_plot(title: impl Into<String>) -> Self {
        PlotSpec {
            title: title.into(),
            x_label: "k".into(),
            y_label: "error norm".into(),
            log_y: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Palette index.
    pub color: usize,
    /// Shaded `(x, lo, hi)` band.
    pub band: Option<Vec<(f64, f64, f64)>>,
}

impl Series {
    pub fn from_trace(trace: &ErrorTrace, color: usize, dashed: bool) -> Self {
        Series {
            label: trace.label.clone(),
            points: trace.rows.iter().map(|r| (r.k as f64, r.error_norm)).collect(),
            dashed,
            color,
            band: None,
        }
    }

    pub fn from_mc(summary: &McSummary, color: usize) -> Self {
        Series {
            label: summary.label().to_string(),
            points: summary.rows.iter().map(|r| (r.k as f64, r.mean)).collect(),
            dashed: false,
            color,
            band: Some(summary.rows.iter().map(|r| (r.k as f64, r.ci_lo, r.ci_hi)).collect()),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Evenly spaced ticks at 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn yv(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(LOG_FLOOR).log10()
        } else {
            y
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * Frame::plot_w()
    }

    fn py(&self, y: f64) -> f64 {
        let v = self.yv(y);
        TOP + (1.0 - (v - self.y0) / (self.y1 - self.y0)) * Frame::plot_h()
    }
}

fn frame(series: &[Series], log_y: bool) -> Frame {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        ys.extend(s.points.iter().map(|p| p.1));
        if let Some(b) = &s.band {
            ys.extend(b.iter().flat_map(|&(_, lo, hi)| [lo, hi]));
        }
    }
    ys.retain(|y| y.is_finite());
    let (y0, y1) = if log_y {
        let pos = ys.iter().copied().filter(|y| *y > 0.0);
        let (lo, hi) = pos.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
            (a.min(y), b.max(y))
        });
        let lo = if ys.iter().any(|y| *y <= 0.0) || !lo.is_finite() {
            LOG_FLOOR
        } else {
            lo.max(LOG_FLOOR)
        };
        let hi = if hi.is_finite() { hi } else { 1.0 };
        let (a, b) = (lo.log10().floor(), hi.log10().ceil());
        (a, if b > a { b } else { a + 1.0 })
    } else {
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
        if hi > lo {
            (lo, hi + 0.05 * (hi - lo))
        } else {
            (lo, lo + 1.0)
        }
    };
    Frame {
        x0,
        x1,
        y0,
        y1,
        log_y,
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + Frame::plot_w() / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, spec: &PlotSpec) {
    let (l, r, t, b) = (LEFT, LEFT + Frame::plot_w(), TOP, TOP + Frame::plot_h());
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for x in linear_ticks(f.x0, f.x1) {
        let px = f.px(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            fmt_tick(x)
        );
    }
    let y_ticks: Vec<(f64, String)> = if f.log_y {
        let stride = ((f.y1 - f.y0) / 8.0).ceil().max(1.0) as i64;
        (f.y0 as i64..=f.y1 as i64)
            .filter(|e| (e - f.y0 as i64) % stride == 0)
            .map(|e| (e as f64, format!("1e{e}")))
            .collect()
    } else {
        linear_ticks(f.y0, f.y1).into_iter().map(|v| (v, fmt_tick(v))).collect()
    };
    for (v, label) in y_ticks {
        let py = TOP + (1.0 - (v - f.y0) / (f.y1 - f.y0)) * Frame::plot_h();
        let _ = writeln!(
            out,
            r##"<line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#e0e0e0"/><line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            label
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        l + Frame::plot_w() / 2.0,
        HEIGHT - 14.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        t + Frame::plot_h() / 2.0,
        t + Frame::plot_h() / 2.0,
        escape(&spec.y_label)
    );
}

/// Line chart of the given series.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Config("nothing to plot".into()));
    }
    let f = frame(series, spec.log_y);
    let mut out = String::new();
    open_svg(&mut out, &spec.title);
    axes(&mut out, &f, spec);
    for s in series {
        if let Some(band) = &s.band {
            let mut pts: Vec<String> = band
                .iter()
                .map(|&(x, _, hi)| format!("{:.2},{:.2}", f.px(x), f.py(hi)))
                .collect();
            pts.extend(
                band.iter()
                    .rev()
                    .map(|&(x, lo, _)| format!("{:.2},{:.2}", f.px(x), f.py(lo))),
            );
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" "),
                color(s.color)
            );
        }
    }
    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            pts.join(" "),
            color(s.color)
        );
    }
    let lx = LEFT + Frame::plot_w() + 12.0;
    for (i, s) in series.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 28.0,
            color(s.color),
            lx + 34.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(series: &[Series], path: impl AsRef<Path>, spec: &PlotSpec) -> Result<()> {
    let svg = render_svg(series, spec)?;
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Grouped bars of mean step time per estimator and phase, with interval whiskers.
pub fn render_timing_svg(summary: &TimingSummary, title: &str) -> Result<String> {
    if summary.rows.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let mut kinds = Vec::new();
    for r in &summary.rows {
        if !kinds.contains(&r.kind) {
            kinds.push(r.kind);
        }
    }
    let top = summary.rows.iter().map(|r| r.ci_hi_ms).fold(0.0, f64::max);
    let f = Frame {
        x0: 0.0,
        x1: kinds.len() as f64,
        y0: 0.0,
        y1: if top > 0.0 { top * 1.1 } else { 1.0 },
        log_y: false,
    };
    let spec = PlotSpec {
        title: title.into(),
        x_label: "estimator".into(),
        y_label: "time per step (ms)".into(),
        log_y: false,
    };
    let mut out = String::new();
    open_svg(&mut out, title);
    let (l, b) = (LEFT, TOP + Frame::plot_h());
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        Frame::plot_w(),
        Frame::plot_h()
    );
    for v in linear_ticks(f.y0, f.y1) {
        let py = f.py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{l}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            l + Frame::plot_w(),
            l - 8.0,
            py + 4.0,
            fmt_tick(v)
        );
    }
    let slot = Frame::plot_w() / kinds.len() as f64;
    let bar = slot * 0.3;
    for (i, kind) in kinds.iter().enumerate() {
        let cx = l + slot * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            escape(kind.label())
        );
        for (j, phase) in [Phase::Fading, Phase::PostCutoff].into_iter().enumerate() {
            let Some(r) = summary.get(*kind, phase) else { continue };
            let x = cx - bar + j as f64 * bar;
            let y = f.py(r.mean_ms);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                bar * 0.9,
                b - y,
                color(j)
            );
            let wx = x + bar * 0.45;
            let _ = writeln!(
                out,
                r#"<line x1="{wx:.2}" y1="{:.2}" x2="{wx:.2}" y2="{:.2}" stroke="black"/>"#,
                f.py(r.ci_lo_ms),
                f.py(r.ci_hi_ms)
            );
        }
    }
    let lx = l + Frame::plot_w() + 12.0;
    for (j, phase) in [Phase::Fading, Phase::PostCutoff].into_iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * j as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{lx}" y="{}" width="14" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            ly - 6.0,
            color(j),
            lx + 20.0,
            ly + 4.0,
            phase.as_str()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + Frame::plot_h() / 2.0,
        escape(&spec.y_label)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_timing_svg(summary: &TimingSummary, path: impl AsRef<Path>, title: &str) -> Result<()> {
    let svg = render_timing_svg(summary, title)?;
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

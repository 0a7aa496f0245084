//! Learning-curve plots rendered straight to SVG.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{moving_average, SeedCurves};

/// One variant's curve: smoothed across-seed mean with a ±σ band.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    pub env_steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CurveSeries {
    /// Smooths R̄_n and σ_n separately with the same trailing window; with
    /// `window = 1` the band is exactly `[R̄_n − σ_n, R̄_n + σ_n]`.
    pub fn from_curves(label: impl Into<String>, curves: &SeedCurves, window: usize) -> Self {
        let (mean, std) = curves.mean_std();
        let mean = moving_average(&mean, window);
        let std = moving_average(&std, window);
        Self {
            label: label.into(),
            env_steps: curves.env_steps[..mean.len()].to_vec(),
            lower: mean.iter().zip(&std).map(|(m, s)| m - s).collect(),
            upper: mean.iter().zip(&std).map(|(m, s)| m + s).collect(),
            mean,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

/// Renders curves sharing one pair of axes: x in environment steps, y in
/// evaluation return.
pub fn render_svg(title: &str, series: &[CurveSeries]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.mean.is_empty()) {
        return Err(Error::Config("nothing to plot".into()));
    }
    let values = series
        .iter()
        .flat_map(|s| s.lower.iter().chain(&s.upper).chain(&s.mean))
        .copied();
    let (mut y_lo, mut y_hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        if v.is_finite() {
            (lo.min(v), hi.max(v))
        } else {
            (lo, hi)
        }
    });
    if !y_lo.is_finite() {
        return Err(Error::Numerical("curves contain no finite values".into()));
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let x_hi = series
        .iter()
        .filter_map(|s| s.env_steps.last())
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let (y_ticks, y_lo, y_hi) = nice_ticks(y_lo, y_hi);
    let (x_ticks, _, x_hi) = nice_ticks(0.0, x_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x / x_hi * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    for &t in &y_ticks {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    for &t in &x_ticks {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 18.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">environment steps</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">evaluation return</text>"#,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let xs: Vec<f64> = s.env_steps.iter().map(|&x| px(x as f64)).collect();
        let mut band = String::new();
        for (x, y) in xs.iter().zip(&s.upper) {
            let _ = write!(band, "{x:.2},{:.2} ", py(*y));
        }
        for (x, y) in xs.iter().zip(&s.lower).rev() {
            let _ = write!(band, "{x:.2},{:.2} ", py(*y));
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="band" data-label="{}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            escape(&s.label),
            band.trim_end()
        );
        let line: Vec<String> = xs
            .iter()
            .zip(&s.mean)
            .map(|(x, y)| format!("{x:.2},{:.2}", py(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            escape(&s.label),
            line.join(" ")
        );
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Round tick positions covering `[lo, hi]`, plus the widened range.
fn nice_ticks(lo: f64, hi: f64) -> (Vec<f64>, f64, f64) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    (
        (0..=n).map(|i| start + i as f64 * step).collect(),
        start,
        end,
    )
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a >= 1e4 && (v / 1e3).fract() == 0.0 {
        format!("{}k", v / 1e3)
    } else if a == 0.0 || (1e-2..1e6).contains(&a) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

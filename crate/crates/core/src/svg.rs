//! Self-contained SVG panel of one trial.
//!
//! Canvas is 800×500. The plot area spans pixels `[60, 780]` horizontally and
//! `[20, 460]` vertically; data maps linearly with
//! `px = 60 + 720 (x − lo) / (hi − lo)` and `py = 460 − 440 (y − y_min) / (y_max − y_min)`.
//! `y_min`/`y_max` cover the truth, the credible band and the observations with
//! 5% padding. The composite utility is rescaled onto the same vertical range.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::acquisition::{EvaluationGrid, UtilityWeights};
use crate::gp::{Observation, PosteriorModel};
use crate::harness::{posterior_rows, true_optimum, PosteriorRow};
use crate::trial::GroundTruth;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
pub const PLOT_LEFT: f64 = 60.0;
pub const PLOT_RIGHT: f64 = 780.0;
pub const PLOT_TOP: f64 = 20.0;
pub const PLOT_BOTTOM: f64 = 460.0;

pub const OPTIMUM_COLOR: &str = "#ffd700";
pub const DEFAULT_BAND_MULTIPLIER: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    /// Half-width of the credible band in posterior standard deviations.
    pub band_multiplier: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            band_multiplier: DEFAULT_BAND_MULTIPLIER,
        }
    }
}

/// Linear data-to-pixel mapping of the panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelMapping {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl PanelMapping {
    pub fn px(&self, x: f64) -> f64 {
        PLOT_LEFT + (PLOT_RIGHT - PLOT_LEFT) * (x - self.x_lo) / (self.x_hi - self.x_lo)
    }

    pub fn py(&self, y: f64) -> f64 {
        PLOT_BOTTOM - (PLOT_BOTTOM - PLOT_TOP) * (y - self.y_min) / (self.y_max - self.y_min)
    }

    /// Inverse of [`Self::px`].
    pub fn data_x(&self, px: f64) -> f64 {
        self.x_lo + (px - PLOT_LEFT) * (self.x_hi - self.x_lo) / (PLOT_RIGHT - PLOT_LEFT)
    }
}

pub fn render_svg<W: Write>(
    model: &PosteriorModel,
    observations: &[Observation],
    truth: &GroundTruth,
    weights: &UtilityWeights,
    grid: &EvaluationGrid,
    options: &PlotOptions,
    sink: &mut W,
) -> io::Result<()> {
    let rows = posterior_rows(model, grid, weights);
    render_svg_from_rows(&rows, observations, truth, weights.lambda1, grid, options, sink)
}

pub fn panel_mapping(
    rows: &[PosteriorRow],
    observations: &[Observation],
    truth: &GroundTruth,
    grid: &EvaluationGrid,
    band_multiplier: f64,
) -> PanelMapping {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut include = |v: f64| {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    };
    for r in rows {
        include(r.mu - band_multiplier * r.sigma);
        include(r.mu + band_multiplier * r.sigma);
        include(truth.performance(r.x));
    }
    for o in observations {
        include(o.y);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    PanelMapping {
        x_lo: grid.lo(),
        x_hi: grid.hi(),
        y_min: lo - pad,
        y_max: hi + pad,
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::new();
    for (i, (x, y)) in points.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    s
}

/// Renders from precomputed posterior rows (e.g. read back from CSV).
pub fn render_svg_from_rows<W: Write>(
    rows: &[PosteriorRow],
    observations: &[Observation],
    truth: &GroundTruth,
    lambda1: f64,
    grid: &EvaluationGrid,
    options: &PlotOptions,
    sink: &mut W,
) -> io::Result<()> {
    let k = options.band_multiplier;
    let map = panel_mapping(rows, observations, truth, grid, k);
    let optimum = true_optimum(truth, lambda1, grid);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r##"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    );

    // Axis ticks every whole unit of x, five on y.
    let first = map.x_lo.ceil() as i64;
    let last = map.x_hi.floor() as i64;
    let stride = ((last - first) / 12).max(1);
    for xt in (first..=last).step_by(stride as usize) {
        let px = map.px(xt as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.3}" y1="{PLOT_BOTTOM}" x2="{px:.3}" y2="{:.3}" stroke="#333333" stroke-width="1"/><text x="{px:.3}" y="{:.3}" font-size="12" text-anchor="middle">{xt}</text>"##,
            PLOT_BOTTOM + 5.0,
            PLOT_BOTTOM + 18.0
        );
    }
    for i in 0..=4 {
        let y = map.y_min + (map.y_max - map.y_min) * i as f64 / 4.0;
        let py = map.py(y);
        let _ = writeln!(
            out,
            r##"<line x1="{:.3}" y1="{py:.3}" x2="{PLOT_LEFT}" y2="{py:.3}" stroke="#333333" stroke-width="1"/><text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">{y:.2}</text>"##,
            PLOT_LEFT - 5.0,
            PLOT_LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">dose (hours)</text>"#,
        0.5 * (PLOT_LEFT + PLOT_RIGHT),
        HEIGHT - 8.0
    );

    if !rows.is_empty() {
        let upper = rows.iter().map(|r| (map.px(r.x), map.py(r.mu + k * r.sigma)));
        let lower = rows.iter().rev().map(|r| (map.px(r.x), map.py(r.mu - k * r.sigma)));
        let _ = writeln!(
            out,
            r##"<polygon class="band" points="{}" fill="#4477aa" fill-opacity="0.2" stroke="none"/>"##,
            polyline(upper.chain(lower))
        );

        let (u_min, u_max) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.u3), b.max(r.u3)));
        let span = if u_max - u_min > 1e-12 { u_max - u_min } else { 1.0 };
        let rescale = |u: f64| map.y_min + (map.y_max - map.y_min) * (u - u_min) / span;
        let _ = writeln!(
            out,
            r##"<polyline class="utility" points="{}" fill="none" stroke="#000000" stroke-width="1.5"/>"##,
            polyline(rows.iter().map(|r| (map.px(r.x), map.py(rescale(r.u3)))))
        );
    }

    let _ = writeln!(
        out,
        r##"<polyline class="truth" points="{}" fill="none" stroke="#cc3311" stroke-width="2" stroke-dasharray="6,4"/>"##,
        polyline(grid.points().map(|x| (map.px(x), map.py(truth.performance(x)))))
    );
    if !rows.is_empty() {
        let _ = writeln!(
            out,
            r##"<polyline class="mean" points="{}" fill="none" stroke="#4477aa" stroke-width="2"/>"##,
            polyline(rows.iter().map(|r| (map.px(r.x), map.py(r.mu))))
        );
    }

    let ox = map.px(optimum);
    let _ = writeln!(
        out,
        r#"<line class="optimum" x1="{ox:.3}" y1="{PLOT_TOP}" x2="{ox:.3}" y2="{PLOT_BOTTOM}" stroke="{OPTIMUM_COLOR}" stroke-width="2"/>"#
    );

    for o in observations {
        let _ = writeln!(
            out,
            r##"<circle class="obs" cx="{:.3}" cy="{:.3}" r="4" fill="#222222"/>"##,
            map.px(o.x),
            map.py(o.y)
        );
    }
    out.push_str("</svg>\n");
    sink.write_all(out.as_bytes())
}

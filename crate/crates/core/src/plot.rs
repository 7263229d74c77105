//! Learning-curve rendering: aggregate the evaluation rows of several
//! metrics files (typically one per seed) and draw an SVG with the mean
//! curve, a min–max band, and an optional dashed reference line for the
//! scripted controller's success rate.
//!
//! The SVG is assembled as a plain string with no external renderer, so
//! output is deterministic and diffable.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{read_metrics, MetricsRow};

/// Evaluation success aggregated across runs at shared step boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveData {
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Align evaluation rows across runs: keep the env steps at which *every*
/// run reports an evaluation (so a truncated run shortens the curve
/// instead of corrupting it), and aggregate success at each.
pub fn eval_curve(runs: &[Vec<MetricsRow>]) -> Result<CurveData> {
    if runs.is_empty() {
        return Err(Error::Config("no metrics files given".into()));
    }
    let eval_steps = |rows: &[MetricsRow]| -> Vec<(u64, f64)> {
        rows.iter()
            .filter_map(|r| r.eval_success.map(|s| (r.env_step, s)))
            .collect()
    };
    let mut shared: Vec<u64> = eval_steps(&runs[0]).iter().map(|(s, _)| *s).collect();
    for run in &runs[1..] {
        let here: Vec<u64> = eval_steps(run).iter().map(|(s, _)| *s).collect();
        shared.retain(|s| here.contains(s));
    }
    if shared.is_empty() {
        return Err(Error::Config(
            "metrics files share no evaluation rows; were they produced by the same schedule?"
                .into(),
        ));
    }
    let mut curve = CurveData {
        steps: shared.clone(),
        mean: Vec::with_capacity(shared.len()),
        min: Vec::with_capacity(shared.len()),
        max: Vec::with_capacity(shared.len()),
    };
    for step in &shared {
        let mut values = Vec::with_capacity(runs.len());
        for run in runs {
            // A run may evaluate twice at one step only if schedules
            // overlap; take the last report, which supersedes.
            let v = eval_steps(run)
                .iter()
                .filter(|(s, _)| s == step)
                .map(|(_, v)| *v)
                .next_back()
                .expect("step retained above");
            values.push(v);
        }
        let n = values.len() as f64;
        curve.mean.push(values.iter().sum::<f64>() / n);
        curve.min.push(values.iter().cloned().fold(f64::INFINITY, f64::min));
        curve.max.push(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(curve)
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 64.0;

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Render the aggregated curve as a standalone SVG document.
pub fn render_learning_curve(
    curve: &CurveData,
    base_success: Option<f64>,
    title: &str,
) -> String {
    assert!(!curve.steps.is_empty());
    let x_max = (*curve.steps.last().unwrap()).max(1) as f64;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |step: u64| MARGIN_LEFT + plot_w * step as f64 / x_max;
    let y = |success: f64| MARGIN_TOP + plot_h * (1.0 - success.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="14">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        title
    );

    // Axes with success gridlines every 0.25 and five x ticks.
    for i in 0..=4 {
        let v = i as f64 * 0.25;
        let yy = fmt2(y(v));
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}" stroke="#dddddd"/>"##,
            fmt2(MARGIN_LEFT),
            fmt2(WIDTH - MARGIN_RIGHT)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt2(MARGIN_LEFT - 8.0),
            fmt2(y(v) + 5.0),
            fmt2(v)
        );
    }
    for i in 0..=5 {
        let step = (x_max * i as f64 / 5.0).round() as u64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt2(x(step)),
            fmt2(HEIGHT - MARGIN_BOTTOM + 22.0),
            step
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = fmt2(MARGIN_LEFT),
        t = fmt2(MARGIN_TOP),
        b = fmt2(HEIGHT - MARGIN_BOTTOM)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        l = fmt2(MARGIN_LEFT),
        r = fmt2(WIDTH - MARGIN_RIGHT),
        b = fmt2(HEIGHT - MARGIN_BOTTOM)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">environment steps</text>"#,
        fmt2(MARGIN_LEFT + plot_w / 2.0),
        fmt2(HEIGHT - 14.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">evaluation success</text>"#,
        fmt2(MARGIN_TOP + plot_h / 2.0),
        fmt2(MARGIN_TOP + plot_h / 2.0)
    );

    // Min–max band: forward along the max edge, back along the min edge.
    let mut band = String::new();
    for (step, v) in curve.steps.iter().zip(&curve.max) {
        let _ = write!(band, "{},{} ", fmt2(x(*step)), fmt2(y(*v)));
    }
    for (step, v) in curve.steps.iter().zip(&curve.min).rev() {
        let _ = write!(band, "{},{} ", fmt2(x(*step)), fmt2(y(*v)));
    }
    let _ = writeln!(
        svg,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>"##,
        band.trim_end()
    );

    // Dashed reference for the scripted controller, under the mean line.
    if let Some(base) = base_success {
        let yy = fmt2(y(base));
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}" stroke="#c0392b" stroke-width="1.5" stroke-dasharray="7 5"/>"##,
            fmt2(MARGIN_LEFT),
            fmt2(WIDTH - MARGIN_RIGHT)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" fill="#c0392b" text-anchor="end">scripted controller {}</text>"##,
            fmt2(WIDTH - MARGIN_RIGHT - 4.0),
            fmt2(y(base) - 6.0),
            fmt2(base)
        );
    }

    let mut line = String::new();
    for (step, v) in curve.steps.iter().zip(&curve.mean) {
        let _ = write!(line, "{},{} ", fmt2(x(*step)), fmt2(y(*v)));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f6feb" stroke-width="2"/>"##,
        line.trim_end()
    );
    svg.push_str("</svg>\n");
    svg
}

/// Read every metrics file, aggregate their evaluation rows, and write
/// the SVG learning curve to `out`.
pub fn emit_plot(
    metrics_paths: &[std::path::PathBuf],
    base_success: Option<f64>,
    title: &str,
    out: &Path,
) -> Result<()> {
    let mut runs = Vec::with_capacity(metrics_paths.len());
    for path in metrics_paths {
        runs.push(read_metrics(path)?);
    }
    let curve = eval_curve(&runs)?;
    std::fs::write(out, render_learning_curve(&curve, base_success, title))?;
    Ok(())
}

//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use super::CellResult;
use crate::baseline::CascadeProbabilities;
use crate::error::{CascadeError, Result};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 44.0;

const ADOPT_COLOR: &str = "#1a9641";
const REJECT_COLOR: &str = "#d7191c";

/// Maps data coordinates onto the plot area.
struct Frame {
    x_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT
            + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - v / self.y_max * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(
    out: &mut String,
    title: &str,
    frame: &Frame,
    x_label: &str,
    y_label: &str,
    y_ticks: &[f64],
) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1) = (frame.x(frame.x_min), frame.x(frame.x_max));
    let (y0, y1) = (frame.y(0.0), frame.y(frame.y_max));
    let _ = writeln!(
        out,
        r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#333"/>
<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#333"/>"##
    );
    for i in 0..=5 {
        let v = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / 5.0;
        let v = (v * 1000.0).round() / 1000.0;
        let x = frame.x(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + 4.0,
            y0 + 16.0,
            v
        );
    }
    for &v in y_ticks {
        let y = frame.y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0,
            v
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn polyline(
    out: &mut String,
    frame: &Frame,
    points: impl Iterator<Item = (f64, f64)>,
    color: &str,
    opacity: f64,
) {
    out.push_str("<polyline fill=\"none\" stroke=\"");
    out.push_str(color);
    let _ = write!(
        out,
        "\" stroke-opacity=\"{opacity}\" stroke-width=\"1\" points=\""
    );
    for (i, (x, y)) in points.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", frame.x(x), frame.y(y));
    }
    out.push_str("\"/>\n");
}

fn save(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| CascadeError::io(path, e))
}

/// Cumulative adopt (green) and reject (red) counts against agent index,
/// one pair of lines per run.
pub fn render_cumulative_plot(cell: &CellResult, path: &Path) -> Result<()> {
    let n = cell.records.first().map_or(1, |r| r.n_agents()).max(1) as f64;
    let frame = Frame {
        x_min: 0.0,
        x_max: n,
        y_max: n,
    };
    let key = &cell.key;
    let title = format!(
        "p={}, k={}, {} choice, V={} ({} runs)",
        key.p,
        key.k,
        match key.mode {
            crate::model::ChoiceMode::Deterministic => "deterministic",
            crate::model::ChoiceMode::WeightedRandom => "weighted random",
        },
        key.v,
        cell.records.len()
    );
    let ticks: Vec<f64> = (0..=5).map(|i| n * i as f64 / 5.0).collect();
    let mut out = String::new();
    header(
        &mut out,
        &title,
        &frame,
        "agent",
        "cumulative count",
        &ticks,
    );
    let opacity = if cell.records.len() > 20 { 0.08 } else { 0.8 };
    for rec in &cell.records {
        polyline(
            &mut out,
            &frame,
            std::iter::once((0.0, 0.0)).chain(
                rec.entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| ((i + 1) as f64, e.cum_adopt as f64)),
            ),
            ADOPT_COLOR,
            opacity,
        );
        polyline(
            &mut out,
            &frame,
            std::iter::once((0.0, 0.0)).chain(
                rec.entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| ((i + 1) as f64, e.cum_reject as f64)),
            ),
            REJECT_COLOR,
            opacity,
        );
    }
    out.push_str("</svg>\n");
    save(path, &out)
}

/// Correct (green) and incorrect (red) cascade probability against `p`.
pub fn render_baseline_plot(rows: &[CascadeProbabilities], path: &Path) -> Result<()> {
    let x_lo = rows
        .iter()
        .map(|r| r.p)
        .fold(f64::INFINITY, f64::min)
        .min(0.5);
    let x_hi = rows
        .iter()
        .map(|r| r.p)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(x_lo + 0.1);
    let frame = Frame {
        x_min: x_lo,
        x_max: x_hi,
        y_max: 1.0,
    };
    let mut out = String::new();
    header(
        &mut out,
        "Cascade probability, counting model",
        &frame,
        "signal accuracy p",
        "probability",
        &[0.0, 0.25, 0.5, 0.75, 1.0],
    );
    for (color, pick) in [
        (
            ADOPT_COLOR,
            (|r: &CascadeProbabilities| r.correct) as fn(&CascadeProbabilities) -> f64,
        ),
        (REJECT_COLOR, |r: &CascadeProbabilities| r.incorrect),
    ] {
        polyline(
            &mut out,
            &frame,
            rows.iter().map(|r| (r.p, pick(r))),
            color,
            1.0,
        );
        for r in rows {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.x(r.p),
                frame.y(pick(r))
            );
        }
    }
    out.push_str("</svg>\n");
    save(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_sweep, SweepConfig, DEFAULT_MAX_AGENT_STEPS};
    use crate::model::{ChoiceMode, TrueValue};

    fn cell(runs: usize) -> CellResult {
        let cfg = SweepConfig {
            p_values: vec![0.9],
            k_values: vec![1],
            modes: vec![ChoiceMode::Deterministic],
            v_values: vec![TrueValue::V1],
            n_agents: 100,
            runs,
            master_seed: 3,
            window: 20,
            max_agent_steps: DEFAULT_MAX_AGENT_STEPS,
        };
        run_sweep(&cfg, 1).unwrap().cells.remove(0)
    }

    #[test]
    fn one_run_two_polylines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        render_cumulative_plot(&cell(1), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }

    #[test]
    fn baseline_plot_is_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig.svg");
        let rows: Vec<CascadeProbabilities> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&p| CascadeProbabilities {
                p,
                runs: 10,
                correct: p,
                incorrect: 1.0 - p,
                none: 0.0,
            })
            .collect();
        render_baseline_plot(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        roxmltree::Document::parse(&text).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
    }
}

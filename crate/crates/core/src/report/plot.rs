//! SVG 1.1 grid of performance curves: one panel per (task, algorithm), solid
//! observed lines, dashed predictions and a shaded band for every curriculum
//! step that trains the panel's task.

use std::fmt::Write;

use crate::model::{Curriculum, PerformanceMatrix, TaskSet};

const PANEL_W: f64 = 220.0;
const PANEL_H: f64 = 120.0;
const PAD_L: f64 = 34.0;
const PAD_R: f64 = 8.0;
const PAD_T: f64 = 18.0;
const PAD_B: f64 = 16.0;
const LEGEND_H: f64 = 24.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    m: usize,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, step: f64) -> f64 {
        let inner = PANEL_W - PAD_L - PAD_R;
        // Steps sit at band centres.
        PAD_L + inner * (step + 0.5) / self.m as f64
    }

    fn y(&self, v: f64) -> f64 {
        let inner = PANEL_H - PAD_T - PAD_B;
        PAD_T + inner * (self.y_hi - v) / (self.y_hi - self.y_lo)
    }
}

fn polylines(out: &mut String, frame: &Frame, m: &PerformanceMatrix, task: usize, class: &str) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
        if run.len() >= 2 {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, pts.join(" "));
        }
        run.clear();
    };
    for l in 0..m.n_steps() {
        match m.get(task, l) {
            Some(v) => run.push((frame.x(l as f64), frame.y(v))),
            None => flush(&mut run, out),
        }
    }
    flush(&mut run, out);
}

/// Renders observed (and optionally predicted) curves. Predictions are
/// matched to observations by algorithm name; pass an empty slice to draw
/// observations only. The output is a pure function of the inputs.
pub fn plot_curves(
    tasks: &TaskSet,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    predicted: &[PerformanceMatrix],
) -> String {
    let m = curriculum.len();
    let n = tasks.len();
    let cols = observed.len().max(1);
    let any_negative = observed
        .iter()
        .chain(predicted)
        .flat_map(|p| (0..p.n_tasks()).flat_map(move |j| (0..p.n_steps()).filter_map(move |l| p.get(j, l))))
        .any(|v| v < 0.0);
    let frame = Frame {
        m,
        y_lo: if any_negative { -1.0 } else { 0.0 },
        y_hi: 1.0,
    };
    let width = PANEL_W * cols as f64;
    let height = LEGEND_H + PANEL_H * n as f64;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    out.push_str(concat!(
        "<style>\n",
        "text{font-family:sans-serif;font-size:10px;fill:#222}\n",
        ".frame{fill:none;stroke:#888;stroke-width:0.8}\n",
        ".train-band{fill:#2ca02c;fill-opacity:0.25;stroke:none}\n",
        ".observed{fill:none;stroke:#1f77b4;stroke-width:1.5}\n",
        ".observed-point{fill:#1f77b4}\n",
        ".predicted{fill:none;stroke:#d62728;stroke-width:1.5;stroke-dasharray:4 3}\n",
        "</style>\n",
    ));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    out.push_str(concat!(
        "<g class=\"legend\" transform=\"translate(8,6)\">\n",
        "<line class=\"observed\" x1=\"0\" y1=\"6\" x2=\"18\" y2=\"6\"/><text x=\"22\" y=\"9\">observed</text>\n",
        "<line class=\"predicted\" x1=\"80\" y1=\"6\" x2=\"98\" y2=\"6\"/><text x=\"102\" y=\"9\">predicted</text>\n",
        "<rect class=\"train-band\" x=\"164\" y=\"1\" width=\"12\" height=\"10\"/><text x=\"180\" y=\"9\">trained</text>\n",
        "</g>\n",
    ));

    for (c, obs) in observed.iter().enumerate() {
        let pred = predicted.iter().find(|p| p.algorithm == obs.algorithm);
        for j in 0..n {
            let ox = PANEL_W * c as f64;
            let oy = LEGEND_H + PANEL_H * j as f64;
            let _ = writeln!(
                out,
                r#"<g class="panel" data-task="{}" data-algorithm="{}" transform="translate({ox:.2},{oy:.2})">"#,
                escape(tasks.name(j)),
                escape(&obs.algorithm)
            );
            let _ = writeln!(
                out,
                r#"<text x="{PAD_L:.2}" y="12">{} / {}</text>"#,
                escape(tasks.name(j)),
                escape(&obs.algorithm)
            );
            let step_w = (PANEL_W - PAD_L - PAD_R) / m as f64;
            for (l, &trained) in curriculum.entries().iter().enumerate() {
                if trained == j {
                    let _ = writeln!(
                        out,
                        r#"<rect class="train-band" x="{:.2}" y="{PAD_T:.2}" width="{step_w:.2}" height="{:.2}"/>"#,
                        PAD_L + step_w * l as f64,
                        PANEL_H - PAD_T - PAD_B
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<rect class="frame" x="{PAD_L:.2}" y="{PAD_T:.2}" width="{:.2}" height="{:.2}"/>"#,
                PANEL_W - PAD_L - PAD_R,
                PANEL_H - PAD_T - PAD_B
            );
            for v in [frame.y_lo, frame.y_hi] {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.0}</text>"#,
                    PAD_L - 4.0,
                    frame.y(v) + 3.0
                );
            }
            polylines(&mut out, &frame, obs, j, "observed");
            for l in 0..obs.n_steps() {
                if let Some(v) = obs.get(j, l) {
                    let _ = writeln!(
                        out,
                        r#"<circle class="observed-point" cx="{:.2}" cy="{:.2}" r="1.8"/>"#,
                        frame.x(l as f64),
                        frame.y(v)
                    );
                }
            }
            if let Some(p) = pred {
                polylines(&mut out, &frame, p, j, "predicted");
            }
            out.push_str("</g>\n");
        }
    }
    out.push_str("</svg>\n");
    out
}

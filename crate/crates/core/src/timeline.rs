//! Timeline plots: one ribbon per label sequence, ground truth on top.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::signals::{Phase, NUM_PHASES};

pub const PALETTE: [&str; NUM_PHASES] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
];

const LEFT: f64 = 150.0;
const PLOT_WIDTH: f64 = 900.0;
const TOP: f64 = 20.0;
const RIBBON: f64 = 26.0;
const GAP: f64 = 10.0;

/// Maximal constant-label runs as `(start, length, phase)`.
pub fn label_runs(labels: &[Phase]) -> Vec<(usize, usize, Phase)> {
    let mut runs: Vec<(usize, usize, Phase)> = Vec::new();
    for (i, &p) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some((_, len, q)) if *q == p => *len += 1,
            _ => runs.push((i, 1, p)),
        }
    }
    runs
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_step_minutes(total_minutes: f64) -> usize {
    [1, 2, 5, 10, 15, 20, 30, 60, 120]
        .into_iter()
        .find(|&s| total_minutes / s as f64 <= 10.0)
        .unwrap_or(240)
}

/// Renders the ground truth and each named prediction as stacked ribbons with
/// a time axis in minutes (one frame per second) and a phase legend.
pub fn render_timeline_svg(truth: &[Phase], rows: &[(String, Vec<Phase>)]) -> Result<String> {
    if truth.is_empty() {
        return Err(Error::invalid("timeline needs at least one frame"));
    }
    if let Some((name, r)) = rows.iter().find(|(_, r)| r.len() != truth.len()) {
        return Err(Error::invalid(format!(
            "row {name:?} has {} frames, ground truth has {}",
            r.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;
    let ribbons: Vec<(&str, &[Phase])> = std::iter::once(("Ground truth", truth))
        .chain(rows.iter().map(|(name, r)| (name.as_str(), r.as_slice())))
        .collect();
    let axis_y = TOP + ribbons.len() as f64 * (RIBBON + GAP);
    let legend_y = axis_y + 40.0;
    let height = legend_y + 30.0;
    let width = LEFT + PLOT_WIDTH + 20.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
    for (k, (name, labels)) in ribbons.iter().enumerate() {
        let y = TOP + k as f64 * (RIBBON + GAP);
        let _ = writeln!(svg, r#"<g class="ribbon" data-row="{k}">"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + RIBBON / 2.0 + 4.0,
            escape(name)
        );
        for (start, len, phase) in label_runs(labels) {
            let _ = writeln!(
                svg,
                r#"<rect class="run" x="{:.3}" y="{y:.1}" width="{:.3}" height="{RIBBON}" fill="{}"><title>{}</title></rect>"#,
                LEFT + start as f64 / n * PLOT_WIDTH,
                len as f64 / n * PLOT_WIDTH,
                PALETTE[phase.index()],
                escape(phase.name())
            );
        }
        let _ = writeln!(svg, "</g>");
    }

    let minutes = n / 60.0;
    let step = tick_step_minutes(minutes);
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="black"/>"#,
        LEFT + PLOT_WIDTH
    );
    let mut m = 0;
    while m as f64 <= minutes {
        let x = LEFT + (m as f64 * 60.0) / n * PLOT_WIDTH;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.3}" y1="{axis_y:.1}" x2="{x:.3}" y2="{:.1}" stroke="black"/><text x="{x:.3}" y="{:.1}" text-anchor="middle">{m}</text>"#,
            axis_y + 5.0,
            axis_y + 18.0
        );
        m += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time [min]</text>"#,
        LEFT + PLOT_WIDTH / 2.0,
        axis_y + 32.0
    );
    for p in Phase::ALL {
        let x = LEFT + p.index() as f64 * (PLOT_WIDTH / NUM_PHASES as f64);
        let _ = writeln!(
            svg,
            r#"<rect class="legend" x="{x:.1}" y="{legend_y:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PALETTE[p.index()],
            x + 16.0,
            legend_y + 10.0,
            escape(p.name())
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::phases_from_indices;

    fn ribbon_run_counts(svg: &str) -> Vec<usize> {
        svg.split(r#"<g class="ribbon""#)
            .skip(1)
            .map(|chunk| {
                chunk
                    .split("</g>")
                    .next()
                    .unwrap()
                    .matches(r#"class="run""#)
                    .count()
            })
            .collect()
    }

    #[test]
    fn runs_per_ribbon() {
        let truth = phases_from_indices(&[0, 0, 1]).unwrap();
        let pred = phases_from_indices(&[0, 1, 1]).unwrap();
        let svg = render_timeline_svg(&truth, &[("RF".into(), pred)]).unwrap();
        assert_eq!(ribbon_run_counts(&svg), vec![2, 2]);
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn single_phase_spans_full_width() {
        let truth = vec![Phase::Preparation; 90];
        let svg = render_timeline_svg(&truth, &[]).unwrap();
        assert_eq!(ribbon_run_counts(&svg), vec![1]);
        assert!(svg.contains(&format!(
            r#"x="{LEFT:.3}" y="20.0" width="{PLOT_WIDTH:.3}""#
        )));
    }

    #[test]
    fn ribbons_in_order() {
        let truth = phases_from_indices(&[0, 1, 2, 3]).unwrap();
        let rows: Vec<(String, Vec<Phase>)> = ["first", "second", "third"]
            .iter()
            .map(|n| (n.to_string(), truth.clone()))
            .collect();
        let svg = render_timeline_svg(&truth, &rows).unwrap();
        assert_eq!(ribbon_run_counts(&svg).len(), 4);
        let pos = |s: &str| svg.find(s).unwrap();
        assert!(
            pos("Ground truth") < pos(">first<")
                && pos(">first<") < pos(">second<")
                && pos(">second<") < pos(">third<")
        );
    }

    #[test]
    fn errors() {
        assert!(render_timeline_svg(&[], &[]).is_err());
        let truth = vec![Phase::Closing; 3];
        assert!(render_timeline_svg(&truth, &[("x".into(), vec![Phase::Closing; 2])]).is_err());
    }

    #[test]
    fn run_lengths() {
        let labels = phases_from_indices(&[0, 0, 2, 2, 2, 0]).unwrap();
        assert_eq!(
            label_runs(&labels),
            vec![
                (0, 2, Phase::ALL[0]),
                (2, 3, Phase::ALL[2]),
                (5, 1, Phase::ALL[0])
            ]
        );
    }
}

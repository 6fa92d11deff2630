use std::fmt::Write as _;

use super::report::ExplainReport;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step path through `values`, one horizontal run per sample, scaled into
/// the band `[top, top + height]`.
fn step_path(values: &[f64], top: f64, height: f64, max: f64) -> String {
    let n = values.len().max(1) as f64;
    let dx = (WIDTH - 2.0 * MARGIN) / n;
    let y = |v: f64| top + height - if max > 0.0 { v / max * height } else { 0.0 };
    let mut d = String::new();
    for (i, &v) in values.iter().enumerate() {
        let x0 = MARGIN + i as f64 * dx;
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{x0:.2},{:.2} L{:.2},{:.2} ", y(v), x0 + dx, y(v));
    }
    d.trim_end().to_string()
}

/// A standalone SVG: the window trace on top with segment-level shading, and
/// below it the per-sample segment and sequence weight curves over
/// sequence-level shading. The three curves are the only `<path>` elements.
pub fn render_svg(report: &ExplainReport) -> String {
    let n = report.samples.len();
    let seq = report.sequence_weight_per_sample();
    let seg = report.segment_weight_per_sample();
    let plot_w = WIDTH - 2.0 * MARGIN;
    let dx = plot_w / n.max(1) as f64;
    let trace_top = MARGIN;
    let trace_h = (HEIGHT - 3.0 * MARGIN) * 0.6;
    let weights_top = trace_top + trace_h + MARGIN;
    let weights_h = HEIGHT - weights_top - MARGIN;

    let (lo, hi) = report.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut trace = String::new();
    for (i, &v) in report.samples.iter().enumerate() {
        let x = MARGIN + (i as f64 + 0.5) * dx;
        let y = trace_top + trace_h - (v - lo) / span * trace_h;
        let _ = write!(trace, "{}{x:.2},{y:.2} ", if i == 0 { 'M' } else { 'L' });
    }

    let seg_max = seg.iter().copied().fold(0.0, f64::max);
    let seq_max = seq.iter().copied().fold(0.0, f64::max);
    let weight_max = seg_max.max(seq_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        "<title>{} window {} (predicted class {})</title>",
        escape(&report.record_id),
        report.window_index,
        report.predicted
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Shading: segment-level weights behind the trace, sequence-level behind the curves.
    for (i, &w) in seg.iter().enumerate() {
        if seg_max > 0.0 && w > 0.0 {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{trace_top:.2}" width="{dx:.2}" height="{trace_h:.2}" fill="rgb(230,85,13)" fill-opacity="{:.4}"/>"#,
                MARGIN + i as f64 * dx,
                0.5 * w / seg_max
            );
        }
    }
    for (range, &w) in report.attention.sequence_ranges.iter().zip(&report.attention.sequence_weights) {
        if seq_max > 0.0 {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{weights_top:.2}" width="{:.2}" height="{weights_h:.2}" fill="rgb(49,130,189)" fill-opacity="{:.4}"/>"#,
                MARGIN + range.start as f64 * dx,
                range.len() as f64 * dx,
                0.5 * w / seq_max
            );
        }
    }

    let _ =
        writeln!(s, r#"<path id="signal" d="{}" fill="none" stroke="black" stroke-width="1.2"/>"#, trace.trim_end());
    let _ = writeln!(
        s,
        r#"<path id="segment-weights" d="{}" fill="none" stroke="rgb(230,85,13)" stroke-width="1.5"/>"#,
        step_path(&seg, weights_top, weights_h, weight_max)
    );
    let _ = writeln!(
        s,
        r#"<path id="sequence-weights" d="{}" fill="none" stroke="rgb(49,130,189)" stroke-width="1.5"/>"#,
        step_path(&seq, weights_top, weights_h, weight_max)
    );
    let label_y = HEIGHT - MARGIN / 3.0;
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{label_y:.2}" font-family="sans-serif" font-size="12">samples 0..{n}; orange: segment-level attention, blue: sequence-level attention</text>"#
    );
    s.push_str("</svg>\n");
    s
}

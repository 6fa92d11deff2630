use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{predict, AttentionMap, HanModel};

use super::svg::render_svg;

/// Everything needed to plot the attention of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainReport {
    pub record_id: String,
    pub window_index: usize,
    pub samples: Vec<f64>,
    pub attention: AttentionMap,
    pub predicted: usize,
    pub probs: Vec<f64>,
}

/// Eval-mode forward pass on one window, keeping the attention weights.
pub fn extract_attention(
    model: &HanModel,
    samples: &[f64],
    record_id: &str,
    window_index: usize,
) -> Result<ExplainReport> {
    let p = predict(model, samples)?;
    Ok(ExplainReport {
        record_id: record_id.to_string(),
        window_index,
        samples: samples.to_vec(),
        predicted: p.class(),
        probs: p.probs,
        attention: p.attention,
    })
}

impl ExplainReport {
    /// Sequence-level weight of the segment containing each sample.
    pub fn sequence_weight_per_sample(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.samples.len()];
        for (range, &w) in self.attention.sequence_ranges.iter().zip(&self.attention.sequence_weights) {
            out[range.clone()].fill(w);
        }
        out
    }

    /// For each sample, the summed segment-level weight of every post-conv
    /// step whose receptive field contains it. Samples outside every field
    /// (possible with stride > 1) get zero.
    pub fn segment_weight_per_sample(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.samples.len()];
        for (ranges, weights) in self.attention.segment_ranges.iter().zip(&self.attention.segment_weights) {
            for (range, &w) in ranges.iter().zip(weights) {
                out[range.clone()].iter_mut().for_each(|v| *v += w);
            }
        }
        out
    }

    /// Receptive field of the step with the largest combined weight
    /// (sequence weight of its segment times its own segment weight).
    pub fn top_attention_range(&self) -> Range<usize> {
        let a = &self.attention;
        let mut best = (f64::NEG_INFINITY, 0..0);
        for (j, weights) in a.segment_weights.iter().enumerate() {
            for (t, &w) in weights.iter().enumerate() {
                let combined = w * a.sequence_weights[j];
                if combined > best.0 {
                    best = (combined, a.segment_ranges[j][t].clone());
                }
            }
        }
        best.1
    }

    /// Per-sample CSV: `sample_index,amplitude,sequence_weight_at_sample,segment_weight_at_sample`.
    /// Floats use shortest round-trip formatting.
    pub fn samples_csv(&self) -> String {
        let seq = self.sequence_weight_per_sample();
        let seg = self.segment_weight_per_sample();
        let mut s = String::from("sample_index,amplitude,sequence_weight_at_sample,segment_weight_at_sample\n");
        for (i, x) in self.samples.iter().enumerate() {
            let _ = writeln!(s, "{i},{x:?},{:?},{:?}", seq[i], seg[i]);
        }
        s
    }

    /// Raw weights, one row each: `level,segment,step,start,end,weight`.
    /// `level` is `sequence`, `segment` or `group`; ranges are half-open.
    pub fn weights_csv(&self) -> String {
        let a = &self.attention;
        let mut s = String::from("level,segment,step,start,end,weight\n");
        for (j, (r, w)) in a.sequence_ranges.iter().zip(&a.sequence_weights).enumerate() {
            let _ = writeln!(s, "sequence,{j},,{},{},{w:?}", r.start, r.end);
        }
        for (j, (ranges, weights)) in a.segment_ranges.iter().zip(&a.segment_weights).enumerate() {
            for (t, (r, w)) in ranges.iter().zip(weights).enumerate() {
                let _ = writeln!(s, "segment,{j},{t},{},{},{w:?}", r.start, r.end);
            }
        }
        if let Some(groups) = &a.group_weights {
            let per = a.sequence_ranges.len() / groups.len().max(1);
            for (g, w) in groups.iter().enumerate() {
                let start = a.sequence_ranges[g * per].start;
                let end = a.sequence_ranges[(g + 1) * per - 1].end;
                let _ = writeln!(s, "group,{g},,{start},{end},{w:?}");
            }
        }
        s
    }
}

/// `{record_id}_{window_index}` with path separators replaced.
pub fn report_file_stem(report: &ExplainReport) -> String {
    let id: String = report.record_id.chars().map(|c| if c == '/' || c == '\\' { '_' } else { c }).collect();
    format!("{id}_{}", report.window_index)
}

/// Writes `{stem}.csv`, `{stem}_weights.csv` and `{stem}.svg` into `out_dir`
/// (created if missing) and returns their paths in that order.
pub fn export_report(report: &ExplainReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = report_file_stem(report);
    let files = [
        (format!("{stem}.csv"), report.samples_csv()),
        (format!("{stem}_weights.csv"), report.weights_csv()),
        (format!("{stem}.svg"), render_svg(report)),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

//! Record directory → labelled beat windows: denoise, find R-peaks (or take
//! them from the annotations), cut windows and attach labels.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{denoise, pan_tompkins, window_beats, BeatWindow, DenoiseConfig, PanTompkinsConfig, Record};

use super::dataset::Dataset;
use super::io::{load_annotations, load_record, read_header, Annotation};
use super::labels::{is_non_beat_symbol, map_beat_label, AAMI_CLASSES};

pub const RECORDS_DIR: &str = "records";
pub const ANNOTATIONS_DIR: &str = "annotations";

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub before: usize,
    pub after: usize,
    /// Take R-peaks from the annotation files instead of running the detector.
    pub use_annotations: bool,
    /// `None` skips denoising.
    pub denoise: Option<DenoiseConfig>,
    pub detector: PanTompkinsConfig,
    /// Only records with this lead name are used.
    pub lead: Option<String>,
    pub class_names: Vec<String>,
    /// A detected peak takes the label of the nearest beat annotation within this distance.
    pub label_tolerance_s: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            before: 99,
            after: 201,
            use_annotations: false,
            denoise: Some(DenoiseConfig::default()),
            detector: PanTompkinsConfig::default(),
            lead: None,
            class_names: AAMI_CLASSES.iter().map(|s| s.to_string()).collect(),
            label_tolerance_s: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSummary {
    pub record_id: String,
    pub peaks: usize,
    pub windows: usize,
    /// Peaks too close to either end of the record.
    pub boundary_skipped: usize,
    /// Detected peaks without a beat annotation close enough to label them.
    pub unlabeled: usize,
}

/// Resolves a record-level label given as a class name or index.
fn resolve_label(label: &str, class_names: &[String]) -> Result<usize> {
    if let Some(i) = class_names.iter().position(|c| c == label) {
        return Ok(i);
    }
    match label.parse::<usize>() {
        Ok(i) if i < class_names.len() => Ok(i),
        _ => Err(Error::Config(format!("record label '{label}' is not one of {class_names:?}"))),
    }
}

fn nearest_beat(beats: &[Annotation], peak: usize, tolerance: usize) -> Option<&Annotation> {
    let pos = beats.partition_point(|a| a.sample_index < peak);
    [pos.checked_sub(1), Some(pos)]
        .into_iter()
        .flatten()
        .filter_map(|i| beats.get(i))
        .filter(|a| a.sample_index.abs_diff(peak) <= tolerance)
        .min_by_key(|a| a.sample_index.abs_diff(peak))
}

/// Windows and labels for one record.
///
/// Labels come from the annotations when present (AAMI grouping of the beat
/// symbol), otherwise from `record_label`. Non-beat annotation codes are ignored.
pub fn preprocess_record(
    record: &Record,
    annotations: Option<&[Annotation]>,
    record_label: Option<&str>,
    cfg: &PreprocessConfig,
) -> Result<(Vec<BeatWindow>, RecordSummary)> {
    let beats: Option<Vec<Annotation>> =
        annotations.map(|a| a.iter().filter(|x| !is_non_beat_symbol(x.symbol)).copied().collect());
    let fixed_label = record_label.map(|l| resolve_label(l, &cfg.class_names)).transpose()?;
    let signal = match &cfg.denoise {
        Some(d) => denoise(record, d)?,
        None => record.clone(),
    };

    let labelled: Vec<(usize, Option<usize>)> = match (&beats, cfg.use_annotations) {
        (Some(beats), true) => beats.iter().map(|a| (a.sample_index, Some(map_beat_label(a.symbol)))).collect(),
        (None, true) => {
            return Err(Error::Config(format!(
                "record {}: annotation peaks requested but no annotation file found",
                record.record_id
            )))
        }
        (beats, false) => {
            let peaks = pan_tompkins(&signal, &cfg.detector)?;
            let tol = (cfg.label_tolerance_s * record.sampling_rate).round() as usize;
            match (beats, fixed_label) {
                (Some(beats), _) => peaks
                    .into_iter()
                    .map(|p| (p, nearest_beat(beats, p, tol).map(|a| map_beat_label(a.symbol))))
                    .collect(),
                (None, Some(label)) => peaks.into_iter().map(|p| (p, Some(label))).collect(),
                (None, None) => {
                    return Err(Error::Config(format!(
                        "record {}: no annotations and no record-level label",
                        record.record_id
                    )))
                }
            }
        }
    };

    let mut summary =
        RecordSummary { record_id: record.record_id.clone(), peaks: labelled.len(), ..RecordSummary::default() };
    let mut peaks = Vec::with_capacity(labelled.len());
    let mut labels = Vec::with_capacity(labelled.len());
    for (p, label) in labelled {
        match label {
            Some(l) if l < cfg.class_names.len() => {
                peaks.push(p);
                labels.push(l);
            }
            Some(l) => {
                return Err(Error::Config(format!(
                    "record {}: label {l} outside {} classes",
                    record.record_id,
                    cfg.class_names.len()
                )))
            }
            None => summary.unlabeled += 1,
        }
    }
    let cut = window_beats(&signal, &peaks, cfg.before, cfg.after)?;
    summary.boundary_skipped = cut.skipped;
    let label_of = |p: usize| labels[peaks.binary_search(&p).expect("window peak comes from the peak list")];
    let windows: Vec<BeatWindow> = cut
        .windows
        .into_iter()
        .map(|w| BeatWindow {
            label: label_of(w.r_peak),
            samples: w.samples,
            r_peak_offset: cfg.before,
            source_record: record.record_id.clone(),
        })
        .collect();
    summary.windows = windows.len();
    Ok((windows, summary))
}

/// Header files under `dir/records`, sorted by name.
pub fn list_headers(dir: &Path) -> Result<Vec<PathBuf>> {
    let records = dir.join(RECORDS_DIR);
    let entries = std::fs::read_dir(&records).map_err(|e| Error::io(&records, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&records, e))?.path();
        if path.extension().is_some_and(|e| e == "hdr") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Runs [`preprocess_record`] over every record of a data directory laid out
/// as `records/*.hdr` (+ payload) and `annotations/{record_id}.csv`.
/// Records are processed in parallel on the current rayon pool; the output
/// order is the sorted header order.
pub fn preprocess_dir(dir: &Path, cfg: &PreprocessConfig) -> Result<(Dataset, Vec<RecordSummary>)> {
    let headers = list_headers(dir)?;
    if headers.is_empty() {
        return Err(Error::Empty(format!("{}: no record headers", dir.join(RECORDS_DIR).display())));
    }
    let per_record: Vec<Option<(Vec<BeatWindow>, RecordSummary)>> = headers
        .par_iter()
        .map(|hdr| {
            let header = read_header(hdr)?;
            if cfg.lead.as_ref().is_some_and(|l| *l != header.lead_name) {
                return Ok(None);
            }
            let signal = hdr.with_extension(header.sample_format.extension());
            let record = load_record(&signal, hdr)?;
            let ann_path = dir.join(ANNOTATIONS_DIR).join(format!("{}.csv", header.record_id));
            let annotations = if ann_path.exists() { Some(load_annotations(&ann_path)?) } else { None };
            let label = header.extra.get("label").map(String::as_str);
            preprocess_record(&record, annotations.as_deref(), label, cfg).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut windows = Vec::new();
    let mut summaries = Vec::new();
    for (w, s) in per_record.into_iter().flatten() {
        windows.extend(w);
        summaries.push(s);
    }
    if summaries.is_empty() {
        return Err(Error::Empty(format!(
            "{}: no record matches lead {:?}",
            dir.display(),
            cfg.lead.as_deref().unwrap_or("")
        )));
    }
    Ok((Dataset::new(windows, cfg.class_names.clone())?, summaries))
}

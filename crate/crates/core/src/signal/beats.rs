use crate::error::{Error, Result};
use crate::nn::Tensor2;

use super::record::Record;

/// A labelled fixed-length window around an R-peak.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatWindow {
    pub samples: Vec<f64>,
    /// Index of the R-peak inside `samples`; equals the `before` used for windowing.
    pub r_peak_offset: usize,
    pub label: usize,
    pub source_record: String,
}

/// An unlabelled window cut around one R-peak.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWindow {
    pub samples: Vec<f64>,
    /// Position of the R-peak in the source record.
    pub r_peak: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Windowed {
    pub windows: Vec<RawWindow>,
    pub before: usize,
    pub after: usize,
    /// Peaks dropped for lying too close to either end of the record.
    pub skipped: usize,
}

/// Cuts `[p − before, p + after)` around every peak `p`; peaks whose window
/// would leave the record are skipped.
pub fn window_beats(record: &Record, r_peaks: &[usize], before: usize, after: usize) -> Result<Windowed> {
    if before == 0 || after == 0 {
        return Err(Error::Config(format!("window extents must be positive (before {before}, after {after})")));
    }
    let n = record.len();
    let mut windows = Vec::with_capacity(r_peaks.len());
    let mut skipped = 0;
    for &p in r_peaks {
        if p < before || p + after > n {
            skipped += 1;
            continue;
        }
        windows.push(RawWindow { samples: record.samples[p - before..p + after].to_vec(), r_peak: p });
    }
    Ok(Windowed { windows, before, after, skipped })
}

/// Splits a window into `num_segments` contiguous rows.
pub fn segment(window: &[f64], num_segments: usize) -> Result<Tensor2> {
    if num_segments == 0 || !window.len().is_multiple_of(num_segments) || window.is_empty() {
        return Err(Error::Shape(format!(
            "window of {} samples cannot be split into {num_segments} equal segments",
            window.len()
        )));
    }
    Tensor2::from_vec(num_segments, window.len() / num_segments, window.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Record {
        Record::new("r", "MLII", 360.0, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn mitbih_and_ptbxl_window_lengths() {
        let rec = ramp(2000);
        let w = window_beats(&rec, &[500, 1000], 99, 201).unwrap();
        assert!(w.windows.iter().all(|w| w.samples.len() == 300));
        assert_eq!(w.windows[0].samples[99], 500.0);
        let w = window_beats(&rec, &[500], 150, 200).unwrap();
        assert_eq!(w.windows[0].samples.len(), 350);
    }

    #[test]
    fn boundary_peaks_skipped() {
        let rec = ramp(1000);
        let w = window_beats(&rec, &[50, 400, 850], 99, 201).unwrap();
        assert_eq!(w.windows.len(), 1);
        assert_eq!(w.skipped, 2);
        // exactly fitting at both ends
        let w = window_beats(&rec, &[99, 799], 99, 201).unwrap();
        assert_eq!(w.windows.len(), 2);
    }

    #[test]
    fn segment_shapes() {
        let w: Vec<f64> = (0..300).map(f64::from).collect();
        let s = segment(&w, 10).unwrap();
        assert_eq!(s.shape(), (10, 30));
        assert_eq!(s.row(3)[0], 90.0);
        assert_eq!(segment(&vec![0.0; 350], 10).unwrap().shape(), (10, 35));
        assert!(matches!(segment(&vec![0.0; 301], 10), Err(Error::Shape(_))));
    }
}

//! Offline Pan–Tompkins QRS detector.
//!
//! Band-pass → five-point derivative → squaring → moving-window integration,
//! followed by the dual adaptive threshold scheme with running signal/noise
//! peak estimates, a refractory period, T-wave slope discrimination and
//! search-back for missed beats. Filtering is zero-phase (forward-backward),
//! so detections line up with the input without delay compensation.

use crate::error::{Error, Result};

use super::record::Record;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanTompkinsConfig {
    pub low_hz: f64,
    pub high_hz: f64,
    pub integration_ms: f64,
    pub refractory_ms: f64,
    /// Candidates closer than this to the previous QRS go through the T-wave slope test.
    pub t_wave_ms: f64,
    /// Search back once no QRS was found for this multiple of the mean R-R interval.
    pub searchback_rr: f64,
    /// Weight of a new peak in the running signal/noise peak estimates.
    pub peak_update: f64,
    /// Weight of a search-back peak in the running signal estimate.
    pub searchback_update: f64,
    /// `THRESHOLD1 = NPKI + threshold_fraction · (SPKI − NPKI)`
    pub threshold_fraction: f64,
    /// Half-width of the window in which the R-peak is located around an integrator peak.
    pub locate_ms: f64,
    pub min_duration_s: f64,
}

impl Default for PanTompkinsConfig {
    fn default() -> Self {
        PanTompkinsConfig {
            low_hz: 5.0,
            high_hz: 15.0,
            integration_ms: 150.0,
            refractory_ms: 200.0,
            t_wave_ms: 360.0,
            searchback_rr: 1.66,
            peak_update: 0.125,
            searchback_update: 0.25,
            threshold_fraction: 0.25,
            locate_ms: 100.0,
            min_duration_s: 2.0,
        }
    }
}

/// Second-order section, direct form I.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn butterworth(cutoff: f64, fs: f64, highpass: bool) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff / fs;
        let alpha = w0.sin() / std::f64::consts::SQRT_2;
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        let b = if highpass {
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0]
        } else {
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0]
        };
        Biquad { b: [b[0] / a0, b[1] / a0, b[2] / a0], a: [-2.0 * cos / a0, (1.0 - alpha) / a0] }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        // start in steady state for a constant input equal to x[0]
        let dc_gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let y0 = x[0] * dc_gain;
        let (mut x1, mut x2, mut y1, mut y2) = (x[0], x[0], y0, y0);
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                x2 = x1;
                x1 = v;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }

    /// Zero-phase filtering with odd reflection padding at both ends.
    fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        let pad = pad.min(n.saturating_sub(1));
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Intermediate signals of the detector, exposed for inspection and plotting.
#[derive(Debug, Clone)]
pub struct QrsStages {
    pub bandpassed: Vec<f64>,
    pub derivative: Vec<f64>,
    pub integrated: Vec<f64>,
}

fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * 1e-3 * fs).round().max(1.0) as usize
}

pub fn qrs_stages(samples: &[f64], fs: f64, config: &PanTompkinsConfig) -> QrsStages {
    let n = samples.len();
    let pad = (fs as usize).max(1);
    let hp = Biquad::butterworth(config.low_hz, fs, true);
    let lp = Biquad::butterworth(config.high_hz, fs, false);
    let bandpassed = lp.filtfilt(&hp.filtfilt(samples, pad), pad);

    let at = |i: isize| bandpassed[i.clamp(0, n as isize - 1) as usize];
    let derivative: Vec<f64> =
        (0..n as isize).map(|i| (2.0 * at(i + 2) + at(i + 1) - at(i - 1) - 2.0 * at(i - 2)) * fs / 8.0).collect();

    let width = ms_to_samples(config.integration_ms, fs);
    let half = width / 2;
    let mut prefix = vec![0.0; n + 1];
    for (i, d) in derivative.iter().enumerate() {
        prefix[i + 1] = prefix[i] + d * d;
    }
    let integrated = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect();
    QrsStages { bandpassed, derivative, integrated }
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1]).collect()
}

struct Detector<'a> {
    config: &'a PanTompkinsConfig,
    refractory: usize,
    t_wave: usize,
    slope_half: usize,
    derivative: &'a [f64],
    integrated: &'a [f64],
    spki: f64,
    npki: f64,
    qrs: Vec<usize>,
    slopes: Vec<f64>,
}

impl Detector<'_> {
    fn threshold1(&self) -> f64 {
        self.npki + self.config.threshold_fraction * (self.spki - self.npki)
    }

    fn max_slope(&self, at: usize) -> f64 {
        let lo = at.saturating_sub(self.slope_half);
        let hi = (at + self.slope_half + 1).min(self.derivative.len());
        self.derivative[lo..hi].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn mean_rr(&self) -> Option<f64> {
        if self.qrs.len() < 2 {
            return None;
        }
        let tail = &self.qrs[self.qrs.len().saturating_sub(9)..];
        let rr: Vec<f64> = tail.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        Some(rr.iter().sum::<f64>() / rr.len() as f64)
    }

    fn accept(&mut self, peak: usize) {
        self.slopes.push(self.max_slope(peak));
        self.qrs.push(peak);
    }

    /// Looks for a missed beat among `candidates` strictly between the last
    /// detection and `now`.
    fn search_back(&mut self, candidates: &[usize], now: usize) {
        let (Some(&last), Some(rr)) = (self.qrs.last(), self.mean_rr()) else {
            return;
        };
        if ((now - last) as f64) <= self.config.searchback_rr * rr {
            return;
        }
        let threshold2 = 0.5 * self.threshold1();
        let best = candidates
            .iter()
            .copied()
            .filter(|&c| c > last + self.refractory && c + self.refractory <= now)
            .filter(|&c| self.integrated[c] > threshold2)
            .max_by(|&a, &b| self.integrated[a].total_cmp(&self.integrated[b]));
        if let Some(c) = best {
            let w = self.config.searchback_update;
            self.spki = w * self.integrated[c] + (1.0 - w) * self.spki;
            self.accept(c);
        }
    }
}

/// Integrator-peak positions of detected QRS complexes.
fn detect_integrator_peaks(stages: &QrsStages, fs: f64, config: &PanTompkinsConfig) -> Vec<usize> {
    let integrated = &stages.integrated;
    let candidates = local_maxima(integrated);
    let learn = ((2.0 * fs) as usize).min(integrated.len());
    let learn_max = integrated[..learn].iter().fold(0.0f64, |m, &v| m.max(v));
    if learn_max <= 0.0 || candidates.is_empty() {
        return Vec::new();
    }
    let learn_mean = integrated[..learn].iter().sum::<f64>() / learn as f64;

    let mut det = Detector {
        config,
        refractory: ms_to_samples(config.refractory_ms, fs),
        t_wave: ms_to_samples(config.t_wave_ms, fs),
        slope_half: ms_to_samples(75.0, fs),
        derivative: &stages.derivative,
        integrated,
        spki: learn_max / 3.0,
        npki: learn_mean / 2.0,
        qrs: Vec::new(),
        slopes: Vec::new(),
    };
    let w = config.peak_update;

    for (ci, &p) in candidates.iter().enumerate() {
        det.search_back(&candidates[..ci], p);
        let v = integrated[p];
        if v > det.threshold1() {
            match det.qrs.last().copied() {
                Some(last) if p - last < det.refractory => {
                    // Same complex: keep whichever integrator peak is larger.
                    if v > integrated[last] {
                        det.qrs.pop();
                        det.slopes.pop();
                        det.accept(p);
                    }
                    continue;
                }
                Some(last) if p - last < det.t_wave => {
                    let slope = det.max_slope(p);
                    if slope < 0.5 * det.slopes.last().copied().unwrap_or(0.0) {
                        det.npki = w * v + (1.0 - w) * det.npki;
                        continue;
                    }
                }
                _ => {}
            }
            det.spki = w * v + (1.0 - w) * det.spki;
            det.accept(p);
        } else {
            det.npki = w * v + (1.0 - w) * det.npki;
        }
    }
    det.search_back(&candidates, integrated.len());
    det.qrs.sort_unstable();
    det.qrs
}

/// Detects R-peaks and returns their sample indices, strictly increasing and
/// at least one refractory period apart.
pub fn pan_tompkins(record: &Record, config: &PanTompkinsConfig) -> Result<Vec<usize>> {
    record.validate()?;
    let fs = record.sampling_rate;
    if record.duration_secs() < config.min_duration_s {
        return Err(Error::TooShort(format!(
            "record {} lasts {:.2} s; QRS detection needs at least {} s",
            record.record_id,
            record.duration_secs(),
            config.min_duration_s
        )));
    }
    let stages = qrs_stages(&record.samples, fs, config);
    let coarse = detect_integrator_peaks(&stages, fs, config);

    // Move each detection onto the largest band-passed excursion nearby.
    let n = record.len();
    let reach = ms_to_samples(config.locate_ms, fs);
    let bp = &stages.bandpassed;
    let refractory = ms_to_samples(config.refractory_ms, fs);
    let mut peaks: Vec<usize> = Vec::with_capacity(coarse.len());
    for p in coarse {
        let lo = p.saturating_sub(reach);
        let hi = (p + reach + 1).min(n);
        let r = (lo..hi).max_by(|&a, &b| bp[a].abs().total_cmp(&bp[b].abs())).unwrap_or(p);
        match peaks.last().copied() {
            Some(last) if r <= last || r - last < refractory => {
                if bp[r].abs() > bp[last].abs() && r > last {
                    *peaks.last_mut().unwrap() = r;
                }
            }
            _ => peaks.push(r),
        }
    }
    // A replacement above can bring a peak too close to its predecessor.
    let mut out: Vec<usize> = Vec::with_capacity(peaks.len());
    for r in peaks {
        if out.last().is_none_or(|&last| r > last && r - last >= refractory) {
            out.push(r);
        }
    }
    Ok(out)
}

//! Synthetic single-lead ECG built from Gaussian P, Q, R, S and T bumps.
//!
//! Each class has its own wave-shape parameters, so windows cut around the
//! emitted R-peak annotations form a separable classification task with
//! exact ground truth for detector tests.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::signal::{window_beats, BeatWindow, Record};

use super::dataset::Dataset;
use super::io::Annotation;
use super::labels::AAMI_CLASSES;

/// One Gaussian bump, positioned relative to the R-peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    /// mV
    pub amplitude: f64,
    /// Seconds from the R-peak; negative before it.
    pub offset_s: f64,
    /// Standard deviation in seconds.
    pub width_s: f64,
}

const fn wave(amplitude: f64, offset_s: f64, width_s: f64) -> Wave {
    Wave { amplitude, offset_s, width_s }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatMorphology {
    /// Annotation code written for beats of this shape.
    pub symbol: char,
    pub waves: Vec<Wave>,
    /// Fraction by which the preceding R-R interval is shortened; the
    /// following one is lengthened by the same amount.
    pub prematurity: f64,
}

impl BeatMorphology {
    /// Normal sinus beat.
    pub fn normal() -> Self {
        BeatMorphology {
            symbol: 'N',
            waves: vec![
                wave(0.15, -0.20, 0.025),
                wave(-0.12, -0.035, 0.008),
                wave(1.0, 0.0, 0.010),
                wave(-0.25, 0.035, 0.010),
                wave(0.30, 0.28, 0.050),
            ],
            prematurity: 0.0,
        }
    }

    /// Premature atrial beat: early, with an inverted, shifted P wave.
    pub fn supraventricular() -> Self {
        BeatMorphology {
            symbol: 'A',
            waves: vec![
                wave(-0.10, -0.12, 0.020),
                wave(-0.10, -0.035, 0.008),
                wave(0.85, 0.0, 0.010),
                wave(-0.30, 0.035, 0.010),
                wave(0.22, 0.24, 0.045),
            ],
            prematurity: 0.25,
        }
    }

    /// Premature ventricular beat: no P wave, wide QRS, inverted T.
    pub fn ventricular() -> Self {
        BeatMorphology {
            symbol: 'V',
            waves: vec![wave(1.3, 0.0, 0.030), wave(-0.6, 0.07, 0.030), wave(-0.45, 0.32, 0.070)],
            prematurity: 0.2,
        }
    }

    /// Fusion of a normal and a ventricular beat.
    pub fn fusion() -> Self {
        BeatMorphology {
            symbol: 'F',
            waves: vec![
                wave(0.08, -0.20, 0.025),
                wave(1.1, 0.0, 0.020),
                wave(-0.45, 0.05, 0.020),
                wave(-0.10, 0.30, 0.060),
            ],
            prematurity: 0.05,
        }
    }

    /// Paced beat: pacing spike followed by a broad complex.
    pub fn paced() -> Self {
        BeatMorphology {
            symbol: 'Q',
            waves: vec![
                wave(0.8, -0.04, 0.003),
                wave(0.7, 0.0, 0.030),
                wave(-0.2, 0.06, 0.025),
                wave(0.2, 0.30, 0.060),
            ],
            prematurity: 0.0,
        }
    }

    /// The five AAMI-class shapes in label-index order.
    pub fn aami_set() -> Vec<Self> {
        vec![Self::normal(), Self::supraventricular(), Self::ventricular(), Self::fusion(), Self::paced()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub bpm: f64,
    pub duration_s: f64,
    pub sampling_rate: f64,
    /// Additive white Gaussian noise relative to the clean signal power; `None` for a clean trace.
    pub noise_snr_db: Option<f64>,
    pub morphologies: Vec<BeatMorphology>,
    /// Relative frequency of each morphology; must match `morphologies` in length.
    pub class_weights: Vec<f64>,
    /// Relative standard deviation applied to wave amplitudes and widths per beat.
    pub shape_jitter: f64,
    /// Uniform R-R jitter as a fraction of the nominal interval.
    pub rr_jitter: f64,
    pub record_id: String,
    pub lead_name: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            bpm: 60.0,
            duration_s: 60.0,
            sampling_rate: 360.0,
            noise_snr_db: None,
            morphologies: vec![BeatMorphology::normal()],
            class_weights: vec![1.0],
            shape_jitter: 0.05,
            rr_jitter: 0.0,
            record_id: "synth".into(),
            lead_name: "MLII".into(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Only morphology `class` of the AAMI set.
    pub fn single_class(class: usize) -> Self {
        let mut weights = vec![0.0; 5];
        weights[class.min(4)] = 1.0;
        SynthConfig { morphologies: BeatMorphology::aami_set(), class_weights: weights, ..SynthConfig::default() }
    }
}

/// Renders the configured rhythm and returns the record with one annotation
/// per beat at its R-peak sample.
pub fn synth_ecg(config: &SynthConfig) -> Result<(Record, Vec<Annotation>)> {
    if !(config.bpm > 0.0 && config.bpm.is_finite()) || !(config.duration_s > 0.0 && config.duration_s.is_finite()) {
        return Err(Error::Config(format!(
            "bpm ({}) and duration ({}) must be positive",
            config.bpm, config.duration_s
        )));
    }
    if config.morphologies.is_empty() || config.morphologies.len() != config.class_weights.len() {
        return Err(Error::Config("each morphology needs exactly one class weight".into()));
    }
    let chooser =
        WeightedIndex::new(&config.class_weights).map_err(|e| Error::Config(format!("class weights: {e}")))?;
    let fs = config.sampling_rate;
    let n = (config.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::Config("synthetic record would have no samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rr = 60.0 / config.bpm;
    let jitter =
        Normal::new(0.0, config.shape_jitter.max(0.0)).map_err(|e| Error::Config(format!("shape jitter: {e}")))?;

    let mut clean = vec![0.0; n];
    let mut annotations = Vec::new();
    let mut t = 0.5 * rr;
    while t < config.duration_s {
        let class = chooser.sample(&mut rng);
        let shape = &config.morphologies[class];
        let shift = shape.prematurity * rr;
        let beat_t = t - shift;
        let idx = (beat_t * fs).round();
        if idx >= 0.0 && (idx as usize) < n {
            let r_index = idx as usize;
            annotations.push(Annotation { sample_index: r_index, symbol: shape.symbol });
            for w in &shape.waves {
                let amp = w.amplitude * (1.0 + jitter.sample(&mut rng));
                let width = (w.width_s * (1.0 + jitter.sample(&mut rng))).max(1e-3);
                let centre = r_index as f64 / fs + w.offset_s;
                let lo = ((centre - 5.0 * width) * fs).floor().max(0.0) as usize;
                let hi = (((centre + 5.0 * width) * fs).ceil().max(0.0) as usize).min(n);
                for (i, v) in clean.iter_mut().enumerate().take(hi).skip(lo) {
                    let z = (i as f64 / fs - centre) / width;
                    *v += amp * (-0.5 * z * z).exp();
                }
            }
        }
        // The nominal schedule is kept, so an early beat gets a compensatory pause.
        t += rr * (1.0 + config.rr_jitter * rng.random_range(-1.0..=1.0));
    }

    let samples = match config.noise_snr_db {
        None => clean,
        Some(snr) => {
            let power = clean.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise: {e}")))?;
            clean.into_iter().map(|v| v + noise.sample(&mut rng)).collect()
        }
    };
    let record = Record::new(config.record_id.clone(), config.lead_name.clone(), fs, samples)?;
    Ok((record, annotations))
}

/// One record per class, long enough to hold `beats` windows of
/// `[r − 99, r + 201)` at 72 bpm.
pub fn synth_class_record(
    class: usize,
    beats: usize,
    noise_snr_db: Option<f64>,
    seed: u64,
) -> Result<(Record, Vec<Annotation>)> {
    if class >= BeatMorphology::aami_set().len() {
        return Err(Error::Config(format!("synthetic class {class} does not exist (0..=4)")));
    }
    let bpm = 72.0;
    let cfg = SynthConfig {
        bpm,
        // Half a beat of lead-in, one spare beat and one second for the last window.
        duration_s: (beats as f64 + 1.5) * 60.0 / bpm + 1.0,
        noise_snr_db,
        rr_jitter: 0.05,
        record_id: format!("synth_{}", AAMI_CLASSES[class]),
        seed: seed.wrapping_add(class as u64),
        ..SynthConfig::single_class(class)
    };
    synth_ecg(&cfg)
}

/// A labelled window set with `beats_per_class` windows for each of the
/// first `classes` AAMI classes, cut `[r − 99, r + 201)` around the true
/// R-peaks of [`synth_class_record`] records.
pub fn synth_beat_dataset(
    classes: usize,
    beats_per_class: usize,
    noise_snr_db: Option<f64>,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 || classes > AAMI_CLASSES.len() {
        return Err(Error::Config(format!("synthetic datasets have 2..=5 classes, got {classes}")));
    }
    let mut windows = Vec::with_capacity(classes * beats_per_class);
    for class in 0..classes {
        let (record, ann) = synth_class_record(class, beats_per_class, noise_snr_db, seed)?;
        let peaks: Vec<usize> = ann.iter().map(|a| a.sample_index).collect();
        let cut = window_beats(&record, &peaks, 99, 201)?;
        if cut.windows.len() < beats_per_class {
            return Err(Error::TooShort(format!(
                "class {class}: only {} complete windows for {beats_per_class} beats",
                cut.windows.len()
            )));
        }
        windows.extend(cut.windows.into_iter().take(beats_per_class).map(|w| BeatWindow {
            samples: w.samples,
            r_peak_offset: 99,
            label: class,
            source_record: record.record_id.clone(),
        }));
    }
    Dataset::new(windows, AAMI_CLASSES[..classes].iter().map(|s| s.to_string()).collect())
}

//! Multi-level discrete wavelet transform with symmetric boundary extension.
//!
//! Each analysis stage convolves with the decomposition filters and keeps
//! every second output, producing `(n + F - 1) / 2` coefficients for an
//! input of length `n` and filter length `F`. The extra coefficients carried
//! by the extension make the inverse exact for any input length.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Daubechies-4 (eight taps) scaling filter, decomposition orientation.
const DB4_DEC_LO: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wavelet {
    Haar,
    Db4,
}

impl Wavelet {
    pub fn id(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Db4 => "db4",
        }
    }

    pub fn filter_len(self) -> usize {
        self.dec_lo().len()
    }

    pub fn dec_lo(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Wavelet::Db4 => DB4_DEC_LO.to_vec(),
        }
    }

    /// Quadrature mirror of the scaling filter: `g[k] = (-1)^(k+1) h[F-1-k]`.
    pub fn dec_hi(self) -> Vec<f64> {
        let lo = self.dec_lo();
        let n = lo.len();
        (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                sign * lo[n - 1 - k]
            })
            .collect()
    }

    pub fn rec_lo(self) -> Vec<f64> {
        self.dec_lo().into_iter().rev().collect()
    }

    pub fn rec_hi(self) -> Vec<f64> {
        self.dec_hi().into_iter().rev().collect()
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Wavelet::Haar),
            "db4" => Ok(Wavelet::Db4),
            other => Err(Error::Config(format!("unknown wavelet '{other}'"))),
        }
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub approximation: Vec<f64>,
    /// Detail bands ordered coarse → fine.
    pub details: Vec<Vec<f64>>,
    pub wavelet_id: String,
    pub original_length: usize,
}

impl WaveletCoeffs {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn wavelet(&self) -> Result<Wavelet> {
        self.wavelet_id.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Hard,
    Soft,
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(ThresholdMode::Hard),
            "soft" => Ok(ThresholdMode::Soft),
            other => Err(Error::Config(format!("unknown threshold mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `σ·√(2 ln N)` with `σ = median(|finest detail|) / 0.6745`.
    Universal,
}

/// Half-sample symmetric extension: `… x1 x0 | x0 x1 … xn-1 | xn-1 xn-2 …`.
#[inline]
fn symmetric_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn coeff_len(n: usize, filter_len: usize) -> usize {
    (n + filter_len - 1) / 2
}

/// Input length at every stage of the cascade, finest first.
fn cascade_lengths(original: usize, filter_len: usize, levels: usize) -> Vec<usize> {
    let mut lens = Vec::with_capacity(levels + 1);
    lens.push(original);
    for _ in 0..levels {
        let last = *lens.last().unwrap();
        lens.push(coeff_len(last, filter_len));
    }
    lens
}

fn analysis_stage(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = lo.len();
    let out = coeff_len(n, f);
    let mut a = Vec::with_capacity(out);
    let mut d = Vec::with_capacity(out);
    for k in 0..out {
        let centre = 2 * k as isize + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let v = x[symmetric_index(centre - j as isize, n)];
            sa += lo[j] * v;
            sd += hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn synthesis_stage(a: &[f64], d: &[f64], rec_lo: &[f64], rec_hi: &[f64], out_len: usize) -> Vec<f64> {
    let f = rec_lo.len();
    let mut y = vec![0.0; out_len];
    for (i, yi) in y.iter_mut().enumerate() {
        // Valid part of the full upsampled convolution starts at F - 2.
        let p = i + f - 2;
        let k_lo = (p + 2).saturating_sub(f) / 2;
        let k_hi = (p / 2).min(a.len() - 1);
        let mut s = 0.0;
        for k in k_lo..=k_hi {
            let m = p - 2 * k;
            if m < f {
                s += a[k] * rec_lo[m] + d[k] * rec_hi[m];
            }
        }
        *yi = s;
    }
    y
}

pub fn dwt_decompose(signal: &[f64], wavelet: Wavelet, levels: usize) -> Result<WaveletCoeffs> {
    if levels == 0 {
        return Err(Error::Config("wavelet decomposition needs at least one level".into()));
    }
    let f = wavelet.filter_len();
    let lens = cascade_lengths(signal.len(), f, levels);
    if let Some(level) = lens[..levels].iter().position(|&n| n < f) {
        return Err(Error::TooShort(format!(
            "level {} input has {} samples, shorter than the {f}-tap {wavelet} filter",
            level + 1,
            lens[level]
        )));
    }
    let (lo, hi) = (wavelet.dec_lo(), wavelet.dec_hi());
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_stage(&approx, &lo, &hi);
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(WaveletCoeffs {
        approximation: approx,
        details,
        wavelet_id: wavelet.id().to_string(),
        original_length: signal.len(),
    })
}

pub fn dwt_reconstruct(coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
    let wavelet = coeffs.wavelet()?;
    let levels = coeffs.levels();
    if levels == 0 {
        return Err(Error::Structure("no detail bands".into()));
    }
    let lens = cascade_lengths(coeffs.original_length, wavelet.filter_len(), levels);
    if coeffs.approximation.len() != lens[levels] {
        return Err(Error::Structure(format!(
            "approximation has {} coefficients, expected {}",
            coeffs.approximation.len(),
            lens[levels]
        )));
    }
    for (i, d) in coeffs.details.iter().enumerate() {
        let expected = lens[levels - i];
        if d.len() != expected {
            return Err(Error::Structure(format!(
                "detail band {i} (coarse→fine) has {} coefficients, expected {expected}",
                d.len()
            )));
        }
    }
    let (rl, rh) = (wavelet.rec_lo(), wavelet.rec_hi());
    let mut approx = coeffs.approximation.clone();
    for (i, d) in coeffs.details.iter().enumerate() {
        approx = synthesis_stage(&approx, d, &rl, &rh, lens[levels - i - 1]);
    }
    Ok(approx)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Noise-adaptive universal threshold computed from the finest detail band.
pub fn universal_threshold(coeffs: &WaveletCoeffs) -> f64 {
    let Some(finest) = coeffs.details.last() else {
        return 0.0;
    };
    let mut mags: Vec<f64> = finest.iter().map(|c| c.abs()).collect();
    let sigma = median(&mut mags) / 0.6745;
    let n = coeffs.original_length.max(2) as f64;
    sigma * (2.0 * n.ln()).sqrt()
}

/// Shrinks detail coefficients; the approximation band is left untouched.
pub fn dwt_threshold(coeffs: &WaveletCoeffs, mode: ThresholdMode, threshold: Threshold) -> Result<WaveletCoeffs> {
    let thr = match threshold {
        Threshold::Fixed(t) if t < 0.0 || !t.is_finite() => {
            return Err(Error::Config(format!("threshold {t} must be a nonnegative number")))
        }
        Threshold::Fixed(t) => t,
        Threshold::Universal => universal_threshold(coeffs),
    };
    let shrink = |c: f64| match mode {
        ThresholdMode::Hard => {
            if c.abs() < thr {
                0.0
            } else {
                c
            }
        }
        ThresholdMode::Soft => c.signum() * (c.abs() - thr).max(0.0),
    };
    let mut out = coeffs.clone();
    for band in &mut out.details {
        band.iter_mut().for_each(|c| *c = shrink(*c));
    }
    Ok(out)
}

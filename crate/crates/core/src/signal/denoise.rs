use crate::error::Result;

use super::record::Record;
use super::wavelet::{dwt_decompose, dwt_reconstruct, dwt_threshold, Threshold, ThresholdMode, Wavelet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    pub wavelet: Wavelet,
    pub levels: usize,
    pub mode: ThresholdMode,
    pub threshold: Threshold,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { wavelet: Wavelet::Db4, levels: 4, mode: ThresholdMode::Soft, threshold: Threshold::Universal }
    }
}

/// Decompose, shrink the detail bands, reconstruct.
pub fn denoise(record: &Record, config: &DenoiseConfig) -> Result<Record> {
    record.validate()?;
    let coeffs = dwt_decompose(&record.samples, config.wavelet, config.levels)?;
    let shrunk = dwt_threshold(&coeffs, config.mode, config.threshold)?;
    Ok(record.with_samples(dwt_reconstruct(&shrunk)?))
}

//! Signal conditioning and fiducial-point extraction.

mod beats;
mod denoise;
mod qrs;
mod record;
mod wavelet;

pub use beats::{segment, window_beats, BeatWindow, RawWindow, Windowed};
pub use denoise::{denoise, DenoiseConfig};
pub use qrs::{pan_tompkins, qrs_stages, PanTompkinsConfig, QrsStages};
pub use record::Record;
pub use wavelet::{
    dwt_decompose, dwt_reconstruct, dwt_threshold, universal_threshold, Threshold, ThresholdMode, Wavelet,
    WaveletCoeffs,
};

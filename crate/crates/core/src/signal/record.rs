use crate::error::{Error, Result};
use crate::nn::ensure_finite;

/// One single-lead ECG recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub record_id: String,
    pub lead_name: String,
    /// Hz
    pub sampling_rate: f64,
    /// Millivolts.
    pub samples: Vec<f64>,
}

impl Record {
    pub fn new(
        record_id: impl Into<String>,
        lead_name: impl Into<String>,
        sampling_rate: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        let record = Record { record_id: record_id.into(), lead_name: lead_name.into(), sampling_rate, samples };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return Err(Error::Config(format!(
                "record {}: sampling rate {} must be positive",
                self.record_id, self.sampling_rate
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::Empty(format!("record {} has no samples", self.record_id)));
        }
        ensure_finite(&self.samples, &format!("record {}", self.record_id))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Record { samples, ..self.clone() }
    }
}

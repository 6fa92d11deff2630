use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::parse_key_values;
use crate::error::{Error, Result};

/// Architecture of a hierarchical attention network.
///
/// A window of `num_segments × segment_len` samples is cut into segments.
/// Each segment goes through the conv layer, the segment LSTM and the
/// segment attention pool; the pooled segment vectors then feed the sequence
/// LSTM and sequence attention, followed by dropout, a ReLU FC layer and the
/// output layer.
///
/// With `hierarchy_levels = 3`, the pooled segment vectors are first grouped
/// into runs of `group_size`; an extra LSTM + attention level summarizes each
/// group before the sequence level.
#[derive(Debug, Clone, PartialEq)]
pub struct HanConfig {
    pub num_segments: usize,
    pub segment_len: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub lstm_units: usize,
    pub fc_units: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub hierarchy_levels: usize,
    pub group_size: usize,
    pub bidirectional: bool,
}

impl Default for HanConfig {
    fn default() -> Self {
        HanConfig {
            num_segments: 10,
            segment_len: 30,
            conv_filters: 16,
            conv_kernel: 21,
            conv_stride: 1,
            lstm_units: 64,
            fc_units: 128,
            num_classes: 5,
            dropout_rate: 0.2,
            hierarchy_levels: 2,
            group_size: 5,
            bidirectional: false,
        }
    }
}

/// Keys accepted by [`HanConfig::set`], in serialization order.
pub const HAN_CONFIG_KEYS: [&str; 12] = [
    "num_segments",
    "segment_len",
    "conv_filters",
    "conv_kernel",
    "conv_stride",
    "lstm_units",
    "fc_units",
    "num_classes",
    "dropout_rate",
    "hierarchy_levels",
    "group_size",
    "bidirectional",
];

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

impl HanConfig {
    pub fn window_len(&self) -> usize {
        self.num_segments * self.segment_len
    }

    /// Post-conv steps per segment.
    pub fn conv_steps(&self) -> usize {
        if self.segment_len < self.conv_kernel || self.conv_stride == 0 {
            return 0;
        }
        (self.segment_len - self.conv_kernel) / self.conv_stride + 1
    }

    /// Width of every encoder output (and of every pooled vector).
    pub fn encoder_width(&self) -> usize {
        self.lstm_units * if self.bidirectional { 2 } else { 1 }
    }

    pub fn num_groups(&self) -> usize {
        if self.hierarchy_levels == 3 {
            self.num_segments / self.group_size.max(1)
        } else {
            self.num_segments
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_segments", self.num_segments),
            ("segment_len", self.segment_len),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("conv_stride", self.conv_stride),
            ("lstm_units", self.lstm_units),
            ("fc_units", self.fc_units),
            ("num_classes", self.num_classes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be at least 2".into()));
        }
        if self.segment_len < self.conv_kernel {
            return Err(Error::Config(format!(
                "segment_len {} is shorter than conv_kernel {}",
                self.segment_len, self.conv_kernel
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
        }
        match self.hierarchy_levels {
            2 => {}
            3 => {
                if self.group_size == 0 || !self.num_segments.is_multiple_of(self.group_size) {
                    return Err(Error::Config(format!(
                        "group_size {} does not divide num_segments {}",
                        self.group_size, self.num_segments
                    )));
                }
            }
            n => return Err(Error::Config(format!("hierarchy_levels must be 2 or 3, got {n}"))),
        }
        Ok(())
    }

    /// Sets one field from its textual value. Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "num_segments" => self.num_segments = parse_value(key, value)?,
            "segment_len" => self.segment_len = parse_value(key, value)?,
            "conv_filters" => self.conv_filters = parse_value(key, value)?,
            "conv_kernel" => self.conv_kernel = parse_value(key, value)?,
            "conv_stride" => self.conv_stride = parse_value(key, value)?,
            "lstm_units" => self.lstm_units = parse_value(key, value)?,
            "fc_units" => self.fc_units = parse_value(key, value)?,
            "num_classes" => self.num_classes = parse_value(key, value)?,
            "dropout_rate" => self.dropout_rate = parse_value(key, value)?,
            "hierarchy_levels" => self.hierarchy_levels = parse_value(key, value)?,
            "group_size" => self.group_size = parse_value(key, value)?,
            "bidirectional" => self.bidirectional = parse_flag(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// `key=value` lines in [`HAN_CONFIG_KEYS`] order. Floats use the
    /// shortest round-trip formatting, so parsing the text back is exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in HAN_CONFIG_KEYS {
            let v = match key {
                "num_segments" => self.num_segments.to_string(),
                "segment_len" => self.segment_len.to_string(),
                "conv_filters" => self.conv_filters.to_string(),
                "conv_kernel" => self.conv_kernel.to_string(),
                "conv_stride" => self.conv_stride.to_string(),
                "lstm_units" => self.lstm_units.to_string(),
                "fc_units" => self.fc_units.to_string(),
                "num_classes" => self.num_classes.to_string(),
                "dropout_rate" => format!("{:?}", self.dropout_rate),
                "hierarchy_levels" => self.hierarchy_levels.to_string(),
                "group_size" => self.group_size.to_string(),
                "bidirectional" => self.bidirectional.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key}={v}");
        }
        s
    }

    /// Parses `key=value` text starting from the defaults. Unknown keys are errors.
    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = HanConfig::default();
        for (k, v) in parse_key_values(text, origin)? {
            if !cfg.set(&k, &v)? {
                return Err(Error::Config(format!("{origin}: unknown key '{k}'")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Names of fields that change the parameter layout and differ between
    /// the two configs. Dropout is ignored since it owns no parameters.
    pub fn structural_differences(&self, other: &HanConfig) -> Vec<&'static str> {
        let mut diffs = Vec::new();
        let pairs = [
            ("num_segments", self.num_segments, other.num_segments),
            ("segment_len", self.segment_len, other.segment_len),
            ("conv_filters", self.conv_filters, other.conv_filters),
            ("conv_kernel", self.conv_kernel, other.conv_kernel),
            ("conv_stride", self.conv_stride, other.conv_stride),
            ("lstm_units", self.lstm_units, other.lstm_units),
            ("fc_units", self.fc_units, other.fc_units),
            ("num_classes", self.num_classes, other.num_classes),
            ("hierarchy_levels", self.hierarchy_levels, other.hierarchy_levels),
        ];
        for (name, a, b) in pairs {
            if a != b {
                diffs.push(name);
            }
        }
        if self.hierarchy_levels == 3 && other.hierarchy_levels == 3 && self.group_size != other.group_size {
            diffs.push("group_size");
        }
        if self.bidirectional != other.bidirectional {
            diffs.push("bidirectional");
        }
        diffs
    }
}

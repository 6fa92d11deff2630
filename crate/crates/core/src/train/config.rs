use std::fmt::Write as _;

use crate::data::parse_key_values;
use crate::error::{Error, Result};
use crate::model::{parse_value, HanConfig};

/// Optimization settings. Adam moments use the usual 0.9 / 0.999 / 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { learning_rate: 0.001, epochs: 30, batch_size: 64, dropout_rate: 0.2, seed: 0 }
    }
}

impl Hyperparams {
    /// A learning rate of zero is allowed and leaves the weights untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning_rate {} must be finite and >= 0", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }
}

pub const HYPERPARAM_KEYS: [&str; 4] = ["learning_rate", "epochs", "batch_size", "seed"];

/// Architecture plus optimization settings, as read from a training config
/// file. `dropout_rate` is a single key that sets both halves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainConfig {
    pub model: HanConfig,
    pub hyper: Hyperparams,
}

impl TrainConfig {
    /// Sets one key. Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "learning_rate" => self.hyper.learning_rate = parse_value(key, value)?,
            "epochs" => self.hyper.epochs = parse_value(key, value)?,
            "batch_size" => self.hyper.batch_size = parse_value(key, value)?,
            "seed" => self.hyper.seed = parse_value(key, value)?,
            "dropout_rate" => {
                self.model.set(key, value)?;
                self.hyper.dropout_rate = self.model.dropout_rate;
            }
            _ => return self.model.set(key, value),
        }
        Ok(true)
    }

    pub fn is_known_key(key: &str) -> bool {
        HYPERPARAM_KEYS.contains(&key) || crate::model::HAN_CONFIG_KEYS.contains(&key)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.hyper.validate()
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (k, v) in parse_key_values(text, origin)? {
            if !cfg.set(&k, &v)? {
                return Err(Error::Config(format!("{origin}: unknown key '{k}'")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = self.model.to_text();
        let h = &self.hyper;
        let _ = writeln!(s, "learning_rate={:?}", h.learning_rate);
        let _ = writeln!(s, "epochs={}", h.epochs);
        let _ = writeln!(s, "batch_size={}", h.batch_size);
        let _ = writeln!(s, "seed={}", h.seed);
        s
    }
}

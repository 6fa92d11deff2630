use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Maximum number of coordinates to probe; all of them when the point is smaller.
    pub max_coords: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { step: 1e-5, max_coords: 64, tolerance: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(1, |analytic|, |numeric|)`
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Compares an analytic gradient of the scalar function `f` at `point`
/// against central finite differences on a random subset of coordinates.
pub fn gradient_check<F>(mut f: F, point: &[f64], analytic: &[f64], config: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if point.len() != analytic.len() {
        return Err(Error::Shape(format!("point has {} coordinates, gradient {}", point.len(), analytic.len())));
    }
    if point.is_empty() {
        return Err(Error::Empty("gradient check over zero coordinates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let coords: Vec<usize> = if point.len() <= config.max_coords {
        (0..point.len()).collect()
    } else {
        let mut c = sample(&mut rng, point.len(), config.max_coords).into_vec();
        c.sort_unstable();
        c
    };

    let mut x = point.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: coords[0], checked: coords.len() };
    for &i in &coords {
        let orig = x[i];
        x[i] = orig + config.step;
        let plus = f(&x)?;
        x[i] = orig - config.step;
        let minus = f(&x)?;
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * config.step);
        if !numeric.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFinite(format!("coordinate {i}: analytic {}, numeric {numeric}", analytic[i])));
        }
        let rel = (analytic[i] - numeric).abs() / 1f64.max(analytic[i].abs()).max(numeric.abs());
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}

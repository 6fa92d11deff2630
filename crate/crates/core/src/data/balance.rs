//! Class balancing: random majority undersampling and SMOTE oversampling.

use std::collections::{BTreeMap, HashMap};

use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::BeatWindow;

use super::dataset::Dataset;

/// Keeps a uniform random subset of `target` windows of `class`; every other
/// window is kept in place. Relative order is preserved.
pub fn undersample(dataset: &Dataset, class: usize, target: usize, seed: u64) -> Result<Dataset> {
    if class >= dataset.num_classes() {
        return Err(Error::Config(format!("class {class} does not exist")));
    }
    let members = dataset.indices_of(class);
    if target >= members.len() {
        return Ok(dataset.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; dataset.len()];
    members.iter().for_each(|&i| keep[i] = false);
    for k in sample(&mut rng, members.len(), target) {
        keep[members[k]] = true;
    }
    let kept: Vec<usize> = (0..dataset.len()).filter(|&i| keep[i]).collect();
    Ok(dataset.subset(&kept))
}

/// Where a synthetic SMOTE window came from (indices into the input dataset).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoteOrigin {
    pub parent: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Original windows first, then the synthetic ones.
    pub dataset: Dataset,
    /// One entry per synthetic window, in output order.
    pub origins: Vec<SmoteOrigin>,
}

/// `x + λ (neighbor − x)`
pub fn interpolate(x: &[f64], neighbor: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(neighbor).map(|(a, b)| a + lambda * (b - a)).collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest members of `pool` to `pool[of]`, excluding itself; ties
/// are broken by position.
fn nearest(dataset: &Dataset, pool: &[usize], of: usize, k: usize) -> Vec<usize> {
    let x = &dataset.windows[pool[of]].samples;
    let mut d: Vec<(f64, usize)> = pool
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != of)
        .map(|(_, &idx)| (squared_distance(x, &dataset.windows[idx].samples), idx))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, idx)| idx).collect()
}

/// SMOTE with per-class growth factors. A class with factor `f` ends up with
/// `round(n · f)` windows; classes without a factor are left alone.
pub fn smote_with_origins(
    dataset: &Dataset,
    k: usize,
    factors: &BTreeMap<usize, f64>,
    seed: u64,
) -> Result<SmoteOutput> {
    if k == 0 {
        return Err(Error::Config("SMOTE needs k ≥ 1".into()));
    }
    let mut out = dataset.clone();
    let mut origins = Vec::new();
    for (&class, &factor) in factors {
        if class >= dataset.num_classes() {
            return Err(Error::Config(format!("SMOTE factor given for unknown class {class}")));
        }
        if !(factor.is_finite() && factor >= 1.0) {
            return Err(Error::Config(format!(
                "SMOTE factor {factor} for class {} must be ≥ 1",
                dataset.class_names[class]
            )));
        }
        let members = dataset.indices_of(class);
        let n = members.len();
        let target = (n as f64 * factor).round() as usize;
        if target <= n {
            continue;
        }
        if n < 2 {
            return Err(Error::Config(format!(
                "class {} has {n} window(s); SMOTE needs at least 2",
                dataset.class_names[class]
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (class as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let count = target - n;
        let parents: Vec<usize> = (0..count).map(|j| order[j % n]).collect();

        let mut unique: Vec<usize> = parents.clone();
        unique.sort_unstable();
        unique.dedup();
        let kk = k.min(n - 1);
        let neighbours: HashMap<usize, Vec<usize>> =
            unique.par_iter().map(|&p| (p, nearest(dataset, &members, p, kk))).collect();

        for &p in &parents {
            let nn = &neighbours[&p];
            let neighbor = nn[rng.random_range(0..nn.len())];
            let lambda: f64 = rng.random();
            let parent = members[p];
            let src = &dataset.windows[parent];
            out.windows.push(BeatWindow {
                samples: interpolate(&src.samples, &dataset.windows[neighbor].samples, lambda),
                r_peak_offset: src.r_peak_offset,
                label: class,
                source_record: format!("{}+smote", src.source_record),
            });
            origins.push(SmoteOrigin { parent, neighbor, lambda });
        }
    }
    Ok(SmoteOutput { dataset: out, origins })
}

pub fn smote(dataset: &Dataset, k: usize, factors: &BTreeMap<usize, f64>, seed: u64) -> Result<Dataset> {
    smote_with_origins(dataset, k, factors, seed).map(|o| o.dataset)
}

/// One common factor for every non-majority class so that together they
/// reach `minority_total`; a common factor keeps their mutual ratios.
pub fn minority_factors(counts: &[usize], majority: usize, minority_total: usize) -> BTreeMap<usize, f64> {
    let current: usize = counts.iter().enumerate().filter(|&(c, _)| c != majority).map(|(_, &n)| n).sum();
    let mut out = BTreeMap::new();
    if current == 0 {
        return out;
    }
    let factor = (minority_total as f64 / current as f64).max(1.0);
    for (c, &n) in counts.iter().enumerate() {
        if c != majority && n > 0 {
            out.insert(c, factor);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceConfig {
    pub majority_class: usize,
    /// Majority windows kept after undersampling.
    pub majority_target: usize,
    /// Total minority windows after oversampling; defaults to `majority_target`.
    pub minority_total: Option<usize>,
    pub k: usize,
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig { majority_class: 0, majority_target: 50_000, minority_total: None, k: 5, seed: 0 }
    }
}

/// Undersamples the majority class, then oversamples every minority class
/// by the same factor. Intended for the training split only.
pub fn balance(train: &Dataset, config: &BalanceConfig) -> Result<Dataset> {
    let reduced = undersample(train, config.majority_class, config.majority_target, config.seed)?;
    let total = config.minority_total.unwrap_or(config.majority_target);
    let factors = minority_factors(&reduced.class_counts(), config.majority_class, total);
    smote(&reduced, config.k, &factors, config.seed.wrapping_add(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(points: &[(Vec<f64>, usize)]) -> Dataset {
        let windows = points
            .iter()
            .map(|(s, l)| BeatWindow { samples: s.clone(), r_peak_offset: 0, label: *l, source_record: "t".into() })
            .collect();
        Dataset::new(windows, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn midpoint_interpolation() {
        assert_eq!(interpolate(&[0.0, 0.0], &[1.0, 1.0], 0.5), vec![0.5, 0.5]);
    }

    #[test]
    fn two_point_class_lands_on_the_diagonal() {
        let d = ds(&[(vec![0.0, 0.0], 1), (vec![1.0, 1.0], 1)]);
        let out = smote_with_origins(&d, 1, &BTreeMap::from([(1, 3.0)]), 4).unwrap();
        assert_eq!(out.dataset.len(), 6);
        for (w, o) in out.dataset.windows[2..].iter().zip(&out.origins) {
            assert_eq!(w.samples[0], w.samples[1]);
            let expected = interpolate(&d.windows[o.parent].samples, &d.windows[o.neighbor].samples, o.lambda);
            assert_eq!(w.samples, expected);
        }
    }

    #[test]
    fn unit_factor_is_identity() {
        let d = ds(&[(vec![0.0], 0), (vec![1.0], 1), (vec![2.0], 1)]);
        let out = smote(&d, 5, &BTreeMap::from([(0, 1.0), (1, 1.0)]), 0).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn identical_parents_give_identical_children() {
        let d = ds(&[(vec![3.0, -1.0], 1), (vec![3.0, -1.0], 1)]);
        let out = smote(&d, 5, &BTreeMap::from([(1, 2.0)]), 1).unwrap();
        assert!(out.windows.iter().all(|w| w.samples == vec![3.0, -1.0]));
    }

    #[test]
    fn singleton_class_cannot_grow() {
        let d = ds(&[(vec![0.0], 0), (vec![1.0], 1)]);
        let err = smote(&d, 1, &BTreeMap::from([(1, 2.0)]), 0).unwrap_err();
        assert!(err.to_string().contains("class b"), "{err}");
    }

    #[test]
    fn undersample_large_target_is_noop() {
        let d = ds(&[(vec![0.0], 0), (vec![1.0], 0), (vec![2.0], 1)]);
        assert_eq!(undersample(&d, 0, 5, 0).unwrap(), d);
        let u = undersample(&d, 0, 1, 0).unwrap();
        assert_eq!(u.class_counts(), vec![1, 1]);
    }
}

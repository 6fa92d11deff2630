use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::HanModel;

use super::config::TrainConfig;
use super::fit::train;

/// A Cartesian grid over training-config keys, one `key=v1,v2,...` line per
/// axis. The first axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl Grid {
    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for (key, value) in crate::data::parse_key_values(text, origin)? {
            if !TrainConfig::is_known_key(&key) {
                return Err(Error::Config(format!("{origin}: unknown grid key '{key}'")));
            }
            let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
            if values.iter().any(String::is_empty) {
                return Err(Error::Config(format!("{origin}: empty value in '{key}={value}'")));
            }
            axes.push((key, values));
        }
        let grid = Grid { axes };
        if grid.is_empty() {
            return Err(Error::Empty(format!("{origin}: grid declares no configurations")));
        }
        Ok(grid)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    /// Number of configurations (zero for a grid without axes).
    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|(_, v)| v.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of configuration `id`, in axis order.
    pub fn point(&self, id: usize) -> Vec<&str> {
        let mut rem = id;
        let mut out = vec![""; self.axes.len()];
        for (k, (_, values)) in self.axes.iter().enumerate().rev() {
            out[k] = &values[rem % values.len()];
            rem /= values.len();
        }
        out
    }

    /// Every configuration, each applied on top of `base`, in grid order.
    pub fn expand(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        (0..self.len())
            .map(|id| {
                let mut cfg = base.clone();
                for ((key, _), value) in self.axes.iter().zip(self.point(id)) {
                    cfg.set(key, value)?;
                }
                cfg.validate().map_err(|e| Error::Config(format!("grid configuration {id}: {e}")))?;
                Ok(cfg)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    pub config_id: usize,
    pub val_acc: f64,
    pub param_count: usize,
    pub values: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best: TrainConfig,
    pub best_id: usize,
    /// One entry per configuration, in grid order.
    pub leaderboard: Vec<LeaderboardEntry>,
    pub keys: Vec<String>,
}

impl GridSearchResult {
    pub fn leaderboard_csv(&self) -> String {
        let mut s = String::from("config_id,val_acc,param_count");
        for k in &self.keys {
            let _ = write!(s, ",{k}");
        }
        s.push('\n');
        for e in &self.leaderboard {
            let _ = write!(s, "{},{:?},{}", e.config_id, e.val_acc, e.param_count);
            for v in &e.values {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Trains every grid configuration from scratch (model seeded with the
/// config's own `seed`) and keeps the one with the highest final validation
/// accuracy; ties go to the earlier configuration.
///
/// Configurations run in parallel on the current rayon pool, each fully
/// isolated, so the outcome does not depend on the pool size.
pub fn grid_search(
    base: &TrainConfig,
    grid: &Grid,
    train_set: &Dataset,
    val_set: &Dataset,
) -> Result<GridSearchResult> {
    grid_search_with(base, grid, train_set, val_set, |_| {})
}

/// [`grid_search`] with a callback after each finished configuration.
pub fn grid_search_with<F: Fn(&LeaderboardEntry) + Sync>(
    base: &TrainConfig,
    grid: &Grid,
    train_set: &Dataset,
    val_set: &Dataset,
    on_done: F,
) -> Result<GridSearchResult> {
    let configs = grid.expand(base)?;
    if configs.is_empty() {
        return Err(Error::Empty("grid declares no configurations".into()));
    }
    let leaderboard: Vec<LeaderboardEntry> = configs
        .par_iter()
        .enumerate()
        .map(|(id, cfg)| {
            let model = HanModel::build(&cfg.model, cfg.hyper.seed)?;
            let (_, history) = train(&model, train_set, val_set, &cfg.hyper)?;
            let entry = LeaderboardEntry {
                config_id: id,
                val_acc: history.last().map_or(0.0, |e| e.val_acc),
                param_count: model.param_count(),
                values: grid.point(id).into_iter().map(String::from).collect(),
            };
            on_done(&entry);
            Ok(entry)
        })
        .collect::<Result<_>>()?;
    let mut best_id = 0;
    for e in &leaderboard {
        if e.val_acc > leaderboard[best_id].val_acc {
            best_id = e.config_id;
        }
    }
    Ok(GridSearchResult {
        best: configs[best_id].clone(),
        best_id,
        leaderboard,
        keys: grid.axes.iter().map(|(k, _)| k.clone()).collect(),
    })
}

//! Training loop, evaluation metrics and grid search.

mod config;
mod fit;
mod grid;
mod metrics;

pub use config::{Hyperparams, TrainConfig, HYPERPARAM_KEYS};
pub use fit::{train, train_with, EpochStats, TrainHistory};
pub use grid::{grid_search, grid_search_with, Grid, GridSearchResult, LeaderboardEntry};
pub use metrics::{evaluate, predict_all, Metrics};

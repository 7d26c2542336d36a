//! Metrics, cross-validated tuning, feature elimination and reports.

mod distribution;
mod importance;
mod leaderboard;
mod metrics;
mod rfecv;
mod search;

pub use distribution::{box_summary, distribution_csv, distribution_json, fold_distribution, BoxSummary, MIN_SCORES};
pub use importance::{coefficient_report, lasso_importance, CoefficientReport};
pub use leaderboard::{leaderboard, EvalReport, LeaderboardRow, COLUMNS};
pub use metrics::{metrics, Metric, Metrics, MAPE_ZERO_CUTOFF};
pub use rfecv::{rfecv, RfecvResult, RfecvStep};
pub use search::{cross_validate, grid_search_cv, grid_search_on_folds, CvOptions, CvRow, FoldData, Folds, GridSearch};

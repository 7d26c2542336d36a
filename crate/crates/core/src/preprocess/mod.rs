//! From raw tables to model-ready matrices: target encoding, iterative
//! imputation, stratified splitting, fold assignment and standardization.

mod encode;
mod impute;
mod pipeline;
mod scale;
mod split;

pub use encode::{m_estimate, LevelStats, MEstimateEncoder};
pub use impute::{iterative_impute, ImputeConfig, ImputeReport};
pub use pipeline::{prepare, prepare_with_split, stack_rows, PipelineConfig, PreparedData};
pub use scale::{ColumnScale, Standardizer};
pub use split::{kfold_indices, stratified_split, stratified_split_indices, SplitIndices, SplitPlan};

//! Risk-preference elicitation and prediction workbench.
//!
//! * [`elicitation`] scores multiple-price-list sheets and Likert answers.
//! * [`synthdata`] describes the register feature dictionary and generates
//!   synthetic datasets with planted ground truth.
//! * [`preprocess`] turns raw tables into model-ready matrices.
//! * [`models`] is the regression zoo behind one fit/predict contract.
//! * [`evaluation`] holds metrics, cross-validated tuning, feature
//!   elimination and the leaderboard.

pub mod elicitation;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod preprocess;
pub mod stats;
pub mod synthdata;

pub use error::{Error, Result};

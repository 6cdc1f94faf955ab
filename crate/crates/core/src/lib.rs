//! Sparse linear regression with tuning-free Lasso selection.
//!
//! The crate fits Lasso solution paths by coordinate descent and selects
//! features by comparing each feature's entry point on the path against
//! permuted pseudo-features. BIC and cross-validation tuning are provided as
//! baselines, together with a synthetic-data generator, selection metrics and
//! a Monte Carlo benchmark harness.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod datagen;
pub mod design;
pub mod error;
pub mod etlasso;
pub mod lasso_path;
pub mod metrics;

pub use baselines::{bic_select, cv_select, BaselineOptions, CriterionTrace};
pub use design::{standardize, DesignMatrix, Response};
pub use error::{Error, Result};
pub use etlasso::{et_lasso_select, EtLassoOptions, SelectionResult};
pub use lasso_path::{fit_path, GridSpec, LambdaGrid, LassoPath, SolverOptions};

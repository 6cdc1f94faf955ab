use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::merge_fields;
use super::dataset::{read_dataset, Dataset, DatasetArgs};
use super::{emit, CliError};
use crate::baselines::{bic_select, cv_select, BaselineOptions};
use crate::bench::{Method, REPORT_SCHEMA_VERSION};
use crate::etlasso::{et_lasso_select, EtLassoOptions, Refit, Stage2Pseudo};
use crate::lasso_path::{GridSpec, SolverOptions};
use crate::metrics::mse;

/// ChaCha stream reserved for the train/test split.
const SPLIT_STREAM: u64 = 3;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SelectArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub data: DatasetArgs,
    /// Fraction of rows used for fitting; the rest are held out [default: 1].
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Seed for the split, permutations and CV folds [default: 2024].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Methods to run [default: etlasso].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Number of lambda grid points [default: 100].
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// Ratio of the smallest to the largest grid lambda [default: 0.001].
    #[arg(long)]
    pub grid_ratio: Option<f64>,
    /// Coordinate descent tolerance [default: 1e-7].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sweep budget per grid point [default: 10000].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Baseline paths stop once more than this fraction of n is active [default: 0.5].
    #[arg(long)]
    pub max_df_fraction: Option<f64>,
    /// Pseudo block used in the second stage [default: full].
    #[arg(long, value_enum)]
    pub stage2_pseudo: Option<Stage2Pseudo>,
    /// Coefficient estimate on the ET-Lasso selection [default: ols].
    #[arg(long, value_enum)]
    pub refit: Option<Refit>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Fully resolved `select` settings, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub data: PathBuf,
    pub response: String,
    pub features: Vec<String>,
    pub delimiter: char,
    pub no_header: bool,
    pub train_fraction: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub folds: usize,
    pub max_df_fraction: f64,
    pub stage2_pseudo: Stage2Pseudo,
    pub refit: Refit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCoefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSelection {
    pub method: Method,
    pub selected: Vec<String>,
    /// Raw-scale coefficients of the selected features.
    pub coefficients: Vec<NamedCoefficient>,
    pub intercept: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_stage1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_stage2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_lambda: Option<f64>,
    pub train_mse: f64,
    /// Absent when every row was used for fitting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mse: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub schema_version: u32,
    pub config: SelectConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub results: Vec<MethodSelection>,
}

impl SelectArgs {
    pub(crate) fn merged(mut self, mut file: SelectArgs) -> Self {
        let data = std::mem::take(&mut self.data).merged(std::mem::take(&mut file.data));
        let mut out = merge_fields!(self, file;
            opt: train_fraction, seed, methods, grid_count, grid_ratio, tol, max_iter,
                 folds, max_df_fraction, stage2_pseudo, refit, out;
            switch: );
        out.data = data;
        out
    }

    fn to_config(&self, ds: &Dataset) -> Result<SelectConfig, CliError> {
        let train_fraction = self.train_fraction.unwrap_or(1.0);
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(CliError::Config(format!(
                "train fraction must lie in (0, 1], got {train_fraction}"
            )));
        }
        let mut methods = Vec::new();
        for &m in self.methods.as_deref().unwrap_or(&[Method::Etlasso]) {
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        if methods.is_empty() {
            return Err(CliError::Config("no methods requested".into()));
        }
        let grid = GridSpec {
            count: self.grid_count.unwrap_or(GridSpec::default().count),
            ratio: self.grid_ratio.unwrap_or(GridSpec::default().ratio),
        };
        grid.validate()?;
        let solver = SolverOptions {
            tol: self.tol.unwrap_or(SolverOptions::default().tol),
            max_iter: self.max_iter.unwrap_or(SolverOptions::default().max_iter),
        };
        if !(solver.tol > 0.0) || solver.max_iter == 0 {
            return Err(CliError::Config("tolerance and sweep budget must be positive".into()));
        }
        let max_df_fraction = self
            .max_df_fraction
            .unwrap_or(BaselineOptions::default().max_df_fraction);
        if !(max_df_fraction > 0.0) {
            return Err(CliError::Config("max-df-fraction must be positive".into()));
        }
        Ok(SelectConfig {
            data: self.data.data.clone().unwrap_or_default(),
            response: ds.response_name.clone(),
            features: ds.feature_names.clone(),
            delimiter: self.data.delimiter.unwrap_or(','),
            no_header: self.data.no_header,
            train_fraction,
            seed: self.seed.unwrap_or(2024),
            methods,
            grid,
            solver,
            folds: self.folds.unwrap_or(5),
            max_df_fraction,
            stage2_pseudo: self.stage2_pseudo.unwrap_or_default(),
            refit: self.refit.unwrap_or_default(),
        })
    }
}

/// Seeded train/test split; both parts are returned in ascending order.
pub fn split_rows(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n);
    if n_train == n {
        return ((0..n).collect(), Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn predict(ds: &Dataset, rows: &[usize], cols: &[usize], coefs: &[f64], intercept: f64) -> Vec<f64> {
    rows.iter()
        .map(|&i| intercept + cols.iter().zip(coefs).map(|(&j, b)| b * ds.x[(i, j)]).sum::<f64>())
        .collect()
}

fn observed(ds: &Dataset, rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| ds.y[i]).collect()
}

/// Runs the configured methods on an already loaded data set.
pub fn select_on(ds: &Dataset, cfg: &SelectConfig) -> Result<SelectReport, CliError> {
    let (train, test) = split_rows(ds.nrows(), cfg.train_fraction, cfg.seed);
    if train.len() < 2 {
        return Err(CliError::Config(format!(
            "training set has {} rows; at least 2 are needed",
            train.len()
        )));
    }
    let (x, y) = ds.standardize_rows(&train)?;
    let baseline = BaselineOptions {
        grid: cfg.grid,
        solver: cfg.solver,
        max_df_fraction: cfg.max_df_fraction,
    };

    let mut results = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let (cols, coefs, intercept, cutoffs, chosen_lambda) = match method {
            Method::Etlasso => {
                let opts = EtLassoOptions {
                    grid: cfg.grid,
                    solver: cfg.solver,
                    stage2_pseudo: cfg.stage2_pseudo,
                    refit: cfg.refit,
                };
                let r = et_lasso_select(&x, &y, cfg.seed, &opts)?;
                let cutoffs = (Some(r.cutoff_stage1()), r.cutoff_stage2());
                (r.selected, r.coefficients, r.intercept, cutoffs, None)
            }
            Method::Bic | Method::Cv => {
                let trace = if method == Method::Bic {
                    bic_select(&x, &y, &baseline)?
                } else {
                    cv_select(&x, &y, &baseline, cfg.folds, cfg.seed)?
                };
                let (coefs, intercept) = trace.raw_coefficients(&x, &y);
                (trace.selected, coefs, intercept, (None, None), Some(trace.chosen_lambda))
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();

        let train_mse = mse(&predict(ds, &train, &cols, &coefs, intercept), &observed(ds, &train))?;
        let test_mse = if test.is_empty() {
            None
        } else {
            Some(mse(&predict(ds, &test, &cols, &coefs, intercept), &observed(ds, &test))?)
        };
        results.push(MethodSelection {
            method,
            selected: cols.iter().map(|&j| ds.feature_names[j].clone()).collect(),
            coefficients: cols
                .iter()
                .zip(&coefs)
                .map(|(&j, &value)| NamedCoefficient {
                    name: ds.feature_names[j].clone(),
                    value,
                })
                .collect(),
            intercept,
            cutoff_stage1: cutoffs.0,
            cutoff_stage2: cutoffs.1,
            chosen_lambda,
            train_mse,
            test_mse,
            wall_time_s,
        });
    }
    Ok(SelectReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        n_train: train.len(),
        n_test: test.len(),
        results,
    })
}

pub(crate) fn run(args: SelectArgs) -> Result<(), CliError> {
    let ds = read_dataset(&args.data)?;
    let cfg = args.to_config(&ds)?;
    log::info!(
        "select: {} rows, {} features, methods {:?}",
        ds.nrows(),
        ds.feature_names.len(),
        cfg.methods
    );
    let report = select_on(&ds, &cfg)?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    json.push('\n');
    emit(args.out.as_ref(), &json)
}

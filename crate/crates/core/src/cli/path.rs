use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use super::config::merge_fields;
use super::dataset::{read_dataset, DatasetArgs};
use super::{emit, CliError};
use crate::lasso_path::{fit_path, GridSpec, LassoPath, SolverOptions};

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PathArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub data: DatasetArgs,
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
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl PathArgs {
    pub(crate) fn merged(mut self, mut file: PathArgs) -> Self {
        let data = std::mem::take(&mut self.data).merged(std::mem::take(&mut file.data));
        let mut out = merge_fields!(self, file;
            opt: grid_count, grid_ratio, tol, max_iter, out;
            switch: );
        out.data = data;
        out
    }
}

/// Renders a path as CSV: a `lambda,beta_1,...,beta_p` header, one row per
/// visited grid point with standardized-scale coefficients, and a final row
/// starting with `Z` holding the entry values.
pub fn write_path_csv(path: &LassoPath) -> Result<String, CliError> {
    let p = path.nfeatures();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Config(format!("cannot render CSV: {e}"));

    let mut header = Vec::with_capacity(p + 1);
    header.push("lambda".to_string());
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for t in 0..path.visited() {
        let row = std::iter::once(path.lambda(t))
            .chain(path.coefs(t).iter().copied())
            .map(|v| v.to_string());
        w.write_record(row).map_err(csv_err)?;
    }
    let z = std::iter::once("Z".to_string()).chain(path.entry_values().iter().map(|v| v.to_string()));
    w.write_record(z).map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("cannot render CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

pub(crate) fn run(args: PathArgs) -> Result<(), CliError> {
    let ds = read_dataset(&args.data)?;
    let grid_spec = GridSpec {
        count: args.grid_count.unwrap_or(GridSpec::default().count),
        ratio: args.grid_ratio.unwrap_or(GridSpec::default().ratio),
    };
    grid_spec.validate()?;
    let solver = SolverOptions {
        tol: args.tol.unwrap_or(SolverOptions::default().tol),
        max_iter: args.max_iter.unwrap_or(SolverOptions::default().max_iter),
    };
    if !(solver.tol > 0.0) || solver.max_iter == 0 {
        return Err(CliError::Config("tolerance and sweep budget must be positive".into()));
    }
    let rows: Vec<usize> = (0..ds.nrows()).collect();
    let (x, y) = ds.standardize_rows(&rows)?;
    let grid = grid_spec.grid_for_problem(&x, &y)?;
    let path = fit_path(&x, &y, &grid, &solver, None)?;
    log::info!("path: {} points, {} features", path.visited(), path.nfeatures());
    emit(args.out.as_ref(), &write_path_csv(&path)?)
}

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;

use super::config::merge_fields;
use super::{emit, CliError, JOBS_ENV};
use crate::bench::{render_table, run_campaign, CampaignConfig, Method};
use crate::datagen::{CovarianceKind, SupportPlacement};
use crate::etlasso::Stage2Pseudo;
use crate::lasso_path::{GridSpec, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovArg {
    Independent,
    Ar1,
    Cs,
}

const DEFAULT_AR1_RHO: f64 = 0.5;
const DEFAULT_CS_RHO: f64 = 0.25;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Observations per replication [default: 500].
    #[arg(long)]
    pub n: Option<usize>,
    /// Features [default: 1000].
    #[arg(long)]
    pub p: Option<usize>,
    /// Active features [default: 10].
    #[arg(long)]
    pub k: Option<usize>,
    /// Correlation structure of the design [default: independent].
    #[arg(long, value_enum)]
    pub cov: Option<CovArg>,
    /// Correlation parameter [default: 0.5 for ar1, 0.25 for cs].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Magnitude of the active coefficients [default: 2].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Noise standard deviation [default: 1].
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Positions of the active coefficients [default: leading].
    #[arg(long, value_enum)]
    pub placement: Option<SupportPlacement>,
    /// Replications [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; replication r uses seed ^ r [default: 2024].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Methods to compare [default: etlasso,bic,cv].
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
    /// Worker threads [default: $ETLASSO_JOBS, else available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Leave timing fields empty so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

impl SimulateArgs {
    pub(crate) fn merged(self, file: SimulateArgs) -> Self {
        merge_fields!(self, file;
            opt: n, p, k, cov, rho, beta, noise_sd, placement, reps, seed, methods,
                 grid_count, grid_ratio, tol, max_iter, folds, max_df_fraction,
                 stage2_pseudo, jobs, out;
            switch: json, no_timing)
    }

    /// Resolves defaults and validates the campaign.
    pub fn to_config(&self) -> Result<CampaignConfig, CliError> {
        let cov = match (self.cov.unwrap_or(CovArg::Independent), self.rho) {
            (CovArg::Independent, None) => CovarianceKind::Independent,
            (CovArg::Independent, Some(_)) => {
                return Err(CliError::Config("--rho has no effect with --cov independent".into()))
            }
            (CovArg::Ar1, rho) => CovarianceKind::Ar1 {
                rho: rho.unwrap_or(DEFAULT_AR1_RHO),
            },
            (CovArg::Cs, rho) => CovarianceKind::CompoundSymmetric {
                rho: rho.unwrap_or(DEFAULT_CS_RHO),
            },
        };
        let mut cfg = CampaignConfig::new(
            self.n.unwrap_or(500),
            self.p.unwrap_or(1000),
            self.k.unwrap_or(10),
            cov,
            self.reps.unwrap_or(100),
            self.seed.unwrap_or(2024),
        );
        if let Some(b) = self.beta {
            cfg.beta_magnitude = b;
        }
        if let Some(s) = self.noise_sd {
            cfg.noise_sd = s;
        }
        if let Some(pl) = self.placement {
            cfg.placement = pl;
        }
        if let Some(requested) = &self.methods {
            cfg.methods.clear();
            for &m in requested {
                if !cfg.methods.contains(&m) {
                    cfg.methods.push(m);
                }
            }
        }
        cfg.grid = GridSpec {
            count: self.grid_count.unwrap_or(cfg.grid.count),
            ratio: self.grid_ratio.unwrap_or(cfg.grid.ratio),
        };
        cfg.solver = SolverOptions {
            tol: self.tol.unwrap_or(cfg.solver.tol),
            max_iter: self.max_iter.unwrap_or(cfg.solver.max_iter),
        };
        cfg.folds = self.folds.unwrap_or(cfg.folds);
        cfg.max_df_fraction = self.max_df_fraction.unwrap_or(cfg.max_df_fraction);
        cfg.stage2_pseudo = self.stage2_pseudo.unwrap_or_default();
        cfg.timing = !self.no_timing;
        cfg.jobs = match self.jobs {
            Some(j) => j,
            None => jobs_from_env()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn jobs_from_env() -> Result<usize, CliError> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{JOBS_ENV}='{v}' is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub(crate) fn run(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = args.to_config()?;
    log::info!(
        "simulate: n={} p={} k={} cov={} reps={} jobs={}",
        cfg.n,
        cfg.p,
        cfg.k,
        cfg.cov.label(),
        cfg.reps,
        cfg.jobs
    );
    let campaign = run_campaign(&cfg)?;
    let mut json = serde_json::to_string_pretty(&campaign.report)
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    json.push('\n');
    if let Some(out) = &args.out {
        emit(Some(out), &json)?;
    }
    if args.json {
        emit(None, &json)
    } else {
        emit(None, &render_table(&campaign))
    }
}

//! Monte Carlo comparison of selection methods on synthetic data.
//!
//! Each replication draws an instance, standardizes it, runs every requested
//! method, and scores the selection against the true support. Replication `r`
//! uses seed `seed ^ r` for its data, permutations and folds (each on its own
//! ChaCha stream), so results do not depend on scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{bic_select, cv_select, BaselineOptions};
use crate::datagen::{sample_instance, CovarianceKind, SimConfig, SupportPlacement};
use crate::design::standardize;
use crate::error::{Error, Result};
use crate::etlasso::{et_lasso_select, EtLassoOptions, Refit, Stage2Pseudo};
use crate::lasso_path::{GridSpec, SolverOptions};
use crate::metrics::{aggregate, score_selection, MethodAggregate, SelectionScore, Summary};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Etlasso,
    Bic,
    Cv,
}

impl Method {
    pub fn key(self) -> &'static str {
        match self {
            Method::Etlasso => "etlasso",
            Method::Bic => "bic",
            Method::Cv => "cv",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Etlasso => "ET-Lasso",
            Method::Bic => "BIC",
            Method::Cv => "CV",
        }
    }
}

/// Fully resolved campaign settings; echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub cov: CovarianceKind,
    pub beta_magnitude: f64,
    pub noise_sd: f64,
    pub placement: SupportPlacement,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub folds: usize,
    pub max_df_fraction: f64,
    pub stage2_pseudo: Stage2Pseudo,
    pub timing: bool,
    pub jobs: usize,
}

impl CampaignConfig {
    /// Defaults matching the reference setting: coefficients of magnitude
    /// 2, unit noise, 5-fold CV, all three methods.
    pub fn new(n: usize, p: usize, k: usize, cov: CovarianceKind, reps: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            k,
            cov,
            beta_magnitude: 2.0,
            noise_sd: 1.0,
            placement: SupportPlacement::Leading,
            reps,
            seed,
            methods: vec![Method::Etlasso, Method::Bic, Method::Cv],
            grid: GridSpec::default(),
            solver: SolverOptions::default(),
            folds: 5,
            max_df_fraction: BaselineOptions::default().max_df_fraction,
            stage2_pseudo: Stage2Pseudo::Full,
            timing: true,
            jobs: 1,
        }
    }

    pub fn sim_config(&self, rep: usize) -> SimConfig {
        SimConfig {
            n: self.n,
            p: self.p,
            k: self.k,
            cov: self.cov,
            beta_magnitude: self.beta_magnitude,
            noise_sd: self.noise_sd,
            seed: self.replication_seed(rep),
            placement: self.placement,
        }
    }

    pub fn replication_seed(&self, rep: usize) -> u64 {
        self.seed ^ rep as u64
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config(0).validate()?;
        self.grid.validate()?;
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods requested".into()));
        }
        if self.methods.contains(&Method::Cv) && (self.folds < 2 || self.folds > self.n) {
            return Err(Error::InvalidFoldCount {
                folds: self.folds,
                n: self.n,
            });
        }
        if !(self.max_df_fraction > 0.0) {
            return Err(Error::InvalidConfig("max_df_fraction must be positive".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::InvalidConfig("solver tolerance and iteration budget must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn et_options(&self) -> EtLassoOptions {
        EtLassoOptions {
            grid: self.grid,
            solver: self.solver,
            stage2_pseudo: self.stage2_pseudo,
            refit: Refit::Ols,
        }
    }

    fn baseline_options(&self) -> BaselineOptions {
        BaselineOptions {
            grid: self.grid,
            solver: self.solver,
            max_df_fraction: self.max_df_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub selected: Vec<usize>,
    pub score: SelectionScore,
    /// Wall time in seconds; `None` when timing is off.
    pub time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub rep: usize,
    pub seed: u64,
    pub true_support: Vec<usize>,
    pub methods: Vec<MethodOutcome>,
}

impl ReplicationOutcome {
    pub fn method(&self, m: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == m)
    }
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub precision_mean: Option<f64>,
    pub precision_sd: Option<f64>,
    pub recall_mean: Option<f64>,
    pub recall_sd: Option<f64>,
    pub f1_mean: Option<f64>,
    pub f1_sd: Option<f64>,
    pub time_mean_s: Option<f64>,
    pub time_sd_s: Option<f64>,
    pub undefined_count: usize,
    pub false_positive_rate: f64,
    pub mean_selected: f64,
}

impl ReportRow {
    fn from_aggregate(method: Method, agg: &MethodAggregate) -> Self {
        Self {
            method: method.key().to_string(),
            precision_mean: agg.precision.mean,
            precision_sd: agg.precision.sd,
            recall_mean: agg.recall.mean,
            recall_sd: agg.recall.sd,
            f1_mean: agg.f1.mean,
            f1_sd: agg.f1.sd,
            time_mean_s: agg.time.and_then(|t| t.mean),
            time_sd_s: agg.time.and_then(|t| t.sd),
            undefined_count: agg.undefined_count,
            false_positive_rate: agg.any_false_positive_rate,
            mean_selected: agg.mean_selected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: CampaignConfig,
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
    pub replications: usize,
}

impl BenchmarkReport {
    pub fn row(&self, m: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == m.key())
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub outcomes: Vec<ReplicationOutcome>,
    pub aggregates: Vec<(Method, MethodAggregate)>,
    pub report: BenchmarkReport,
}

/// Runs a single replication.
pub fn run_replication(cfg: &CampaignConfig, rep: usize) -> Result<ReplicationOutcome> {
    let sim = cfg.sim_config(rep);
    let inst = sample_instance(&sim)?;
    let (x, y) = standardize(&inst.x, &inst.y)?;
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let selected = match method {
            Method::Etlasso => et_lasso_select(&x, &y, sim.seed, &cfg.et_options())?.selected,
            Method::Bic => bic_select(&x, &y, &cfg.baseline_options())?.selected,
            Method::Cv => cv_select(&x, &y, &cfg.baseline_options(), cfg.folds, sim.seed)?.selected,
        };
        let time_s = cfg.timing.then(|| start.elapsed().as_secs_f64());
        methods.push(MethodOutcome {
            method,
            score: score_selection(&selected, &inst.true_support),
            selected,
            time_s,
        });
    }
    Ok(ReplicationOutcome {
        rep,
        seed: sim.seed,
        true_support: inst.true_support,
        methods,
    })
}

/// Runs every replication on a pool of `cfg.jobs` threads and aggregates.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<ReplicationOutcome> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_replication(cfg, rep))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut aggregates = Vec::with_capacity(cfg.methods.len());
    for &m in &cfg.methods {
        let scores: Vec<SelectionScore> = outcomes
            .iter()
            .map(|o| o.method(m).expect("every replication runs every method").score)
            .collect();
        let times: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.method(m).unwrap().time_s)
            .collect();
        aggregates.push((m, aggregate(&scores, &times)?));
    }
    let report = BenchmarkReport {
        config: cfg.clone(),
        schema_version: REPORT_SCHEMA_VERSION,
        rows: aggregates
            .iter()
            .map(|(m, a)| ReportRow::from_aggregate(*m, a))
            .collect(),
        replications: cfg.reps,
    };
    Ok(Campaign {
        outcomes,
        aggregates,
        report,
    })
}

fn cell(s: &Summary, digits: usize) -> String {
    match (s.mean, s.sd) {
        _ if s.undefined > 0 => "#".to_string(),
        (Some(m), Some(sd)) => format!("{m:.digits$} ({sd:.digits$})"),
        _ => "#".to_string(),
    }
}

/// Fixed-width text rendering: one row per method with P, R, F1 and time.
pub fn render_table(campaign: &Campaign) -> String {
    let cfg = &campaign.report.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n={} p={} k={} cov={} reps={} seed={}",
        cfg.n,
        cfg.p,
        cfg.k,
        cfg.cov.label(),
        cfg.reps,
        cfg.seed
    );
    let _ = writeln!(
        out,
        "{:<10} {:>16} {:>16} {:>16} {:>18} {:>8}",
        "method", "P", "R", "F1", "time (s)", "FP rate"
    );
    for (m, a) in &campaign.aggregates {
        let time = a.time.map(|t| cell(&t, 4)).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<10} {:>16} {:>16} {:>16} {:>18} {:>8.3}",
            m.display_name(),
            cell(&a.precision, 3),
            cell(&a.recall, 3),
            cell(&a.f1, 3),
            time,
            a.any_false_positive_rate
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_runs_and_is_deterministic() {
        let mut cfg = CampaignConfig::new(60, 30, 3, CovarianceKind::Independent, 3, 5);
        cfg.timing = false;
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.report.rows.len(), 3);
        assert!(a.report.rows.iter().all(|r| r.time_mean_s.is_none()));
        let table = render_table(&a);
        assert!(table.contains("ET-Lasso") && table.contains("CV"));
    }

    #[test]
    fn replication_seeds_xor() {
        let cfg = CampaignConfig::new(10, 5, 1, CovarianceKind::Independent, 4, 0b1010);
        assert_eq!(cfg.replication_seed(3), 0b1001);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = CampaignConfig::new(10, 5, 1, CovarianceKind::Independent, 1, 0);
        cfg.folds = 11;
        assert!(cfg.validate().is_err());
        cfg.folds = 5;
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
        let bad = CampaignConfig::new(10, 5, 6, CovarianceKind::Independent, 1, 0);
        assert!(bad.validate().is_err());
    }
}

//! Classical tuning criteria on the same Lasso path: BIC and k-fold CV.
//!
//! Both fit the path on the full data grid and pick the first (largest)
//! `lambda` minimizing the criterion. Paths are cut once more than
//! `max_df_fraction * n` coefficients are nonzero; beyond that point the
//! fits approach interpolation, coordinate descent slows to a crawl, and
//! neither criterion can prefer them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::lasso_path::{fit_path, GridSpec, LambdaGrid, LassoPath, PointState, SolverOptions};

/// ChaCha stream reserved for fold assignment.
const FOLD_STREAM: u64 = 2;
/// Floor applied to RSS before taking logs.
const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub grid: GridSpec,
    pub solver: SolverOptions,
    /// Paths stop once the support exceeds this fraction of the sample size.
    pub max_df_fraction: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            solver: SolverOptions::default(),
            max_df_fraction: 0.5,
        }
    }
}

/// Criterion values along the grid and the chosen point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionTrace {
    pub grid: LambdaGrid,
    /// One score per visited grid point.
    pub scores: Vec<f64>,
    pub chosen_index: usize,
    pub chosen_lambda: f64,
    /// Support of the full-data fit at `chosen_lambda`.
    pub selected: Vec<usize>,
    /// Working-scale coefficients of the full-data fit at `chosen_lambda`.
    pub coefs: Vec<f64>,
}

impl CriterionTrace {
    /// Raw-scale coefficients on `selected` and the intercept.
    pub fn raw_coefficients(&self, x: &DesignMatrix, y: &Response) -> (Vec<f64>, f64) {
        let work: Vec<f64> = self.selected.iter().map(|&j| self.coefs[j]).collect();
        x.to_raw_scale(&self.selected, &work, y.mean())
    }
}

/// `n log(RSS / n) + log(n) df`, with RSS floored at 1e-12.
pub fn bic_score(rss: f64, df: usize, n: usize) -> f64 {
    let nf = n as f64;
    nf * (rss.max(RSS_FLOOR) / nf).ln() + nf.ln() * df as f64
}

/// First index of the minimum; ties go to the larger `lambda`.
fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (t, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = t;
        }
    }
    best
}

fn capped_path(
    x: &DesignMatrix,
    y: &Response,
    grid: &LambdaGrid,
    opts: &BaselineOptions,
) -> Result<LassoPath> {
    let cap = opts.max_df_fraction * x.nrows() as f64;
    let saturated = move |s: &PointState<'_>| s.active.len() as f64 > cap;
    fit_path(x, y, grid, &opts.solver, Some(&saturated))
}

fn trace_from(grid: LambdaGrid, scores: Vec<f64>, path: &LassoPath) -> CriterionTrace {
    let chosen = argmin(&scores);
    CriterionTrace {
        chosen_lambda: grid.values()[chosen],
        selected: path.support(chosen),
        coefs: path.coefs(chosen).to_vec(),
        chosen_index: chosen,
        scores,
        grid,
    }
}

/// Lasso tuned by BIC with `df` = number of nonzero coefficients.
pub fn bic_select(x: &DesignMatrix, y: &Response, opts: &BaselineOptions) -> Result<CriterionTrace> {
    let grid = opts.grid.grid_for_problem(x, y)?;
    let path = capped_path(x, y, &grid, opts)?;
    let n = x.nrows();
    let scores = (0..path.visited())
        .map(|t| bic_score(path.rss()[t], path.support(t).len(), n))
        .collect();
    Ok(trace_from(grid, scores, &path))
}

/// Held-out row sets for `folds`-fold CV, from a seeded shuffle. Fold sizes
/// differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || n < folds {
        return Err(Error::InvalidFoldCount { folds, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FOLD_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, &i) in order.iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Held-out squared errors of one fold, per visited grid point.
///
/// The training rows are re-standardized with their own means and scales;
/// held-out rows are mapped with the training statistics.
fn fold_errors(
    x: &DesignMatrix,
    y: &Response,
    held_out: &[usize],
    grid: &LambdaGrid,
    opts: &BaselineOptions,
) -> Result<Vec<f64>> {
    let n = x.nrows();
    let mut is_test = vec![false; n];
    held_out.iter().for_each(|&i| is_test[i] = true);
    let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();

    let xt = DesignMatrix::standardize(&x.select_rows(&train))?;
    let yt = Response::centered(&y.subset(&train))?;
    let path = capped_path(&xt, &yt, grid, opts)?;

    let means = xt.column_means();
    let scales = xt.column_scales();
    let errors = (0..path.visited())
        .map(|t| {
            let beta = path.coefs(t);
            let active = path.support(t);
            held_out
                .iter()
                .map(|&i| {
                    let pred = yt.mean()
                        + active
                            .iter()
                            .map(|&j| beta[j] * (x.values()[(i, j)] - means[j]) / scales[j])
                            .sum::<f64>();
                    let e = y.values()[i] - pred;
                    e * e
                })
                .sum::<f64>()
                / held_out.len() as f64
        })
        .collect();
    Ok(errors)
}

/// Lasso tuned by `folds`-fold cross-validation (minimum mean held-out error).
pub fn cv_select(
    x: &DesignMatrix,
    y: &Response,
    opts: &BaselineOptions,
    folds: usize,
    seed: u64,
) -> Result<CriterionTrace> {
    let assignment = fold_assignment(x.nrows(), folds, seed)?;
    let grid = opts.grid.grid_for_problem(x, y)?;
    let per_fold = assignment
        .iter()
        .map(|held| fold_errors(x, y, held, &grid, opts))
        .collect::<Result<Vec<_>>>()?;
    let full = capped_path(x, y, &grid, opts)?;

    let visited = per_fold
        .iter()
        .map(Vec::len)
        .chain(std::iter::once(full.visited()))
        .min()
        .unwrap_or(0);
    let scores = (0..visited)
        .map(|t| per_fold.iter().map(|e| e[t]).sum::<f64>() / folds as f64)
        .collect();
    Ok(trace_from(grid, scores, &full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::standardize;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn instance(n: usize, p: usize, seed: u64, coef: f64) -> (DesignMatrix, Response) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xr = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..n)
            .map(|i| coef * xr[(i, 0)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        standardize(&xr, &y).unwrap()
    }

    #[test]
    fn bic_formula() {
        let s = bic_score(50.0, 3, 100);
        let want = 100.0 * (0.5f64).ln() + 3.0 * (100.0f64).ln();
        assert!((s - want).abs() < 1e-12);
        assert!(bic_score(0.0, 0, 10).is_finite());
    }

    #[test]
    fn ties_prefer_first() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin(&[1.0, 1.0]), 0);
    }

    #[test]
    fn zero_response_selects_nothing() {
        let (x, _) = instance(40, 6, 1, 1.0);
        let y = Response::centered(&[0.0; 40]).unwrap();
        let opts = BaselineOptions::default();
        assert!(bic_select(&x, &y, &opts).unwrap().selected.is_empty());
        assert!(cv_select(&x, &y, &opts, 5, 1).unwrap().selected.is_empty());
    }

    #[test]
    fn single_strong_feature() {
        let (x, y) = instance(200, 10, 4, 3.0);
        let tr = bic_select(&x, &y, &BaselineOptions::default()).unwrap();
        assert_eq!(tr.selected, vec![0]);
        assert_eq!(tr.chosen_lambda, tr.grid.values()[tr.chosen_index]);
    }

    #[test]
    fn bic_scores_recompute_from_path() {
        let (x, y) = instance(60, 8, 7, 1.5);
        let opts = BaselineOptions::default();
        let tr = bic_select(&x, &y, &opts).unwrap();
        let path = fit_path(&x, &y, &tr.grid, &opts.solver, None).unwrap();
        for (t, s) in tr.scores.iter().enumerate() {
            let beta = path.coefs(t);
            let mut rss = 0.0;
            for i in 0..60 {
                let fit: f64 = (0..8).map(|j| x.values()[(i, j)] * beta[j]).sum();
                rss += (y.values()[i] - fit).powi(2);
            }
            let df = beta.iter().filter(|b| **b != 0.0).count();
            let want = 60.0 * (rss / 60.0).ln() + (60.0f64).ln() * df as f64;
            assert!((s - want).abs() < 1e-8, "point {t}: {s} vs {want}");
        }
        assert!(tr.scores.iter().all(|s| *s >= tr.scores[tr.chosen_index]));
    }

    #[test]
    fn folds_partition_rows() {
        let f = fold_assignment(23, 5, 9).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(f.iter().all(|s| s.len() == 4 || s.len() == 5));
        assert_eq!(f, fold_assignment(23, 5, 9).unwrap());
        assert_ne!(f, fold_assignment(23, 5, 10).unwrap());
        assert_eq!(
            fold_assignment(3, 5, 0).unwrap_err(),
            Error::InvalidFoldCount { folds: 5, n: 3 }
        );
        assert!(fold_assignment(10, 1, 0).is_err());
    }

    #[test]
    fn cv_is_seed_reproducible() {
        let (x, y) = instance(80, 12, 3, 1.0);
        let opts = BaselineOptions::default();
        let a = cv_select(&x, &y, &opts, 5, 42).unwrap();
        let b = cv_select(&x, &y, &opts, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.selected.contains(&0));
        assert_eq!(a.selected, {
            let mut s: Vec<usize> = (0..12).filter(|&j| a.coefs[j] != 0.0).collect();
            s.sort_unstable();
            s
        });
    }
}

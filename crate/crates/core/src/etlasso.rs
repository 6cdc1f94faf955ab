//! Two-stage tuning-free selection with permuted pseudo-features.
//!
//! A copy of the design with its rows permuted has exactly the same Gram
//! matrix as the original but no association with the response, so every
//! pseudo column is inactive by construction. Fitting the Lasso path on the
//! augmented design `[X, X^pi]`, the first grid value at which any pseudo
//! column enters is a data-driven cutoff: original features that entered
//! strictly before it are kept. The path is abandoned as soon as the cutoff
//! is found.
//!
//! Selection runs twice. The second stage repeats the procedure on the
//! stage-one survivors against a freshly permuted copy of the whole design,
//! which trims most of the inactive features that slipped through the first
//! stage.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::lasso_path::{self, fit_at, fit_path, GridSpec, PointState, SolverOptions};

/// ChaCha stream reserved for permutation draws.
const PERMUTATION_STREAM: u64 = 1;

/// The two row permutations used by one selection run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub seed: u64,
    pub pi1: Vec<usize>,
    pub pi2: Vec<usize>,
}

impl PermutationPlan {
    /// Draws two distinct Fisher-Yates permutations of `0..n`.
    pub fn generate(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PERMUTATION_STREAM);
        let mut pi1: Vec<usize> = (0..n).collect();
        pi1.shuffle(&mut rng);
        let mut pi2: Vec<usize> = (0..n).collect();
        pi2.shuffle(&mut rng);
        while n > 1 && pi2 == pi1 {
            pi2.shuffle(&mut rng);
        }
        Self { seed, pi1, pi2 }
    }
}

fn check_permutation(pi: &[usize], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::InvalidPermutation(n));
    }
    let mut seen = vec![false; n];
    for &i in pi {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidPermutation(n));
        }
    }
    Ok(())
}

/// Row `i` of the result is row `pi[i]` of `x`.
pub fn permute_rows(x: &DesignMatrix, pi: &[usize]) -> Result<DMatrix<f64>> {
    check_permutation(pi, x.nrows())?;
    Ok(x.select_rows(pi))
}

/// `[X_orig, X_pseudo]`: original columns first, permuted copies after.
#[derive(Debug, Clone)]
pub struct AugmentedDesign {
    design: DesignMatrix,
    original_indices: Vec<usize>,
    pseudo_indices: Vec<usize>,
}

impl AugmentedDesign {
    /// Stacks `originals` (whose columns are the features `original_indices`
    /// of the full design) next to the rows of `pseudo_source` permuted by
    /// `pi`. `pseudo_indices` names the source features of the pseudo block.
    pub fn build(
        originals: &DesignMatrix,
        original_indices: Vec<usize>,
        pseudo_source: &DesignMatrix,
        pseudo_indices: Vec<usize>,
        pi: &[usize],
    ) -> Result<Self> {
        if originals.nrows() != pseudo_source.nrows() {
            return Err(Error::DimensionMismatch {
                expected: originals.nrows(),
                found: pseudo_source.nrows(),
            });
        }
        let pseudo = permute_rows(pseudo_source, pi)?;
        let n = originals.nrows();
        let m = originals.ncols();
        let q = pseudo_source.ncols();
        let mut data = Vec::with_capacity(n * (m + q));
        data.extend_from_slice(originals.values().as_slice());
        data.extend_from_slice(pseudo.as_slice());
        let means = originals
            .column_means()
            .iter()
            .chain(pseudo_source.column_means())
            .copied()
            .collect();
        let scales = originals
            .column_scales()
            .iter()
            .chain(pseudo_source.column_scales())
            .copied()
            .collect();
        Ok(Self {
            design: DesignMatrix::from_parts(DMatrix::from_vec(n, m + q, data), means, scales),
            original_indices,
            pseudo_indices,
        })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn n_original(&self) -> usize {
        self.original_indices.len()
    }

    pub fn original_indices(&self) -> &[usize] {
        &self.original_indices
    }

    /// Source features of the pseudo block.
    pub fn pseudo_indices(&self) -> &[usize] {
        &self.pseudo_indices
    }

    pub fn is_pseudo(&self, column: usize) -> bool {
        column >= self.n_original()
    }
}

/// Result of one selection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    /// Original feature indices forming the stage's original block.
    pub features: Vec<usize>,
    /// Selected original feature indices, ascending.
    pub selected: Vec<usize>,
    /// Grid value at which the first pseudo column entered, or the grid
    /// floor if none did.
    pub cutoff: f64,
    pub pseudo_entered: bool,
    /// Entry values of the original block, aligned with `features`.
    pub z_original: Vec<f64>,
    /// Entry values of the pseudo block.
    pub z_pseudo: Vec<f64>,
    pub lambda_max: f64,
    /// Grid points solved before stopping.
    pub visited: usize,
    pub converged: bool,
}

/// Where the stage-two pseudo block comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Pseudo {
    /// Permuted copies of the stage-one survivors only.
    Selected,
    /// Permuted copies of every feature.
    #[default]
    Full,
}

/// How coefficients are estimated on the final selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Refit {
    /// Ordinary least squares on the selected columns.
    #[default]
    Ols,
    /// Lasso on the selected columns at the final cutoff.
    LassoAtCutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EtLassoOptions {
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub stage2_pseudo: Stage2Pseudo,
    pub refit: Refit,
}

/// Output of [`et_lasso_select`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Final selection, ascending original feature indices.
    pub selected: Vec<usize>,
    pub stage1: StageOutcome,
    /// `None` when stage one selected nothing.
    pub stage2: Option<StageOutcome>,
    /// Raw-scale coefficients aligned with `selected`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub wall_time: f64,
    pub plan: PermutationPlan,
}

impl SelectionResult {
    pub fn stage1_selected(&self) -> &[usize] {
        &self.stage1.selected
    }

    pub fn cutoff_stage1(&self) -> f64 {
        self.stage1.cutoff
    }

    pub fn cutoff_stage2(&self) -> Option<f64> {
        self.stage2.as_ref().map(|s| s.cutoff)
    }
}

/// Positions whose entry value is strictly greater than `cutoff`.
pub fn above_cutoff(z: &[f64], cutoff: f64) -> Vec<usize> {
    (0..z.len()).filter(|&j| z[j] > cutoff).collect()
}

/// Fits the early-stopped path on an augmented design and applies the
/// strict cutoff rule to its original block.
pub fn select_on_augmented(
    aug: &AugmentedDesign,
    y: &Response,
    grid_spec: &GridSpec,
    solver: &SolverOptions,
) -> Result<StageOutcome> {
    let m = aug.n_original();
    if m == 0 {
        return Err(Error::EmptyDesign);
    }
    let x = aug.design();
    let lmax = lasso_path::lambda_max(x, y);
    let grid = grid_spec.grid_for(lmax)?;
    let pseudo_active = |s: &PointState<'_>| s.active.last().is_some_and(|&j| j >= m);
    let path = fit_path(x, y, &grid, solver, Some(&pseudo_active))?;

    let last = path.visited() - 1;
    let pseudo_entered = path.support(last).iter().any(|&j| j >= m);
    let cutoff = if pseudo_entered { path.lambda(last) } else { grid.floor() };
    let z = path.entry_values();
    let selected = above_cutoff(&z[..m], cutoff)
        .into_iter()
        .map(|j| aug.original_indices()[j])
        .collect();
    Ok(StageOutcome {
        features: aug.original_indices().to_vec(),
        selected,
        cutoff,
        pseudo_entered,
        z_original: z[..m].to_vec(),
        z_pseudo: z[m..].to_vec(),
        lambda_max: lmax,
        visited: path.visited(),
        converged: path.converged().iter().all(|c| *c),
    })
}

/// One stage on `x_sub` with its own rows permuted by `pi` as the pseudo
/// block. Selected indices refer to columns of `x_sub`.
pub fn stage_select(
    x_sub: &DesignMatrix,
    y: &Response,
    pi: &[usize],
    grid_spec: &GridSpec,
    solver: &SolverOptions,
) -> Result<StageOutcome> {
    if x_sub.ncols() == 0 {
        return Err(Error::EmptyDesign);
    }
    let cols: Vec<usize> = (0..x_sub.ncols()).collect();
    let aug = AugmentedDesign::build(x_sub, cols.clone(), x_sub, cols, pi)?;
    select_on_augmented(&aug, y, grid_spec, solver)
}

/// Two-stage selection with permutations drawn from `seed`.
pub fn et_lasso_select(
    x: &DesignMatrix,
    y: &Response,
    seed: u64,
    opts: &EtLassoOptions,
) -> Result<SelectionResult> {
    let start = Instant::now();
    if x.ncols() == 0 {
        return Err(Error::EmptyDesign);
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let plan = PermutationPlan::generate(x.nrows(), seed);

    let all: Vec<usize> = (0..x.ncols()).collect();
    let aug1 = AugmentedDesign::build(x, all.clone(), x, all.clone(), &plan.pi1)?;
    let stage1 = select_on_augmented(&aug1, y, &opts.grid, &opts.solver)?;

    if stage1.selected.is_empty() {
        return Ok(SelectionResult {
            selected: Vec::new(),
            stage1,
            stage2: None,
            coefficients: Vec::new(),
            intercept: y.mean(),
            wall_time: start.elapsed().as_secs_f64(),
            plan,
        });
    }

    let survivors = stage1.selected.clone();
    let x_sub = x.select_columns(&survivors);
    let aug2 = match opts.stage2_pseudo {
        Stage2Pseudo::Selected => AugmentedDesign::build(
            &x_sub,
            survivors.clone(),
            &x_sub,
            survivors.clone(),
            &plan.pi2,
        )?,
        Stage2Pseudo::Full => AugmentedDesign::build(&x_sub, survivors.clone(), x, all, &plan.pi2)?,
    };
    let stage2 = select_on_augmented(&aug2, y, &opts.grid, &opts.solver)?;
    let selected = stage2.selected.clone();

    let (coefficients, intercept) = match opts.refit {
        Refit::Ols => refit_ols(x, y, &selected)?,
        Refit::LassoAtCutoff => lasso_refit(x, y, &selected, stage2.cutoff, &opts.solver)?,
    };

    Ok(SelectionResult {
        selected,
        stage1,
        stage2: Some(stage2),
        coefficients,
        intercept,
        wall_time: start.elapsed().as_secs_f64(),
        plan,
    })
}

fn lasso_refit(
    x: &DesignMatrix,
    y: &Response,
    s: &[usize],
    lambda: f64,
    solver: &SolverOptions,
) -> Result<(Vec<f64>, f64)> {
    if s.is_empty() {
        return Ok((Vec::new(), y.mean()));
    }
    let (beta, _) = fit_at(&x.select_columns(s), y, lambda, solver)?;
    Ok(x.to_raw_scale(s, &beta, y.mean()))
}

/// Least-squares coefficients of `y` on the columns `s`, returned on the raw
/// feature scale together with the intercept.
pub fn refit_ols(x: &DesignMatrix, y: &Response, s: &[usize]) -> Result<(Vec<f64>, f64)> {
    if s.is_empty() {
        return Ok((Vec::new(), y.mean()));
    }
    if let Some(&bad) = s.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::InvalidSubset(format!("column {bad} out of range")));
    }
    if s.len() >= x.nrows() {
        return Err(Error::RankDeficient(s.to_vec()));
    }
    let xs = x.select_columns(s);
    let svd = xs.values().clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-10 * smax {
        return Err(Error::RankDeficient(s.to_vec()));
    }
    let rhs = DVector::from_column_slice(y.values());
    let beta = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::RankDeficient(s.to_vec()))?;
    Ok(x.to_raw_scale(s, beta.as_slice(), y.mean()))
}

/// `|| X_{s^c}^T X_s (X_s^T X_s)^{-1} ||_inf` (largest absolute row sum).
///
/// Values below 1 mean the irrepresentable condition holds for `s`.
pub fn mutual_incoherence(x: &DesignMatrix, s: &[usize]) -> Result<f64> {
    let p = x.ncols();
    let mut in_s = vec![false; p];
    for &j in s {
        if j >= p {
            return Err(Error::InvalidSubset(format!("column {j} out of range")));
        }
        in_s[j] = true;
    }
    let rest: Vec<usize> = (0..p).filter(|&j| !in_s[j]).collect();
    if s.is_empty() || rest.is_empty() {
        return Err(Error::InvalidSubset(
            "subset must be nonempty and leave at least one column out".into(),
        ));
    }
    let xs = x.select_columns(s);
    let xc = x.select_columns(&rest);
    let gram = xs.values().transpose() * xs.values();
    let cross = xs.values().transpose() * xc.values();
    let chol = gram.cholesky().ok_or_else(|| Error::RankDeficient(s.to_vec()))?;
    // Columns of `coef` are rows of X_c^T X_s G^{-1}.
    let coef = chol.solve(&cross);
    Ok(coef
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

//! Lasso solution paths by cyclic coordinate descent.
//!
//! Minimizes `(2n)^{-1} ||y - X b||^2 + lambda * ||b||_1` over a decreasing
//! grid of `lambda` values, warm-starting each point from the previous one.
//! Each point is solved on a working set seeded by the sequential strong rule
//! and then certified against the KKT conditions of every column, so the
//! screening never changes the solution.
//!
//! Along the way the path records, for each feature, the entry value `Z_j`:
//! the largest visited grid value at which the feature's coefficient is
//! nonzero (0 if it never enters).

use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, Response};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_COUNT: usize = 100;
pub const DEFAULT_GRID_RATIO: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Strictly decreasing, log-equispaced regularization grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    ratio: f64,
}

impl LambdaGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// `lambda_d / lambda_1`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    /// Smallest grid value.
    pub fn floor(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// `d` log-equispaced values from `lmax` down to `ratio * lmax`.
pub fn make_grid(lmax: f64, d: usize, ratio: f64) -> Result<LambdaGrid> {
    if !(lmax.is_finite() && lmax > 0.0) {
        return Err(Error::InvalidGridSpec(format!("lambda_max must be positive, got {lmax}")));
    }
    if d < 2 {
        return Err(Error::InvalidGridSpec(format!("need at least 2 grid points, got {d}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidGridSpec(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    let last = d - 1;
    let values = (0..d)
        .map(|t| match t {
            0 => lmax,
            t if t == last => lmax * ratio,
            t => lmax * ratio.powf(t as f64 / last as f64),
        })
        .collect();
    Ok(LambdaGrid { values, ratio })
}

/// Grid size and depth, independent of the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub count: usize,
    pub ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            count: DEFAULT_GRID_COUNT,
            ratio: DEFAULT_GRID_RATIO,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        make_grid(1.0, self.count, self.ratio).map(|_| ())
    }

    /// Grid anchored at `lmax`. A zero `lmax` (response orthogonal to every
    /// column) anchors at 1 instead; every point of that path is the zero
    /// vector either way.
    pub fn grid_for(&self, lmax: f64) -> Result<LambdaGrid> {
        let anchor = if lmax > 0.0 { lmax } else { 1.0 };
        make_grid(anchor, self.count, self.ratio)
    }

    /// Grid anchored at the problem's own `lambda_max`.
    pub fn grid_for_problem(&self, x: &DesignMatrix, y: &Response) -> Result<LambdaGrid> {
        self.grid_for(lambda_max(x, y))
    }
}

/// Coordinate descent stopping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tol: f64,
    /// Sweep budget per grid point.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// State handed to a stop rule after each solved grid point.
#[derive(Debug)]
pub struct PointState<'a> {
    pub index: usize,
    pub lambda: f64,
    pub coefs: &'a [f64],
    /// Indices of nonzero coefficients, ascending.
    pub active: &'a [usize],
    /// Residual sum of squares at this point.
    pub rss: f64,
}

/// Predicate evaluated after each grid point; returning `true` ends the path.
pub type StopRule<'a> = dyn Fn(&PointState<'_>) -> bool + 'a;

/// Fitted path over the visited prefix of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    grid: LambdaGrid,
    coefs: Vec<Vec<f64>>,
    entry_values: Vec<f64>,
    converged: Vec<bool>,
    iterations: Vec<usize>,
    rss: Vec<f64>,
}

impl LassoPath {
    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    /// Number of grid points actually solved.
    pub fn visited(&self) -> usize {
        self.coefs.len()
    }

    pub fn stopped_early(&self) -> bool {
        self.visited() < self.grid.count()
    }

    pub fn lambda(&self, t: usize) -> f64 {
        self.grid.values[t]
    }

    pub fn coefs(&self, t: usize) -> &[f64] {
        &self.coefs[t]
    }

    pub fn all_coefs(&self) -> &[Vec<f64>] {
        &self.coefs
    }

    /// Nonzero positions at grid point `t`.
    pub fn support(&self, t: usize) -> Vec<usize> {
        support_of(&self.coefs[t])
    }

    pub fn converged(&self) -> &[bool] {
        &self.converged
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    /// Residual sum of squares per visited point.
    pub fn rss(&self) -> &[f64] {
        &self.rss
    }

    /// Grid values at which coordinate descent hit its sweep budget.
    pub fn not_converged(&self) -> Vec<f64> {
        self.converged
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(t, _)| self.grid.values[t])
            .collect()
    }

    /// Per-feature entry values `Z_j`.
    pub fn entry_values(&self) -> &[f64] {
        &self.entry_values
    }

    pub fn nfeatures(&self) -> usize {
        self.entry_values.len()
    }
}

/// Per-feature entry values of a fitted path.
pub fn entry_values(path: &LassoPath) -> &[f64] {
    path.entry_values()
}

pub(crate) fn support_of(coefs: &[f64]) -> Vec<usize> {
    coefs
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (u, v) in (&mut ca).zip(&mut cb) {
        acc[0] += u[0] * v[0];
        acc[1] += u[1] * v[1];
        acc[2] += u[2] * v[2];
        acc[3] += u[3] * v[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(u, v)| u * v).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Univariate soft-threshold `S(z, t) = sign(z) * max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `max_j |X_j^T y| / n`: the smallest `lambda` with an all-zero solution.
pub fn lambda_max(x: &DesignMatrix, y: &Response) -> f64 {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| (dot(x.column(j), y.values()) / n).abs())
        .fold(0.0, f64::max)
}

fn residual(x: &DesignMatrix, y: &Response, beta: &[f64]) -> Vec<f64> {
    let mut r = y.values().to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, x.column(j), &mut r);
        }
    }
    r
}

/// Lasso objective `(2n)^{-1} ||y - X b||^2 + lambda ||b||_1`.
pub fn objective(x: &DesignMatrix, y: &Response, lambda: f64, beta: &[f64]) -> f64 {
    let r = residual(x, y, beta);
    let n = x.nrows() as f64;
    dot(&r, &r) / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the Lasso optimality conditions at `beta`.
///
/// Zero exactly when `beta` minimizes the objective at `lambda`.
pub fn kkt_violation(x: &DesignMatrix, y: &Response, lambda: f64, beta: &[f64]) -> f64 {
    let r = residual(x, y, beta);
    let n = x.nrows() as f64;
    beta.iter()
        .enumerate()
        .map(|(j, &b)| {
            let g = dot(x.column(j), &r) / n;
            if b != 0.0 {
                (g - lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Coordinate descent state shared across grid points.
struct CoordinateDescent<'a> {
    x: &'a DesignMatrix,
    n: f64,
    col_sq: Vec<f64>,
    beta: Vec<f64>,
    resid: Vec<f64>,
    in_working: Vec<bool>,
    working: Vec<usize>,
}

impl<'a> CoordinateDescent<'a> {
    fn new(x: &'a DesignMatrix, y: &Response) -> Self {
        let n = x.nrows() as f64;
        let p = x.ncols();
        let col_sq = (0..p)
            .map(|j| {
                let c = x.column(j);
                dot(c, c) / n
            })
            .collect();
        Self {
            x,
            n,
            col_sq,
            beta: vec![0.0; p],
            resid: y.values().to_vec(),
            in_working: vec![false; p],
            working: Vec::new(),
        }
    }

    #[inline]
    fn gradient(&self, j: usize) -> f64 {
        dot(self.x.column(j), &self.resid) / self.n
    }

    #[inline]
    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let a = self.col_sq[j];
        if a == 0.0 {
            return 0.0;
        }
        let old = self.beta[j];
        let z = self.gradient(j) + a * old;
        let new = soft_threshold(z, lambda) / a;
        let delta = new - old;
        if delta != 0.0 {
            self.beta[j] = new;
            axpy(-delta, self.x.column(j), &mut self.resid);
        }
        delta.abs()
    }

    fn sweep(&mut self, coords: &[usize], lambda: f64) -> f64 {
        let mut max_change = 0.0f64;
        for &j in coords {
            max_change = max_change.max(self.update(j, lambda));
        }
        max_change
    }

    fn add_to_working(&mut self, j: usize) {
        if !self.in_working[j] {
            self.in_working[j] = true;
            self.working.push(j);
        }
    }

    /// Solves at `lambda` from the current state. `screen` is the strong-rule
    /// threshold used to seed the working set. Returns (converged, sweeps).
    fn solve(&mut self, lambda: f64, screen: f64, opts: &SolverOptions) -> (bool, usize) {
        let p = self.beta.len();
        for j in 0..p {
            if self.beta[j] != 0.0 || self.gradient(j).abs() >= screen {
                self.add_to_working(j);
            }
        }
        self.working.sort_unstable();

        let mut sweeps = 0usize;
        loop {
            // Converge on the working set: full sweeps interleaved with
            // sweeps over its currently nonzero members.
            loop {
                let ws = std::mem::take(&mut self.working);
                let change = self.sweep(&ws, lambda);
                self.working = ws;
                sweeps += 1;
                if change <= opts.tol {
                    break;
                }
                if sweeps >= opts.max_iter {
                    return (false, sweeps);
                }
                let active: Vec<usize> =
                    self.working.iter().copied().filter(|&j| self.beta[j] != 0.0).collect();
                loop {
                    let change = self.sweep(&active, lambda);
                    sweeps += 1;
                    if change <= opts.tol {
                        break;
                    }
                    if sweeps >= opts.max_iter {
                        return (false, sweeps);
                    }
                }
            }

            let violators: Vec<usize> = (0..p)
                .filter(|&j| !self.in_working[j] && self.gradient(j).abs() > lambda)
                .collect();
            if violators.is_empty() {
                return (true, sweeps);
            }
            for j in violators {
                self.add_to_working(j);
            }
            self.working.sort_unstable();
        }
    }
}

/// Fits the Lasso over `grid` in descending order with warm starts.
///
/// After each point the optional `stop_rule` is consulted; when it fires the
/// path ends there and the remaining grid points stay unvisited. Points where
/// the sweep budget runs out are kept and flagged in [`LassoPath::converged`].
pub fn fit_path(
    x: &DesignMatrix,
    y: &Response,
    grid: &LambdaGrid,
    opts: &SolverOptions,
    stop_rule: Option<&StopRule<'_>>,
) -> Result<LassoPath> {
    if x.ncols() == 0 {
        return Err(Error::EmptyDesign);
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let p = x.ncols();
    let mut cd = CoordinateDescent::new(x, y);
    let mut coefs = Vec::with_capacity(grid.count());
    let mut entry = vec![0.0; p];
    let mut converged = Vec::with_capacity(grid.count());
    let mut iterations = Vec::with_capacity(grid.count());
    let mut rss = Vec::with_capacity(grid.count());

    let mut prev = grid.first();
    for (t, &lambda) in grid.values().iter().enumerate() {
        let screen = 2.0 * lambda - prev;
        let (ok, sweeps) = cd.solve(lambda, screen, opts);
        if !ok {
            log::warn!("coordinate descent did not converge at lambda = {lambda:e}");
        }
        prev = lambda;

        let active = support_of(&cd.beta);
        for &j in &active {
            if entry[j] == 0.0 {
                entry[j] = lambda;
            }
        }
        let point_rss = dot(&cd.resid, &cd.resid);
        coefs.push(cd.beta.clone());
        converged.push(ok);
        iterations.push(sweeps);
        rss.push(point_rss);

        if let Some(rule) = stop_rule {
            let state = PointState {
                index: t,
                lambda,
                coefs: &cd.beta,
                active: &active,
                rss: point_rss,
            };
            if rule(&state) {
                break;
            }
        }
    }

    Ok(LassoPath {
        grid: grid.clone(),
        coefs,
        entry_values: entry,
        converged,
        iterations,
        rss,
    })
}

/// Solves the Lasso at a single `lambda` from a cold (all-zero) start.
pub fn fit_at(
    x: &DesignMatrix,
    y: &Response,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, bool)> {
    if x.ncols() == 0 {
        return Err(Error::EmptyDesign);
    }
    let mut cd = CoordinateDescent::new(x, y);
    let (ok, _) = cd.solve(lambda, lambda, opts);
    Ok((cd.beta, ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(1.0, 3, 0.01).unwrap();
        let want = [1.0, 0.1, 0.01];
        for (a, b) in g.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(make_grid(2.0, 2, 0.5).unwrap().values(), &[2.0, 1.0]);
    }

    #[test]
    fn grid_spacing_is_geometric() {
        let g = make_grid(3.7, 40, 2e-3).unwrap();
        assert_eq!(g.first(), 3.7);
        assert!((g.floor() - 3.7 * 2e-3).abs() < 1e-12);
        let step = (2e-3f64).ln() / 39.0;
        for w in g.values().windows(2) {
            assert!(w[1] < w[0]);
            assert!(((w[1] / w[0]).ln() - step).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(make_grid(0.0, 5, 0.1).is_err());
        assert!(make_grid(1.0, 1, 0.1).is_err());
        assert!(make_grid(1.0, 5, 1.0).is_err());
        assert!(make_grid(1.0, 5, 0.0).is_err());
        assert!(make_grid(f64::NAN, 5, 0.1).is_err());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
    }

    #[test]
    fn zero_response_gives_zero_path() {
        let x = DesignMatrix::standardize(&gaussian(20, 4, 1)).unwrap();
        let y = Response::centered(&[0.0; 20]).unwrap();
        assert_eq!(lambda_max(&x, &y), 0.0);
        let grid = GridSpec { count: 10, ratio: 0.01 }.grid_for_problem(&x, &y).unwrap();
        let path = fit_path(&x, &y, &grid, &SolverOptions::default(), None).unwrap();
        assert_eq!(path.visited(), 10);
        assert!(path.all_coefs().iter().all(|b| b.iter().all(|v| *v == 0.0)));
        assert!(path.entry_values().iter().all(|z| *z == 0.0));
    }

    #[test]
    fn single_column_aligned_with_response() {
        // X_1 = sqrt(n) * y / ||y||, so |X_1^T y| / n = ||y|| / sqrt(n).
        let y = Response::centered(&[1.0, -2.0, 0.5, 3.0, -2.5]).unwrap();
        let norm = dot(y.values(), y.values()).sqrt();
        let n = 5.0f64;
        let col: Vec<f64> = y.values().iter().map(|v| v * n.sqrt() / norm).collect();
        let x = DesignMatrix::from_standardized(DMatrix::from_vec(5, 1, col)).unwrap();
        let lmax = lambda_max(&x, &y);
        assert!((lmax - norm / n.sqrt()).abs() < 1e-12);

        let grid = make_grid(lmax, 5, 0.1).unwrap();
        let path = fit_path(&x, &y, &grid, &SolverOptions::default(), None).unwrap();
        assert_eq!(path.coefs(0), &[0.0]);
        assert_eq!(path.entry_values()[0], grid.values()[1]);
        for t in 0..5 {
            let want = soft_threshold(lmax, grid.values()[t]);
            assert!((path.coefs(t)[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kkt_is_zero_at_zero_above_lambda_max() {
        let x = DesignMatrix::standardize(&gaussian(30, 6, 2)).unwrap();
        let yraw: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let y = Response::centered(&yraw).unwrap();
        let lmax = lambda_max(&x, &y);
        assert_eq!(kkt_violation(&x, &y, lmax, &[0.0; 6]), 0.0);
        assert!(kkt_violation(&x, &y, 0.5 * lmax, &[0.0; 6]) > 0.0);
    }

    #[test]
    fn perturbed_solution_violates_kkt() {
        let xr = gaussian(40, 5, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let yraw: Vec<f64> = (0..40)
            .map(|i| 2.0 * xr[(i, 0)] - xr[(i, 2)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (x, y) = crate::design::standardize(&xr, &yraw).unwrap();
        let lambda = 0.1 * lambda_max(&x, &y);
        let (mut beta, ok) = fit_at(&x, &y, lambda, &SolverOptions::default()).unwrap();
        assert!(ok);
        assert!(kkt_violation(&x, &y, lambda, &beta) <= 1e-6);
        beta[1] += 0.1;
        assert!(kkt_violation(&x, &y, lambda, &beta) > 1e-3);
    }

    #[test]
    fn stop_rule_truncates_path() {
        let xr = gaussian(50, 8, 4);
        let yraw: Vec<f64> = (0..50).map(|i| xr[(i, 0)] + 0.5 * xr[(i, 1)]).collect();
        let (x, y) = crate::design::standardize(&xr, &yraw).unwrap();
        let grid = GridSpec::default().grid_for_problem(&x, &y).unwrap();
        let rule = |s: &PointState<'_>| s.active.len() >= 2;
        let path = fit_path(&x, &y, &grid, &SolverOptions::default(), Some(&rule)).unwrap();
        assert!(path.stopped_early());
        let last = path.visited() - 1;
        assert!(path.support(last).len() >= 2);
        assert!(path.support(last - 1).len() < 2);
    }

    #[test]
    fn mismatched_response_is_rejected() {
        let x = DesignMatrix::standardize(&gaussian(10, 2, 1)).unwrap();
        let y = Response::centered(&[1.0, 2.0, 3.0]).unwrap();
        let grid = make_grid(1.0, 3, 0.1).unwrap();
        assert!(fit_path(&x, &y, &grid, &SolverOptions::default(), None).is_err());
    }
}

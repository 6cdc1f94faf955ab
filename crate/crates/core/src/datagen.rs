//! Synthetic sparse linear-model instances with Gaussian designs.
//!
//! Rows are drawn iid from `N(0, Sigma)` under one of three correlation
//! structures, the true coefficient vector has `k` entries of magnitude
//! `beta_magnitude` with random signs, and the noise is `N(0, noise_sd^2)`.
//!
//! All randomness comes from ChaCha8 seeded with [`SimConfig::seed`] on
//! stream 0, so instances are reproducible across platforms.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlation structure of the design rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    Independent,
    /// `sigma_ij = rho^{|i-j|}`.
    Ar1 { rho: f64 },
    /// 1 on the diagonal, `rho` elsewhere.
    CompoundSymmetric { rho: f64 },
}

impl CovarianceKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CovarianceKind::Independent => Ok(()),
            CovarianceKind::Ar1 { rho } if rho > -1.0 && rho < 1.0 => Ok(()),
            CovarianceKind::CompoundSymmetric { rho } if (0.0..1.0).contains(&rho) => Ok(()),
            CovarianceKind::Ar1 { rho } | CovarianceKind::CompoundSymmetric { rho } => {
                Err(Error::InvalidRho(rho))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            CovarianceKind::Independent => "independent".into(),
            CovarianceKind::Ar1 { rho } => format!("ar1({rho})"),
            CovarianceKind::CompoundSymmetric { rho } => format!("cs({rho})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
}

/// Dense `p x p` covariance matrix for `spec`.
pub fn sigma_matrix(spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    spec.kind.validate()?;
    let p = spec.p;
    Ok(match spec.kind {
        CovarianceKind::Independent => DMatrix::identity(p, p),
        CovarianceKind::Ar1 { rho } => {
            DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
        }
        CovarianceKind::CompoundSymmetric { rho } => {
            DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
        }
    })
}

/// Lower Cholesky factor of `sigma_matrix(spec)`.
pub fn cholesky_factor(spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    let sigma = sigma_matrix(spec)?;
    sigma
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::CholeskyFailure)
}

/// Where the nonzero coefficients sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SupportPlacement {
    /// Indices `0..k`. Under AR(1) this puts the actives next to each other.
    #[default]
    Leading,
    /// `k` indices drawn uniformly without replacement.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub cov: CovarianceKind,
    pub beta_magnitude: f64,
    pub noise_sd: f64,
    pub seed: u64,
    #[serde(default)]
    pub placement: SupportPlacement,
}

impl SimConfig {
    /// The default coefficient magnitude (2) and noise level (1).
    pub fn new(n: usize, p: usize, k: usize, cov: CovarianceKind, seed: u64) -> Self {
        Self {
            n,
            p,
            k,
            cov,
            beta_magnitude: 2.0,
            noise_sd: 1.0,
            seed,
            placement: SupportPlacement::Leading,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cov.validate()?;
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        if self.p < 1 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        if self.k > self.p {
            return Err(Error::InvalidConfig(format!("k = {} exceeds p = {}", self.k, self.p)));
        }
        if !(self.beta_magnitude.is_finite() && self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::InvalidConfig("beta magnitude and noise sd must be finite, noise sd nonnegative".into()));
        }
        Ok(())
    }
}

/// One realized data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimInstance {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Sorted indices of the nonzero coefficients.
    pub true_support: Vec<usize>,
    pub true_beta: Vec<f64>,
}

/// Maps a standard normal vector `z` to a draw from `N(0, Sigma)` in place.
///
/// AR(1) uses the bidiagonal structure of its Cholesky factor; compound
/// symmetry uses the shared-factor form `sqrt(rho) z0 + sqrt(1 - rho) z`,
/// with `z0` the extra leading normal `shared`.
fn correlate(kind: CovarianceKind, shared: f64, z: &mut [f64]) {
    match kind {
        CovarianceKind::Independent => {}
        CovarianceKind::Ar1 { rho } => {
            let innov = (1.0 - rho * rho).sqrt();
            for j in 1..z.len() {
                z[j] = rho * z[j - 1] + innov * z[j];
            }
        }
        CovarianceKind::CompoundSymmetric { rho } => {
            let common = rho.sqrt() * shared;
            let own = (1.0 - rho).sqrt();
            z.iter_mut().for_each(|v| *v = common + own * *v);
        }
    }
}

/// Draws an instance according to `cfg`.
pub fn sample_instance(cfg: &SimConfig) -> Result<SimInstance> {
    cfg.validate()?;
    let SimConfig { n, p, k, .. } = *cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut support: Vec<usize> = match cfg.placement {
        SupportPlacement::Leading => (0..k).collect(),
        SupportPlacement::Random => index::sample(&mut rng, p, k).into_vec(),
    };
    support.sort_unstable();
    let mut beta = vec![0.0; p];
    for &j in &support {
        let negative = rng.random_bool(0.5);
        beta[j] = if negative { -cfg.beta_magnitude } else { cfg.beta_magnitude };
    }

    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        let shared = match cfg.cov {
            CovarianceKind::CompoundSymmetric { .. } => rng.sample(StandardNormal),
            _ => 0.0,
        };
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        correlate(cfg.cov, shared, &mut row);
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }

    let mut y = vec![0.0; n];
    for &j in &support {
        let b = beta[j];
        for (yi, xi) in y.iter_mut().zip(x.column(j).iter()) {
            *yi += b * xi;
        }
    }
    for yi in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *yi += cfg.noise_sd * e;
    }

    Ok(SimInstance {
        x,
        y,
        true_support: support,
        true_beta: beta,
    })
}

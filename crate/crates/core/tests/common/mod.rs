//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the crate's solver: the Lasso oracles are a FISTA
//! proximal-gradient method polished by an exact active-set solve, and a
//! brute-force enumeration over supports and sign patterns for tiny `p`.

#![allow(dead_code)]

use etlasso::DesignMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `(2n)^{-1} ||y - X b||^2 + lambda ||b||_1`, evaluated directly.
pub fn lasso_objective(x: &DMatrix<f64>, y: &[f64], lambda: f64, b: &[f64]) -> f64 {
    let n = x.nrows() as f64;
    let r = DVector::from_column_slice(y) - x * DVector::from_column_slice(b);
    r.norm_squared() / (2.0 * n) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Solves the KKT system on the support and sign pattern of `b`. Returns
/// the exact minimizer if the pattern is self-consistent.
fn polish(x: &DMatrix<f64>, y: &[f64], lambda: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let support: Vec<usize> = (0..p).filter(|&j| b[j].abs() > 1e-9).collect();
    let yv = DVector::from_column_slice(y);
    let mut out = vec![0.0; p];
    if !support.is_empty() {
        let xs = x.select_columns(&support);
        let g = xs.transpose() * &xs / n;
        let c = xs.transpose() * &yv / n;
        let s = DVector::from_iterator(support.len(), support.iter().map(|&j| b[j].signum()));
        let beta = g.cholesky()?.solve(&(c - s * lambda));
        for (i, &j) in support.iter().enumerate() {
            if beta[i].signum() != b[j].signum() {
                return None;
            }
            out[j] = beta[i];
        }
    }
    let r = &yv - x * DVector::from_column_slice(&out);
    for j in 0..p {
        if out[j] == 0.0 && (x.column(j).dot(&r) / n).abs() > lambda * (1.0 + 1e-9) {
            return None;
        }
    }
    Some(out)
}

/// Lasso minimizer by accelerated proximal gradient, polished by an exact
/// solve on the detected support and signs.
pub fn fista_lasso(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let gram = x.transpose() * x / n;
    let xty = x.transpose() * DVector::from_column_slice(y) / n;
    let lip = gram.symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lip;

    let mut b = DVector::zeros(p);
    let mut z = b.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &gram * &z - &xty;
        let next = DVector::from_iterator(p, (0..p).map(|j| soft(z[j] - step * grad[j], step * lambda)));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &b) * ((t - 1.0) / t_next);
        let change = (&next - &b).amax();
        b = next;
        t = t_next;
        if change < 1e-13 {
            break;
        }
    }
    let raw: Vec<f64> = b.iter().copied().collect();
    polish(x, y, lambda, &raw).unwrap_or(raw)
}

/// Exact Lasso minimizer for small `p` by enumerating every support and
/// sign pattern and keeping the feasible candidate of least objective.
pub fn exhaustive_lasso(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let p = x.ncols();
    assert!(p <= 8, "enumeration is exponential in p");
    let n = x.nrows() as f64;
    let yv = DVector::from_column_slice(y);
    let mut best = vec![0.0; p];
    let mut best_obj = lasso_objective(x, y, lambda, &best);
    let patterns = 3usize.pow(p as u32);
    for code in 1..patterns {
        let mut c = code;
        let mut support = Vec::new();
        let mut signs = Vec::new();
        for j in 0..p {
            match c % 3 {
                1 => {
                    support.push(j);
                    signs.push(1.0);
                }
                2 => {
                    support.push(j);
                    signs.push(-1.0);
                }
                _ => {}
            }
            c /= 3;
        }
        let xs = x.select_columns(&support);
        let g = xs.transpose() * &xs / n;
        let rhs = xs.transpose() * &yv / n - DVector::from_column_slice(&signs) * lambda;
        let Some(chol) = g.cholesky() else { continue };
        let beta = chol.solve(&rhs);
        if beta.iter().zip(&signs).any(|(b, s)| b * s <= 0.0) {
            continue;
        }
        let mut full = vec![0.0; p];
        for (i, &j) in support.iter().enumerate() {
            full[j] = beta[i];
        }
        // Improvements at rounding level do not justify a larger support.
        let obj = lasso_objective(x, y, lambda, &full);
        if obj < best_obj - 1e-14 * best_obj.abs().max(1e-300) {
            best_obj = obj;
            best = full;
        }
    }
    best
}

/// Centered design with `X^T X / n = I`, built from a QR factorization.
pub fn orthonormal_design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DesignMatrix {
    let mut a = gaussian(n, p, rng);
    for mut col in a.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let q = a.qr().q();
    DesignMatrix::from_standardized(q * (n as f64).sqrt()).unwrap()
}

/// Column-wise standardization written out by hand: mean 0 and
/// `n^{-1} ||x_j||^2 = 1`.
pub fn standardize_by_hand(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut out = x.clone();
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for mut col in out.column_iter_mut() {
        let m = col.sum() / n;
        col.add_scalar_mut(-m);
        let s = (col.norm_squared() / n).sqrt();
        col /= s;
        means.push(m);
        scales.push(s);
    }
    (out, means, scales)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

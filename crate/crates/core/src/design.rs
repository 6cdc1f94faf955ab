//! Standardized design matrices and centered responses.
//!
//! Every solver in this crate works on a [`DesignMatrix`] whose columns have
//! mean zero and `n^{-1} ||X_j||^2 = 1`, paired with a centered [`Response`].
//! The original column means and scales are retained so that coefficients can
//! be mapped back to the raw feature scale.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column-major `n x p` feature matrix plus the affine map back to raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
    standardized: bool,
}

/// Centered response vector and the mean that was removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    values: Vec<f64>,
    mean: f64,
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    for (col, column) in x.column_iter().enumerate() {
        if let Some(row) = column.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Centers and scales `x` column-wise so that each column has mean 0 and
/// `n^{-1/2} ||X_j||_2 = 1`, and centers `y`.
pub fn standardize(x: &DMatrix<f64>, y: &[f64]) -> Result<(DesignMatrix, Response)> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let design = DesignMatrix::standardize(x)?;
    let response = Response::centered(y)?;
    Ok((design, response))
}

impl DesignMatrix {
    /// Standardizes a raw matrix. Constant columns are rejected.
    pub fn standardize(x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 || p < 1 {
            return Err(Error::TooSmall { rows: n, cols: p });
        }
        check_finite(x)?;
        let nf = n as f64;
        let mut values = x.clone();
        let mut column_means = Vec::with_capacity(p);
        let mut column_scales = Vec::with_capacity(p);
        for j in 0..p {
            let mut col = values.column_mut(j);
            let mean = col.iter().sum::<f64>() / nf;
            col.iter_mut().for_each(|v| *v -= mean);
            // A second centering pass removes the rounding left by the first.
            let resid = col.iter().sum::<f64>() / nf;
            col.iter_mut().for_each(|v| *v -= resid);
            let scale = (col.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            let magnitude = x.column(j).iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            if scale <= 1e-12 * magnitude {
                return Err(Error::ZeroVarianceColumn(j));
            }
            col.iter_mut().for_each(|v| *v /= scale);
            column_means.push(mean + resid);
            column_scales.push(scale);
        }
        Ok(Self {
            values,
            column_means,
            column_scales,
            standardized: true,
        })
    }

    /// Wraps a matrix whose columns are already on the working scale, with
    /// the given raw-scale means and scales.
    pub(crate) fn from_parts(
        values: DMatrix<f64>,
        column_means: Vec<f64>,
        column_scales: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(values.ncols(), column_means.len());
        debug_assert_eq!(values.ncols(), column_scales.len());
        Self {
            values,
            column_means,
            column_scales,
            standardized: true,
        }
    }

    /// Wraps a matrix without modifying it. The caller asserts that it is
    /// already centered and scaled; means are taken as 0 and scales as 1.
    pub fn from_standardized(values: DMatrix<f64>) -> Result<Self> {
        let (n, p) = values.shape();
        if n < 2 || p < 1 {
            return Err(Error::TooSmall { rows: n, cols: p });
        }
        check_finite(&values)?;
        Ok(Self {
            values,
            column_means: vec![0.0; p],
            column_scales: vec![1.0; p],
            standardized: true,
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Contiguous view of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.nrows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Sub-design made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DesignMatrix {
        let n = self.nrows();
        let mut data = Vec::with_capacity(n * cols.len());
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        DesignMatrix {
            values: DMatrix::from_vec(n, cols.len(), data),
            column_means: cols.iter().map(|&j| self.column_means[j]).collect(),
            column_scales: cols.iter().map(|&j| self.column_scales[j]).collect(),
            standardized: self.standardized,
        }
    }

    /// Rows `rows` of the working-scale matrix, as a plain matrix.
    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.ncols(), |i, j| self.values[(rows[i], j)])
    }

    /// Maps working-scale coefficients to raw-scale coefficients and an
    /// intercept, given the raw response mean.
    pub fn to_raw_scale(&self, cols: &[usize], coefs: &[f64], y_mean: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = cols
            .iter()
            .zip(coefs)
            .map(|(&j, &b)| b / self.column_scales[j])
            .collect();
        let shift: f64 = cols
            .iter()
            .zip(&raw)
            .map(|(&j, &b)| b * self.column_means[j])
            .sum();
        (raw, y_mean - shift)
    }
}

impl Response {
    /// Centers `y`, keeping its mean.
    pub fn centered(y: &[f64]) -> Result<Self> {
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: 0 });
        }
        if y.is_empty() {
            return Err(Error::TooSmall { rows: 0, cols: 1 });
        }
        let nf = y.len() as f64;
        let mean = y.iter().sum::<f64>() / nf;
        let mut values: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let resid = values.iter().sum::<f64>() / nf;
        values.iter_mut().for_each(|v| *v -= resid);
        Ok(Self {
            values,
            mean: mean + resid,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn subset(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.values[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn two_point_column_becomes_symmetric() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let (d, r) = standardize(&x, &[2.0, 4.0]).unwrap();
        assert_eq!(d.column(0), &[-1.0, 1.0]);
        assert_eq!(r.values(), &[-1.0, 1.0]);
        assert_eq!(r.mean(), 3.0);
        assert_eq!(d.column_means(), &[2.0]);
        assert_eq!(d.column_scales(), &[1.0]);
    }

    #[test]
    fn standardization_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(30, 4, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0 + 1.0);
        let once = DesignMatrix::standardize(&x).unwrap();
        let twice = DesignMatrix::standardize(once.values()).unwrap();
        let diff = (once.values() - twice.values()).amax();
        assert!(diff <= 1e-12, "diff {diff}");
    }

    #[test]
    fn gaussian_columns_are_centered_and_unit_scaled() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(50, 10, |_, _| rng.sample::<f64, _>(StandardNormal) * 5.0 - 2.0);
        let d = DesignMatrix::standardize(&x).unwrap();
        for j in 0..10 {
            let col = d.column(j);
            let mean = col.iter().sum::<f64>() / 50.0;
            let sq = col.iter().map(|v| v * v).sum::<f64>() / 50.0;
            assert!(mean.abs() <= 1e-10);
            assert!((sq - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        assert_eq!(
            standardize(&x, &[1.0, 2.0, 3.0]).unwrap_err(),
            Error::ZeroVarianceColumn(1)
        );
    }

    #[test]
    fn length_mismatch_and_bad_values() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 4.0]);
        assert!(matches!(
            standardize(&x, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        let bad = DMatrix::from_row_slice(3, 1, &[1.0, f64::NAN, 4.0]);
        assert_eq!(
            standardize(&bad, &[1.0, 2.0, 3.0]).unwrap_err(),
            Error::NonFinite { row: 1, col: 0 }
        );
        let one_row = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(standardize(&one_row, &[1.0]), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn raw_scale_round_trip() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 30.0, 3.0, 20.0, 6.0, 0.0]);
        let y: Vec<f64> = (0..4).map(|i| 1.5 + 2.0 * x[(i, 0)] - 0.5 * x[(i, 1)]).collect();
        let (d, r) = standardize(&x, &y).unwrap();
        // Exact working-scale coefficients for the planted model.
        let work = [2.0 * d.column_scales()[0], -0.5 * d.column_scales()[1]];
        let (raw, icpt) = d.to_raw_scale(&[0, 1], &work, r.mean());
        assert!((raw[0] - 2.0).abs() < 1e-12);
        assert!((raw[1] + 0.5).abs() < 1e-12);
        assert!((icpt - 1.5).abs() < 1e-12);
    }
}

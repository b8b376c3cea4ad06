//! Ordinary least squares with classical standard errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OlsError {
    #[error("need more observations than features (n = {n}, k = {k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    Singular(Vec<String>),
    #[error("row {row} has {got} values, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("{rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r2: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn t_stats(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.std_errors)
            .map(|(c, s)| c / s)
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Relative tolerance on `|R_jj|` below which column j is treated as a linear
/// combination of the columns before it.
const RANK_TOL: f64 = 1e-10;

/// Fits `y ~ X` by Householder QR. Standard errors are
/// `sqrt(diag(s^2 (X'X)^-1))` with `s^2 = RSS / (n - k)`.
pub fn ols_fit(names: &[String], rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, OlsError> {
    let n = rows.len();
    let k = names.len();
    if n != y.len() {
        return Err(OlsError::LengthMismatch {
            rows: n,
            targets: y.len(),
        });
    }
    if n <= k {
        return Err(OlsError::TooFewObservations { n, k });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(OlsError::Ragged {
                row: i,
                got: r.len(),
                expected: k,
            });
        }
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);

    let col_norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    let qr = x.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..k)
        .filter(|&j| col_norms[j] == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norms[j])
        .map(|j| names[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(OlsError::Singular(collinear));
    }

    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| OlsError::Singular(names.to_vec()))?;
    let residuals = &yv - &x * &beta;
    let rss = residuals.norm_squared();
    let sigma2 = rss / (n - k) as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| OlsError::Singular(names.to_vec()))?;
    // (X'X)^-1 = R^-1 R^-T
    let xtx_inv = &r_inv * r_inv.transpose();
    let std_errors = (0..k).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt()).collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else if rss == 0.0 { 1.0 } else { 0.0 };

    Ok(OlsFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        r2,
        n,
        residuals: residuals.iter().copied().collect(),
    })
}

/// Per-column mean and (sample) standard deviation used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Z-scores every column except those listed in `skip` (e.g. the intercept).
/// Constant columns become all zeros.
pub fn standardize(rows: &mut [Vec<f64>], skip: &[usize]) -> Standardization {
    let k = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut means = vec![0.0; k];
    let mut sds = vec![1.0; k];
    for j in (0..k).filter(|j| !skip.contains(j)) {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = if rows.len() > 1 {
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        for r in rows.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
        means[j] = mean;
        sds[j] = sd;
    }
    Standardization { means, sds }
}

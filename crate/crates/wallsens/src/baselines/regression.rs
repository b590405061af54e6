//! Standardized (rank) regression coefficients by least squares on z-scores.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub src: Vec<f64>,
    pub srrc: Vec<f64>,
    /// β² / Σβ²
    pub src_normalized: Vec<f64>,
    pub srrc_normalized: Vec<f64>,
    /// Coefficient of determination of the standardized fit.
    pub r2: f64,
    pub rank_r2: f64,
}

fn zscores(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return invalid("a column of the regression has zero or non-finite spread");
    }
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Ranks starting at 1; ties share the average of their positions.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Standardized coefficients and R² of y on the columns of x.
pub fn standardized_regression(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if n == 0 || x.len() != n {
        return invalid("one output per sample row expected");
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return invalid("sample rows must share a non-zero width");
    }
    if n < p + 2 {
        return invalid(format!(
            "regression on {p} parameters needs at least {} samples",
            p + 2
        ));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return invalid("regression inputs must be finite");
    }
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| zscores(&x.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let zy = DVector::from_vec(zscores(y)?);
    let a = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    let sv = a.singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return invalid("singular design matrix");
    }
    let Some(chol) = (a.transpose() * &a).cholesky() else {
        return invalid("singular design matrix");
    };
    let beta = chol.solve(&(a.transpose() * &zy));
    let resid = &zy - &a * &beta;
    let r2 = 1.0 - resid.norm_squared() / zy.norm_squared();
    Ok((beta.iter().cloned().collect(), r2))
}

fn shares(b: &[f64]) -> Vec<f64> {
    let total: f64 = b.iter().map(|v| v * v).sum();
    b.iter().map(|v| v * v / total).collect()
}

/// SRC on the raw samples and SRRC on their ranks, with normalized squares.
pub fn src_srrc(x: &[Vec<f64>], y: &[f64]) -> Result<RegressionReport> {
    let (src, r2) = standardized_regression(x, y)?;
    let p = x[0].len();
    let mut rx = vec![vec![0.0; p]; x.len()];
    for j in 0..p {
        for (row, r) in rx
            .iter_mut()
            .zip(ranks(&x.iter().map(|r| r[j]).collect::<Vec<_>>()))
        {
            row[j] = r;
        }
    }
    let (srrc, rank_r2) = standardized_regression(&rx, &ranks(y))?;
    Ok(RegressionReport {
        src_normalized: shares(&src),
        srrc_normalized: shares(&srrc),
        src,
        srrc,
        r2,
        rank_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::sampling::lhs_unit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_linear_fit() {
        let x = lhs_unit(40, 2, &mut ChaCha8Rng::seed_from_u64(1));
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0]).collect();
        let r = src_srrc(&x, &y).unwrap();
        assert!((r.src[0] - 1.0).abs() < 1e-10 && r.src[1].abs() < 1e-10);
        assert!((r.src_normalized[0] - 1.0).abs() < 1e-10);
        assert!((r.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_regression_helps_monotone_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = lhs_unit(200, 2, &mut rng);
        let y: Vec<f64> = x
            .iter()
            .map(|r| (8.0 * r[0]).exp() + 0.5 * r[1] + 0.01 * rng.gen::<f64>())
            .collect();
        let r = src_srrc(&x, &y).unwrap();
        assert!(r.srrc[0].abs() > r.src[0].abs());
    }

    #[test]
    fn squared_src_sum_is_r2() {
        // orthogonal full-factorial predictors: Σβ² = R² exactly
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..400)
            .map(|i| vec![(i / 20) as f64, (i % 20) as f64])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] - 0.5 * r[1] + 0.05 * r[0] * r[0] + rng.gen::<f64>())
            .collect();
        let r = src_srrc(&x, &y).unwrap();
        let s: f64 = r.src.iter().map(|b| b * b).sum();
        assert!(s <= 1.0 && (s - r.r2).abs() < 1e-12, "{s} {}", r.r2);
    }

    #[test]
    fn average_ranks() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn rejects_bad_designs() {
        let x = vec![vec![1.0, 2.0]; 10];
        assert!(src_srrc(&x, &[1.0; 10]).is_err());
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 + (i % 3) as f64).collect();
        assert!(src_srrc(&x, &y).is_err());
        assert!(src_srrc(&x[..3], &y[..3]).is_err());
    }
}

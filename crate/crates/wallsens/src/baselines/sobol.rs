//! First-order and total Sobol indices from the A / B / A_B^(i) scheme.
//!
//! S¹ uses the Janon estimator on the pair (B, A_B^(i)), which share only
//! column i; S^tot uses the Jansen estimator on (A, A_B^(i)), which share
//! every column but i.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{check_domains, lhs_unit, scale, sobol_unit, DesignKind};
use crate::error::{invalid, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FIRST_ORDER_ESTIMATOR: &str = "janon";
pub const TOTAL_ESTIMATOR: &str = "jansen";

/// The three families of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltelliDesign {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// ab[i][k]: row k of A with column i taken from B.
    pub ab: Vec<Vec<Vec<f64>>>,
}

impl SaltelliDesign {
    /// Base matrices from one 2p-dimensional design.
    pub fn new(kind: DesignKind, n: usize, domains: &[(f64, f64)], seed: u64) -> Result<Self> {
        check_domains(domains)?;
        if n < 2 {
            return invalid("Sobol estimation needs at least 2 base samples");
        }
        let p = domains.len();
        let base = match kind {
            DesignKind::LatinHypercube => lhs_unit(n, 2 * p, &mut ChaCha8Rng::seed_from_u64(seed)),
            DesignKind::SobolSequence => sobol_unit(n, 2 * p)?,
        };
        let a: Vec<Vec<f64>> = base.iter().map(|r| scale(&r[..p], domains)).collect();
        let b: Vec<Vec<f64>> = base.iter().map(|r| scale(&r[p..], domains)).collect();
        let ab = (0..p)
            .map(|i| {
                a.iter()
                    .zip(&b)
                    .map(|(ra, rb)| {
                        let mut r = ra.clone();
                        r[i] = rb[i];
                        r
                    })
                    .collect()
            })
            .collect();
        Ok(Self { a, b, ab })
    }

    /// Every point in evaluation order: A, B, then each A_B^(i).
    pub fn points(&self) -> Vec<&[f64]> {
        self.a
            .iter()
            .chain(&self.b)
            .chain(self.ab.iter().flatten())
            .map(|r| r.as_slice())
            .collect()
    }

    pub fn evaluations(&self) -> usize {
        self.a.len() * (self.ab.len() + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub s1: Vec<f64>,
    pub s_tot: Vec<f64>,
    pub s1_clamped: Vec<f64>,
    pub s_tot_clamped: Vec<f64>,
    /// S^tot_p · Var(y), clamped at zero.
    pub d_tot: Vec<f64>,
    pub variance: f64,
    pub n_samples: usize,
    pub evaluations: usize,
    pub first_order_estimator: String,
    pub total_estimator: String,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Estimators applied to precomputed outputs y_A, y_B and y_AB[i].
pub fn indices_from_outputs(ya: &[f64], yb: &[f64], yab: &[Vec<f64>]) -> Result<VarianceReport> {
    let n = ya.len();
    if n < 2 || yb.len() != n || yab.iter().any(|y| y.len() != n) {
        return invalid("output blocks must share a length of at least 2");
    }
    if ya
        .iter()
        .chain(yb)
        .chain(yab.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return invalid("model outputs must be finite");
    }
    let all = || ya.iter().chain(yb).cloned();
    let m = mean(all());
    let variance = mean(all().map(|v| (v - m).powi(2)));
    if !(variance > 0.0) {
        return invalid("model output has zero variance");
    }
    let mut s1 = Vec::with_capacity(yab.len());
    let mut s_tot = Vec::with_capacity(yab.len());
    for y in yab {
        let f0 = mean(yb.iter().zip(y).map(|(a, b)| 0.5 * (a + b)));
        let v = mean(yb.iter().zip(y).map(|(a, b)| 0.5 * (a * a + b * b))) - f0 * f0;
        let cov = mean(yb.iter().zip(y).map(|(a, b)| a * b)) - f0 * f0;
        s1.push(if v > 0.0 { cov / v } else { 0.0 });
        s_tot.push(0.5 * mean(ya.iter().zip(y).map(|(a, b)| (a - b).powi(2))) / variance);
    }
    let clamp = |v: &[f64]| v.iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
    Ok(VarianceReport {
        s1_clamped: clamp(&s1),
        s_tot_clamped: clamp(&s_tot),
        d_tot: s_tot.iter().map(|s| s.max(0.0) * variance).collect(),
        s1,
        s_tot,
        variance,
        n_samples: n,
        evaluations: n * (yab.len() + 2),
        first_order_estimator: FIRST_ORDER_ESTIMATOR.into(),
        total_estimator: TOTAL_ESTIMATOR.into(),
    })
}

/// Evaluates `model` on the design (rows in parallel) and estimates indices.
pub fn sobol_indices<F>(model: F, design: &SaltelliDesign) -> Result<VarianceReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let y: Vec<f64> = design
        .points()
        .par_iter()
        .map(|r| model(r))
        .collect::<Result<_>>()?;
    let n = design.a.len();
    let yab = y[2 * n..].chunks(n).map(|c| c.to_vec()).collect::<Vec<_>>();
    indices_from_outputs(&y[..n], &y[n..2 * n], &yab)
}

//! First-order indices by random-balance-design FAST.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::sampling::{check_domains, scale};
use crate::error::{invalid, Result};

pub const DEFAULT_HARMONICS: usize = 6;
const OMEGA: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastReport {
    /// Bias-corrected indices.
    pub s1: Vec<f64>,
    pub s1_raw: Vec<f64>,
    pub n_samples: usize,
    pub harmonics: usize,
}

/// Smallest admissible sample count for M harmonics.
pub fn min_samples(harmonics: usize) -> usize {
    4 * harmonics * OMEGA + 1
}

/// The design: search-curve positions s_k and one random permutation of them
/// per parameter; returns (permutations, parameter rows).
pub fn rbd_design(
    n: usize,
    domains: &[(f64, f64)],
    seed: u64,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    check_domains(domains)?;
    let s: Vec<f64> = (0..n)
        .map(|k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = domains
        .iter()
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let rows = (0..n)
        .map(|k| {
            let unit: Vec<f64> = perms
                .iter()
                .map(|p| 0.5 + (OMEGA as f64 * s[p[k]]).sin().asin() / std::f64::consts::PI)
                .collect();
            scale(&unit, domains)
        })
        .collect();
    Ok((perms, rows))
}

/// Indices from outputs of the design built by [`rbd_design`].
pub fn indices_from_outputs(
    perms: &[Vec<usize>],
    y: &[f64],
    harmonics: usize,
) -> Result<FastReport> {
    let n = y.len();
    if n < min_samples(harmonics) {
        return invalid(format!(
            "RBD-FAST with M = {harmonics} needs at least {} samples",
            min_samples(harmonics)
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return invalid("model outputs must be finite");
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let lambda = 2.0 * harmonics as f64 / n as f64;
    let mut raw = Vec::with_capacity(perms.len());
    for p in perms {
        if p.len() != n {
            return invalid("permutation and output lengths differ");
        }
        // reorder y by increasing curve position of this parameter
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (k, &pos) in p.iter().enumerate() {
            buf[pos] = Complex::new(y[k], 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr() / n as f64).collect();
        let total: f64 = 2.0 * power[1..n.div_ceil(2)].iter().sum::<f64>();
        if !(total > 0.0) {
            return invalid("model output has zero variance");
        }
        let d1: f64 = 2.0 * (1..=harmonics).map(|h| power[h * OMEGA]).sum::<f64>();
        raw.push(d1 / total);
    }
    let s1 = raw
        .iter()
        .map(|s| s - lambda / (1.0 - lambda) * (1.0 - s))
        .collect();
    Ok(FastReport {
        s1,
        s1_raw: raw,
        n_samples: n,
        harmonics,
    })
}

pub fn rbd_fast<F>(
    model: F,
    domains: &[(f64, f64)],
    n: usize,
    harmonics: usize,
    seed: u64,
) -> Result<FastReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if n < min_samples(harmonics) {
        return invalid(format!(
            "RBD-FAST with M = {harmonics} needs at least {} samples",
            min_samples(harmonics)
        ));
    }
    let (perms, rows) = rbd_design(n, domains, seed)?;
    let y: Vec<f64> = rows.par_iter().map(|r| model(r)).collect::<Result<_>>()?;
    indices_from_outputs(&perms, &y, harmonics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::sobol::tests::ishigami;
    use std::f64::consts::PI;

    #[test]
    fn additive_model_splits_evenly() {
        let r = rbd_fast(
            |x| Ok(x[0] + x[1]),
            &[(0.0, 1.0); 2],
            1000,
            DEFAULT_HARMONICS,
            3,
        )
        .unwrap();
        assert!(
            (r.s1[0] - 0.5).abs() < 0.05 && (r.s1[1] - 0.5).abs() < 0.05,
            "{r:?}"
        );
    }

    #[test]
    fn dead_parameter() {
        let r = rbd_fast(
            |x| Ok(x[0].exp()),
            &[(0.0, 1.0); 2],
            500,
            DEFAULT_HARMONICS,
            8,
        )
        .unwrap();
        assert!(r.s1[1].abs() < 0.03 && r.s1[0] > 0.95, "{r:?}");
    }

    #[test]
    fn ishigami_first_order() {
        let r = rbd_fast(ishigami, &[(-PI, PI); 3], 4000, DEFAULT_HARMONICS, 1).unwrap();
        let want = [0.3139, 0.4424, 0.0];
        for i in 0..3 {
            assert!((r.s1[i] - want[i]).abs() < 0.05, "{r:?}");
        }
    }

    #[test]
    fn design_marginals_fill_domain() {
        let (perms, rows) = rbd_design(101, &[(2.0, 4.0)], 0).unwrap();
        assert!(rows.iter().all(|r| (2.0..=4.0).contains(&r[0])));
        let mut p = perms[0].clone();
        p.sort();
        assert_eq!(p, (0..101).collect::<Vec<_>>());
    }

    #[test]
    fn sample_floor() {
        assert_eq!(min_samples(6), 25);
        assert!(rbd_fast(|x| Ok(x[0]), &[(0.0, 1.0)], 24, 6, 0).is_err());
        assert!(rbd_fast(|x| Ok(x[0]), &[(0.0, 1.0)], 25, 6, 0).is_ok());
    }
}

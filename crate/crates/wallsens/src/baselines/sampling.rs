//! Space-filling sample designs: Latin hypercube and the Sobol sequence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    LatinHypercube,
    SobolSequence,
}

impl std::str::FromStr for DesignKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lhs" | "latin_hypercube" => Ok(DesignKind::LatinHypercube),
            "sobol" | "sobol_sequence" => Ok(DesignKind::SobolSequence),
            _ => invalid(format!("unknown design '{s}' (lhs | sobol)")),
        }
    }
}

/// Sample plan over a box of parameter domains. The seed is ignored by the
/// (deterministic) Sobol sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDesign {
    pub kind: DesignKind,
    pub n_samples: usize,
    pub domains: Vec<(f64, f64)>,
    pub seed: u64,
}

impl SampleDesign {
    pub fn new(
        kind: DesignKind,
        n_samples: usize,
        domains: Vec<(f64, f64)>,
        seed: u64,
    ) -> Result<Self> {
        check_domains(&domains)?;
        if n_samples == 0 {
            return invalid("design needs at least one sample");
        }
        Ok(Self {
            kind,
            n_samples,
            domains,
            seed,
        })
    }

    /// Rows of parameter values.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        check_domains(&self.domains)?;
        let unit = match self.kind {
            DesignKind::LatinHypercube => lhs_unit(
                self.n_samples,
                self.domains.len(),
                &mut ChaCha8Rng::seed_from_u64(self.seed),
            ),
            DesignKind::SobolSequence => sobol_unit(self.n_samples, self.domains.len())?,
        };
        Ok(unit.into_iter().map(|r| scale(&r, &self.domains)).collect())
    }
}

pub(crate) fn check_domains(domains: &[(f64, f64)]) -> Result<()> {
    if domains.is_empty() {
        return invalid("design needs at least one parameter domain");
    }
    for (i, &(lo, hi)) in domains.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("domain {} is degenerate: [{lo}, {hi}]", i + 1));
        }
    }
    Ok(())
}

pub(crate) fn scale(unit: &[f64], domains: &[(f64, f64)]) -> Vec<f64> {
    unit.iter()
        .zip(domains)
        .map(|(u, (lo, hi))| lo + u * (hi - lo))
        .collect()
}

/// One point per stratum per axis on the unit cube.
pub fn lhs_unit<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (row, &s) in out.iter_mut().zip(&strata) {
            row[d] = (s as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    out
}

const BITS: usize = 32;

/// (s, a, m) primitive-polynomial data for dimensions 2..=11.
const DIRECTIONS: [(u32, u32, &[u32]); 10] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
];

/// Highest dimension the bundled direction numbers support.
pub const SOBOL_MAX_DIM: usize = DIRECTIONS.len() + 1;

fn direction_numbers(dim: usize) -> Vec<[u32; BITS]> {
    let mut v = Vec::with_capacity(dim);
    let mut first = [0u32; BITS];
    for (i, x) in first.iter_mut().enumerate() {
        *x = 1 << (31 - i);
    }
    v.push(first);
    for &(s, a, m) in DIRECTIONS.iter().take(dim.saturating_sub(1)) {
        let s = s as usize;
        let mut d = [0u32; BITS];
        for i in 0..s.min(BITS) {
            d[i] = m[i] << (31 - i);
        }
        for i in s..BITS {
            let mut x = d[i - s] ^ (d[i - s] >> s);
            for k in 1..s {
                x ^= ((a >> (s - 1 - k)) & 1) * d[i - k];
            }
            d[i] = x;
        }
        v.push(d);
    }
    v
}

/// First n points of the Sobol sequence after dropping the origin.
pub fn sobol_unit(n: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > SOBOL_MAX_DIM {
        return invalid(format!(
            "Sobol sequence supports 1..={SOBOL_MAX_DIM} dimensions, got {dim}"
        ));
    }
    if n as u64 >= 1u64 << BITS {
        return invalid("too many Sobol points requested");
    }
    let v = direction_numbers(dim);
    let mut x = vec![0u32; dim];
    let mut out = Vec::with_capacity(n);
    for i in 0..n as u64 {
        // Gray-code update for point i + 1
        let c = (!i).trailing_zeros() as usize;
        for d in 0..dim {
            x[d] ^= v[d][c];
        }
        out.push(x.iter().map(|&b| b as f64 / 4294967296.0).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lhs_point_inside() {
        let d = SampleDesign::new(DesignKind::LatinHypercube, 1, vec![(0.0, 1.0); 2], 3).unwrap();
        let p = d.points().unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn lhs_strata_and_mean() {
        let n = 1000;
        let pts = lhs_unit(n, 3, &mut ChaCha8Rng::seed_from_u64(11));
        for d in 0..3 {
            let mut seen = vec![false; n];
            for r in &pts {
                seen[(r[d] * n as f64) as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
            let mean = pts.iter().map(|r| r[d]).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn lhs_deterministic_and_scaled() {
        let d = SampleDesign::new(
            DesignKind::LatinHypercube,
            50,
            vec![(2.0, 3.0), (-1.0, 1.0)],
            5,
        )
        .unwrap();
        let a = d.points().unwrap();
        assert_eq!(a, d.points().unwrap());
        assert!(a
            .iter()
            .all(|r| (2.0..3.0).contains(&r[0]) && (-1.0..1.0).contains(&r[1])));
        let other = SampleDesign { seed: 6, ..d }.points().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sobol_pinned_points() {
        let p = sobol_unit(5, 2).unwrap();
        let want = [
            [0.5, 0.5],
            [0.75, 0.25],
            [0.25, 0.75],
            [0.375, 0.375],
            [0.875, 0.875],
        ];
        for (a, b) in p.iter().zip(want.iter()) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
        // third dimension of the first points: 0.5, 0.25, 0.75, 0.625
        let p3 = sobol_unit(4, 3).unwrap();
        assert_eq!(
            p3.iter().map(|r| r[2]).collect::<Vec<_>>(),
            vec![0.5, 0.25, 0.75, 0.625]
        );
        let deep = &sobol_unit(1000, SOBOL_MAX_DIM).unwrap()[999];
        let want = [
            0.2197265625,
            0.0966796875,
            0.5185546875,
            0.6767578125,
            0.2802734375,
            0.9072265625,
            0.0458984375,
            0.8994140625,
            0.5009765625,
            0.0693359375,
            0.0849609375,
        ];
        assert_eq!(deep.as_slice(), want.as_slice());
    }

    #[test]
    fn sobol_balanced_in_every_dimension() {
        // each dyadic interval of width 1/16 holds exactly one of points 1..=15 plus the dropped origin
        let p = sobol_unit(15, SOBOL_MAX_DIM).unwrap();
        for d in 0..SOBOL_MAX_DIM {
            let mut cells = vec![0; 16];
            cells[0] += 1;
            for r in &p {
                cells[(r[d] * 16.0) as usize] += 1;
            }
            assert!(cells.iter().all(|&c| c == 1), "dim {d}: {cells:?}");
        }
        assert!(sobol_unit(3, SOBOL_MAX_DIM + 1).is_err());
    }

    #[test]
    fn degenerate_domain_rejected() {
        assert!(SampleDesign::new(DesignKind::SobolSequence, 4, vec![(1.0, 1.0)], 0).is_err());
        assert!(SampleDesign::new(DesignKind::SobolSequence, 0, vec![(0.0, 1.0)], 0).is_err());
    }
}

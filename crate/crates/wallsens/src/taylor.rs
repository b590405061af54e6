//! Second-order Taylor surrogates of temperature, flux and loads around an
//! anchor parameter point, with coefficients from one joint sensitivity march.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::sensitivity::{propagate, SensitivityRun, Target};
use crate::solver::{simulate, thermal_loads, Recording, TimeSeries};
use crate::wall::{DimensionlessProblem, ParamId};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Field on every node, every `stride` steps.
    Temperature { stride: usize },
    /// Interior flux at every step.
    Flux,
    /// Loads over each interval.
    Loads { intervals: Vec<(f64, f64)> },
}

impl OutputKind {
    pub(crate) fn recording(&self) -> Recording {
        match self {
            OutputKind::Temperature { stride } => Recording::every(*stride),
            _ => Recording::NONE,
        }
    }

    fn from_flux(&self, flux: &TimeSeries) -> Result<Vec<f64>> {
        match self {
            OutputKind::Flux => Ok(flux.values.clone()),
            OutputKind::Loads { intervals } => intervals
                .iter()
                .map(|&(a, b)| thermal_loads(flux, a, b))
                .collect(),
            OutputKind::Temperature { .. } => {
                invalid("temperature output is not derived from the flux")
            }
        }
    }

    pub(crate) fn extract(&self, run: &SensitivityRun, t: Option<Target>) -> Result<Vec<f64>> {
        match (self, t) {
            (OutputKind::Temperature { .. }, None) => {
                Ok(run.u.as_ref().expect("recorded").data.clone())
            }
            (OutputKind::Temperature { .. }, Some(t)) => Ok(run.field(t)?.data.clone()),
            (_, None) => self.from_flux(&run.flux),
            (_, Some(t)) => self.from_flux(run.flux_sensitivity(t)?),
        }
    }
}

/// Direct-solve output with the same layout as a surrogate of `kind`.
pub fn direct_output(
    problem: &DimensionlessProblem,
    grid: Grid,
    kind: &OutputKind,
) -> Result<Vec<f64>> {
    let sim = simulate(problem, grid, kind.recording())?;
    match kind {
        OutputKind::Temperature { .. } => Ok(sim.field.expect("recorded").data),
        _ => kind.from_flux(&sim.flux),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorModel {
    pub version: u32,
    pub kind: OutputKind,
    pub params: Vec<ParamId>,
    pub anchor: Vec<f64>,
    pub order: u8,
    pub base: Vec<f64>,
    /// gradient[i][m] = ∂y_m/∂p_i
    pub gradient: Vec<Vec<f64>>,
    /// Upper triangle i ≤ j, row-major; empty for first-order models.
    pub hessian: Vec<Vec<f64>>,
    /// Trust region per parameter as multiples of the anchor value.
    pub trust: Vec<(f64, f64)>,
}

/// Surrogate prediction and how far it extrapolates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub displacement: Vec<f64>,
    /// Displacement relative to each anchor value.
    pub relative: Vec<f64>,
    pub max_relative: f64,
    pub outside_trust: bool,
}

impl TaylorModel {
    /// Default trust region: [0.2, 1.9] × anchor.
    pub const DEFAULT_TRUST: (f64, f64) = (0.2, 1.9);

    pub fn new(
        kind: OutputKind,
        params: Vec<ParamId>,
        anchor: Vec<f64>,
        base: Vec<f64>,
        gradient: Vec<Vec<f64>>,
        hessian: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = params.len();
        let m = base.len();
        if anchor.len() != n || gradient.len() != n || gradient.iter().any(|g| g.len() != m) {
            return invalid("gradient and anchor must match the parameter list and output size");
        }
        let (order, hessian) = match hessian {
            None => (1, Vec::new()),
            Some(h) => {
                if h.len() != n * (n + 1) / 2 || h.iter().any(|r| r.len() != m) {
                    return invalid("packed Hessian must hold n(n+1)/2 rows of the output size");
                }
                (2, h)
            }
        };
        Ok(Self {
            version: FORMAT_VERSION,
            kind,
            params,
            anchor,
            order,
            base,
            gradient,
            hessian,
            trust: vec![Self::DEFAULT_TRUST; n],
        })
    }

    /// Index of ∂²/∂p_i∂p_j in the packed Hessian.
    pub fn hessian_index(&self, i: usize, j: usize) -> usize {
        let n = self.params.len();
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        row_offset(n, i) + (j - i)
    }

    /// One joint march populating base, gradient and (for order 2) Hessian.
    pub fn build(
        problem: &DimensionlessProblem,
        grid: Grid,
        params: &[ParamId],
        order: u8,
        kind: OutputKind,
    ) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return invalid("Taylor order must be 1 or 2");
        }
        if params.is_empty() {
            return invalid("Taylor model needs at least one parameter");
        }
        let n = params.len();
        let mut targets: Vec<Target> = params.iter().map(|&p| Target::First(p)).collect();
        if order == 2 {
            for i in 0..n {
                for j in i..n {
                    targets.push(Target::Second(params[i], params[j]));
                }
            }
        }
        let run = propagate(problem, grid, &targets, kind.recording())?;
        let base = kind.extract(&run, None)?;
        let gradient = params
            .iter()
            .map(|&p| kind.extract(&run, Some(Target::First(p))))
            .collect::<Result<_>>()?;
        let hessian = if order == 2 {
            let mut h = Vec::with_capacity(n * (n + 1) / 2);
            for i in 0..n {
                for j in i..n {
                    h.push(kind.extract(&run, Some(Target::Second(params[i], params[j])))?);
                }
            }
            Some(h)
        } else {
            None
        };
        let anchor = params
            .iter()
            .map(|&p| problem.param_value(p))
            .collect::<Result<_>>()?;
        Self::new(kind, params.to_vec(), anchor, base, gradient, hessian)
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Prediction> {
        let n = self.params.len();
        if p.len() != n {
            return invalid(format!("expected {n} parameter values, got {}", p.len()));
        }
        let d: Vec<f64> = p.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        let relative: Vec<f64> = d
            .iter()
            .zip(&self.anchor)
            .map(|(di, a)| if *a != 0.0 { di / a } else { *di })
            .collect();
        let outside_trust = p
            .iter()
            .zip(&self.anchor)
            .zip(&self.trust)
            .any(|((v, a), (lo, hi))| *v < lo * a - 1e-12 || *v > hi * a + 1e-12);
        let mut values = self.base.clone();
        for (m, out) in values.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                if d[i] == 0.0 {
                    continue;
                }
                let mut inner = self.gradient[i][m];
                if self.order == 2 {
                    let mut h = 0.5 * d[i] * self.hessian[self.hessian_index(i, i)][m];
                    for j in i + 1..n {
                        h += d[j] * self.hessian[self.hessian_index(i, j)][m];
                    }
                    inner += h;
                }
                acc += d[i] * inner;
            }
            *out += acc;
        }
        Ok(Prediction {
            values,
            displacement: d,
            max_relative: relative.iter().fold(0.0, |m, v| m.max(v.abs())),
            relative,
            outside_trust,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TaylorModel = serde_json::from_str(s)?;
        if m.version != FORMAT_VERSION {
            return invalid(format!(
                "unsupported surrogate format version {}",
                m.version
            ));
        }
        Ok(m)
    }
}

fn row_offset(n: usize, i: usize) -> usize {
    // rows r < i hold n - r entries each
    (0..i).map(|r| n - r).sum()
}

/// RMS difference over every sample of every lattice point, normalized by
/// the total sample count.
pub fn surrogate_error(predicted: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    if predicted.len() != reference.len() || predicted.is_empty() {
        return invalid("surrogate and reference lattices differ in size");
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in predicted.iter().zip(reference) {
        if a.len() != b.len() {
            return invalid("surrogate and reference outputs differ in shape");
        }
        sum += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        count += a.len();
    }
    Ok((sum / count as f64).sqrt())
}

/// Per-point ε_tay of a surrogate against direct solves at each lattice point.
pub fn lattice_errors(
    model: &TaylorModel,
    problem: &DimensionlessProblem,
    grid: Grid,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|pt| {
            let direct =
                direct_output(&problem.with_params(&model.params, pt)?, grid, &model.kind)?;
            let pred = model.evaluate(pt)?;
            surrogate_error(&[pred.values], &[direct])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wall::validation_case;

    fn synthetic(hessian: bool) -> TaylorModel {
        // y0 = 1 + 2a - b + 0.5(3a² + 2ab + 4b²) ... stored as H = [[3, 1], [1, 4]]
        let kind = OutputKind::Loads {
            intervals: vec![(0.0, 1.0)],
        };
        let h = hessian.then(|| vec![vec![3.0], vec![1.0], vec![4.0]]);
        TaylorModel::new(
            kind,
            vec![ParamId::k(0), ParamId::c(0)],
            vec![1.0, 2.0],
            vec![1.0],
            vec![vec![2.0], vec![-1.0]],
            h,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_reproduced() {
        let m = synthetic(true);
        for &(a, b) in &[(1.0, 2.0), (1.5, 0.5), (-3.0, 7.0), (0.2, 1.9)] {
            let (da, db) = (a - 1.0, b - 2.0);
            let exact = 1.0 + 2.0 * da - db + 0.5 * (3.0 * da * da + 2.0 * da * db + 4.0 * db * db);
            let got = m.evaluate(&[a, b]).unwrap().values[0];
            assert!((got - exact).abs() < 1e-10);
        }
        assert_eq!(m.evaluate(&[1.0, 2.0]).unwrap().values, vec![1.0]);
    }

    #[test]
    fn linear_model_exact() {
        let m = synthetic(false);
        let got = m.evaluate(&[3.0, 1.0]).unwrap().values[0];
        assert!((got - (1.0 + 4.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn packed_layout() {
        let kind = OutputKind::Flux;
        let m = TaylorModel::new(
            kind,
            vec![ParamId::k(0); 3],
            vec![0.0; 3],
            vec![0.0],
            vec![vec![0.0]; 3],
            Some(vec![vec![0.0]; 6]),
        )
        .unwrap();
        let idx: Vec<usize> = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(i, j)| m.hessian_index(i, j))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(m.hessian_index(2, 0), 2);
    }

    #[test]
    fn flags_extrapolation() {
        let m = synthetic(true);
        assert!(!m.evaluate(&[1.0, 2.0]).unwrap().outside_trust);
        assert!(m.evaluate(&[0.1, 2.0]).unwrap().outside_trust);
    }

    #[test]
    fn json_round_trip() {
        let m = synthetic(true);
        let back = TaylorModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn error_norm() {
        assert_eq!(
            surrogate_error(&[vec![1.0, 2.0]], &[vec![1.0, 2.0]]).unwrap(),
            0.0
        );
        assert!(surrogate_error(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
        let e = surrogate_error(
            &[vec![1.0, 1.0], vec![0.0, 0.0]],
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert!((e - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn build_matches_anchor_solve() {
        let p = validation_case();
        let g = Grid::new(0.02, 2e-3, 1.0).unwrap();
        let kind = OutputKind::Loads {
            intervals: vec![(0.0, 0.5), (0.5, 1.0)],
        };
        let m =
            TaylorModel::build(&p, g, &[ParamId::k(1), ParamId::c(1)], 2, kind.clone()).unwrap();
        let direct = direct_output(&p, g, &kind).unwrap();
        assert_eq!(m.base, direct);
        let pt = [0.31, 0.49];
        let d = direct_output(&p.with_params(&m.params, &pt).unwrap(), g, &kind).unwrap();
        let e = m.evaluate(&pt).unwrap();
        for (a, b) in e.values.iter().zip(&d) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1e-3));
        }
    }
}

//! Reference solutions from an implicit finite-volume discretization on a
//! refined grid (Crank–Nicolson in time), used to judge the explicit solver.
//!
//! Conductances at faces are exact harmonic averages over each segment and
//! node capacities exact control-volume averages, so layer interfaces need
//! not coincide with fine nodes. Results are restricted to the production
//! grid by injection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::solver::{FieldHistory, TimeSeries};
use crate::wall::{DimensionlessProblem, ParamId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub space_refine: usize,
    pub time_refine: usize,
    /// Maximum per-node RMS difference tolerated between the solution and
    /// the twice-refined one.
    pub tolerance: f64,
    /// Run the twice-refined solve and enforce `tolerance`.
    pub check_convergence: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            space_refine: 4,
            time_refine: 4,
            tolerance: 1e-4,
            check_convergence: true,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.space_refine < 4 || self.time_refine < 4 {
            return invalid("oracle refinement must be at least 4 in space and time");
        }
        if !(self.tolerance > 0.0) {
            return invalid("oracle tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Field on production nodes at every production level.
    pub field: FieldHistory,
    /// Interior flux at every production level.
    pub flux: TimeSeries,
    /// Max per-node RMS difference to the twice-refined solve, when checked.
    pub self_convergence: Option<f64>,
}

fn integral_of(problem: &DimensionlessProblem, a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    problem
        .layers
        .iter()
        .map(|l| {
            let lo = a.max(l.start);
            let hi = b.min(l.end);
            if hi > lo {
                f(l.k, l.c) * (hi - lo)
            } else {
                0.0
            }
        })
        .sum()
}

/// Tridiagonal Thomas factorization for a constant matrix.
struct Tridiagonal {
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Tridiagonal {
    fn new(lower: Vec<f64>, diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut cprime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let d = diag[i] - if i > 0 { lower[i] * prev_c } else { 0.0 };
            inv_denom[i] = 1.0 / d;
            cprime[i] = if i + 1 < n {
                upper[i] * inv_denom[i]
            } else {
                0.0
            };
            prev_c = cprime[i];
        }
        Self {
            lower,
            cprime,
            inv_denom,
        }
    }

    fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cprime[i] * rhs[i + 1];
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn crank_nicolson(
    problem: &DimensionlessProblem,
    grid: Grid,
    rs: usize,
    rt: usize,
) -> Result<(FieldHistory, TimeSeries)> {
    problem.validate()?;
    problem.check_horizon(grid.t_max())?;
    let m = (grid.nx - 1) * rs + 1;
    let h = 1.0 / (m - 1) as f64;
    let dt = grid.dt / rt as f64;
    let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let fo = problem.fo;

    let mass: Vec<f64> = (0..m)
        .map(|i| {
            integral_of(
                problem,
                (xs[i] - 0.5 * h).max(0.0),
                (xs[i] + 0.5 * h).min(1.0),
                |_, c| c,
            )
        })
        .collect();
    let cond: Vec<f64> = (0..m - 1)
        .map(|i| fo / integral_of(problem, xs[i], xs[i + 1], |k, _| 1.0 / k))
        .collect();

    // stiffness A with m u' = -A u + f(t)
    let mut a_diag = vec![0.0; m];
    let mut a_off = vec![0.0; m - 1];
    for i in 0..m - 1 {
        a_diag[i] += cond[i];
        a_diag[i + 1] += cond[i];
        a_off[i] = -cond[i];
    }
    a_diag[0] += fo * problem.bi_left;
    a_diag[m - 1] += fo * problem.bi_right;

    let lower: Vec<f64> = (0..m)
        .map(|i| if i > 0 { 0.5 * a_off[i - 1] } else { 0.0 })
        .collect();
    let diag: Vec<f64> = (0..m).map(|i| mass[i] / dt + 0.5 * a_diag[i]).collect();
    let upper: Vec<f64> = (0..m)
        .map(|i| if i + 1 < m { 0.5 * a_off[i] } else { 0.0 })
        .collect();
    let lhs = Tridiagonal::new(lower, &diag, &upper);

    let source_weights: Option<Vec<f64>> = problem.source.as_ref().map(|s| {
        let a = problem.optics().map_or(1.0, |o| {
            (1.0 - o.tau) * (1.0 - o.rho) / (1.0 - o.rho * o.tau)
        });
        (0..m)
            .map(|i| {
                a * simpson(
                    |x| s.profile.eval(x),
                    (xs[i] - 0.5 * h).max(0.0),
                    (xs[i] + 0.5 * h).min(1.0),
                )
            })
            .collect()
    });
    let b = &problem.boundary;
    let forcing = |t: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = fo * (problem.bi_left * b.u_left.eval(t) + problem.alpha * b.g_left.eval(t));
        out[m - 1] = fo * problem.bi_right * b.u_right.eval(t);
        if let (Some(w), Some(s)) = (&source_weights, &problem.source) {
            let sv = s.signal.eval(t);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += wi * sv;
            }
        }
    };

    let mut u: Vec<f64> = xs.iter().map(|&x| problem.initial.eval(x)).collect();
    let mut hist = FieldHistory::new(grid.nx, 1, grid.dt);
    let mut flux = Vec::with_capacity(grid.nt + 1);
    let restrict = |u: &[f64], hist: &mut FieldHistory| {
        let row: Vec<f64> = (0..grid.nx).map(|j| u[j * rs]).collect();
        hist.push(&row);
    };
    let flux_at = |u: &[f64], t: f64| problem.bi_right * (u[m - 1] - b.u_right.eval(t));
    restrict(&u, &mut hist);
    flux.push(flux_at(&u, 0.0));

    let mut f_old = vec![0.0; m];
    let mut f_new = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    forcing(0.0, &mut f_old);
    for n in 0..grid.nt {
        for s in 0..rt {
            let step = n * rt + s;
            let t_new = (step + 1) as f64 * dt;
            forcing(t_new, &mut f_new);
            for i in 0..m {
                let mut au = a_diag[i] * u[i];
                if i > 0 {
                    au += a_off[i - 1] * u[i - 1];
                }
                if i + 1 < m {
                    au += a_off[i] * u[i + 1];
                }
                rhs[i] = mass[i] / dt * u[i] - 0.5 * au + 0.5 * (f_old[i] + f_new[i]);
            }
            lhs.solve_in_place(&mut rhs);
            std::mem::swap(&mut u, &mut rhs);
            std::mem::swap(&mut f_old, &mut f_new);
        }
        if let Some(j) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::Oracle(format!(
                "non-finite value at fine node {j}, level {}",
                n + 1
            )));
        }
        restrict(&u, &mut hist);
        flux.push(flux_at(&u, grid.t(n + 1)));
    }
    Ok((
        hist,
        TimeSeries {
            dt: grid.dt,
            values: flux,
        },
    ))
}

/// Implicit reference field restricted to the production grid.
pub fn reference_solve(
    problem: &DimensionlessProblem,
    grid: Grid,
    cfg: OracleConfig,
) -> Result<OracleSolution> {
    cfg.validate()?;
    let (field, flux) = crank_nicolson(problem, grid, cfg.space_refine, cfg.time_refine)?;
    let self_convergence = if cfg.check_convergence {
        let (fine, _) = crank_nicolson(problem, grid, 2 * cfg.space_refine, 2 * cfg.time_refine)?;
        let d = eps2(&field, &fine)?.into_iter().fold(0.0, f64::max);
        if !(d < cfg.tolerance) {
            return Err(Error::Oracle(format!(
                "refinement pair differs by {d:.3e}, above tolerance {:.1e}",
                cfg.tolerance
            )));
        }
        Some(d)
    } else {
        None
    };
    Ok(OracleSolution {
        field,
        flux,
        self_convergence,
    })
}

/// Per-node RMS over time, ε₂(x⋆_j) = sqrt(1/N_t Σ_n (a − b)²).
pub fn eps2(candidate: &FieldHistory, reference: &FieldHistory) -> Result<Vec<f64>> {
    if candidate.nx != reference.nx
        || candidate.levels() != reference.levels()
        || (candidate.record_dt() - reference.record_dt()).abs() > 1e-12 * candidate.record_dt()
    {
        return invalid("ε₂ needs fields on the same nodes and time levels");
    }
    let nt = candidate.levels() as f64;
    Ok((0..candidate.nx)
        .map(|j| {
            let s: f64 = (0..candidate.levels())
                .map(|i| (candidate.get(i, j) - reference.get(i, j)).powi(2))
                .sum();
            (s / nt).sqrt()
        })
        .collect())
}

/// RMS difference of two aligned series.
pub fn eps2_series(candidate: &[f64], reference: &[f64]) -> Result<f64> {
    if candidate.len() != reference.len() || candidate.is_empty() {
        return invalid("ε₂ needs two non-empty series of equal length");
    }
    let s: f64 = candidate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((s / candidate.len() as f64).sqrt())
}

fn combine(fields: &[(&FieldHistory, f64)]) -> FieldHistory {
    let first = fields[0].0;
    let mut out = FieldHistory::new(first.nx, first.stride, first.dt);
    out.data = (0..first.data.len())
        .map(|i| fields.iter().map(|(f, w)| w * f.data[i]).sum())
        .collect();
    out
}

/// Default parameter step of the reference sensitivity.
pub const REFERENCE_STEP: f64 = 1e-4;
/// Default parameter step of the reference second derivative.
pub const REFERENCE_STEP_SECOND: f64 = 1e-3;

/// ∂u/∂p from central differences of the oracle with steps Δ and Δ/2,
/// combined by Richardson extrapolation.
pub fn reference_sensitivity(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: ParamId,
    cfg: OracleConfig,
    step: f64,
) -> Result<FieldHistory> {
    let v = problem.param_value(p)?;
    let cfg = OracleConfig {
        check_convergence: false,
        ..cfg
    };
    let at = |d: f64| -> Result<FieldHistory> {
        Ok(reference_solve(&problem.with_param(p, v + d)?, grid, cfg)?.field)
    };
    let (a, b, c, d) = (at(step)?, at(-step)?, at(0.5 * step)?, at(-0.5 * step)?);
    // (4 D(h/2) - D(h)) / 3 with D(h) = (f(+h) - f(-h)) / 2h
    let wh = 1.0 / (2.0 * step);
    let wh2 = 1.0 / step;
    Ok(combine(&[
        (&c, 4.0 * wh2 / 3.0),
        (&d, -4.0 * wh2 / 3.0),
        (&a, -wh / 3.0),
        (&b, wh / 3.0),
    ]))
}

/// ∂²u/∂p² (or ∂²u/∂p∂q) from second differences of the oracle, Richardson-combined.
pub fn reference_second_sensitivity(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: ParamId,
    q: ParamId,
    cfg: OracleConfig,
    step: f64,
) -> Result<FieldHistory> {
    let cfg = OracleConfig {
        check_convergence: false,
        ..cfg
    };
    let (vp, vq) = (problem.param_value(p)?, problem.param_value(q)?);
    let at = |dp: f64, dq: f64| -> Result<FieldHistory> {
        let pr = problem.with_param(p, vp + dp)?;
        let pr = if p == q {
            pr
        } else {
            pr.with_param(q, vq + dq)?
        };
        Ok(reference_solve(&pr, grid, cfg)?.field)
    };
    let d2 = |h: f64| -> Result<FieldHistory> {
        if p == q {
            let (a, b, c) = (at(h, 0.0)?, at(0.0, 0.0)?, at(-h, 0.0)?);
            let w = 1.0 / (h * h);
            Ok(combine(&[(&a, w), (&b, -2.0 * w), (&c, w)]))
        } else {
            let (a, b, c, d) = (at(h, h)?, at(h, -h)?, at(-h, h)?, at(-h, -h)?);
            let w = 1.0 / (4.0 * h * h);
            Ok(combine(&[(&a, w), (&b, -w), (&c, -w), (&d, w)]))
        }
    };
    let coarse = d2(step)?;
    let fine = d2(0.5 * step)?;
    Ok(combine(&[(&fine, 4.0 / 3.0), (&coarse, -1.0 / 3.0)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wall::{
        uniform_problem, BoundarySignals, InitialProfile, SourceProfile, SourceTerm,
    };
    use crate::Signal;
    use std::f64::consts::PI;

    #[test]
    fn equilibrium_is_exact() {
        let mut p = uniform_problem(0.5, 2.0, 0.3, 1.0, 3.0);
        p.boundary = BoundarySignals::constant(0.7, 0.7, 0.0);
        p.initial = InitialProfile::Constant(0.7);
        let g = Grid::new(0.1, 0.05, 2.0).unwrap();
        let s = reference_solve(&p, g, OracleConfig::default()).unwrap();
        assert!(s.field.data.iter().all(|v| (v - 0.7).abs() < 1e-13));
    }

    fn manufactured() -> DimensionlessProblem {
        // u = e^{-t} sin(πx) with k = c = Fo = Bi = 1
        let mut p = uniform_problem(1.0, 1.0, 1.0, 1.0, 1.0);
        p.boundary = BoundarySignals {
            u_left: Signal::function(|t| -PI * (-t).exp()),
            u_right: Signal::function(|t| -PI * (-t).exp()),
            g_left: Signal::Constant(0.0),
        };
        p.initial = InitialProfile::Tabulated(
            (0..=2000)
                .map(|i| {
                    let x = i as f64 / 2000.0;
                    (x, (PI * x).sin())
                })
                .collect(),
        );
        p.source = Some(SourceTerm {
            signal: Signal::function(|t| (-t).exp()),
            profile: SourceProfile::Function(std::sync::Arc::new(|x| {
                (PI * PI - 1.0) * (PI * x).sin()
            })),
            optics: None,
        });
        p
    }

    #[test]
    fn manufactured_solution() {
        let p = manufactured();
        let g = Grid::new(0.05, 0.01, 1.0).unwrap();
        let cfg = OracleConfig {
            space_refine: 32,
            time_refine: 32,
            tolerance: 1e-4,
            check_convergence: false,
        };
        let s = reference_solve(&p, g, cfg).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..s.field.levels() {
            let t = s.field.time(i);
            for j in 0..g.nx {
                let exact = (-t).exp() * (PI * g.x(j)).sin();
                worst = worst.max((s.field.get(i, j) - exact).abs());
            }
        }
        assert!(worst <= 1e-6, "max error {worst:e}");
    }

    #[test]
    fn second_order_self_convergence() {
        let p = manufactured();
        let g = Grid::new(0.1, 0.02, 0.5).unwrap();
        let (a, _) = crank_nicolson(&p, g, 4, 4).unwrap();
        let (b, _) = crank_nicolson(&p, g, 8, 8).unwrap();
        let (c, _) = crank_nicolson(&p, g, 16, 16).unwrap();
        let d1 = eps2(&a, &b).unwrap().into_iter().fold(0.0, f64::max);
        let d2 = eps2(&b, &c).unwrap().into_iter().fold(0.0, f64::max);
        let ratio = d1 / d2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn eps2_norms() {
        let mut a = FieldHistory::new(2, 1, 0.1);
        a.push(&[1.0, 2.0]);
        a.push(&[3.0, 4.0]);
        let mut b = a.clone();
        assert_eq!(eps2(&a, &b).unwrap(), vec![0.0, 0.0]);
        b.data.iter_mut().for_each(|v| *v += 0.25);
        assert_eq!(eps2(&a, &b).unwrap(), vec![0.25, 0.25]);
        let mut c = FieldHistory::new(2, 1, 0.1);
        c.push(&[1.0, 2.0]);
        assert!(eps2(&a, &c).is_err());
    }

    #[test]
    fn refinement_floor() {
        let p = uniform_problem(1.0, 1.0, 1.0, 1.0, 1.0);
        let g = Grid::new(0.1, 0.1, 1.0).unwrap();
        let cfg = OracleConfig {
            space_refine: 2,
            ..Default::default()
        };
        assert!(reference_solve(&p, g, cfg).is_err());
    }
}

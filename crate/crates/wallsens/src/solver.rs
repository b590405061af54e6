//! Dufort–Frankel march of the temperature field and, jointly, of any number
//! of tangent (sensitivity) fields.
//!
//! Level 1 is seeded with one forward-Euler step of the same spatial operator.
//! Boundary nodes are solved from the Robin conditions discretized with
//! second-order one-sided differences at the new level.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::stencil::{coefficient_jets, Coeffs};
use crate::wall::DimensionlessProblem;

/// Uniformly sampled series starting at t⋆ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn t_max(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|n| n as f64 * self.dt).collect()
    }

    /// Exact integral of the piecewise-linear interpolant over [a, b]
    /// (the trapezoid rule when a and b fall on samples).
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        thermal_loads(self, a, b)
    }

    pub fn scaled(&self, s: f64) -> TimeSeries {
        TimeSeries {
            dt: self.dt,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Loads E⋆ = ∫ j⋆ dt⋆ over [a, b], trapezoidal on the sampling grid.
pub fn thermal_loads(flux: &TimeSeries, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return invalid(format!("empty or reversed interval [{a}, {b}]"));
    }
    let tol = 1e-9 * flux.t_max().max(1.0);
    if a < -tol || b > flux.t_max() + tol {
        return invalid(format!(
            "interval [{a}, {b}] outside the series span [0, {}]",
            flux.t_max()
        ));
    }
    let v = &flux.values;
    let h = flux.dt;
    let last = v.len() - 1;
    let at = |t: f64| -> (usize, f64) {
        let s = (t / h).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last.saturating_sub(1));
        (i, s - i as f64)
    };
    let lerp = |i: usize, w: f64| {
        if w == 0.0 {
            v[i]
        } else {
            v[i] * (1.0 - w) + v[i + 1] * w
        }
    };
    let (ia, wa) = at(a);
    let (ib, wb) = at(b);
    let fa = lerp(ia, wa);
    let fb = lerp(ib, wb);
    if ia == ib {
        return Ok(0.5 * (fa + fb) * (wb - wa) * h);
    }
    let mut sum = 0.5 * (fa + v[ia + 1]) * (1.0 - wa) * h;
    for i in ia + 1..ib {
        sum += 0.5 * (v[i] + v[i + 1]) * h;
    }
    sum += 0.5 * (v[ib] + fb) * wb * h;
    Ok(sum)
}

/// Field values on (recorded level, node), row-major by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHistory {
    pub nx: usize,
    /// Solver steps between consecutive recorded levels.
    pub stride: usize,
    /// Solver time step.
    pub dt: f64,
    pub data: Vec<f64>,
}

impl FieldHistory {
    pub fn new(nx: usize, stride: usize, dt: f64) -> Self {
        Self {
            nx,
            stride,
            dt,
            data: Vec::new(),
        }
    }

    pub fn levels(&self) -> usize {
        self.data.len() / self.nx
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.nx..(i + 1) * self.nx]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.nx + j]
    }

    pub fn time(&self, i: usize) -> f64 {
        (i * self.stride) as f64 * self.dt
    }

    /// Sampling interval between recorded levels.
    pub fn record_dt(&self) -> f64 {
        self.stride as f64 * self.dt
    }

    /// Time series at node j.
    pub fn node(&self, j: usize) -> Vec<f64> {
        (0..self.levels()).map(|i| self.get(i, j)).collect()
    }

    /// Linear interpolation in space at every recorded level.
    pub fn probe(&self, x: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&x) {
            return invalid(format!("probe x⋆ = {x} outside [0, 1]"));
        }
        let s = x * (self.nx - 1) as f64;
        let j = (s.floor() as usize).min(self.nx - 2);
        let w = s - j as f64;
        Ok((0..self.levels())
            .map(|i| self.get(i, j) * (1.0 - w) + self.get(i, j + 1) * w)
            .collect())
    }

    pub(crate) fn push(&mut self, row: &[f64]) {
        self.data.extend_from_slice(row);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Two consecutive time levels of every marched field; enough to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchState {
    pub level: usize,
    pub prev: Vec<Vec<f64>>,
    pub curr: Vec<Vec<f64>>,
}

/// A tangent field driven by lower-numbered fields through derivative
/// coefficient sets (indices into the coefficient store).
#[derive(Debug, Clone)]
pub(crate) struct TangentSpec {
    pub terms: Vec<(usize, usize)>,
    pub source: Option<usize>,
}

/// Joint march of u (field 0) and tangent fields 1..
pub struct Marcher<'a> {
    problem: &'a DimensionlessProblem,
    grid: Grid,
    store: Vec<Coeffs>,
    tangents: Vec<TangentSpec>,
    prev: Vec<Vec<f64>>,
    curr: Vec<Vec<f64>>,
    next: Vec<Vec<f64>>,
    level: usize,
}

impl<'a> Marcher<'a> {
    /// Temperature-only march.
    pub fn new(problem: &'a DimensionlessProblem, grid: Grid) -> Result<Self> {
        let [value, ..] = coefficient_jets(problem, grid, None, None)?;
        Self::with_tangents(problem, grid, vec![value], Vec::new())
    }

    pub(crate) fn with_tangents(
        problem: &'a DimensionlessProblem,
        grid: Grid,
        store: Vec<Coeffs>,
        tangents: Vec<TangentSpec>,
    ) -> Result<Self> {
        problem.validate()?;
        grid.check_layers(problem)?;
        problem.check_horizon(grid.t_max())?;
        let nx = grid.nx;
        let nf = tangents.len() + 1;
        let mut curr = vec![vec![0.0; nx]; nf];
        for (j, u) in curr[0].iter_mut().enumerate() {
            *u = problem.initial.eval(grid.x(j));
        }
        Ok(Self {
            problem,
            grid,
            store,
            tangents,
            prev: curr.clone(),
            curr,
            next: vec![vec![0.0; nx]; nf],
            level: 0,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn fields(&self) -> usize {
        self.curr.len()
    }

    pub fn current(&self, field: usize) -> &[f64] {
        &self.curr[field]
    }

    pub fn state(&self) -> MarchState {
        MarchState {
            level: self.level,
            prev: self.prev.clone(),
            curr: self.curr.clone(),
        }
    }

    pub fn restore(&mut self, state: MarchState) -> Result<()> {
        let shape_ok = |v: &Vec<Vec<f64>>| {
            v.len() == self.curr.len() && v.iter().all(|r| r.len() == self.grid.nx)
        };
        if !shape_ok(&state.prev) || !shape_ok(&state.curr) || state.level > self.grid.nt {
            return invalid("saved march state does not match this march");
        }
        self.level = state.level;
        self.prev = state.prev;
        self.curr = state.curr;
        Ok(())
    }

    fn right_gradient(v: &[f64], dx: f64) -> f64 {
        let n = v.len() - 1;
        (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dx)
    }

    fn left_gradient(v: &[f64], dx: f64) -> f64 {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    }

    /// Interior-surface flux j⋆ = −k⋆ ∂u/∂x⋆ at x⋆ = 1 for a field at the current level.
    pub fn flux(&self, field: usize) -> f64 {
        let dx = self.grid.dx();
        let own = &self.store[0];
        let mut j = own.k_right * Self::right_gradient(&self.curr[field], dx);
        if field > 0 {
            for &(ci, d) in &self.tangents[field - 1].terms {
                let c = &self.store[ci];
                if c.k_right != 0.0 {
                    j += c.k_right * Self::right_gradient(&self.curr[d], dx);
                }
            }
        }
        -j
    }

    /// Advance every field by one time step.
    pub fn step(&mut self) -> Result<()> {
        if self.level >= self.grid.nt {
            return invalid("march already reached the horizon");
        }
        let n = self.level;
        let g = self.grid;
        let nx = g.nx;
        let dx = g.dx();
        let t_new = g.t(n + 1);
        let s_n = self
            .problem
            .source
            .as_ref()
            .map_or(0.0, |s| s.signal.eval(g.t(n)));
        let p = self.problem;
        let own = &self.store[0];
        let denom_l = 3.0 * own.k_left / (2.0 * dx) + p.bi_left;
        let denom_r = 3.0 * own.k_right / (2.0 * dx) + p.bi_right;

        for f in 0..self.curr.len() {
            let (done, rest) = self.next.split_at_mut(f);
            let out = &mut rest[0];
            let x = &self.curr[f];
            let xp = &self.prev[f];
            let (terms, src): (&[(usize, usize)], Option<&Coeffs>) = if f == 0 {
                (&[], Some(own))
            } else {
                let t = &self.tangents[f - 1];
                (&t.terms, t.source.map(|i| &self.store[i]))
            };
            if n == 0 {
                for j in 1..nx - 1 {
                    out[j] = x[j] + own.ep[j] * (x[j + 1] - x[j]) - own.em[j] * (x[j] - x[j - 1]);
                }
                for &(ci, d) in terms {
                    let c = &self.store[ci];
                    if c.zero {
                        continue;
                    }
                    let y = &self.curr[d];
                    for j in 1..nx - 1 {
                        out[j] += c.ep[j] * (y[j + 1] - y[j]) - c.em[j] * (y[j] - y[j - 1]);
                    }
                }
                if let (Some(c), true) = (src, s_n != 0.0) {
                    for j in 1..nx - 1 {
                        out[j] += c.esrc[j] * s_n;
                    }
                }
            } else {
                for j in 1..nx - 1 {
                    out[j] = own.nu1[j] * x[j + 1] + own.nu2[j] * x[j - 1] + own.nu3[j] * xp[j];
                }
                for &(ci, d) in terms {
                    let c = &self.store[ci];
                    if c.zero {
                        continue;
                    }
                    let y = &self.curr[d];
                    let yp = &self.prev[d];
                    for j in 1..nx - 1 {
                        out[j] += c.nu1[j] * y[j + 1] + c.nu2[j] * y[j - 1] + c.nu3[j] * yp[j];
                    }
                }
                if let (Some(c), true) = (src, s_n != 0.0) {
                    for j in 1..nx - 1 {
                        out[j] += c.src[j] * s_n;
                    }
                }
            }

            let mut left = own.k_left * (4.0 * out[1] - out[2]) / (2.0 * dx);
            let mut right = own.k_right * (4.0 * out[nx - 2] - out[nx - 3]) / (2.0 * dx);
            if f == 0 {
                left += p.bi_left * p.boundary.u_left.eval(t_new)
                    + p.alpha * p.boundary.g_left.eval(t_new);
                right += p.bi_right * p.boundary.u_right.eval(t_new);
            } else {
                for &(ci, d) in terms {
                    let c = &self.store[ci];
                    if c.k_left != 0.0 {
                        left += c.k_left * Self::left_gradient(&done[d], dx);
                    }
                    if c.k_right != 0.0 {
                        right -= c.k_right * Self::right_gradient(&done[d], dx);
                    }
                }
            }
            out[0] = left / denom_l;
            out[nx - 1] = right / denom_r;

            if let Some(j) = out.iter().position(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    node: j,
                    level: n + 1,
                });
            }
        }
        std::mem::swap(&mut self.prev, &mut self.curr);
        std::mem::swap(&mut self.curr, &mut self.next);
        self.level += 1;
        Ok(())
    }
}

/// What to keep from a march.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recording {
    /// Record every field every `n` steps (level 0 included); `None` keeps no field.
    pub field_every: Option<usize>,
}

impl Recording {
    pub const NONE: Recording = Recording { field_every: None };
    pub const ALL: Recording = Recording {
        field_every: Some(1),
    };

    pub fn every(n: usize) -> Recording {
        Recording {
            field_every: Some(n.max(1)),
        }
    }
}

/// Output of a march: per-field flux series and optional field histories.
#[derive(Debug, Clone)]
pub struct MarchOutput {
    pub fields: Vec<Option<FieldHistory>>,
    pub fluxes: Vec<TimeSeries>,
}

pub(crate) fn run(mut m: Marcher<'_>, rec: Recording) -> Result<MarchOutput> {
    let g = m.grid();
    let nf = m.fields();
    let mut fields: Vec<Option<FieldHistory>> = (0..nf)
        .map(|_| rec.field_every.map(|s| FieldHistory::new(g.nx, s, g.dt)))
        .collect();
    let mut fluxes: Vec<Vec<f64>> = (0..nf)
        .map(|_| Vec::with_capacity(g.nt - m.level() + 1))
        .collect();
    let record =
        |m: &Marcher<'_>, fields: &mut Vec<Option<FieldHistory>>, fluxes: &mut Vec<Vec<f64>>| {
            for f in 0..nf {
                fluxes[f].push(m.flux(f));
                if let Some(h) = fields[f].as_mut() {
                    if m.level() % h.stride == 0 {
                        h.push(m.current(f));
                    }
                }
            }
        };
    record(&m, &mut fields, &mut fluxes);
    while m.level() < g.nt {
        m.step()?;
        record(&m, &mut fields, &mut fluxes);
    }
    Ok(MarchOutput {
        fields,
        fluxes: fluxes
            .into_iter()
            .map(|values| TimeSeries { dt: g.dt, values })
            .collect(),
    })
}

/// Temperature and interior flux from one march.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub field: Option<FieldHistory>,
    pub flux: TimeSeries,
}

impl Simulation {
    pub fn loads(&self, a: f64, b: f64) -> Result<f64> {
        thermal_loads(&self.flux, a, b)
    }
}

pub fn simulate(problem: &DimensionlessProblem, grid: Grid, rec: Recording) -> Result<Simulation> {
    let mut out = run(Marcher::new(problem, grid)?, rec)?;
    Ok(Simulation {
        field: out.fields.swap_remove(0),
        flux: out.fluxes.swap_remove(0),
    })
}

/// Full temperature history on every time level.
pub fn solve(problem: &DimensionlessProblem, grid: Grid) -> Result<FieldHistory> {
    Ok(simulate(problem, grid, Recording::ALL)?
        .field
        .expect("recorded"))
}

/// Interior flux series recomputed from a full history.
pub fn interior_flux(history: &FieldHistory, problem: &DimensionlessProblem) -> Result<TimeSeries> {
    let k = problem.evaluate_piecewise(1.0)?.0;
    let dx = 1.0 / (history.nx - 1) as f64;
    let values = (0..history.levels())
        .map(|i| -k * Marcher::right_gradient(history.row(i), dx))
        .collect();
    Ok(TimeSeries {
        dt: history.record_dt(),
        values,
    })
}

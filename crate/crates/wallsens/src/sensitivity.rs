//! Sensitivity coefficients by differentiating the discrete scheme.
//!
//! For a target parameter p the tangent X_p marches the same stencil as u plus
//! the terms ∂ν/∂p applied to u; second-order targets add the cross terms with
//! the first-order fields. Boundary rows are the differentiated one-sided
//! Robin discretizations, and the seeding step is differentiated as well.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::solver::{
    run, thermal_loads, FieldHistory, Marcher, Recording, TangentSpec, TimeSeries,
};
use crate::stencil::coefficient_jets;
use crate::wall::{DimensionlessProblem, ParamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    First(ParamId),
    Second(ParamId, ParamId),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::First(p) => write!(f, "{p}"),
            Target::Second(p, q) => write!(f, "{p}{q}"),
        }
    }
}

/// u and the requested sensitivity fields from one joint march.
#[derive(Debug, Clone)]
pub struct SensitivityRun {
    pub grid: Grid,
    pub u: Option<FieldHistory>,
    pub flux: TimeSeries,
    pub targets: Vec<Target>,
    pub fields: Vec<Option<FieldHistory>>,
    pub fluxes: Vec<TimeSeries>,
}

impl SensitivityRun {
    fn index(&self, t: Target) -> Option<usize> {
        let swapped = match t {
            Target::Second(p, q) => Target::Second(q, p),
            first => first,
        };
        self.targets
            .iter()
            .position(|&x| x == t)
            .or_else(|| self.targets.iter().position(|&x| x == swapped))
    }

    pub fn field(&self, t: Target) -> Result<&FieldHistory> {
        match self.index(t).and_then(|i| self.fields[i].as_ref()) {
            Some(h) => Ok(h),
            None => invalid(format!("no recorded field for {t}")),
        }
    }

    /// ∂j⋆/∂p or ∂²j⋆/∂p∂q series.
    pub fn flux_sensitivity(&self, t: Target) -> Result<&TimeSeries> {
        match self.index(t) {
            Some(i) => Ok(&self.fluxes[i]),
            None => invalid(format!("sensitivity {t} was not propagated")),
        }
    }

    /// ∂E⋆/∂p (or second derivative) over [a, b], same quadrature as the loads.
    pub fn loads_sensitivity(&self, t: Target, a: f64, b: f64) -> Result<f64> {
        thermal_loads(self.flux_sensitivity(t)?, a, b)
    }

    pub fn output_sensitivities(
        &self,
        t: Target,
        intervals: &[(f64, f64)],
    ) -> Result<OutputSensitivities> {
        let flux = self.flux_sensitivity(t)?.clone();
        let loads = intervals
            .iter()
            .map(|&(a, b)| thermal_loads(&flux, a, b))
            .collect::<Result<_>>()?;
        Ok(OutputSensitivities {
            target: t,
            flux,
            intervals: intervals.to_vec(),
            loads,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputSensitivities {
    pub target: Target,
    pub flux: TimeSeries,
    pub intervals: Vec<(f64, f64)>,
    pub loads: Vec<f64>,
}

/// March u jointly with every target; second-order targets pull in the
/// first-order fields they depend on.
pub fn propagate(
    problem: &DimensionlessProblem,
    grid: Grid,
    targets: &[Target],
    rec: Recording,
) -> Result<SensitivityRun> {
    let mut firsts: Vec<ParamId> = Vec::new();
    let mut need = |p: ParamId| {
        if !firsts.contains(&p) {
            firsts.push(p);
        }
    };
    for t in targets {
        match *t {
            Target::First(p) => need(p),
            Target::Second(p, q) => {
                need(p);
                need(q);
            }
        }
    }
    for &p in &firsts {
        problem.check_param(p)?;
    }
    let seconds: Vec<(ParamId, ParamId)> = targets
        .iter()
        .filter_map(|t| match *t {
            Target::Second(p, q) => Some((p, q)),
            _ => None,
        })
        .collect();

    let [value, ..] = coefficient_jets(problem, grid, None, None)?;
    let mut store = vec![value];
    let mut tangents = Vec::new();
    let mut first_coeff = Vec::new();
    for &p in &firsts {
        let [_, dp, ..] = coefficient_jets(problem, grid, Some(p), None)?;
        store.push(dp);
        let ci = store.len() - 1;
        first_coeff.push(ci);
        tangents.push(TangentSpec {
            terms: vec![(ci, 0)],
            source: Some(ci),
        });
    }
    let field_of = |p: ParamId| 1 + firsts.iter().position(|&x| x == p).unwrap();
    let coeff_of = |p: ParamId| first_coeff[firsts.iter().position(|&x| x == p).unwrap()];
    for &(p, q) in &seconds {
        let [_, _, _, dpq] = coefficient_jets(problem, grid, Some(p), Some(q))?;
        store.push(dpq);
        let ci = store.len() - 1;
        tangents.push(TangentSpec {
            terms: vec![
                (coeff_of(p), field_of(q)),
                (coeff_of(q), field_of(p)),
                (ci, 0),
            ],
            source: Some(ci),
        });
    }

    let marcher = Marcher::with_tangents(problem, grid, store, tangents)?;
    let mut out = run(marcher, rec)?;
    let mut order: Vec<Target> = firsts.iter().map(|&p| Target::First(p)).collect();
    order.extend(seconds.iter().map(|&(p, q)| Target::Second(p, q)));
    let u = out.fields[0].take();
    let flux = out.fluxes[0].clone();
    Ok(SensitivityRun {
        grid,
        u,
        flux,
        targets: order,
        fields: out.fields.into_iter().skip(1).collect(),
        fluxes: out.fluxes.into_iter().skip(1).collect(),
    })
}

/// X_p on every time level.
pub fn propagate_first_order(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: ParamId,
) -> Result<SensitivityRun> {
    propagate(problem, grid, &[Target::First(p)], Recording::ALL)
}

/// X_p, X_q and X_pq on every time level.
pub fn propagate_second_order(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: ParamId,
    q: ParamId,
) -> Result<SensitivityRun> {
    propagate(problem, grid, &[Target::Second(p, q)], Recording::ALL)
}

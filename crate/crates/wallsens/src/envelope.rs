//! Envelope made of a wall and a single-glazed window. The glass absorbs part
//! of the incident shortwave as a volumetric source growing linearly from the
//! exterior face; envelope loads are the sum of both interior-surface loads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::metrics::{nu_from_lattice, GlobalMetrics, ParamDomain};
use crate::sensitivity::{propagate, Target};
use crate::signal::Signal;
use crate::solver::{simulate, Recording, Simulation};
use crate::taylor::{OutputKind, TaylorModel};
use crate::wall::{
    check_optics, nondimensionalize, DimensionalBoundary, DimensionlessProblem, InitialProfile,
    Layer, Optics, ParamId, ParamKind, References, SourceProfile, SourceTerm, WallSpec,
};
use crate::weather::WeatherSeries;

/// A = (1 − τ)(1 − ρ) / (1 − ρτ).
pub fn absorbed_fraction(rho: f64, tau: f64) -> Result<f64> {
    check_optics(Optics { rho, tau })?;
    Ok((1.0 - tau) * (1.0 - rho) / (1.0 - rho * tau))
}

/// (∂A/∂ρ, ∂A/∂τ).
pub fn absorbed_fraction_gradient(rho: f64, tau: f64) -> Result<(f64, f64)> {
    check_optics(Optics { rho, tau })?;
    let d = (1.0 - rho * tau).powi(2);
    Ok((-(1.0 - tau).powi(2) / d, -(1.0 - rho).powi(2) / d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlassSpec {
    /// kg/m³
    pub density: f64,
    /// J/(kg·K)
    pub specific_heat: f64,
    /// W/(m·K)
    pub conductivity: f64,
    pub reflectivity: f64,
    pub transmissivity: f64,
    /// m
    pub thickness: f64,
    pub h_left: f64,
    pub h_right: f64,
}

impl Default for GlassSpec {
    fn default() -> Self {
        Self {
            density: 2200.0,
            specific_heat: 835.0,
            conductivity: 1.0,
            reflectivity: 0.15,
            transmissivity: 0.26,
            thickness: 0.006,
            h_left: 15.0,
            h_right: 8.0,
        }
    }
}

/// Nodes across the glass thickness.
pub const GLASS_NODES: usize = 13;

impl GlassSpec {
    pub fn validate(&self) -> Result<()> {
        let phys = [
            self.density,
            self.specific_heat,
            self.conductivity,
            self.thickness,
            self.h_left,
            self.h_right,
        ];
        if phys.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("glass density, heat, conductivity, thickness and surface coefficients must be positive");
        }
        check_optics(Optics {
            rho: self.reflectivity,
            tau: self.transmissivity,
        })
    }

    pub fn absorbed(&self) -> Result<f64> {
        absorbed_fraction(self.reflectivity, self.transmissivity)
    }

    pub fn references(&self, t_ref: f64, temp_ref: f64) -> References {
        References {
            length: self.thickness,
            k_ref: self.conductivity,
            c_ref: self.density * self.specific_heat,
            t_ref,
            temp_ref,
        }
    }

    /// Glass between the weather's air temperatures, absorbing A·q_sw·x/L_w.
    pub fn problem(
        &self,
        weather: &WeatherSeries,
        t_ref: f64,
        temp_ref: f64,
    ) -> Result<DimensionlessProblem> {
        self.validate()?;
        let refs = self.references(t_ref, temp_ref);
        let spec = WallSpec {
            layers: vec![Layer {
                name: "glass".into(),
                conductivity: self.conductivity,
                capacity: self.density * self.specific_heat,
                thickness: self.thickness,
            }],
            h_left: self.h_left,
            h_right: self.h_right,
            absorptivity: 0.0,
        };
        let bc = DimensionalBoundary {
            outside_air: Signal::Sampled(weather.outside()?),
            inside_air: Signal::Sampled(weather.inside()?),
            radiation: Signal::Constant(0.0),
            horizon: weather.end(),
        };
        let initial = InitialProfile::Linear {
            left: weather.t_out[0] / temp_ref,
            right: weather.t_in[0] / temp_ref,
        };
        let mut p = nondimensionalize(&spec, refs, &bc, initial)?;
        // S = A q_sw x/L_w in W/m³, scaled by t_ref/(c_ref T_ref)
        let q = weather.shortwave()?;
        let scale = t_ref / (refs.c_ref * temp_ref);
        let signal = Signal::Sampled(crate::signal::SampledSignal::new(
            q.t0 / t_ref,
            q.step / t_ref,
            q.values.iter().map(|v| v * scale).collect(),
        )?);
        p.source = Some(SourceTerm {
            signal,
            profile: SourceProfile::Linear,
            optics: Some(Optics {
                rho: self.reflectivity,
                tau: self.transmissivity,
            }),
        });
        p.layer_names = vec!["glass".into()];
        p.validate()?;
        Ok(p)
    }
}

/// 13 nodes across the glass with time step `dt` over `t_max`.
pub fn glass_grid(dt: f64, t_max: f64) -> Result<Grid> {
    let nt = (t_max / dt).round() as usize;
    if nt == 0 || ((nt as f64) * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return invalid(format!(
            "horizon {t_max} is not a multiple of the step {dt}"
        ));
    }
    Grid::from_counts(GLASS_NODES, dt, nt)
}

/// March of the glass problem.
pub fn solve_glass(
    problem: &DimensionlessProblem,
    grid: Grid,
    rec: Recording,
) -> Result<Simulation> {
    if problem.optics().is_none() {
        return invalid("glass problem needs its optics source term");
    }
    simulate(problem, grid, rec)
}

/// Loads per interval in J/m²; Ê = E_glass + E_wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLoads {
    pub intervals: Vec<(f64, f64)>,
    pub e_glass: Vec<f64>,
    pub e_wall: Vec<f64>,
    pub e_hat: Vec<f64>,
}

pub fn envelope_loads(
    intervals: &[(f64, f64)],
    e_wall: &[f64],
    e_glass: &[f64],
) -> Result<EnvelopeLoads> {
    if e_wall.len() != intervals.len() || e_glass.len() != intervals.len() {
        return invalid("wall and glass loads must cover the same intervals");
    }
    Ok(EnvelopeLoads {
        intervals: intervals.to_vec(),
        e_glass: e_glass.to_vec(),
        e_wall: e_wall.to_vec(),
        e_hat: e_wall.iter().zip(e_glass).map(|(a, b)| a + b).collect(),
    })
}

/// Which part of the envelope a parameter belongs to.
fn on_glass(p: ParamId) -> bool {
    matches!(p.kind, ParamKind::Transmissivity | ParamKind::Reflectivity)
}

/// Wall and glass problems sharing one dimensionless time axis.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub wall: DimensionlessProblem,
    pub wall_grid: Grid,
    pub glass: DimensionlessProblem,
    pub glass_grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceMode {
    Taylor,
    Direct,
}

/// ε_r per interval; `None` where Ê(p) vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeDifference {
    pub param: ParamId,
    pub fraction: f64,
    pub mode: DifferenceMode,
    pub values: Vec<Option<f64>>,
}

impl Envelope {
    pub fn new(
        wall: DimensionlessProblem,
        wall_grid: Grid,
        glass: DimensionlessProblem,
        glass_grid: Grid,
    ) -> Result<Self> {
        if (wall.refs.t_ref - glass.refs.t_ref).abs() > 1e-12 * wall.refs.t_ref {
            return invalid("wall and glass must share the time reference");
        }
        if (wall_grid.t_max() - glass_grid.t_max()).abs() > 1e-9 * wall_grid.t_max() {
            return invalid("wall and glass horizons differ");
        }
        if glass.optics().is_none() {
            return invalid("glass problem needs its optics source term");
        }
        wall_grid.check_layers(&wall)?;
        Ok(Self {
            wall,
            wall_grid,
            glass,
            glass_grid,
        })
    }

    fn part(&self, p: ParamId) -> (&DimensionlessProblem, Grid) {
        if on_glass(p) {
            (&self.glass, self.glass_grid)
        } else {
            (&self.wall, self.wall_grid)
        }
    }

    pub fn param_value(&self, p: ParamId) -> Result<f64> {
        self.part(p).0.param_value(p)
    }

    pub fn with_param(&self, p: ParamId, v: f64) -> Result<Self> {
        let mut out = self.clone();
        if on_glass(p) {
            out.glass = self.glass.with_param(p, v)?;
        } else {
            out.wall = self.wall.with_param(p, v)?;
        }
        Ok(out)
    }

    fn loads_of(
        problem: &DimensionlessProblem,
        grid: Grid,
        intervals: &[(f64, f64)],
    ) -> Result<Vec<f64>> {
        let s = simulate(problem, grid, Recording::NONE)?;
        let scale = problem.refs.loads_ref();
        intervals
            .iter()
            .map(|&(a, b)| s.loads(a, b).map(|e| e * scale))
            .collect()
    }

    /// Dimensional loads over intervals of dimensionless time.
    pub fn loads(&self, intervals: &[(f64, f64)]) -> Result<EnvelopeLoads> {
        let (w, g) = rayon::join(
            || Self::loads_of(&self.wall, self.wall_grid, intervals),
            || Self::loads_of(&self.glass, self.glass_grid, intervals),
        );
        envelope_loads(intervals, &w?, &g?)
    }

    /// ∂Ê/∂p in J/m² per unit of the dimensionless parameter, per interval.
    pub fn loads_sensitivity(&self, p: ParamId, intervals: &[(f64, f64)]) -> Result<Vec<f64>> {
        let (problem, grid) = self.part(p);
        let run = propagate(problem, grid, &[Target::First(p)], Recording::NONE)?;
        let scale = problem.refs.loads_ref();
        intervals
            .iter()
            .map(|&(a, b)| {
                run.loads_sensitivity(Target::First(p), a, b)
                    .map(|d| d * scale)
            })
            .collect()
    }

    /// ν and γ of the envelope loads, summed over intervals.
    pub fn global_metric(
        &self,
        domains: &[ParamDomain],
        intervals: &[(f64, f64)],
    ) -> Result<GlobalMetrics> {
        if domains.is_empty() {
            return invalid("global metric needs at least one parameter");
        }
        let jobs: Vec<(usize, f64)> = domains
            .iter()
            .enumerate()
            .flat_map(|(i, d)| d.lattice().into_iter().map(move |v| (i, v)))
            .collect();
        let values: Vec<f64> = jobs
            .par_iter()
            .map(|&(i, v)| {
                let p = domains[i].param;
                let d = self.with_param(p, v)?.loads_sensitivity(p, intervals)?;
                Ok(d.iter().map(|x| x * x).sum())
            })
            .collect::<Result<_>>()?;
        let mut nu = Vec::new();
        let mut offset = 0;
        for d in domains {
            nu.push(nu_from_lattice(
                &d.lattice(),
                &values[offset..offset + d.n],
            )?);
            offset += d.n;
        }
        GlobalMetrics::from_nu(domains.iter().map(|d| d.param).collect(), nu, jobs.len())
    }

    /// Second-order surrogate of one part's loads in p.
    pub fn surrogate(&self, p: ParamId, intervals: &[(f64, f64)]) -> Result<TaylorModel> {
        let (problem, grid) = self.part(p);
        TaylorModel::build(
            problem,
            grid,
            &[p],
            2,
            OutputKind::Loads {
                intervals: intervals.to_vec(),
            },
        )
    }

    /// |Ê(p(1 + fraction)) − Ê(p)| / |Ê(p)| per interval.
    pub fn relative_difference(
        &self,
        p: ParamId,
        fraction: f64,
        intervals: &[(f64, f64)],
        base: &EnvelopeLoads,
        mode: DifferenceMode,
    ) -> Result<RelativeDifference> {
        if base.intervals != intervals {
            return invalid("base loads were computed over other intervals");
        }
        let v0 = self.param_value(p)?;
        let v1 = v0 * (1.0 + fraction);
        let shifted: Vec<f64> = match mode {
            DifferenceMode::Direct => self.with_param(p, v1)?.loads(intervals)?.e_hat,
            DifferenceMode::Taylor => {
                let m = self.surrogate(p, intervals)?;
                let pred = m.evaluate(&[v1])?.values;
                let scale = self.part(p).0.refs.loads_ref();
                let delta = pred.iter().zip(&m.base).map(|(a, b)| (a - b) * scale);
                base.e_hat.iter().zip(delta).map(|(e, d)| e + d).collect()
            }
        };
        let values = base
            .e_hat
            .iter()
            .zip(&shifted)
            .map(|(&e0, &e1)| {
                if e0.abs() > 0.0 {
                    Some(((e1 - e0) / e0).abs())
                } else {
                    None
                }
            })
            .collect();
        Ok(RelativeDifference {
            param: p,
            fraction,
            mode,
            values,
        })
    }
}

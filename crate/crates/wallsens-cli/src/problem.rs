//! Builds the problem a run works on from its resolved configuration.

use std::path::PathBuf;

use wallsens::cases::{
    bayonne_synthetic, masonry_problem, masonry_wall, validation_case, CaseName, GLASS_DT,
    MASONRY_REFS,
};
use wallsens::envelope::{glass_grid, Envelope, GlassSpec};
use wallsens::signal::Signal;
use wallsens::wall::{
    nondimensionalize, DimensionalBoundary, InitialProfile, References, WallSpec,
};
use wallsens::weather::{SyntheticWeather, WeatherSeries, SECONDS_PER_HOUR};
use wallsens::{DimensionlessProblem, Grid};

use crate::config::{BoundaryConfig, RunConfig, WeatherConfig};
use crate::CliError;

/// Weather in use and the files it was read from.
pub struct WeatherInput {
    pub series: WeatherSeries,
    pub file: Option<PathBuf>,
}

pub fn load_weather(
    cfg: Option<&WeatherConfig>,
    needed: bool,
) -> Result<Option<WeatherInput>, CliError> {
    match cfg {
        Some(WeatherConfig {
            path: Some(_),
            synthetic: Some(_),
        }) => Err(CliError::Config(
            "weather takes either a path or synthetic settings".into(),
        )),
        Some(WeatherConfig { path: Some(p), .. }) => Ok(Some(WeatherInput {
            series: WeatherSeries::read_csv(p)?,
            file: Some(p.clone()),
        })),
        Some(WeatherConfig {
            synthetic: Some(s), ..
        }) => Ok(Some(WeatherInput {
            series: s.generate()?,
            file: None,
        })),
        _ if needed => Ok(Some(WeatherInput {
            series: SyntheticWeather::default().generate()?,
            file: None,
        })),
        _ => Ok(None),
    }
}

/// References of a custom wall: its own thickness, the first layer's
/// properties, one hour and 20 °C unless given.
pub fn custom_references(spec: &WallSpec, given: Option<References>) -> References {
    given.unwrap_or_else(|| {
        let first = spec.layers.first();
        References {
            length: spec.length(),
            k_ref: first.map_or(1.0, |l| l.conductivity),
            c_ref: first.map_or(1.0, |l| l.capacity),
            t_ref: SECONDS_PER_HOUR,
            temp_ref: 293.15,
        }
    })
}

/// Dimensionless horizon covered by the weather under the run's time reference.
pub fn weather_horizon(weather: &WeatherSeries, cfg_refs: Option<References>) -> f64 {
    weather.end() / cfg_refs.map_or(MASONRY_REFS.t_ref, |r| r.t_ref)
}

/// The first samples of the weather covering `hours` of dimensionless time.
fn truncate(w: &WeatherSeries, t_max: f64, t_ref: f64) -> WeatherSeries {
    let n = ((t_max * t_ref - w.t0) / w.step).ceil() as usize + 1;
    let n = n.min(w.len());
    WeatherSeries {
        t0: w.t0,
        step: w.step,
        q_sw: w.q_sw[..n].to_vec(),
        t_out: w.t_out[..n].to_vec(),
        t_in: w.t_in[..n].to_vec(),
    }
}

pub fn grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Ok(Grid::new(cfg.grid.dx, cfg.grid.dt, cfg.grid.t_max)?)
}

/// The single wall of every case but the envelope.
pub fn wall_problem(
    cfg: &RunConfig,
    weather: Option<&WeatherSeries>,
) -> Result<DimensionlessProblem, CliError> {
    let problem = match (&cfg.wall, cfg.case) {
        (None, Some(CaseName::Validation)) => validation_case(),
        (None, Some(CaseName::BayonneSynthetic)) => {
            bayonne_synthetic(weather.expect("weather loaded"))?
        }
        (Some(spec), _) => custom_problem(spec, cfg, weather)?,
        (None, _) => return Err(CliError::Config("no wall to simulate".into())),
    };
    let g = grid(cfg)?;
    g.check_layers(&problem)?;
    problem.check_horizon(g.t_max())?;
    Ok(problem)
}

fn custom_problem(
    spec: &WallSpec,
    cfg: &RunConfig,
    weather: Option<&WeatherSeries>,
) -> Result<DimensionlessProblem, CliError> {
    let refs = custom_references(spec, cfg.references);
    if let Some(w) = weather {
        let bc = DimensionalBoundary {
            outside_air: Signal::Sampled(w.outside()?),
            inside_air: Signal::Sampled(w.inside()?),
            radiation: Signal::Sampled(w.shortwave()?),
            horizon: w.end(),
        };
        let t = refs.temp_ref;
        let initial = InitialProfile::Linear {
            left: w.t_out[0] / t,
            right: w.t_in[0] / t,
        };
        return Ok(nondimensionalize(spec, refs, &bc, initial)?);
    }
    let BoundaryConfig {
        t_out,
        t_in,
        q_sw,
        initial,
    } = cfg
        .boundary
        .ok_or_else(|| CliError::Config("custom wall without boundary data".into()))?;
    let bc = DimensionalBoundary {
        outside_air: Signal::Constant(t_out),
        inside_air: Signal::Constant(t_in),
        radiation: Signal::Constant(q_sw),
        horizon: cfg.grid.t_max * refs.t_ref,
    };
    let t = refs.temp_ref;
    let initial = match initial {
        Some(v) => InitialProfile::Constant(v / t),
        None => InitialProfile::Linear {
            left: t_out / t,
            right: t_in / t,
        },
    };
    Ok(nondimensionalize(spec, refs, &bc, initial)?)
}

/// The masonry wall and window under the weather, over the run's horizon.
pub fn envelope(cfg: &RunConfig, weather: &WeatherSeries) -> Result<Envelope, CliError> {
    let t_max = cfg.grid.t_max;
    let w = truncate(weather, t_max, MASONRY_REFS.t_ref);
    let wall = masonry_problem(&masonry_wall(), &w)?;
    let glass_spec = cfg.glass.clone().unwrap_or_else(GlassSpec::default);
    let glass = glass_spec.problem(&w, MASONRY_REFS.t_ref, MASONRY_REFS.temp_ref)?;
    Ok(Envelope::new(
        wall,
        grid(cfg)?,
        glass,
        glass_grid(GLASS_DT, t_max)?,
    )?)
}

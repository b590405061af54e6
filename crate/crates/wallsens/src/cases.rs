//! Built-in problems: the two-layer validation benchmark, a three-layer
//! historical masonry wall driven by synthetic weather, and that wall paired
//! with a single-glazed window.

use serde::{Deserialize, Serialize};

use crate::envelope::{glass_grid, Envelope, GlassSpec};
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::signal::Signal;
use crate::wall::{
    nondimensionalize, DimensionalBoundary, DimensionlessProblem, InitialProfile, Layer,
    References, WallSpec,
};
use crate::weather::{WeatherSeries, SECONDS_PER_HOUR};

pub use crate::wall::validation_case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseName {
    Validation,
    BayonneSynthetic,
    Envelope,
}

impl std::str::FromStr for CaseName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "validation" => Ok(CaseName::Validation),
            "bayonne-synthetic" => Ok(CaseName::BayonneSynthetic),
            "envelope" => Ok(CaseName::Envelope),
            _ => invalid(format!(
                "unknown case '{s}' (validation | bayonne-synthetic | envelope)"
            )),
        }
    }
}

impl std::fmt::Display for CaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseName::Validation => "validation",
            CaseName::BayonneSynthetic => "bayonne-synthetic",
            CaseName::Envelope => "envelope",
        })
    }
}

/// Validation grid: Δx⋆ = 1e-2, Δt⋆ = 1e-3 over [0, 30].
pub fn validation_grid() -> Grid {
    Grid::new(1e-2, 1e-3, 30.0).expect("static grid")
}

/// Horizon of the validation-case loads used by the estimators.
pub const VALIDATION_LOADS_HORIZON: f64 = 5.0;

/// Dressed stone, rubble stone and lime coater, exterior first.
pub fn masonry_wall() -> WallSpec {
    let layer = |name: &str, conductivity, capacity, thickness| Layer {
        name: name.into(),
        conductivity,
        capacity,
        thickness,
    };
    WallSpec {
        layers: vec![
            layer("dressed stone", 1.75, 1.6e6, 0.2),
            layer("rubble stone", 2.3, 2.8e6, 0.28),
            layer("lime coater", 0.8, 2.2e6, 0.02),
        ],
        h_left: 15.0,
        h_right: 8.0,
        // only air temperatures drive this wall
        absorptivity: 0.0,
    }
}

pub const MASONRY_REFS: References = References {
    length: 0.5,
    k_ref: 1.75,
    c_ref: 1.6e6,
    t_ref: SECONDS_PER_HOUR,
    temp_ref: 293.15,
};

/// Parameter lattice sizes per layer of the masonry wall.
pub const MASONRY_LATTICE: [usize; 3] = [5, 7, 5];

/// Δx⋆ = 1e-2, Δt⋆ = 1e-2 (36 s) over `hours`.
pub fn masonry_grid(hours: f64) -> Result<Grid> {
    Grid::new(1e-2, 1e-2, hours)
}

/// The masonry wall between the synthetic outdoor and indoor air, starting
/// from the straight profile between the two initial air temperatures.
pub fn masonry_problem(spec: &WallSpec, weather: &WeatherSeries) -> Result<DimensionlessProblem> {
    if weather.len() < 2 || weather.t0 != 0.0 {
        return invalid("weather must start at t = 0 and hold at least two samples");
    }
    let refs = References {
        length: spec.length(),
        ..MASONRY_REFS
    };
    let bc = DimensionalBoundary {
        outside_air: Signal::Sampled(weather.outside()?),
        inside_air: Signal::Sampled(weather.inside()?),
        radiation: Signal::Sampled(weather.shortwave()?),
        horizon: weather.end(),
    };
    let t = refs.temp_ref;
    let initial = InitialProfile::Linear {
        left: weather.t_out[0] / t,
        right: weather.t_in[0] / t,
    };
    nondimensionalize(spec, refs, &bc, initial)
}

/// Bayonne-like wall with synthetic weather.
pub fn bayonne_synthetic(weather: &WeatherSeries) -> Result<DimensionlessProblem> {
    masonry_problem(&masonry_wall(), weather)
}

/// Glass time step; the glass responds within minutes.
pub const GLASS_DT: f64 = 1e-3;

/// The masonry wall next to a single-glazed window under the same weather.
pub fn envelope_case(weather: &WeatherSeries, glass: &GlassSpec) -> Result<Envelope> {
    let hours = weather.end() / SECONDS_PER_HOUR;
    let wall = bayonne_synthetic(weather)?;
    let g = glass.problem(weather, MASONRY_REFS.t_ref, MASONRY_REFS.temp_ref)?;
    Envelope::new(wall, masonry_grid(hours)?, g, glass_grid(GLASS_DT, hours)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weather::SyntheticWeather;

    #[test]
    fn masonry_numbers() {
        let w = SyntheticWeather {
            hours: 48,
            ..Default::default()
        }
        .generate()
        .unwrap();
        let p = bayonne_synthetic(&w).unwrap();
        assert!((p.fo - 0.01575).abs() < 1e-12);
        assert!((p.bi_left - 15.0 * 0.5 / 1.75).abs() < 1e-12);
        assert_eq!(p.layers.len(), 3);
        assert!((p.layers[0].end - 0.4).abs() < 1e-12 && (p.layers[1].end - 0.96).abs() < 1e-12);
        assert!((p.layers[1].k - 2.3 / 1.75).abs() < 1e-12 && (p.layers[1].c - 1.75).abs() < 1e-12);
        masonry_grid(47.0).unwrap().check_layers(&p).unwrap();
        assert_eq!(p.alpha, 0.0);
    }

    #[test]
    fn case_names_parse() {
        for c in [
            CaseName::Validation,
            CaseName::BayonneSynthetic,
            CaseName::Envelope,
        ] {
            assert_eq!(c.to_string().parse::<CaseName>().unwrap(), c);
        }
        assert!("bayonne".parse::<CaseName>().is_err());
    }
}

//! Wall description, dimensionless formulation and parameter identifiers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{SampledSignal, Signal};

/// Tolerance used to snap positions onto layer interfaces.
pub const SNAP: f64 = 1e-12;

/// One material layer in dimensional units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    /// W/(m·K)
    pub conductivity: f64,
    /// J/(m³·K)
    pub capacity: f64,
    /// m
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub layers: Vec<Layer>,
    pub h_left: f64,
    pub h_right: f64,
    pub absorptivity: f64,
}

impl WallSpec {
    pub fn length(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return invalid("wall needs at least one layer");
        }
        for l in &self.layers {
            if !(l.conductivity > 0.0 && l.capacity > 0.0 && l.thickness > 0.0) {
                return invalid(format!(
                    "layer '{}' must have positive k, c and thickness",
                    l.name
                ));
            }
        }
        if !(self.h_left > 0.0 && self.h_right > 0.0) {
            return invalid("surface coefficients must be positive");
        }
        if !(0.0..=1.0).contains(&self.absorptivity) {
            return invalid(format!("absorptivity {} outside [0, 1]", self.absorptivity));
        }
        Ok(())
    }
}

/// Reference scales of the dimensionless formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct References {
    /// m
    pub length: f64,
    /// W/(m·K)
    pub k_ref: f64,
    /// J/(m³·K)
    pub c_ref: f64,
    /// s
    pub t_ref: f64,
    /// K
    pub temp_ref: f64,
}

impl References {
    pub const UNIT: References = References {
        length: 1.0,
        k_ref: 1.0,
        c_ref: 1.0,
        t_ref: 1.0,
        temp_ref: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.length,
            self.k_ref,
            self.c_ref,
            self.t_ref,
            self.temp_ref,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid(format!(
                "reference values must be strictly positive: {self:?}"
            ));
        }
        Ok(())
    }

    pub fn fourier(&self) -> f64 {
        self.t_ref * self.k_ref / (self.length * self.length * self.c_ref)
    }

    pub fn biot(&self, h: f64) -> f64 {
        h * self.length / self.k_ref
    }

    /// Flux scale j_ref in W/m².
    pub fn flux_ref(&self) -> f64 {
        self.temp_ref * self.k_ref / self.length
    }

    /// Loads scale E_ref in J/m².
    pub fn loads_ref(&self) -> f64 {
        self.flux_ref() * self.t_ref
    }
}

/// Dimensional boundary data: air temperatures in K, incident flux in W/m²,
/// all as functions of time in seconds.
#[derive(Debug, Clone)]
pub struct DimensionalBoundary {
    pub outside_air: Signal,
    pub inside_air: Signal,
    pub radiation: Signal,
    /// Simulation horizon in seconds.
    pub horizon: f64,
}

/// Dimensionless boundary signals of t⋆.
#[derive(Debug, Clone)]
pub struct BoundarySignals {
    pub u_left: Signal,
    pub u_right: Signal,
    pub g_left: Signal,
}

impl BoundarySignals {
    pub fn constant(u_left: f64, u_right: f64, g_left: f64) -> Self {
        Self {
            u_left: Signal::Constant(u_left),
            u_right: Signal::Constant(u_right),
            g_left: Signal::Constant(g_left),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    Constant(f64),
    /// Straight line between the two surface values.
    Linear {
        left: f64,
        right: f64,
    },
    /// Piecewise-linear through (x⋆, u) pairs sorted by x⋆.
    Tabulated(Vec<(f64, f64)>),
}

impl InitialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialProfile::Constant(v) => *v,
            InitialProfile::Linear { left, right } => left + (right - left) * x,
            InitialProfile::Tabulated(pts) => {
                if x <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    let ((x0, u0), (x1, u1)) = (w[0], w[1]);
                    if x <= x1 {
                        return u0 + (u1 - u0) * (x - x0) / (x1 - x0);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }
}

/// Shortwave optics of a glazing: reflectivity and transmissivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optics {
    pub rho: f64,
    pub tau: f64,
}

#[derive(Clone)]
pub enum SourceProfile {
    /// Profile equal to x⋆, increasing from the exterior face.
    Linear,
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SourceProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SourceProfile::Linear => x,
            SourceProfile::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for SourceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceProfile::Linear => write!(f, "Linear"),
            SourceProfile::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Volumetric source S⋆(x⋆, t⋆) = A · signal(t⋆) · profile(x⋆), already scaled
/// so that it adds directly to c⋆ ∂u/∂t⋆. A is 1 without optics.
#[derive(Debug, Clone)]
pub struct SourceTerm {
    pub signal: Signal,
    pub profile: SourceProfile,
    pub optics: Option<Optics>,
}

/// Layer in dimensionless form, spanning [start, end] in x⋆.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimLayer {
    pub k: f64,
    pub c: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone)]
pub struct DimensionlessProblem {
    pub layers: Vec<DimLayer>,
    pub fo: f64,
    pub bi_left: f64,
    pub bi_right: f64,
    pub alpha: f64,
    pub boundary: BoundarySignals,
    pub initial: InitialProfile,
    pub source: Option<SourceTerm>,
    pub refs: References,
    pub layer_names: Vec<String>,
}

impl DimensionlessProblem {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return invalid("problem needs at least one layer");
        }
        let mut prev = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.k > 0.0 && l.c > 0.0) || !l.k.is_finite() || !l.c.is_finite() {
                return invalid(format!(
                    "layer {} must have positive finite k⋆ and c⋆",
                    i + 1
                ));
            }
            if (l.start - prev).abs() > SNAP || l.end <= l.start {
                return invalid(format!(
                    "layer {} bounds are not contiguous and increasing",
                    i + 1
                ));
            }
            prev = l.end;
        }
        if (prev - 1.0).abs() > 1e-9 {
            return invalid(format!("layers must end at x⋆ = 1, got {prev}"));
        }
        if !(self.fo > 0.0 && self.bi_left > 0.0 && self.bi_right > 0.0) {
            return invalid("Fo, Bi_L and Bi_R must be positive");
        }
        if let Some(Some(o)) = self.source.as_ref().map(|s| s.optics) {
            check_optics(o)?;
        }
        self.refs.validate()
    }

    /// Index of the layer owning x⋆: half-open intervals, the last one closed.
    pub fn layer_at(&self, x: f64) -> Result<usize> {
        if !(-SNAP..=1.0 + SNAP).contains(&x) {
            return invalid(format!("x⋆ = {x} outside [0, 1]"));
        }
        let last = self.layers.len() - 1;
        Ok(self.layers[..last]
            .iter()
            .position(|l| x < l.end - SNAP)
            .unwrap_or(last))
    }

    /// (k⋆, c⋆) at x⋆.
    pub fn evaluate_piecewise(&self, x: f64) -> Result<(f64, f64)> {
        let l = &self.layers[self.layer_at(x)?];
        Ok((l.k, l.c))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.end)
            .collect()
    }

    pub fn param_value(&self, p: ParamId) -> Result<f64> {
        self.check_param(p)?;
        Ok(match p.kind {
            ParamKind::Conductivity => self.layers[p.layer].k,
            ParamKind::Capacity => self.layers[p.layer].c,
            ParamKind::Transmissivity => self.optics().unwrap().tau,
            ParamKind::Reflectivity => self.optics().unwrap().rho,
        })
    }

    /// Copy of the problem with one parameter replaced.
    pub fn with_param(&self, p: ParamId, value: f64) -> Result<Self> {
        self.check_param(p)?;
        let mut out = self.clone();
        match p.kind {
            ParamKind::Conductivity => out.layers[p.layer].k = value,
            ParamKind::Capacity => out.layers[p.layer].c = value,
            ParamKind::Transmissivity | ParamKind::Reflectivity => {
                let o = out.source.as_mut().and_then(|s| s.optics.as_mut()).unwrap();
                if p.kind == ParamKind::Transmissivity {
                    o.tau = value;
                } else {
                    o.rho = value;
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn with_params(&self, ps: &[ParamId], values: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        for (&p, &v) in ps.iter().zip(values) {
            out = out.with_param(p, v)?;
        }
        Ok(out)
    }

    pub fn optics(&self) -> Option<Optics> {
        self.source.as_ref().and_then(|s| s.optics)
    }

    pub fn check_param(&self, p: ParamId) -> Result<()> {
        match p.kind {
            ParamKind::Conductivity | ParamKind::Capacity => {
                if p.layer >= self.layers.len() {
                    return invalid(format!(
                        "parameter {p} refers to layer {} but the wall has {}",
                        p.layer + 1,
                        self.layers.len()
                    ));
                }
            }
            ParamKind::Transmissivity | ParamKind::Reflectivity => {
                if self.optics().is_none() {
                    return invalid(format!("parameter {p} needs a glazing source term"));
                }
            }
        }
        Ok(())
    }

    /// Horizon check for every boundary signal.
    pub fn check_horizon(&self, t_max: f64) -> Result<()> {
        let b = &self.boundary;
        let mut sigs = vec![
            ("u_left", &b.u_left),
            ("u_right", &b.u_right),
            ("g_left", &b.g_left),
        ];
        if let Some(s) = &self.source {
            sigs.push(("source", &s.signal));
        }
        for (name, s) in sigs {
            if !s.covers(t_max) {
                return invalid(format!(
                    "boundary signal {name} does not cover horizon t⋆ = {t_max}"
                ));
            }
        }
        Ok(())
    }

    /// Dimensional wall recovered from the dimensionless data.
    pub fn to_wall_spec(&self) -> WallSpec {
        let r = &self.refs;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| Layer {
                name: self
                    .layer_names
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("layer {}", i + 1)),
                conductivity: l.k * r.k_ref,
                capacity: l.c * r.c_ref,
                thickness: (l.end - l.start) * r.length,
            })
            .collect();
        WallSpec {
            layers,
            h_left: self.bi_left * r.k_ref / r.length,
            h_right: self.bi_right * r.k_ref / r.length,
            absorptivity: self.alpha,
        }
    }
}

pub(crate) fn check_optics(o: Optics) -> Result<()> {
    if !(0.0..1.0).contains(&o.rho) || !(0.0..=1.0).contains(&o.tau) {
        return invalid(format!(
            "optics out of range: rho = {}, tau = {}",
            o.rho, o.tau
        ));
    }
    if o.rho * o.tau >= 1.0 {
        return invalid("rho·tau must be below 1");
    }
    Ok(())
}

/// Rescale a dimensional signal of time in seconds to a dimensionless one.
pub(crate) fn to_dimensionless_time(s: &Signal, t_ref: f64, scale: f64, shift: f64) -> Signal {
    match s {
        Signal::Constant(v) => Signal::Constant(v * scale + shift),
        Signal::Sampled(ss) => Signal::Sampled(SampledSignal {
            t0: ss.t0 / t_ref,
            step: ss.step / t_ref,
            values: ss.values.iter().map(|v| v * scale + shift).collect(),
        }),
        Signal::Function(f) => {
            let f = f.clone();
            Signal::function(move |t| f(t * t_ref) * scale + shift)
        }
    }
}

/// Convert a dimensional wall and its boundary data to the dimensionless problem.
pub fn nondimensionalize(
    spec: &WallSpec,
    refs: References,
    bc: &DimensionalBoundary,
    initial: InitialProfile,
) -> Result<DimensionlessProblem> {
    refs.validate()?;
    spec.validate()?;
    let length = spec.length();
    if (length - refs.length).abs() > 1e-9 * length {
        return invalid(format!(
            "reference length {} differs from wall thickness {length}",
            refs.length
        ));
    }
    for (name, s) in [
        ("outside_air", &bc.outside_air),
        ("inside_air", &bc.inside_air),
        ("radiation", &bc.radiation),
    ] {
        if !s.covers(bc.horizon) {
            return invalid(format!(
                "boundary series {name} is shorter than the horizon {} s",
                bc.horizon
            ));
        }
    }
    let mut start = 0.0;
    let mut layers = Vec::with_capacity(spec.layers.len());
    for (i, l) in spec.layers.iter().enumerate() {
        let end = if i + 1 == spec.layers.len() {
            1.0
        } else {
            start + l.thickness / length
        };
        layers.push(DimLayer {
            k: l.conductivity / refs.k_ref,
            c: l.capacity / refs.c_ref,
            start,
            end,
        });
        start = end;
    }
    let t = refs.temp_ref;
    let boundary = BoundarySignals {
        u_left: to_dimensionless_time(&bc.outside_air, refs.t_ref, 1.0 / t, 0.0),
        u_right: to_dimensionless_time(&bc.inside_air, refs.t_ref, 1.0 / t, 0.0),
        g_left: to_dimensionless_time(
            &bc.radiation,
            refs.t_ref,
            refs.length / (t * refs.k_ref),
            0.0,
        ),
    };
    let p = DimensionlessProblem {
        layers,
        fo: refs.fourier(),
        bi_left: refs.biot(spec.h_left),
        bi_right: refs.biot(spec.h_right),
        alpha: spec.absorptivity,
        boundary,
        initial,
        source: None,
        refs,
        layer_names: spec.layers.iter().map(|l| l.name.clone()).collect(),
    };
    p.validate()?;
    Ok(p)
}

/// Two-layer benchmark used to validate the solver and the estimators.
pub fn validation_case() -> DimensionlessProblem {
    DimensionlessProblem {
        layers: vec![
            DimLayer {
                k: 0.1,
                c: 0.2,
                start: 0.0,
                end: 0.6,
            },
            DimLayer {
                k: 0.3,
                c: 0.5,
                start: 0.6,
                end: 1.0,
            },
        ],
        fo: 0.02,
        bi_left: 0.1,
        bi_right: 0.2,
        alpha: 1.0,
        boundary: BoundarySignals {
            u_left: Signal::function(|t| 0.8 * (PI * t / 3.0).sin()),
            u_right: Signal::function(|t| 0.5 * (1.0 - (PI * t / 4.0).cos())),
            g_left: Signal::function(|t| 0.6 * (PI * t / 5.0).sin().powi(2)),
        },
        initial: InitialProfile::Constant(0.0),
        source: None,
        refs: References::UNIT,
        layer_names: vec!["layer 1".into(), "layer 2".into()],
    }
}

/// Single-material problem with constant boundary data.
pub fn uniform_problem(
    k: f64,
    c: f64,
    fo: f64,
    bi_left: f64,
    bi_right: f64,
) -> DimensionlessProblem {
    DimensionlessProblem {
        layers: vec![DimLayer {
            k,
            c,
            start: 0.0,
            end: 1.0,
        }],
        fo,
        bi_left,
        bi_right,
        alpha: 1.0,
        boundary: BoundarySignals::constant(0.0, 0.0, 0.0),
        initial: InitialProfile::Constant(0.0),
        source: None,
        refs: References::UNIT,
        layer_names: vec!["layer 1".into()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Conductivity,
    Capacity,
    Transmissivity,
    Reflectivity,
}

/// Identifier of a differentiable parameter. `layer` is zero-based and is
/// ignored for the glazing kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId {
    pub kind: ParamKind,
    pub layer: usize,
}

impl ParamId {
    pub const TAU: ParamId = ParamId {
        kind: ParamKind::Transmissivity,
        layer: 0,
    };
    pub const RHO: ParamId = ParamId {
        kind: ParamKind::Reflectivity,
        layer: 0,
    };

    pub fn k(layer: usize) -> Self {
        Self {
            kind: ParamKind::Conductivity,
            layer,
        }
    }

    pub fn c(layer: usize) -> Self {
        Self {
            kind: ParamKind::Capacity,
            layer,
        }
    }

    /// Ordering key for deterministic tie-breaks: lower layer first.
    pub fn order_key(&self) -> (usize, ParamKind) {
        (self.layer, self.kind)
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ParamKind::Conductivity => write!(f, "k{}", self.layer + 1),
            ParamKind::Capacity => write!(f, "c{}", self.layer + 1),
            ParamKind::Transmissivity => write!(f, "tau"),
            ParamKind::Reflectivity => write!(f, "rho"),
        }
    }
}

impl FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "tau" => return Ok(ParamId::TAU),
            "rho" => return Ok(ParamId::RHO),
            _ => {}
        }
        let bad = || {
            Error::InvalidInput(format!(
                "unknown parameter '{s}' (expected k<i>, c<i>, tau or rho)"
            ))
        };
        let (head, idx) = s.split_at(1.min(s.len()));
        let layer: usize = idx.parse().map_err(|_| bad())?;
        if layer == 0 {
            return Err(bad());
        }
        match head {
            "k" => Ok(ParamId::k(layer - 1)),
            "c" => Ok(ParamId::c(layer - 1)),
            _ => Err(bad()),
        }
    }
}

pub fn parse_params(list: &str) -> Result<Vec<ParamId>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table7() -> WallSpec {
        WallSpec {
            layers: vec![
                Layer {
                    name: "dressed stone".into(),
                    conductivity: 1.75,
                    capacity: 1.6e6,
                    thickness: 0.2,
                },
                Layer {
                    name: "rubble stone".into(),
                    conductivity: 2.3,
                    capacity: 2.8e6,
                    thickness: 0.28,
                },
                Layer {
                    name: "lime coater".into(),
                    conductivity: 0.8,
                    capacity: 2.2e6,
                    thickness: 0.02,
                },
            ],
            h_left: 15.0,
            h_right: 8.0,
            absorptivity: 0.6,
        }
    }

    fn refs() -> References {
        References {
            length: 0.5,
            k_ref: 1.75,
            c_ref: 1.6e6,
            t_ref: 3600.0,
            temp_ref: 293.15,
        }
    }

    fn const_bc() -> DimensionalBoundary {
        DimensionalBoundary {
            outside_air: Signal::Constant(283.15),
            inside_air: Signal::Constant(293.15),
            radiation: Signal::Constant(100.0),
            horizon: 3600.0,
        }
    }

    #[test]
    fn reference_numbers() {
        let p = nondimensionalize(
            &table7(),
            refs(),
            &const_bc(),
            InitialProfile::Constant(1.0),
        )
        .unwrap();
        assert!((p.bi_left - 15.0 * 0.5 / 1.75).abs() < 1e-12);
        assert!((p.bi_left - 4.2857).abs() < 1e-4);
        assert!((p.fo - 0.01575).abs() < 1e-15);
        assert_eq!(p.layers[0].k, 1.0);
        assert!((p.layers[0].end - 0.4).abs() < 1e-12);
        assert!((p.layers[1].end - 0.96).abs() < 1e-12);
        let g = p.boundary.g_left.eval(0.3);
        assert!((g - 100.0 * 0.5 / (293.15 * 1.75)).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let spec = table7();
        let p =
            nondimensionalize(&spec, refs(), &const_bc(), InitialProfile::Constant(1.0)).unwrap();
        let back = p.to_wall_spec();
        for (a, b) in spec.layers.iter().zip(&back.layers) {
            assert!((a.conductivity - b.conductivity).abs() <= 1e-12 * a.conductivity);
            assert!((a.capacity - b.capacity).abs() <= 1e-12 * a.capacity);
            assert!((a.thickness - b.thickness).abs() <= 1e-12 * a.thickness);
        }
        assert!((back.h_left - 15.0).abs() < 1e-12 && (back.h_right - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_references_and_short_series() {
        let mut r = refs();
        r.t_ref = 0.0;
        assert!(
            nondimensionalize(&table7(), r, &const_bc(), InitialProfile::Constant(1.0)).is_err()
        );
        let mut bc = const_bc();
        bc.outside_air =
            Signal::Sampled(SampledSignal::new(0.0, 3600.0, vec![280.0, 281.0]).unwrap());
        bc.horizon = 7200.0;
        assert!(nondimensionalize(&table7(), refs(), &bc, InitialProfile::Constant(1.0)).is_err());
    }

    #[test]
    fn piecewise_lookup() {
        let p = validation_case();
        assert_eq!(p.evaluate_piecewise(0.3).unwrap(), (0.1, 0.2));
        assert_eq!(p.evaluate_piecewise(0.6).unwrap(), (0.3, 0.5));
        assert_eq!(p.evaluate_piecewise(0.6 - 1e-9).unwrap(), (0.1, 0.2));
        assert_eq!(p.evaluate_piecewise(1.0).unwrap(), (0.3, 0.5));
        assert!(p.evaluate_piecewise(1.5).is_err());
        assert!(p.evaluate_piecewise(-0.1).is_err());
        let u = uniform_problem(2.0, 3.0, 1.0, 1.0, 1.0);
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(u.evaluate_piecewise(x).unwrap(), (2.0, 3.0));
        }
    }

    #[test]
    fn validation_signals() {
        let p = validation_case();
        assert_eq!(p.boundary.u_left.eval(0.0), 0.0);
        assert_eq!(p.boundary.g_left.eval(0.0), 0.0);
        assert_eq!(p.boundary.u_right.eval(0.0), 0.0);
        assert!((p.boundary.u_left.eval(1.5) - 0.8).abs() < 1e-15);
        assert_eq!(p.fo, 0.02);
    }

    #[test]
    fn biot_and_fourier_scale_invariance() {
        let r = refs();
        let s = 3.7;
        let r2 = References {
            k_ref: r.k_ref * s,
            c_ref: r.c_ref * s,
            ..r
        };
        assert!((r.fourier() - r2.fourier()).abs() < 1e-15);
        let mut spec = table7();
        for l in &mut spec.layers {
            l.conductivity *= s;
        }
        spec.h_left *= s;
        spec.h_right *= s;
        let a =
            nondimensionalize(&table7(), r, &const_bc(), InitialProfile::Constant(1.0)).unwrap();
        let b = nondimensionalize(&spec, r2, &const_bc(), InitialProfile::Constant(1.0)).unwrap();
        assert!((a.bi_left - b.bi_left).abs() < 1e-12);
        assert!((a.bi_right - b.bi_right).abs() < 1e-12);
        assert!((a.fo - b.fo).abs() < 1e-15);
    }

    #[test]
    fn param_ids() {
        assert_eq!("k2".parse::<ParamId>().unwrap(), ParamId::k(1));
        assert_eq!("c1".parse::<ParamId>().unwrap(), ParamId::c(0));
        assert_eq!("tau".parse::<ParamId>().unwrap(), ParamId::TAU);
        assert!("k0".parse::<ParamId>().is_err());
        assert!("x1".parse::<ParamId>().is_err());
        assert_eq!(ParamId::k(2).to_string(), "k3");
        let p = validation_case();
        assert!(p.check_param(ParamId::k(2)).is_err());
        assert!(p.check_param(ParamId::TAU).is_err());
        assert_eq!(p.with_param(ParamId::c(1), 0.7).unwrap().layers[1].c, 0.7);
        assert!(p.with_param(ParamId::k(0), -1.0).is_err());
    }
}

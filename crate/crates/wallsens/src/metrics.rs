//! Derivative-based importance measures: the local metric η at the anchor,
//! the global metric ν averaged over each parameter's domain with its
//! normalized share γ, the crossed measure and the significance ranking.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::sensitivity::{propagate, SensitivityRun, Target};
use crate::solver::{FieldHistory, Recording, TimeSeries};
use crate::taylor::OutputKind;
use crate::wall::{DimensionlessProblem, ParamId};

/// Where the square goes in the space-time integral of X. Both coincide for
/// scalar outputs; on fields the time-first reading is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaReading {
    /// ∫∫ X² dτ dχ
    SquareInside,
    /// ∫ (∫ X dτ)² dχ
    #[default]
    TimeFirst,
}

impl std::str::FromStr for EtaReading {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square_inside" => Ok(EtaReading::SquareInside),
            "time_first" => Ok(EtaReading::TimeFirst),
            _ => invalid(format!(
                "unknown eta reading '{s}' (square_inside | time_first)"
            )),
        }
    }
}

fn trapezoid_weights(n: usize, h: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
}

/// Squared space-time integral of a recorded sensitivity field.
pub fn field_norm(h: &FieldHistory, reading: EtaReading) -> Result<f64> {
    let levels = h.levels();
    if levels < 2 || h.nx < 2 {
        return invalid("field needs at least two recorded levels and two nodes");
    }
    let dt = h.record_dt();
    let dx = 1.0 / (h.nx - 1) as f64;
    let per_node = (0..h.nx).map(|j| {
        let w = trapezoid_weights(levels, dt);
        match reading {
            EtaReading::SquareInside => w
                .enumerate()
                .map(|(i, w)| w * h.get(i, j).powi(2))
                .sum::<f64>(),
            EtaReading::TimeFirst => w
                .enumerate()
                .map(|(i, w)| w * h.get(i, j))
                .sum::<f64>()
                .powi(2),
        }
    });
    Ok(per_node
        .zip(trapezoid_weights(h.nx, dx))
        .map(|(v, w)| v * w)
        .sum())
}

/// Squared time integral of a sensitivity series.
pub fn series_norm(s: &TimeSeries, reading: EtaReading) -> Result<f64> {
    if s.values.len() < 2 {
        return invalid("series needs at least two samples");
    }
    let w = trapezoid_weights(s.values.len(), s.dt);
    Ok(match reading {
        EtaReading::SquareInside => s.values.iter().zip(w).map(|(v, w)| w * v * v).sum(),
        EtaReading::TimeFirst => s
            .values
            .iter()
            .zip(w)
            .map(|(v, w)| w * v)
            .sum::<f64>()
            .powi(2),
    })
}

/// Squared integral of the sensitivity of one output to one target. Loads
/// are scalars per interval, so the integral reduces to the sum of squared
/// derivatives over the intervals.
pub fn squared_integral(
    run: &SensitivityRun,
    t: Target,
    kind: &OutputKind,
    reading: EtaReading,
) -> Result<f64> {
    match kind {
        OutputKind::Temperature { .. } => field_norm(run.field(t)?, reading),
        OutputKind::Flux => series_norm(run.flux_sensitivity(t)?, reading),
        OutputKind::Loads { intervals } => intervals
            .iter()
            .map(|&(a, b)| run.loads_sensitivity(t, a, b).map(|d| d * d))
            .sum(),
    }
}

/// Shares of a total; rejects an all-zero or non-finite input.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return invalid("metric values must be finite and non-negative");
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return invalid("no parameter has a non-zero sensitivity");
    }
    Ok(values.iter().map(|v| v / total).collect())
}

/// Normalizes separately among the parameters of each layer.
pub fn normalize_by_layer(params: &[ParamId], values: &[f64]) -> Result<Vec<f64>> {
    if params.len() != values.len() {
        return invalid("one value per parameter expected");
    }
    let mut out = vec![0.0; values.len()];
    for (i, p) in params.iter().enumerate() {
        let group: Vec<usize> = (0..params.len())
            .filter(|&j| params[j].layer == p.layer)
            .collect();
        let shares = normalize(&group.iter().map(|&j| values[j]).collect::<Vec<_>>())?;
        out[i] = shares[group.iter().position(|&j| j == i).unwrap()];
    }
    Ok(out)
}

/// Raw squared integrals of every parameter at the anchor, from one march.
pub fn local_integrals(
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    kind: &OutputKind,
    reading: EtaReading,
) -> Result<Vec<f64>> {
    if params.is_empty() {
        return invalid("local metric needs at least one parameter");
    }
    let targets: Vec<Target> = params.iter().map(|&p| Target::First(p)).collect();
    let run = propagate(problem, grid, &targets, kind.recording())?;
    targets
        .iter()
        .map(|&t| squared_integral(&run, t, kind, reading))
        .collect()
}

/// η per parameter.
pub fn local_metric(
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    kind: &OutputKind,
    reading: EtaReading,
) -> Result<Vec<f64>> {
    normalize(&local_integrals(problem, grid, params, kind, reading)?)
}

/// Closed interval of admissible values and the lattice size over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub param: ParamId,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ParamDomain {
    /// anchor · [1 − frac, 1 + frac].
    pub fn relative(
        problem: &DimensionlessProblem,
        param: ParamId,
        frac: f64,
        n: usize,
    ) -> Result<Self> {
        let v = problem.param_value(param)?;
        Self::new(param, v * (1.0 - frac), v * (1.0 + frac), n)
    }

    pub fn new(param: ParamId, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("lattice for {param} needs at least 2 points"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("domain of {param} is degenerate: [{lo}, {hi}]"));
        }
        Ok(Self { param, lo, hi, n })
    }

    pub fn lattice(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + h * i as f64
                }
            })
            .collect()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Domain average of a sampled integrand: trapezoid over the lattice divided
/// by the domain width.
pub fn nu_from_lattice(points: &[f64], values: &[f64]) -> Result<f64> {
    if points.len() < 2 || points.len() != values.len() {
        return invalid("lattice needs at least 2 points and one value per point");
    }
    let width = points[points.len() - 1] - points[0];
    if width <= 0.0 {
        return invalid("lattice points must increase");
    }
    let s: f64 = points
        .windows(2)
        .zip(values.windows(2))
        .map(|(p, v)| 0.5 * (v[0] + v[1]) * (p[1] - p[0]))
        .sum();
    Ok(s / width)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub params: Vec<ParamId>,
    pub nu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub nu_over_pi2: Vec<f64>,
    pub nu_over_12: Vec<f64>,
    /// Sensitivity marches spent.
    pub marches: usize,
}

impl GlobalMetrics {
    pub fn from_nu(params: Vec<ParamId>, nu: Vec<f64>, marches: usize) -> Result<Self> {
        let gamma = normalize(&nu)?;
        let pi2 = std::f64::consts::PI.powi(2);
        Ok(Self {
            nu_over_pi2: nu.iter().map(|v| v / pi2).collect(),
            nu_over_12: nu.iter().map(|v| v / 12.0).collect(),
            params,
            nu,
            gamma,
            marches,
        })
    }
}

/// ν and γ with one first-order march per lattice point of each parameter,
/// the others held at their anchor values.
pub fn global_metric(
    problem: &DimensionlessProblem,
    grid: Grid,
    domains: &[ParamDomain],
    kind: &OutputKind,
    reading: EtaReading,
) -> Result<GlobalMetrics> {
    if domains.is_empty() {
        return invalid("global metric needs at least one parameter");
    }
    for d in domains {
        ParamDomain::new(d.param, d.lo, d.hi, d.n)?;
        problem.check_param(d.param)?;
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
            let run = propagate(
                &problem.with_param(p, v)?,
                grid,
                &[Target::First(p)],
                kind.recording(),
            )?;
            squared_integral(&run, Target::First(p), kind, reading)
        })
        .collect::<Result<_>>()?;
    let mut nu = Vec::with_capacity(domains.len());
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

/// Double trapezoid of values[i * q.len() + j] over the p × q lattice,
/// divided by the lattice area.
pub fn crossed_integral(p: &[f64], q: &[f64], values: &[f64]) -> Result<f64> {
    if p.len() < 2 || q.len() < 2 || values.len() != p.len() * q.len() {
        return invalid("crossed lattice needs at least 2 × 2 points and one value per point");
    }
    let rows: Vec<f64> = (0..p.len())
        .map(|i| nu_from_lattice(q, &values[i * q.len()..(i + 1) * q.len()]))
        .collect::<Result<_>>()?;
    nu_from_lattice(p, &rows)
}

/// Domain average of ∂²E/∂p∂q over the joint lattice; one second-order march
/// per lattice point.
pub fn crossed_measure(
    problem: &DimensionlessProblem,
    grid: Grid,
    dp: &ParamDomain,
    dq: &ParamDomain,
    interval: (f64, f64),
) -> Result<f64> {
    let (ps, qs) = (dp.lattice(), dq.lattice());
    let jobs: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&a| qs.iter().map(move |&b| (a, b)))
        .collect();
    let t = Target::Second(dp.param, dq.param);
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(a, b)| {
            let pr = problem.with_params(&[dp.param, dq.param], &[a, b])?;
            propagate(&pr, grid, &[t], Recording::NONE)?
                .loads_sensitivity(t, interval.0, interval.1)
        })
        .collect::<Result<_>>()?;
    crossed_integral(&ps, &qs, &values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub param: ParamId,
    pub value: f64,
    pub significant: bool,
}

/// Default significance cut relative to the largest metric.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Descending order of `values`, ties broken by lower layer; entries below
/// `threshold` × max are marked non-significant.
pub fn rank_parameters(
    params: &[ParamId],
    values: &[f64],
    threshold: f64,
) -> Result<Vec<RankEntry>> {
    if params.len() != values.len() {
        return invalid("one value per parameter expected");
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut idx: Vec<usize> = (0..params.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(params[a].order_key().cmp(&params[b].order_key()))
    });
    Ok(idx
        .into_iter()
        .map(|i| RankEntry {
            param: params[i],
            value: values[i],
            significant: values[i] >= threshold * max,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossedEntry {
    pub p: ParamId,
    pub q: ParamId,
    pub value: f64,
}

/// Everything a metrics run produces, for JSON and CSV emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub output: OutputKind,
    pub reading: EtaReading,
    pub params: Vec<ParamId>,
    pub eta: Option<Vec<f64>>,
    pub global: Option<GlobalMetrics>,
    pub crossed: Vec<CrossedEntry>,
    pub ranking: Vec<RankEntry>,
    pub marches: usize,
}

impl MetricReport {
    /// Ranks by γ when available, else by η.
    pub fn new(
        output: OutputKind,
        reading: EtaReading,
        params: Vec<ParamId>,
        eta: Option<Vec<f64>>,
        global: Option<GlobalMetrics>,
        threshold: f64,
    ) -> Result<Self> {
        let by = match (&global, &eta) {
            (Some(g), _) => g.gamma.clone(),
            (None, Some(e)) => e.clone(),
            (None, None) => return invalid("report needs η or γ"),
        };
        let ranking = rank_parameters(&params, &by, threshold)?;
        let marches = eta.as_ref().map_or(0, |_| 1) + global.as_ref().map_or(0, |g| g.marches);
        Ok(Self {
            output,
            reading,
            params,
            eta,
            global,
            crossed: Vec::new(),
            ranking,
            marches,
        })
    }

    /// Flat `param,metric,value` rows.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        for (i, p) in self.params.iter().enumerate() {
            if let Some(e) = &self.eta {
                rows.push((p.to_string(), "eta".to_string(), e[i]));
            }
            if let Some(g) = &self.global {
                for (name, v) in [
                    ("nu", &g.nu),
                    ("gamma", &g.gamma),
                    ("nu_over_pi2", &g.nu_over_pi2),
                    ("nu_over_12", &g.nu_over_12),
                ] {
                    rows.push((p.to_string(), name.to_string(), v[i]));
                }
            }
        }
        for c in &self.crossed {
            rows.push((format!("{}{}", c.p, c.q), "nu_crossed".to_string(), c.value));
        }
        for (r, e) in self.ranking.iter().enumerate() {
            rows.push((e.param.to_string(), "rank".to_string(), (r + 1) as f64));
            rows.push((
                e.param.to_string(),
                "significant".to_string(),
                if e.significant { 1.0 } else { 0.0 },
            ));
        }
        rows
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["param", "metric", "value"])?;
        for (p, m, v) in self.rows() {
            w.write_record([p, m, format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;
    use crate::wall::{
        uniform_problem, validation_case, BoundarySignals, DimLayer, InitialProfile,
    };

    #[test]
    fn single_parameter_eta_is_one() {
        let p = validation_case();
        let g = Grid::new(0.02, 2e-3, 1.0).unwrap();
        let kind = OutputKind::Loads {
            intervals: vec![(0.0, 1.0)],
        };
        assert_eq!(
            local_metric(&p, g, &[ParamId::k(1)], &kind, EtaReading::SquareInside).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn all_zero_rejected() {
        assert!(normalize(&[0.0, 0.0]).is_err());
        let p = uniform_problem(1.0, 1.0, 0.1, 1.0, 1.0);
        let g = Grid::new(0.05, 1e-3, 0.5).unwrap();
        assert!(local_metric(
            &p,
            g,
            &[ParamId::k(0), ParamId::c(0)],
            &OutputKind::Flux,
            EtaReading::SquareInside
        )
        .is_err());
    }

    #[test]
    fn norms_of_constant_fields() {
        let h = FieldHistory {
            nx: 3,
            stride: 2,
            dt: 0.5,
            data: vec![2.0; 9],
        };
        // 3 levels at spacing 1 -> time span 2, space span 1
        assert!((field_norm(&h, EtaReading::SquareInside).unwrap() - 8.0).abs() < 1e-14);
        assert!((field_norm(&h, EtaReading::TimeFirst).unwrap() - 16.0).abs() < 1e-14);
        let s = TimeSeries {
            dt: 0.25,
            values: vec![3.0; 5],
        };
        assert!((series_norm(&s, EtaReading::SquareInside).unwrap() - 9.0).abs() < 1e-14);
        assert!((series_norm(&s, EtaReading::TimeFirst).unwrap() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn lattice_average() {
        assert_eq!(
            nu_from_lattice(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap(),
            1.0
        );
        // x² on [0, 1] with 101 points: 1/3 + h²/6
        let xs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((nu_from_lattice(&xs, &v).unwrap() - (1.0 / 3.0 + 1e-4 / 6.0)).abs() < 1e-12);
        assert!(nu_from_lattice(&[0.0], &[1.0]).is_err());
        assert!(ParamDomain::new(ParamId::k(0), 0.1, 0.2, 1).is_err());
        assert!(ParamDomain::new(ParamId::k(0), 0.2, 0.2, 5).is_err());
    }

    #[test]
    fn crossed_oracles() {
        let ps: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        // ∂²(p q)/∂p∂q = 1 everywhere
        let ones = vec![1.0; ps.len() * ps.len()];
        assert!((crossed_integral(&ps, &ps, &ones).unwrap() - 1.0).abs() < 1e-14);
        // separable model f(p) + g(q): zero mixed partial
        let zeros = vec![0.0; ps.len() * ps.len()];
        assert_eq!(crossed_integral(&ps, &ps, &zeros).unwrap(), 0.0);
        assert!(crossed_integral(&ps, &ps, &ones[1..]).is_err());
    }

    #[test]
    fn gamma_sums_to_one() {
        let g = GlobalMetrics::from_nu(
            vec![ParamId::k(0), ParamId::c(0), ParamId::k(1)],
            vec![3.0, 1e-3, 0.7],
            15,
        )
        .unwrap();
        assert!((g.gamma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(g.gamma.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn ranking_ties_and_threshold() {
        let ps = [ParamId::c(1), ParamId::k(1), ParamId::k(0), ParamId::c(0)];
        let r = rank_parameters(&ps, &[0.5, 0.5, 0.01, 0.2], DEFAULT_THRESHOLD).unwrap();
        let order: Vec<String> = r.iter().map(|e| e.param.to_string()).collect();
        assert_eq!(order, vec!["k2", "c2", "c1", "k1"]);
        assert_eq!(
            r.iter().map(|e| e.significant).collect::<Vec<_>>(),
            vec![true, true, true, false]
        );
        let one = rank_parameters(&[ParamId::k(0)], &[1e-9], DEFAULT_THRESHOLD).unwrap();
        assert!(one[0].significant);
    }

    #[test]
    fn by_layer_normalization() {
        let ps = [ParamId::k(0), ParamId::c(0), ParamId::k(1), ParamId::c(1)];
        let v = normalize_by_layer(&ps, &[3.0, 1.0, 1.0, 4.0]).unwrap();
        assert_eq!(v, vec![0.75, 0.25, 0.2, 0.8]);
    }

    #[test]
    fn mirrored_layers_share_gamma() {
        let p = DimensionlessProblem {
            layers: vec![
                DimLayer {
                    k: 0.5,
                    c: 1.0,
                    start: 0.0,
                    end: 0.5,
                },
                DimLayer {
                    k: 0.5,
                    c: 1.0,
                    start: 0.5,
                    end: 1.0,
                },
            ],
            boundary: BoundarySignals {
                u_left: Signal::function(|t| (3.0 * t).sin()),
                u_right: Signal::function(|t| (3.0 * t).sin()),
                g_left: Signal::Constant(0.0),
            },
            initial: InitialProfile::Tabulated(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]),
            ..uniform_problem(1.0, 1.0, 0.1, 0.7, 0.7)
        };
        let g = Grid::new(0.05, 1e-3, 2.0).unwrap();
        let doms = [
            ParamDomain::relative(&p, ParamId::k(0), 0.5, 3).unwrap(),
            ParamDomain::relative(&p, ParamId::k(1), 0.5, 3).unwrap(),
        ];
        let m = global_metric(
            &p,
            g,
            &doms,
            &OutputKind::Temperature { stride: 10 },
            EtaReading::SquareInside,
        )
        .unwrap();
        assert!((m.gamma[0] - m.gamma[1]).abs() < 1e-6, "{:?}", m.gamma);
        assert_eq!(m.marches, 6);
    }

    #[test]
    fn loads_eta_stable_under_time_refinement() {
        let p = validation_case();
        let params = [ParamId::k(1), ParamId::c(1)];
        let kind = OutputKind::Loads {
            intervals: vec![(0.0, 5.0)],
        };
        let eta = |dt| {
            local_metric(
                &p,
                Grid::new(0.01, dt, 5.0).unwrap(),
                &params,
                &kind,
                EtaReading::SquareInside,
            )
            .unwrap()
        };
        let (a, b) = (eta(1e-3), eta(5e-4));
        assert!(((a[0] - b[0]) / a[0]).abs() < 1e-3, "{a:?} {b:?}");
    }

    #[test]
    fn report_rows_and_csv() {
        let ps = vec![ParamId::k(1), ParamId::c(1)];
        let g = GlobalMetrics::from_nu(ps.clone(), vec![0.3, 0.1], 40).unwrap();
        let mut r = MetricReport::new(
            OutputKind::Flux,
            EtaReading::SquareInside,
            ps,
            Some(vec![0.8, 0.2]),
            Some(g),
            0.05,
        )
        .unwrap();
        r.crossed.push(CrossedEntry {
            p: ParamId::k(1),
            q: ParamId::c(1),
            value: 0.01,
        });
        assert_eq!(r.marches, 41);
        assert_eq!(r.ranking[0].param, ParamId::k(1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        r.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("param,metric,value\n"));
        assert!(text.contains("k2c2,nu_crossed,"));
        let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}

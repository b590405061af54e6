//! Validation battery on the two-layer benchmark: solver and sensitivity
//! accuracy against the reference oracle, finite-difference orderings, the
//! Taylor trust region, and the metric and baseline tables on the loads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::fast::DEFAULT_HARMONICS;
use crate::baselines::{
    rbd_fast, sobol_indices, src_srrc, DesignKind, SaltelliDesign, SampleDesign,
};
use crate::error::{invalid, Result};
use crate::fd::{fd_sensitivity, FdKind, FdScheme};
use crate::grid::Grid;
use crate::metrics::{global_metric, local_metric, EtaReading, ParamDomain};
use crate::oracle::{
    eps2, reference_second_sensitivity, reference_sensitivity, reference_solve, OracleConfig,
    REFERENCE_STEP, REFERENCE_STEP_SECOND,
};
use crate::sensitivity::{propagate, Target};
use crate::solver::{simulate, solve, FieldHistory, Recording};
use crate::taylor::{lattice_errors, OutputKind, TaylorModel};
use crate::wall::{DimensionlessProblem, ParamId};

/// One line of the pass table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{}", (v * 1e6).round() / 1e6)
    } else {
        format!("{v:.4e}")
    }
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("<= {}", short(bound)),
            pass: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!(">= {}", short(bound)),
            pass: value >= bound,
        }
    }

    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("{} ± {}", short(target), short(tol)),
            pass: (value - target).abs() <= tol,
        }
    }

    pub fn holds(name: &str, value: f64, target: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            target: target.into(),
            pass,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {:<34} {:>12.5e}  target {}",
            self.name, self.value, self.target
        )
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

fn with_data(like: &FieldHistory, data: Vec<f64>) -> FieldHistory {
    FieldHistory {
        data,
        ..like.clone()
    }
}

/// Solver field against the oracle, per node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverAccuracy {
    pub x: Vec<f64>,
    pub eps2: Vec<f64>,
    pub self_convergence: Option<f64>,
    pub checks: Vec<Check>,
}

pub fn solver_accuracy(problem: &DimensionlessProblem, grid: Grid) -> Result<SolverAccuracy> {
    let u = solve(problem, grid)?;
    let r = reference_solve(problem, grid, OracleConfig::default())?;
    let e = eps2(&u, &r.field)?;
    let checks = vec![Check::at_most("solver eps2 max over x", max(&e), 5e-3)];
    Ok(SolverAccuracy {
        x: grid.nodes(),
        eps2: e,
        self_convergence: r.self_convergence,
        checks,
    })
}

/// Sensitivities of the field to one parameter against the oracle reference,
/// alongside finite differences of the solver itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityFidelity {
    pub param: ParamId,
    pub x: Vec<f64>,
    pub eps2_first: Vec<f64>,
    pub eps2_second: Vec<f64>,
    pub eps2_central: Vec<f64>,
    pub eps2_forward: Vec<f64>,
    pub central_step: f64,
    pub forward_step: f64,
    pub checks: Vec<Check>,
}

pub fn sensitivity_fidelity(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: ParamId,
) -> Result<SensitivityFidelity> {
    let (central_step, forward_step) = (1e-3, 1e-2);
    let run = propagate(problem, grid, &[Target::Second(p, p)], Recording::ALL)?;
    let cfg = OracleConfig::default();
    let (r1, r2) = rayon::join(
        || reference_sensitivity(problem, grid, p, cfg, REFERENCE_STEP),
        || reference_second_sensitivity(problem, grid, p, p, cfg, REFERENCE_STEP_SECOND),
    );
    let (r1, r2) = (r1?, r2?);
    let eps2_first = eps2(run.field(Target::First(p))?, &r1)?;
    let eps2_second = eps2(run.field(Target::Second(p, p))?, &r2)?;

    let v = problem.param_value(p)?;
    let model = |q: &[f64]| Ok(solve(&problem.with_param(p, q[0])?, grid)?.data);
    let bounds = [(0.0, f64::INFINITY)];
    let central = fd_sensitivity(
        model,
        &[v],
        0,
        None,
        FdScheme::with_step(FdKind::Central, central_step),
        &bounds,
    )?;
    let forward = fd_sensitivity(
        model,
        &[v],
        0,
        None,
        FdScheme::with_step(FdKind::Forward, forward_step),
        &bounds,
    )?;
    let eps2_central = eps2(&with_data(&r1, central), &r1)?;
    let eps2_forward = eps2(&with_data(&r1, forward), &r1)?;

    let (m1, mc, mf) = (max(&eps2_first), max(&eps2_central), max(&eps2_forward));
    let decades = (mc / m1).log10().abs();
    let checks = vec![
        Check::at_most(&format!("X_{p} eps2 max over x"), m1, 1e-2),
        Check::at_most(
            &format!("X_{p}{p} eps2 max over x"),
            max(&eps2_second),
            1e-1,
        ),
        Check::at_most("central FD vs continuous, decades", decades, 1.0),
        Check::holds(
            "forward FD eps2 max",
            mf,
            &format!("> central {mc:.3e}"),
            mf > mc,
        ),
    ];
    Ok(SensitivityFidelity {
        param: p,
        x: grid.nodes(),
        eps2_first,
        eps2_second,
        eps2_central,
        eps2_forward,
        central_step,
        forward_step,
        checks,
    })
}

/// Surrogate error over a multiplicative lattice around the anchor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorTrust {
    pub params: Vec<ParamId>,
    pub anchor: Vec<f64>,
    /// Multiples of the anchor on each axis.
    pub factors: Vec<f64>,
    /// ε_tay per lattice point, first axis outermost.
    pub errors: Vec<f64>,
    pub inside_max: f64,
    /// Log-log slope of ε_tay along each axis near the anchor.
    pub slopes: Vec<f64>,
    pub checks: Vec<Check>,
}

/// Offsets used for the remainder slope.
pub const SLOPE_OFFSETS: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// 21×21 lattice over ±90 % of the two anchors; trust box
/// [0.2, 1.9] × [0.35, 1.9] of the anchors.
pub fn taylor_trust(
    problem: &DimensionlessProblem,
    grid: Grid,
    params: [ParamId; 2],
    stride: usize,
) -> Result<TaylorTrust> {
    let kind = OutputKind::Temperature { stride };
    let model = TaylorModel::build(problem, grid, &params, 2, kind)?;
    let anchor = model.anchor.clone();
    let factors: Vec<f64> = (0..21).map(|i| 0.1 + 0.09 * i as f64).collect();
    let (a0, b0) = (anchor[0], anchor[1]);
    let points: Vec<Vec<f64>> = factors
        .iter()
        .flat_map(|&a| factors.iter().map(move |b| vec![a0 * a, b0 * b]))
        .collect();

    let errors = lattice_errors(&model, problem, grid, &points)?;
    let tol = 1e-9;
    let mut inside_max: f64 = 0.0;
    for (i, a) in factors.iter().enumerate() {
        for (j, b) in factors.iter().enumerate() {
            if *a >= 0.2 - tol && *a <= 1.9 + tol && *b >= 0.35 - tol && *b <= 1.9 + tol {
                inside_max = inside_max.max(errors[i * factors.len() + j]);
            }
        }
    }
    let slopes = (0..2)
        .map(|axis| {
            let pts: Vec<Vec<f64>> = SLOPE_OFFSETS
                .iter()
                .map(|d| {
                    let mut pt = anchor.clone();
                    pt[axis] *= 1.0 + d;
                    pt
                })
                .collect();
            Ok(loglog_slope(
                &SLOPE_OFFSETS,
                &lattice_errors(&model, problem, grid, &pts)?,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut checks = vec![Check::at_most(
        "Taylor eps_tay max in trust box",
        inside_max,
        1e-2,
    )];
    for (p, s) in params.iter().zip(&slopes) {
        checks.push(Check::within(
            &format!("Taylor remainder slope along {p}"),
            *s,
            3.0,
            0.3,
        ));
    }
    Ok(TaylorTrust {
        params: params.to_vec(),
        anchor,
        factors,
        errors,
        inside_max,
        slopes,
        checks,
    })
}

/// Sample sizes and replicates of the loads battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub seed: u64,
    pub replicates: usize,
    pub domain_frac: f64,
    pub n_src: usize,
    pub n_sobol: usize,
    pub n_fast: usize,
    pub lattice_small: usize,
    pub lattice_large: usize,
    pub reading: EtaReading,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            seed: 2016,
            replicates: 5,
            domain_frac: 0.9,
            n_src: 150,
            n_sobol: 1024,
            n_fast: 500,
            lattice_small: 5,
            lattice_large: 20,
            reading: EtaReading::default(),
        }
    }
}

/// Loads of `problem` over `interval` as a function of `params`.
pub fn loads_model<'a>(
    problem: &'a DimensionlessProblem,
    grid: Grid,
    params: &'a [ParamId],
    interval: (f64, f64),
) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |v: &[f64]| {
        simulate(&problem.with_params(params, v)?, grid, Recording::NONE)?
            .loads(interval.0, interval.1)
    }
}

fn average(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n)
        .collect()
}

/// Metric and baseline results on the loads over the whole horizon of `grid`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableBattery {
    pub params: Vec<ParamId>,
    pub options: TableOptions,
    pub eta: Vec<f64>,
    pub nu_small: Vec<f64>,
    pub gamma_small: Vec<f64>,
    pub nu_large: Vec<f64>,
    pub gamma_large: Vec<f64>,
    /// Replicate-averaged normalized SRC.
    pub src: Vec<f64>,
    pub s1: Vec<f64>,
    pub s_tot: Vec<f64>,
    pub d_tot: Vec<f64>,
    pub fast: Vec<f64>,
    pub metric_marches: usize,
    pub sobol_evaluations: usize,
    pub checks: Vec<Check>,
}

/// Tables of the benchmark: η and γ, the ν/π² bound, SRC, Sobol and
/// RBD-FAST on the loads, and the evaluation counts. Expects two parameters.
pub fn table_battery(
    problem: &DimensionlessProblem,
    grid: Grid,
    params: [ParamId; 2],
    opts: TableOptions,
) -> Result<TableBattery> {
    if opts.replicates == 0 {
        return invalid("at least one replicate is needed");
    }
    let interval = (0.0, grid.t_max());
    let kind = OutputKind::Loads {
        intervals: vec![interval],
    };
    let eta = local_metric(problem, grid, &params, &kind, opts.reading)?;
    let domains = |n: usize| -> Result<Vec<ParamDomain>> {
        params
            .iter()
            .map(|&p| ParamDomain::relative(problem, p, opts.domain_frac, n))
            .collect()
    };
    let small = global_metric(
        problem,
        grid,
        &domains(opts.lattice_small)?,
        &kind,
        opts.reading,
    )?;
    let large = global_metric(
        problem,
        grid,
        &domains(opts.lattice_large)?,
        &kind,
        opts.reading,
    )?;
    let boxes: Vec<(f64, f64)> = domains(2)?.iter().map(|d| (d.lo, d.hi)).collect();

    let model = loads_model(problem, grid, &params, interval);
    let mut src = Vec::new();
    let mut s1 = Vec::new();
    let mut s_tot = Vec::new();
    let mut d_tot = Vec::new();
    let mut fast = Vec::new();
    let mut sobol_evaluations = 0;
    for r in 0..opts.replicates as u64 {
        let seed = opts.seed + r;
        let x = SampleDesign::new(DesignKind::LatinHypercube, opts.n_src, boxes.clone(), seed)?
            .points()?;
        let y: Vec<f64> = x.par_iter().map(|v| model(v)).collect::<Result<_>>()?;
        src.push(src_srrc(&x, &y)?.src_normalized);
        let design = SaltelliDesign::new(DesignKind::LatinHypercube, opts.n_sobol, &boxes, seed)?;
        let v = sobol_indices(&model, &design)?;
        sobol_evaluations = v.evaluations;
        s1.push(v.s1);
        s_tot.push(v.s_tot);
        d_tot.push(v.d_tot);
        fast.push(rbd_fast(&model, &boxes, opts.n_fast, DEFAULT_HARMONICS, seed)?.s1);
    }
    let (src, s1, s_tot, d_tot, fast) = (
        average(&src),
        average(&s1),
        average(&s_tot),
        average(&d_tot),
        average(&fast),
    );

    let mut checks = Vec::new();
    for (i, p) in params.iter().enumerate() {
        let e = [0.86, 0.14][i];
        checks.push(Check::within(&format!("eta {p}"), eta[i], e, 0.02));
    }
    for (i, p) in params.iter().enumerate() {
        checks.push(Check::within(
            &format!("gamma N={} {p}", opts.lattice_large),
            large.gamma[i],
            [0.77, 0.23][i],
            0.03,
        ));
    }
    for (i, p) in params.iter().enumerate() {
        checks.push(Check::within(
            &format!("gamma N={} {p}", opts.lattice_small),
            small.gamma[i],
            [0.80, 0.20][i],
            0.03,
        ));
    }
    for (name, g) in [("small", &small.gamma), ("large", &large.gamma)] {
        let s: f64 = g.iter().sum();
        checks.push(Check::within(
            &format!("sum gamma ({name} lattice)"),
            s,
            1.0,
            1e-10,
        ));
    }
    for (i, p) in params.iter().enumerate() {
        let bound = large.nu[i] / std::f64::consts::PI.powi(2);
        checks.push(Check::at_most(
            &format!("Sobol D_tot {p} vs nu/pi^2"),
            d_tot[i],
            bound,
        ));
    }
    let tables: [(&str, &Vec<f64>, [f64; 2]); 4] = [
        ("SRC normalized", &src, [0.69, 0.31]),
        ("Sobol S1", &s1, [0.66, 0.33]),
        ("Sobol Stot", &s_tot, [0.67, 0.34]),
        ("RBD-FAST S1", &fast, [0.66, 0.32]),
    ];
    for (name, v, t) in tables {
        for (i, p) in params.iter().enumerate() {
            checks.push(Check::within(&format!("{name} {p}"), v[i], t[i], 0.05));
        }
    }
    let ratio = sobol_evaluations as f64 / large.marches as f64;
    checks.push(Check::at_least(
        "Sobol / metric evaluation ratio",
        ratio,
        50.0,
    ));

    Ok(TableBattery {
        params: params.to_vec(),
        options: opts,
        eta,
        nu_small: small.nu,
        gamma_small: small.gamma,
        nu_large: large.nu,
        gamma_large: large.gamma,
        src,
        s1,
        s_tot,
        d_tot,
        fast,
        metric_marches: large.marches,
        sobol_evaluations,
        checks,
    })
}

//! One handler per task. Each writes its artifacts and returns the results
//! that go into the summary, plus any pass/fail checks.

use rayon::prelude::*;
use serde_json::{json, Value};
use wallsens::baselines::{
    rbd_fast, sobol_indices, src_srrc, write_evaluations, SaltelliDesign, SampleDesign,
};
use wallsens::cases::{CaseName, MASONRY_LATTICE};
use wallsens::envelope::absorbed_fraction;
use wallsens::fd::{evaluation_count, FdKind, FdScheme, FdSession};
use wallsens::metrics::{
    crossed_measure, global_metric, local_integrals, normalize, normalize_by_layer, CrossedEntry,
    MetricReport, ParamDomain,
};
use wallsens::oracle::eps2;
use wallsens::taylor::{direct_output, lattice_errors, OutputKind, TaylorModel};
use wallsens::validation::{
    sensitivity_fidelity, solver_accuracy, table_battery, taylor_trust, Check, TableOptions,
};
use wallsens::weather::WeatherSeries;
use wallsens::{
    propagate, simulate, DimensionlessProblem, FieldHistory, Grid, ParamId, Recording, Target,
};

use crate::config::{OutputName, RunConfig, Task};
use crate::output::Artifacts;
use crate::problem;
use crate::CliError;

pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn plain(results: Value) -> Self {
        Self {
            results,
            checks: Vec::new(),
        }
    }
}

fn output_kind(cfg: &RunConfig) -> OutputKind {
    match cfg.output.kind {
        OutputName::Temperature => OutputKind::Temperature {
            stride: cfg.output.stride,
        },
        OutputName::Flux => OutputKind::Flux,
        OutputName::Loads => OutputKind::Loads {
            intervals: cfg.output.intervals.clone(),
        },
    }
}

fn every(values: &[f64], stride: usize) -> Vec<f64> {
    values.iter().step_by(stride).copied().collect()
}

fn domains(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    params: &[ParamId],
) -> Result<Vec<ParamDomain>, CliError> {
    params
        .iter()
        .map(|&p| {
            let n = match (cfg.lattice_n, cfg.case) {
                (Some(n), _) => n,
                (None, Some(CaseName::BayonneSynthetic)) => {
                    MASONRY_LATTICE.get(p.layer).copied().unwrap_or(5)
                }
                (None, _) => 5,
            };
            Ok(ParamDomain::relative(problem, p, cfg.domain_frac(), n)?)
        })
        .collect()
}

pub fn run(
    cfg: &RunConfig,
    weather: Option<&WeatherSeries>,
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    if cfg.task == Task::Envelope {
        let w = weather.expect("weather loaded for the envelope");
        return envelope(cfg, w, art);
    }
    let problem = problem::wall_problem(cfg, weather)?;
    let grid = problem::grid(cfg)?;
    let params = cfg.param_ids();
    for &p in &params {
        problem.check_param(p)?;
    }
    match cfg.task {
        Task::Simulate => simulate_task(cfg, &problem, grid, art),
        Task::Sens => sens(cfg, &problem, grid, &params, art),
        Task::FdSens => fd_sens(cfg, &problem, grid, &params, art),
        Task::Taylor => taylor(cfg, &problem, grid, &params, art),
        Task::Metrics => metrics(cfg, &problem, grid, &params, art),
        Task::Src | Task::Sobol | Task::RbdFast => sampling(cfg, &problem, grid, &params, art),
        Task::Validate => validate(cfg, &problem, grid, art),
        Task::Envelope => unreachable!(),
    }
}

fn loads_rows(cfg: &RunConfig, problem: &DimensionlessProblem, values: &[f64]) -> Vec<Value> {
    cfg.output
        .intervals
        .iter()
        .zip(values)
        .map(|(&(a, b), &e)| json!({ "t_start": a, "t_end": b, "loads": e, "loads_j_m2": e * problem.refs.loads_ref() }))
        .collect()
}

fn simulate_task(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let stride = cfg.output.stride;
    let sim = simulate(problem, grid, Recording::every(stride))?;
    let field = sim.field.as_ref().expect("recorded");
    art.field("temperature.csv", "u", field)?;
    art.series(
        "flux.csv",
        grid.dt * stride as f64,
        &every(&sim.flux.values, stride),
    )?;
    let loads: Vec<f64> = cfg
        .output
        .intervals
        .iter()
        .map(|&(a, b)| sim.loads(a, b))
        .collect::<wallsens::Result<_>>()?;
    art.csv(
        "loads.csv",
        &["t_start", "t_end", "loads", "loads_j_m2"],
        cfg.output.intervals.iter().zip(&loads).map(|(&(a, b), e)| {
            vec![
                a.to_string(),
                b.to_string(),
                format!("{e:e}"),
                format!("{:e}", e * problem.refs.loads_ref()),
            ]
        }),
    )?;
    let (lo, hi) = field
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    Ok(Outcome::plain(json!({
        "nodes": grid.nx,
        "steps": grid.nt,
        "u_min": lo,
        "u_max": hi,
        "loads": loads_rows(cfg, problem, &loads),
    })))
}

fn sens(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let stride = cfg.output.stride;
    let targets: Vec<Target> = params.iter().map(|&p| Target::First(p)).collect();
    let run = propagate(problem, grid, &targets, Recording::every(stride))?;
    let mut loads = serde_json::Map::new();
    for (&p, &t) in params.iter().zip(&targets) {
        art.field(&format!("sens_{p}.csv"), "value", run.field(t)?)?;
        let flux = run.flux_sensitivity(t)?;
        art.series(
            &format!("sens_flux_{p}.csv"),
            grid.dt * stride as f64,
            &every(&flux.values, stride),
        )?;
        let d: Vec<f64> = cfg
            .output
            .intervals
            .iter()
            .map(|&(a, b)| run.loads_sensitivity(t, a, b))
            .collect::<wallsens::Result<_>>()?;
        loads.insert(p.to_string(), json!(d));
    }
    Ok(Outcome::plain(
        json!({ "marches": 1, "loads_sensitivity": loads, "intervals": cfg.output.intervals }),
    ))
}

fn fd_sens(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let kind = output_kind(cfg);
    let scheme = FdScheme::with_step(cfg.fd.scheme, cfg.fd.step);
    let anchor: Vec<f64> = params
        .iter()
        .map(|&p| problem.param_value(p))
        .collect::<wallsens::Result<_>>()?;
    let bounds = vec![(0.0, f64::INFINITY); params.len()];
    let session =
        FdSession::new(|v: &[f64]| direct_output(&problem.with_params(params, v)?, grid, &kind));

    let requests: Vec<(usize, Option<usize>, Target)> = match cfg.fd.scheme {
        FdKind::MixedCentral => {
            if params.len() != 2 {
                return Err(CliError::Config(
                    "the mixed scheme needs exactly two parameters".into(),
                ));
            }
            vec![(0, Some(1), Target::Second(params[0], params[1]))]
        }
        k if k.order() == 2 => (0..params.len())
            .map(|i| (i, None, Target::Second(params[i], params[i])))
            .collect(),
        _ => (0..params.len())
            .map(|i| (i, None, Target::First(params[i])))
            .collect(),
    };
    let order = if requests.iter().any(|r| matches!(r.2, Target::Second(..))) {
        2
    } else {
        1
    };
    let model = TaylorModel::build(problem, grid, params, order, kind.clone())?;

    let mut rows = Vec::new();
    let mut eps_x = Vec::new();
    let mut summary = Vec::new();
    for &(i, j, target) in &requests {
        let fd = session.derivative(&anchor, i, j, scheme, &bounds)?;
        let cont = match target {
            Target::First(_) => &model.gradient[i],
            Target::Second(..) => &model.hessian[model.hessian_index(i, j.unwrap_or(i))],
        };
        let rms = wallsens::oracle::eps2_series(&fd, cont)?;
        summary.push(json!({ "target": target.to_string(), "eps2_vs_continuous": rms }));
        if let OutputKind::Temperature { stride } = kind {
            let like = FieldHistory {
                nx: grid.nx,
                stride,
                dt: grid.dt,
                data: Vec::new(),
            };
            let e = eps2(
                &FieldHistory {
                    data: fd.clone(),
                    ..like.clone()
                },
                &FieldHistory {
                    data: cont.clone(),
                    ..like
                },
            )?;
            eps_x.extend(e.iter().enumerate().map(|(n, v)| {
                vec![
                    format!("{:e}", grid.x(n)),
                    target.to_string(),
                    format!("{v:e}"),
                ]
            }));
        }
        rows.extend(fd.iter().zip(cont).enumerate().map(|(n, (a, b))| {
            vec![
                target.to_string(),
                n.to_string(),
                format!("{a:e}"),
                format!("{b:e}"),
            ]
        }));
    }
    art.csv(
        "fd_sens.csv",
        &["target", "index", "fd", "continuous"],
        rows,
    )?;
    if !eps_x.is_empty() {
        art.csv("fd_eps2_vs_x.csv", &["x_star", "target", "eps2"], eps_x)?;
    }
    Ok(Outcome::plain(json!({
        "scheme": cfg.fd.scheme,
        "step": cfg.fd.step,
        "evaluations": session.evaluations(),
        "evaluations_full_set": evaluation_count(cfg.fd.scheme, params.len()),
        "targets": summary,
    })))
}

fn taylor(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let model = TaylorModel::build(problem, grid, params, cfg.taylor.order, output_kind(cfg))?;
    art.text("taylor_model.json", &(model.to_json()? + "\n"))?;
    let mut results = json!({ "order": model.order, "anchor": model.anchor, "trust": model.trust });
    if let (Some(_), true) = (cfg.lattice_n, params.len() <= 2) {
        let doms = domains(cfg, problem, params)?;
        let axes: Vec<Vec<f64>> = doms.iter().map(ParamDomain::lattice).collect();
        let points: Vec<Vec<f64>> = match axes.as_slice() {
            [a] => a.iter().map(|v| vec![*v]).collect(),
            [a, b] => a
                .iter()
                .flat_map(|x| b.iter().map(move |y| vec![*x, *y]))
                .collect(),
            _ => unreachable!(),
        };
        let errors = lattice_errors(&model, problem, grid, &points)?;
        let header: Vec<String> = (1..=params.len())
            .map(|i| format!("x{i}"))
            .chain(["eps_tay".into()])
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        art.csv(
            "taylor_lattice.csv",
            &header,
            points
                .iter()
                .zip(&errors)
                .map(|(p, e)| p.iter().chain([e]).map(|v| format!("{v:e}")).collect()),
        )?;
        results["lattice_max_eps_tay"] = json!(errors.iter().cloned().fold(0.0, f64::max));
        results["lattice_points"] = json!(points.len());
    }
    Ok(Outcome::plain(results))
}

fn metrics(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let kind = output_kind(cfg);
    let reading = cfg.metrics.reading;
    let raw = local_integrals(problem, grid, params, &kind, reading)?;
    let eta = normalize(&raw)?;
    let by_layer = normalize_by_layer(params, &raw)?;
    let global = match (cfg.lattice_n, cfg.case) {
        (None, Some(CaseName::Validation)) | (None, None) => None,
        _ => Some(global_metric(
            problem,
            grid,
            &domains(cfg, problem, params)?,
            &kind,
            reading,
        )?),
    };
    let mut report = MetricReport::new(
        kind.clone(),
        reading,
        params.to_vec(),
        Some(eta),
        global,
        cfg.metrics.threshold,
    )?;
    if cfg.metrics.crossed {
        let interval = match &kind {
            OutputKind::Loads { intervals } if intervals.len() == 1 => intervals[0],
            _ => {
                return Err(CliError::Config(
                    "the crossed measure needs loads over a single interval".into(),
                ))
            }
        };
        let doms = domains(cfg, problem, params)?;
        for i in 0..params.len() {
            for j in i + 1..params.len() {
                let value = crossed_measure(problem, grid, &doms[i], &doms[j], interval)?;
                report.marches += doms[i].n * doms[j].n;
                report.crossed.push(CrossedEntry {
                    p: params[i],
                    q: params[j],
                    value,
                });
            }
        }
    }
    let mut rows = report.rows();
    rows.extend(
        params
            .iter()
            .zip(&by_layer)
            .map(|(p, v)| (p.to_string(), "eta_layer".to_string(), *v)),
    );
    art.table("metrics.csv", &rows)?;
    art.json("metrics.json", &report)?;
    Ok(Outcome::plain(json!({
        "marches": report.marches,
        "ranking": report.ranking.iter().map(|r| json!({ "param": r.param.to_string(), "value": r.value, "significant": r.significant })).collect::<Vec<_>>(),
    })))
}

fn sampling(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    grid: Grid,
    params: &[ParamId],
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let interval = match cfg.output.kind {
        OutputName::Loads => cfg.output.intervals[0],
        _ => {
            return Err(CliError::Config(
                "sampling estimators run on the loads output".into(),
            ))
        }
    };
    let n = cfg.n_samples()?;
    let seed = cfg.seed.expect("checked at resolve");
    let boxes: Vec<(f64, f64)> = domains(cfg, problem, params)?
        .iter()
        .map(|d| (d.lo, d.hi))
        .collect();
    let model = wallsens::validation::loads_model(problem, grid, params, interval);
    let names: Vec<String> = params.iter().map(ToString::to_string).collect();
    let mut rows = Vec::new();
    let results = match cfg.task {
        Task::Src => {
            let x = SampleDesign::new(cfg.sampling.design, n, boxes, seed)?.points()?;
            let y: Vec<f64> = x
                .par_iter()
                .map(|v| model(v))
                .collect::<wallsens::Result<_>>()?;
            write_evaluations(&art_path(art, "evaluations.csv"), &names, &x, &y)?;
            let r = src_srrc(&x, &y)?;
            for (i, p) in names.iter().enumerate() {
                for (m, v) in [
                    ("src", &r.src),
                    ("srrc", &r.srrc),
                    ("src_normalized", &r.src_normalized),
                    ("srrc_normalized", &r.srrc_normalized),
                ] {
                    rows.push((p.clone(), m.to_string(), v[i]));
                }
            }
            art.table("src.csv", &rows)?;
            json!({ "evaluations": n, "r2": r.r2, "rank_r2": r.rank_r2 })
        }
        Task::Sobol => {
            let design = SaltelliDesign::new(cfg.sampling.design, n, &boxes, seed)?;
            let r = sobol_indices(&model, &design)?;
            for (i, p) in names.iter().enumerate() {
                for (m, v) in [
                    ("s1", &r.s1),
                    ("s_tot", &r.s_tot),
                    ("s1_clamped", &r.s1_clamped),
                    ("s_tot_clamped", &r.s_tot_clamped),
                    ("d_tot", &r.d_tot),
                ] {
                    rows.push((p.clone(), m.to_string(), v[i]));
                }
            }
            art.table("sobol.csv", &rows)?;
            art.json("sobol.json", &r)?;
            json!({ "evaluations": r.evaluations, "variance": r.variance })
        }
        Task::RbdFast => {
            let r = rbd_fast(&model, &boxes, n, cfg.sampling.harmonics, seed)?;
            for (i, p) in names.iter().enumerate() {
                rows.push((p.clone(), "s1".to_string(), r.s1[i]));
                rows.push((p.clone(), "s1_raw".to_string(), r.s1_raw[i]));
            }
            art.table("fast.csv", &rows)?;
            json!({ "evaluations": r.n_samples, "harmonics": r.harmonics })
        }
        _ => unreachable!(),
    };
    Ok(Outcome::plain(results))
}

fn art_path(art: &mut Artifacts, name: &str) -> std::path::PathBuf {
    art.files.push(name.to_string());
    art.dir.join(name)
}

fn validate(
    cfg: &RunConfig,
    problem: &DimensionlessProblem,
    loads_grid: Grid,
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let field_grid = Grid::new(cfg.grid.dx, cfg.grid.dt, 30.0)?;
    let solver = solver_accuracy(problem, field_grid)?;
    let fidelity = sensitivity_fidelity(problem, field_grid, ParamId::k(0))?;
    let trust = taylor_trust(problem, field_grid, [ParamId::k(1), ParamId::c(1)], 100)?;
    let defaults = TableOptions::default();
    let opts = TableOptions {
        seed: cfg.seed.expect("checked at resolve"),
        replicates: cfg.sampling.replicates,
        domain_frac: cfg.domain_frac(),
        n_sobol: cfg.n_samples.unwrap_or(defaults.n_sobol),
        lattice_large: cfg.lattice_n.unwrap_or(defaults.lattice_large),
        reading: cfg.metrics.reading,
        ..defaults
    };
    let tables = table_battery(problem, loads_grid, [ParamId::k(1), ParamId::c(1)], opts)?;

    art.csv(
        "fig7_eps2_vs_x.csv",
        &[
            "x_star",
            "eps2_u",
            "eps2_continuous",
            "eps2_second",
            "eps2_central",
            "eps2_forward",
        ],
        (0..solver.x.len()).map(|j| {
            [
                solver.x[j],
                solver.eps2[j],
                fidelity.eps2_first[j],
                fidelity.eps2_second[j],
                fidelity.eps2_central[j],
                fidelity.eps2_forward[j],
            ]
            .iter()
            .map(|v| format!("{v:e}"))
            .collect()
        }),
    )?;
    let nf = trust.factors.len();
    art.csv(
        "taylor_lattice.csv",
        &["k_factor", "c_factor", "eps_tay"],
        (0..nf * nf).map(|n| {
            vec![
                format!("{}", trust.factors[n / nf]),
                format!("{}", trust.factors[n % nf]),
                format!("{:e}", trust.errors[n]),
            ]
        }),
    )?;
    let checks: Vec<Check> = [
        &solver.checks,
        &fidelity.checks,
        &trust.checks,
        &tables.checks,
    ]
    .into_iter()
    .flatten()
    .cloned()
    .collect();
    art.csv(
        "checks.csv",
        &["check", "value", "target", "pass"],
        checks.iter().map(|c| {
            vec![
                c.name.clone(),
                format!("{:e}", c.value),
                c.target.clone(),
                c.pass.to_string(),
            ]
        }),
    )?;
    art.json(
        "validation.json",
        &json!({ "solver": solver, "sensitivity": fidelity, "taylor": trust, "tables": tables }),
    )?;
    for c in &checks {
        println!("{c}");
    }
    Ok(Outcome {
        results: json!({ "checks": checks.len(), "passed": checks.iter().filter(|c| c.pass).count() }),
        checks,
    })
}

fn envelope(
    cfg: &RunConfig,
    weather: &WeatherSeries,
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let env = problem::envelope(cfg, weather)?;
    let params = cfg.param_ids();
    let intervals = &cfg.output.intervals;
    let loads = env.loads(intervals)?;
    art.csv(
        "envelope_loads.csv",
        &["interval", "t_start", "t_end", "e_glass", "e_wall", "e_hat"],
        intervals.iter().enumerate().map(|(i, &(a, b))| {
            vec![
                (i + 1).to_string(),
                a.to_string(),
                b.to_string(),
                format!("{:e}", loads.e_glass[i]),
                format!("{:e}", loads.e_wall[i]),
                format!("{:e}", loads.e_hat[i]),
            ]
        }),
    )?;
    let sens: Vec<Vec<f64>> = params
        .par_iter()
        .map(|&p| env.loads_sensitivity(p, intervals))
        .collect::<wallsens::Result<_>>()?;
    art.csv(
        "envelope_sensitivity.csv",
        &["interval", "param", "value"],
        (0..intervals.len()).flat_map(|i| {
            params
                .iter()
                .zip(&sens)
                .map(move |(p, s)| vec![(i + 1).to_string(), p.to_string(), format!("{:e}", s[i])])
        }),
    )?;
    let mut results = json!({
        "absorbed_fraction": absorbed_fraction(env.glass.optics().map_or(0.0, |o| o.rho), env.glass.optics().map_or(0.0, |o| o.tau))?,
        "e_hat_total_j_m2": loads.e_hat.iter().sum::<f64>(),
        "marches": 2 + params.len(),
    });
    if let Some(n) = cfg.lattice_n {
        let doms: Vec<ParamDomain> = params
            .iter()
            .map(|&p| {
                let v = env.param_value(p)?;
                ParamDomain::new(
                    p,
                    v * (1.0 - cfg.domain_frac()),
                    v * (1.0 + cfg.domain_frac()),
                    n,
                )
            })
            .collect::<wallsens::Result<_>>()?;
        let g = env.global_metric(&doms, intervals)?;
        let marches = g.marches;
        let report = MetricReport::new(
            OutputKind::Loads {
                intervals: intervals.clone(),
            },
            cfg.metrics.reading,
            params.clone(),
            None,
            Some(g),
            cfg.metrics.threshold,
        )?;
        art.table("metrics.csv", &report.rows())?;
        art.json("metrics.json", &report)?;
        results["marches"] = json!(2 + params.len() + marches);
        results["ranking"] = json!(report.ranking.iter().map(|r| json!({ "param": r.param.to_string(), "value": r.value, "significant": r.significant })).collect::<Vec<_>>());
    }
    Ok(Outcome::plain(results))
}

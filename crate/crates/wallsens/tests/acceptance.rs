//! Acceptance run: one PASS/FAIL line per criterion, with the underlying
//! checks indented below it. Failures are reported, not asserted; errors
//! abort the run.

use std::f64::consts::PI;
use std::time::Instant;

use wallsens::baselines::{rbd_fast, sobol_indices, DesignKind, SaltelliDesign};
use wallsens::cases::{
    bayonne_synthetic, envelope_case, masonry_grid, validation_grid, VALIDATION_LOADS_HORIZON,
};
use wallsens::envelope::{absorbed_fraction, GlassSpec};
use wallsens::metrics::{
    local_integrals, normalize, normalize_by_layer, rank_parameters, EtaReading, ParamDomain,
    DEFAULT_THRESHOLD,
};
use wallsens::taylor::OutputKind;
use wallsens::validation::{
    all_pass, loads_model, sensitivity_fidelity, solver_accuracy, table_battery, taylor_trust,
    Check, TableOptions,
};
use wallsens::wall::{uniform_problem, BoundarySignals, InitialProfile};
use wallsens::weather::{month_intervals_hours, SyntheticWeather, SECONDS_PER_HOUR};
use wallsens::{propagate, simulate, validation_case, Grid, ParamId, Recording, Target};

struct Board {
    passed: usize,
    total: usize,
}

impl Board {
    fn criterion(&mut self, n: usize, title: &str, checks: &[Check], started: Instant) {
        let ok = all_pass(checks);
        self.total += 1;
        self.passed += ok as usize;
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2}: {tag}  {title}  ({:.1} s)",
            started.elapsed().as_secs_f64()
        );
        for c in checks {
            println!("      {c}");
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn ishigami(x: &[f64]) -> f64 {
    x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
}

fn ishigami_indices() -> ([f64; 3], [f64; 3]) {
    let (a, b) = (7.0_f64, 0.1_f64);
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    ([v1 / v, v2 / v, 0.0], [(v1 + v13) / v, v2 / v, v13 / v])
}

fn main() {
    let all = Instant::now();
    let mut board = Board {
        passed: 0,
        total: 0,
    };
    let problem = validation_case();
    let grid = validation_grid();
    let (k1, k2, c2) = (ParamId::k(0), ParamId::k(1), ParamId::c(1));

    let t = Instant::now();
    let solver = solver_accuracy(&problem, grid).expect("solver accuracy");
    board.criterion(1, "solver vs reference oracle", &solver.checks, t);

    let t = Instant::now();
    let fidelity = sensitivity_fidelity(&problem, grid, k1).expect("sensitivity fidelity");
    board.criterion(
        2,
        "continuous sensitivities vs oracle reference",
        &fidelity.checks[..2],
        t,
    );
    board.criterion(
        3,
        "finite differences vs continuous",
        &fidelity.checks[2..],
        t,
    );

    let t = Instant::now();
    let trust = taylor_trust(&problem, grid, [k2, c2], 100).expect("taylor lattice");
    board.criterion(
        4,
        "Taylor trust region and remainder order",
        &trust.checks,
        t,
    );

    let t = Instant::now();
    let loads_grid = grid.with_horizon(VALIDATION_LOADS_HORIZON).unwrap();
    let tables = table_battery(&problem, loads_grid, [k2, c2], TableOptions::default())
        .expect("table battery");
    let pick = |prefixes: &[&str]| -> Vec<Check> {
        tables
            .checks
            .iter()
            .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
            .cloned()
            .collect()
    };
    board.criterion(
        5,
        "derivative-based metrics on the loads",
        &pick(&["eta", "gamma", "sum gamma"]),
        t,
    );
    board.criterion(
        6,
        "total partial variance bounded by nu/pi^2",
        &pick(&["Sobol D_tot"]),
        t,
    );
    board.criterion(
        7,
        "sampling baselines (5 replicates)",
        &pick(&["SRC", "Sobol S1", "Sobol Stot", "RBD-FAST"]),
        t,
    );
    board.criterion(8, "evaluation counts", &pick(&["Sobol / metric"]), t);

    let t = Instant::now();
    let weather = SyntheticWeather::default().generate().unwrap();
    let hours = weather.end() / SECONDS_PER_HOUR;
    let wall = bayonne_synthetic(&weather).unwrap();
    let wall_grid = masonry_grid(hours).unwrap();
    let params: Vec<ParamId> = (0..3)
        .flat_map(|i| [ParamId::k(i), ParamId::c(i)])
        .collect();
    let kind = OutputKind::Loads {
        intervals: vec![(0.0, hours)],
    };
    let raw = local_integrals(&wall, wall_grid, &params, &kind, EtaReading::default())
        .expect("wall metrics");
    let by_layer = normalize_by_layer(&params, &raw).unwrap();
    let ranking = rank_parameters(&params, &normalize(&raw).unwrap(), DEFAULT_THRESHOLD).unwrap();
    let mut checks = Vec::new();
    for (p, v) in params.iter().zip(&by_layer) {
        checks.push(match p.kind {
            wallsens::ParamKind::Conductivity => {
                Check::at_least(&format!("eta {p} within its layer"), *v, 0.99)
            }
            _ => Check::at_most(&format!("eta {p} within its layer"), *v, 1e-2),
        });
    }
    for r in ranking
        .iter()
        .filter(|r| r.param.kind == wallsens::ParamKind::Capacity)
    {
        checks.push(Check::holds(
            &format!("{} non-significant", r.param),
            r.value,
            "below 0.05 × max",
            !r.significant,
        ));
    }
    board.criterion(
        9,
        "masonry wall ranking under synthetic weather",
        &checks,
        t,
    );

    let t = Instant::now();
    let env = envelope_case(&weather, &GlassSpec::default()).unwrap();
    let intervals: Vec<(f64, f64)> = month_intervals_hours()
        .into_iter()
        .map(|(a, b)| (a, b.min(hours)))
        .filter(|(a, b)| a < b)
        .collect();
    let env_params = [ParamId::k(0), ParamId::k(1), ParamId::TAU, ParamId::RHO];
    let domains: Vec<ParamDomain> = env_params
        .iter()
        .map(|&p| {
            let v = env.param_value(p).unwrap();
            ParamDomain::new(p, 0.5 * v, 1.5 * v, 5).unwrap()
        })
        .collect();
    let g = env
        .global_metric(&domains, &intervals)
        .expect("envelope metric");
    let walls = g.gamma[0].min(g.gamma[1]);
    let optics = g.gamma[2].max(g.gamma[3]);
    let a = absorbed_fraction(0.15, 0.26).unwrap();
    let formula = (1.0 - 0.26) * (1.0 - 0.15) / (1.0 - 0.15 * 0.26);
    let checks = vec![
        Check::at_least(
            "min gamma(k1, k2) / max gamma(tau, rho)",
            walls / optics,
            10.0,
        ),
        Check::at_most("A(0.15, 0.26) vs formula", (a - formula).abs(), 1e-12),
    ];
    board.criterion(10, "envelope ordering and absorbed fraction", &checks, t);

    let t = Instant::now();
    let mut checks = Vec::new();
    let short = Grid::new(1e-2, 1e-3, 2.0).unwrap();
    let run = propagate(
        &problem,
        short,
        &[Target::Second(k2, c2), Target::Second(c2, k2)],
        Recording::ALL,
    )
    .unwrap();
    let idx = |t: Target| run.targets.iter().position(|&x| x == t).unwrap();
    let (a, b) = (
        &run.fields[idx(Target::Second(k2, c2))],
        &run.fields[idx(Target::Second(c2, k2))],
    );
    let sym = max_abs_diff(&a.as_ref().unwrap().data, &b.as_ref().unwrap().data);
    checks.push(Check::at_most(
        "mixed partial symmetry X_k2c2 vs X_c2k2",
        sym,
        1e-12,
    ));

    let mut eq = uniform_problem(1.3, 0.7, 0.5, 2.0, 3.0);
    eq.boundary = BoundarySignals::constant(0.4, 0.4, 0.0);
    eq.initial = InitialProfile::Constant(0.4);
    let p = ParamId::k(0);
    let run = propagate(
        &eq,
        short,
        &[Target::First(p), Target::Second(p, ParamId::c(0))],
        Recording::ALL,
    )
    .unwrap();
    let zero = run
        .fields
        .iter()
        .flatten()
        .flat_map(|f| f.data.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    checks.push(Check::at_most(
        "equilibrium sensitivities max |X|",
        zero,
        1e-12,
    ));

    let loads_grid_short = Grid::new(1e-2, 1e-3, 1.0).unwrap();
    let params2 = [k2, c2];
    let model = loads_model(&problem, loads_grid_short, &params2, (0.0, 1.0));
    let boxes = [(0.03, 0.57), (0.05, 0.95)];
    let d1 = SaltelliDesign::new(DesignKind::LatinHypercube, 64, &boxes, 7).unwrap();
    let d2 = SaltelliDesign::new(DesignKind::LatinHypercube, 64, &boxes, 7).unwrap();
    let same_sobol = sobol_indices(&model, &d1).unwrap() == sobol_indices(&model, &d2).unwrap();
    let same_fast =
        rbd_fast(&model, &boxes, 60, 6, 7).unwrap() == rbd_fast(&model, &boxes, 60, 6, 7).unwrap();
    checks.push(Check::holds(
        "Sobol and RBD-FAST repeat under a fixed seed",
        0.0,
        "identical",
        same_sobol && same_fast,
    ));

    let sim = simulate(&problem, loads_grid, Recording::NONE).unwrap();
    let whole = sim.loads(0.0, 5.0).unwrap();
    let split_grid = sim.loads(0.0, 2.0).unwrap() + sim.loads(2.0, 5.0).unwrap();
    let split_off = sim.loads(0.0, 2.00037).unwrap() + sim.loads(2.00037, 5.0).unwrap();
    let add = (whole - split_grid).abs().max((whole - split_off).abs());
    checks.push(Check::at_most(
        "loads additivity over split intervals",
        add,
        1e-10,
    ));

    let cube = [(-PI, PI); 3];
    let design = SaltelliDesign::new(DesignKind::LatinHypercube, 8192, &cube, 2016).unwrap();
    let r = sobol_indices(|x: &[f64]| Ok(ishigami(x)), &design).unwrap();
    let (s1, st) = ishigami_indices();
    for i in 0..3 {
        checks.push(Check::within(
            &format!("Ishigami S1 x{}", i + 1),
            r.s1[i],
            s1[i],
            0.03,
        ));
        checks.push(Check::within(
            &format!("Ishigami Stot x{}", i + 1),
            r.s_tot[i],
            st[i],
            0.03,
        ));
    }
    board.criterion(11, "property suite", &checks, t);

    println!(
        "acceptance: {}/{} criteria pass ({:.0} s)",
        board.passed,
        board.total,
        all.elapsed().as_secs_f64()
    );
}

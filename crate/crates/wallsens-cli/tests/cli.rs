use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wallsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wallsens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EQUILIBRIUM: &str = r#"
[wall]
h_left = 10.0
h_right = 5.0
absorptivity = 0.0
layers = [
  { name = "brick", conductivity = 0.8, capacity = 1.5e6, thickness = 0.2 },
  { name = "plaster", conductivity = 0.5, capacity = 1.0e6, thickness = 0.05 },
]

[boundary]
t_out = 290.0
t_in = 290.0
initial = 290.0

[grid]
t_max = 5.0
"#;

#[test]
fn equilibrium_simulation_stays_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eq.toml");
    fs::write(&cfg, EQUILIBRIUM).unwrap();
    let out = dir.path().join("run");
    let o = wallsens(&["simulate", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut r = csv::Reader::from_path(out.join("temperature.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["x_star", "t_star", "u"]);
    let expected = 290.0 / 293.15;
    let mut rows = 0;
    for rec in r.records() {
        let u: f64 = rec.unwrap()[2].parse().unwrap();
        assert!((u - expected).abs() < 1e-12, "u = {u}");
        rows += 1;
    }
    assert!(rows > 100);

    let mut r = csv::Reader::from_path(out.join("flux.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["t", "value"]);
    for rec in r.records() {
        let q: f64 = rec.unwrap()[1].parse().unwrap();
        assert!(q.abs() < 1e-12);
    }
    for f in ["manifest.json", "summary.json", "config.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn sobol_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    fs::write(&cfg, "[grid]\nt_max = 1.0\n").unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = wallsens(&[
            "sobol",
            "--config",
            path(&cfg),
            "--n-samples",
            "64",
            "--seed",
            "7",
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in [
        "sobol.csv",
        "sobol.json",
        "summary.json",
        "manifest.json",
        "config.toml",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["inputs_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = wallsens(&[
        "rbd-fast",
        "--seed",
        "11",
        "--n-samples",
        "60",
        "--out",
        path(&first),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("second");
    let cfg = first.join("config.toml");
    let o = wallsens(&["rbd-fast", "--config", path(&cfg), "--out", path(&second)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(first.join("fast.csv")).unwrap(),
        fs::read(second.join("fast.csv")).unwrap()
    );
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // stochastic task without a seed
    assert_eq!(
        wallsens(&["sobol", "--out", path(&out)]).status.code(),
        Some(2)
    );
    // unknown key
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "sed = 3\n").unwrap();
    assert_eq!(
        wallsens(&["simulate", "--config", path(&bad), "--out", path(&out)])
            .status
            .code(),
        Some(2)
    );
    // unknown parameter
    assert_eq!(
        wallsens(&["sens", "--params", "k9", "--out", path(&out)])
            .status
            .code(),
        Some(2)
    );
    // the envelope case belongs to the envelope task
    assert_eq!(
        wallsens(&["simulate", "--case", "envelope", "--out", path(&out)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn malformed_weather_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    fs::write(
        &w,
        "t,q_sw,T_out,T_in\n0,0,280,293\n3600,0,oops,293\n7200,0,281,293\n",
    )
    .unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "case = \"bayonne-synthetic\"\n[weather]\npath = \"w.csv\"\n",
    )
    .unwrap();
    let o = wallsens(&[
        "simulate",
        "--config",
        path(&cfg),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn envelope_reports_monthly_loads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "lattice_n = 3\n[grid]\nt_max = 48.0\n[weather.synthetic]\nhours = 49\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = wallsens(&["envelope", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("envelope_loads.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec!["interval", "t_start", "t_end", "e_glass", "e_wall", "e_hat"]
    );
    let rec = r.records().next().unwrap().unwrap();
    let v: Vec<f64> = rec.iter().skip(3).map(|s| s.parse().unwrap()).collect();
    assert!((v[0] + v[1] - v[2]).abs() <= 1e-9 * v[2].abs());
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    let a = summary["results"]["absorbed_fraction"].as_f64().unwrap();
    assert!((a - 0.85 * 0.74 / (1.0 - 0.15 * 0.26)).abs() < 1e-12);
}

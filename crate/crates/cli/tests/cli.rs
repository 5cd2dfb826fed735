use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use kerr_wra::spacetime::christoffel_at;
use kerr_wra::wigner::lambda_with_connection;
use kerr_wra_cli::config::{Grid, ScenarioConfig};
use kerr_wra_cli::manifest::Manifest;
use kerr_wra_cli::run::{execute, load, Command, RunOptions};
use kerr_wra_cli::validate::{run_with, LambdaSource};
use kerr_wra_cli::CliError;
use tempfile::TempDir;

const MINKOWSKI: &str = r#"
[body]
preset = "geometric"
mass = 0.0

[observer]
family = "static"

[launch]
radius = 5.0
stop_radius = 50.0
ratios = [0.0, 0.5, -0.5]

[analysis]
set = ["wra", "time_reversal", "pt_check"]
"#;

const SCHWARZSCHILD: &str = r#"
[body]
preset = "geometric"
mass = 1.0

[observer]
family = "static"

[launch]
radius = 10.0
stop_radius = 40.0
plane = "polar_slice"
ratios = [0.5, -0.3]

[output]
prefix = "sch"
"#;

fn bin(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_kerr-wra")).args(args).env_remove("KERR_WRA_OUT").output().unwrap()
}

fn scenario(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn opts(out: &Path, jobs: usize) -> RunOptions {
    RunOptions { out: Some(out.to_path_buf()), jobs, ..RunOptions::default() }
}

#[test]
fn flat_space_trace_has_no_rotation() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "flat.toml", MINKOWSKI);
    let out = dir.path().join("out");
    let o = bin(&["trace", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("run_summary.csv")).unwrap();
    for col in ["psi_total_rad", "delta_psi_time_reversal_rad", "pt_violation_rad"] {
        assert!(column(&summary, col).iter().all(|x| x.abs() < 1e-12), "{col}");
    }
    let manifest = Manifest::load(&out.join("run_manifest.toml")).unwrap();
    assert_eq!(manifest.runs.len(), 3);
    assert_eq!(manifest.failures(), 0);
    assert_eq!(manifest.outputs.len(), 1 + 3 * 3);
    manifest.verify(&out).unwrap();
}

#[test]
fn malformed_config_exits_2_with_line() {
    let dir = TempDir::new().unwrap();
    let broken = MINKOWSKI.replace("mass = 0.0", "mass = 0.0\ncolour = \"red\"");
    let cfg = scenario(&dir, "bad.toml", &broken);
    let o = bin(&["sweep", "-c", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("colour"), "{err}");

    let inverted = MINKOWSKI.replace("stop_radius = 50.0", "stop_radius = 2.0");
    let cfg = scenario(&dir, "inverted.toml", &inverted);
    let o = bin(&["sweep", "-c", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 11: launch.stop_radius"));
}

#[test]
fn empty_grids_are_config_errors() {
    let src = MINKOWSKI.replace("ratios = [0.0, 0.5, -0.5]", "ratios = []");
    let cfg = ScenarioConfig::parse(&src).unwrap();
    match cfg.resolve(&src, Grid::Ratios, 1.0) {
        Err(CliError::Config(m)) => assert!(m.contains("launch grid is empty") && m.starts_with("line 12"), "{m}"),
        other => panic!("{other:?}"),
    }
    let cfg = ScenarioConfig::parse(MINKOWSKI).unwrap();
    assert!(matches!(cfg.resolve(MINKOWSKI, Grid::Alphas, 1.0), Err(CliError::Config(_))));
    assert!(matches!(cfg.resolve(MINKOWSKI, Grid::Ratios, 0.0), Err(CliError::Config(_))));

    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "flat.toml", MINKOWSKI);
    let o = bin(&["interferometer", "-c", path.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "sch.toml", &SCHWARZSCHILD.replace("ratios = [0.5, -0.3]", "ratios = [0.9, 0.5, 0.1, -0.3, -0.7]"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ma = execute(Command::Trace, &cfg, &opts(&a, 1)).unwrap();
    let mb = execute(Command::Trace, &cfg, &opts(&b, 3)).unwrap();
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(ma.config_hash, mb.config_hash);
    for o in &ma.outputs {
        assert_eq!(fs::read(a.join(&o.path)).unwrap(), fs::read(b.join(&o.path)).unwrap(), "{}", o.path);
    }
}

#[test]
fn configs_round_trip() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut sources = vec![MINKOWSKI.to_string(), SCHWARZSCHILD.to_string()];
    for entry in fs::read_dir(shipped).unwrap() {
        sources.push(fs::read_to_string(entry.unwrap().path()).unwrap());
    }
    assert!(sources.len() >= 6);
    for src in sources {
        let cfg = ScenarioConfig::parse(&src).unwrap();
        let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }
}

#[test]
fn shipped_scenarios_resolve() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in fs::read_dir(shipped).unwrap() {
        let path = entry.unwrap().path();
        let grid = if path.to_str().unwrap().contains("interferometer") { Grid::Alphas } else { Grid::Ratios };
        load(&path, grid, 1.0).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn validate_catches_flipped_connection() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "sch.toml", SCHWARZSCHILD);
    let (cfg, res) = load(&path, Grid::Ratios, 1.0).unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();

    let mut clean = Manifest::new("validate", cfg.hash(), 1, 1.0);
    run_with(&cfg, &res, &out, &mut clean, &|f, e, k| kerr_wra::wigner::lambda_at(f, e, k)).unwrap();

    let flipped: &LambdaSource = &|f, e, k| {
        let mut gamma = christoffel_at(&f.params, e)?;
        gamma.gamma[1][2][2] = -gamma.gamma[1][2][2];
        lambda_with_connection(f, e, k, &gamma)
    };
    let mut broken = Manifest::new("validate", cfg.hash(), 1, 1.0);
    match run_with(&cfg, &res, &out, &mut broken, flipped) {
        Err(CliError::Validation(m)) => assert!(m.contains("lambda_antisymmetry"), "{m}"),
        other => panic!("{other:?}"),
    }
    let report = fs::read_to_string(out.join("sch_validate.csv")).unwrap();
    assert!(report.lines().any(|l| l.contains("lambda_antisymmetry") && l.ends_with("false")));
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "flat.toml", MINKOWSKI);
    let out = dir.path().join("env_out");
    let o = Process::new(env!("CARGO_BIN_EXE_kerr-wra"))
        .args(["sweep", "-c", cfg.to_str().unwrap()])
        .env("KERR_WRA_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("run_summary.csv").exists());
}

#[test]
fn interferometer_sweep_writes_probabilities() {
    let dir = TempDir::new().unwrap();
    let src = r#"
[body]
preset = "geometric"
mass = 1.0
spin = 0.45

[observer]
family = "polar_orbit"

[launch]
radius = 9.0
stop_radius = 60.0
alpha_range = { start = 0.0, stop = 0.6, step = 0.2 }

[analysis]
set = ["interferometer"]

[interferometer]
sigma = -1
"#;
    let cfg = scenario(&dir, "ifo.toml", src);
    let m = execute(Command::Interferometer, &cfg, &opts(dir.path(), 2)).unwrap();
    assert_eq!(m.runs.len(), 4);
    let csv = fs::read_to_string(dir.path().join("run_interferometer.csv")).unwrap();
    let dpsi = column(&csv, "delta_psi_rad");
    assert_eq!(dpsi[0], 0.0);
    assert!(dpsi[1..].iter().all(|x| x.abs() > 0.0));
    let (p1, p2) = (column(&csv, "mz_port1"), column(&csv, "mz_port2"));
    assert!(p1.iter().zip(&p2).all(|(a, b)| (a + b - 1.0).abs() < 1e-12));
}

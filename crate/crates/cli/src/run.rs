//! `trace`, `sweep` and `interferometer`.

use std::fs;
use std::path::{Path, PathBuf};

use kerr_wra::export::fmt17;
use kerr_wra::geodesic::{integrate, launch_with_ratio, StopCondition, Trajectory};
use kerr_wra::interferometer::{scenario_delta_psi, write_results_csv, InterferometerResult, InterferometerScenario};
use kerr_wra::spacetime::KerrParams;
use kerr_wra::symmetry::{delta_psi_azimuth_flip, delta_psi_time_reversal, pt_check, AsymmetryReport, PtReport};
use kerr_wra::tetrad::{AxisPolicy, PhotonCongruence, TetradField};
use kerr_wra::wigner::{integrate_wra, wrap, WraTrace};
use rayon::prelude::*;

use crate::config::{Analysis, AxisName, Grid, Resolved, ScenarioConfig};
use crate::manifest::{Manifest, RunRecord};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trace,
    Sweep,
    Interferometer,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Sweep => "sweep",
            Command::Interferometer => "interferometer",
            Command::Validate => "validate",
        }
    }

    fn grid(&self) -> Grid {
        match self {
            Command::Interferometer => Grid::Alphas,
            _ => Grid::Ratios,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides `output.dir` from the config.
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out: None, jobs: 0, tol_scale: 1.0 }
    }
}

/// Reads, parses and resolves a scenario file.
pub fn load(path: &Path, grid: Grid, tol_scale: f64) -> Result<(ScenarioConfig, Resolved), CliError> {
    let source = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = ScenarioConfig::parse(&source)?;
    let resolved = cfg.resolve(&source, grid, tol_scale)?;
    Ok((cfg, resolved))
}

/// Runs `command` on the scenario at `config` and writes the outputs plus
/// `<prefix>_manifest.toml`.
pub fn execute(command: Command, config: &Path, opts: &RunOptions) -> Result<Manifest, CliError> {
    let (cfg, res) = load(config, command.grid(), opts.tol_scale)?;
    let dir = opts.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut manifest = Manifest::new(command.name(), cfg.hash(), pool.current_num_threads(), opts.tol_scale);
    let outcome = pool.install(|| match command {
        Command::Trace => ratios(&cfg, &res, &dir, &mut manifest, true),
        Command::Sweep => ratios(&cfg, &res, &dir, &mut manifest, false),
        Command::Interferometer => interferometer(&cfg, &res, &dir, &mut manifest),
        Command::Validate => crate::validate::run(&cfg, &res, &dir, &mut manifest),
    });
    let name = format!("{}_manifest.toml", cfg.output.prefix);
    fs::write(dir.join(name), manifest.to_toml())?;
    manifest.verify(&dir)?;
    outcome?;
    match manifest.failures() {
        n if n > 0 && n == manifest.runs.len() => Err(CliError::Numerical(format!("all {n} runs failed"))),
        _ => Ok(manifest),
    }
}

/// Marck or coordinate frame field for one photon.
pub fn field_for(cfg: &ScenarioConfig, params: KerrParams, photon: PhotonCongruence) -> TetradField {
    let axis = match cfg.observer.axis {
        AxisName::OrbitNormal => AxisPolicy::OrbitNormal,
        AxisName::Reversed => AxisPolicy::Reversed,
        AxisName::AlongMomentum => AxisPolicy::AlongMomentum(photon),
    };
    let mut field = TetradField::new(params, cfg.observer.family.into()).with_axis(axis).with_psi0(cfg.observer.psi0);
    if !cfg.observer.xi_alignment {
        field.xi_axis = None;
    }
    field
}

/// Launches and integrates one photon of the ratio grid.
pub fn photon(
    cfg: &ScenarioConfig,
    res: &Resolved,
    params: &KerrParams,
    ratio: f64,
) -> kerr_wra::Result<(Trajectory, TetradField)> {
    let (q, st) = launch_with_ratio(params, res.r0, ratio, res.plane, cfg.launch.energy)?;
    let traj = integrate(params, &q, &st, StopCondition::Radius(res.stop), &res.geodesic_tol)?;
    let congruence = PhotonCongruence { consts: q, sign_r: st.sign_r, sign_theta: st.sign_theta };
    Ok((traj, field_for(cfg, *params, congruence)))
}

struct RatioRun {
    traj: Trajectory,
    wra: WraTrace,
    time_reversal: Option<AsymmetryReport>,
    flip: Option<AsymmetryReport>,
    pt: Option<PtReport>,
    compare: Option<f64>,
}

fn run_ratio(cfg: &ScenarioConfig, res: &Resolved, ratio: f64) -> kerr_wra::Result<RatioRun> {
    let tol = &res.quad_tol;
    let (traj, field) = photon(cfg, res, &res.params, ratio)?;
    let wra = integrate_wra(&traj, &field, tol)?;
    let time_reversal = cfg.has(Analysis::TimeReversal).then(|| delta_psi_time_reversal(&traj, &field, tol)).transpose()?;
    let flip = if cfg.has(Analysis::AzimuthFlip) {
        let (mirror, _) = photon(cfg, res, &res.params, -ratio)?;
        Some(delta_psi_azimuth_flip(&traj, &mirror, &field, tol)?)
    } else {
        None
    };
    let pt = cfg.has(Analysis::PtCheck).then(|| pt_check(&traj, &field, tol)).transpose()?;
    let compare = match &res.compare {
        Some(p) => {
            let (t, f) = photon(cfg, res, p, ratio)?;
            Some(wrap(wra.psi() - integrate_wra(&t, &f, tol)?.psi()))
        }
        None => None,
    };
    Ok(RatioRun { traj, wra, time_reversal, flip, pt, compare })
}

const SUMMARY_HEADER: [&str; 22] = [
    "ratio",
    "status",
    "psi_geodetic_rad",
    "psi_geodetic_deg",
    "psi_residual_rad",
    "psi_residual_deg",
    "psi_total_rad",
    "psi_total_deg",
    "quadrature_error",
    "delta_psi_time_reversal_rad",
    "delta_psi_time_reversal_deg",
    "delta_psi_time_reversal_closed_rad",
    "delta_psi_time_reversal_closed_deg",
    "delta_psi_azimuth_flip_rad",
    "delta_psi_azimuth_flip_deg",
    "pt_violation_rad",
    "t_violation_rad",
    "spin_compare_delta_psi_rad",
    "spin_compare_delta_psi_deg",
    "turning_points",
    "conservation_drift",
    "samples",
];

fn pair(x: Option<f64>) -> [String; 2] {
    match x {
        Some(v) => [fmt17(v), fmt17(v.to_degrees())],
        None => [String::new(), String::new()],
    }
}

fn summary_row(ratio: f64, run: &Result<RatioRun, kerr_wra::Error>) -> Vec<String> {
    let mut row = vec![fmt17(ratio)];
    match run {
        Err(e) => {
            row.push(format!("error: {e}"));
            row.resize(SUMMARY_HEADER.len(), String::new());
        }
        Ok(r) => {
            row.push("ok".into());
            row.extend(pair(Some(r.wra.psi_geodetic)));
            row.extend(pair(Some(r.wra.psi_residual)));
            row.extend(pair(Some(r.wra.psi())));
            row.push(fmt17(r.wra.error));
            row.extend(pair(r.time_reversal.as_ref().map(|t| t.delta_psi)));
            row.extend(pair(r.time_reversal.as_ref().map(|t| t.delta_psi_closed)));
            row.extend(pair(r.flip.as_ref().map(|t| t.delta_psi)));
            row.push(r.pt.as_ref().map(|p| fmt17(p.pt_violation())).unwrap_or_default());
            row.push(r.pt.as_ref().map(|p| fmt17(p.t_violation())).unwrap_or_default());
            row.extend(pair(r.compare));
            row.push(r.traj.turning_points.to_string());
            row.push(r.traj.conservation_drift().map(fmt17).unwrap_or_default());
            row.push(r.traj.samples.len().to_string());
        }
    }
    row
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn ratios(
    cfg: &ScenarioConfig,
    res: &Resolved,
    dir: &Path,
    manifest: &mut Manifest,
    detailed: bool,
) -> Result<(), CliError> {
    let runs: Vec<_> = res.ratios.par_iter().map(|&r| run_ratio(cfg, res, r)).collect();
    let prefix = &cfg.output.prefix;
    let summary = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(SUMMARY_HEADER)?;
        for (ratio, run) in res.ratios.iter().zip(&runs) {
            w.write_record(summary_row(*ratio, run))?;
        }
        w.flush()?;
        Ok(())
    })?;
    manifest.emit(dir, &format!("{prefix}_summary.csv"), &summary)?;
    for (i, (ratio, run)) in res.ratios.iter().zip(&runs).enumerate() {
        let label = format!("ratio {}", fmt17(*ratio));
        match run {
            Err(e) => manifest.runs.push(RunRecord { label, ok: false, message: Some(e.to_string()) }),
            Ok(r) => {
                manifest.runs.push(RunRecord { label, ok: true, message: None });
                if !detailed {
                    continue;
                }
                let stem = format!("{prefix}_ratio{i:03}");
                manifest.emit(dir, &format!("{stem}_trajectory.csv"), &csv_bytes(|b| r.traj.write_csv(b))?)?;
                manifest.emit(dir, &format!("{stem}_wra.csv"), &csv_bytes(|b| r.wra.write_csv(b))?)?;
                if let Some(t) = &r.time_reversal {
                    manifest.emit(dir, &format!("{stem}_time_reversal.csv"), &csv_bytes(|b| t.write_csv(b))?)?;
                }
                if let Some(t) = &r.flip {
                    manifest.emit(dir, &format!("{stem}_azimuth_flip.csv"), &csv_bytes(|b| t.write_csv(b))?)?;
                }
            }
        }
    }
    Ok(())
}

fn interferometer(cfg: &ScenarioConfig, res: &Resolved, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let settings = cfg.interferometer.clone().unwrap_or(crate::config::InterferometerConfig {
        source: Default::default(),
        sigma: 1,
        ad: None,
    });
    let runs: Vec<kerr_wra::Result<InterferometerResult>> = res
        .alphas
        .par_iter()
        .map(|&alpha| {
            let mut scn = InterferometerScenario::new(res.params, res.r0, res.stop, alpha);
            scn.family = res.family;
            scn.source = settings.source.into();
            scn.sigma = settings.sigma;
            scn.ad = settings.ad;
            scenario_delta_psi(&scn, &res.quad_tol)
        })
        .collect();
    let mut ok = vec![];
    for (alpha, run) in res.alphas.iter().zip(runs) {
        let label = format!("alpha {}", fmt17(*alpha));
        match run {
            Ok(r) => {
                manifest.runs.push(RunRecord { label, ok: true, message: None });
                ok.push(r);
            }
            Err(e) => manifest.runs.push(RunRecord { label, ok: false, message: Some(e.to_string()) }),
        }
    }
    let bytes = csv_bytes(|b| write_results_csv(&ok, b))?;
    manifest.emit(dir, &format!("{}_interferometer.csv", cfg.output.prefix), &bytes)
}

//! Invariant checks over the launch grid.
//!
//! The generator `lambda` is pluggable, so a broken connection can be fed
//! through the same checks:
//!
//! ```
//! use kerr_wra::wigner::lambda_at;
//! use kerr_wra_cli::validate::LambdaSource;
//!
//! let source: &LambdaSource = &|field, event, k| lambda_at(field, event, k);
//! # let _ = source;
//! ```

use std::path::Path;

use kerr_wra::export::fmt17;
use kerr_wra::spacetime::Event;
use kerr_wra::tetrad::{marck_transport_residual, ObserverFamily, TetradField};
use kerr_wra::wigner::{composed_wra, integrate_wra, lambda_at, wrap, LambdaMatrix};
use nalgebra::Vector4;
use rayon::prelude::*;

use crate::config::{Resolved, ScenarioConfig};
use crate::manifest::{Manifest, RunRecord};
use crate::run::photon;
use crate::CliError;

pub type LambdaSource = dyn Fn(&TetradField, &Event, &Vector4<f64>) -> kerr_wra::Result<LambdaMatrix> + Sync;

pub const DRIFT_TOL: f64 = 1e-9;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
pub const ANTISYMMETRY_TOL: f64 = 1e-8;
pub const TRANSPORT_TOL: f64 = 1e-7;
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// All checks for one photon of the grid.
pub fn check_ratio(cfg: &ScenarioConfig, res: &Resolved, ratio: f64, lambda: &LambdaSource) -> kerr_wra::Result<Vec<Check>> {
    let (traj, field) = photon(cfg, res, &res.params, ratio)?;
    let (mut ortho, mut handed, mut antisym, mut transport) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let marck = matches!(field.family, ObserverFamily::CircularEquatorial | ObserverFamily::PolarOrbit);
    for s in &traj.samples {
        let ev = s.state.event;
        let tetrad = field.evaluate(&ev)?;
        ortho = ortho.max(tetrad.orthonormality_residual(&field.params)?);
        if !tetrad.is_right_handed() {
            handed = 1.0;
        }
        antisym = antisym.max(lambda(&field, &ev, &s.momentum)?.antisymmetry_residual());
        if marck {
            transport = transport.max(marck_transport_residual(&field, &ev)?);
        }
    }
    let quad = integrate_wra(&traj, &field, &res.quad_tol)?.psi();
    let composed = composed_wra(&traj, &field, 2)?;
    let mut checks = vec![
        Check { name: "conservation_drift", max_residual: traj.conservation_drift()?, tolerance: DRIFT_TOL },
        Check { name: "tetrad_orthonormality", max_residual: ortho, tolerance: ORTHONORMALITY_TOL },
        Check { name: "right_handed", max_residual: handed, tolerance: 0.0 },
        Check { name: "lambda_antisymmetry", max_residual: antisym, tolerance: ANTISYMMETRY_TOL },
        Check { name: "quadrature_vs_composed", max_residual: wrap(quad - composed).abs(), tolerance: ORACLE_TOL },
    ];
    if marck {
        checks.push(Check { name: "marck_transport", max_residual: transport, tolerance: TRANSPORT_TOL });
    }
    Ok(checks)
}

pub fn run(cfg: &ScenarioConfig, res: &Resolved, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    run_with(cfg, res, dir, manifest, &|f, e, k| lambda_at(f, e, k))
}

/// Writes `<prefix>_validate.csv` and fails with [`CliError::Validation`]
/// when any check exceeds its tolerance.
pub fn run_with(
    cfg: &ScenarioConfig,
    res: &Resolved,
    dir: &Path,
    manifest: &mut Manifest,
    lambda: &LambdaSource,
) -> Result<(), CliError> {
    let results: Vec<_> = res.ratios.par_iter().map(|&r| check_ratio(cfg, res, r, lambda)).collect();
    let mut buf = Vec::new();
    let mut failed = vec![];
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["ratio", "check", "max_residual", "tolerance", "pass"])?;
        for (&ratio, result) in res.ratios.iter().zip(&results) {
            let label = format!("ratio {}", fmt17(ratio));
            match result {
                Err(e) => manifest.runs.push(RunRecord { label, ok: false, message: Some(e.to_string()) }),
                Ok(checks) => {
                    manifest.runs.push(RunRecord { label, ok: true, message: None });
                    for c in checks {
                        w.write_record([fmt17(ratio), c.name.into(), fmt17(c.max_residual), fmt17(c.tolerance), c.passed().to_string()])?;
                        if !c.passed() {
                            failed.push(format!("{} at ratio {ratio}: {:.3e} > {:.1e}", c.name, c.max_residual, c.tolerance));
                        }
                    }
                }
            }
        }
        w.flush()?;
    }
    manifest.emit(dir, &format!("{}_validate.csv", cfg.output.prefix), &buf)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join("; ")))
    }
}

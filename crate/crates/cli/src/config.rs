//! Scenario files.
//!
//! ```toml
//! [body]
//! preset = "earth"          # earth | m87 | custom | geometric
//!
//! [observer]
//! family = "polar_orbit"    # static | zamo | circular_equatorial | polar_orbit
//! axis = "orbit_normal"     # orbit_normal | reversed | along_momentum
//!
//! [launch]
//! altitude = 300e3
//! stop_altitude = 36000e3
//! ratios = [0.2, -0.2]
//!
//! [analysis]
//! set = ["wra", "time_reversal"]
//! ```

use std::path::PathBuf;

use kerr_wra::constants::EARTH_RADIUS;
use kerr_wra::geodesic::{GeodesicTolerance, LaunchPlane};
use kerr_wra::interferometer::Source;
use kerr_wra::quadrature::QuadTolerance;
use kerr_wra::spacetime::{unit_system, Body, KerrParams};
use kerr_wra::tetrad::ObserverFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub body: BodyConfig,
    pub observer: ObserverConfig,
    pub launch: LaunchConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferometer: Option<InterferometerConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Earth,
    M87,
    Custom,
    /// Mass and spin given directly in geometric units.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_over_rs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<f64>,
    /// Second spin for the sweep comparison column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_spin_over_rs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Static,
    Zamo,
    CircularEquatorial,
    PolarOrbit,
}

impl From<FamilyName> for ObserverFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Static => ObserverFamily::Static,
            FamilyName::Zamo => ObserverFamily::Zamo,
            FamilyName::CircularEquatorial => ObserverFamily::CircularEquatorial,
            FamilyName::PolarOrbit => ObserverFamily::PolarOrbit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    #[default]
    OrbitNormal,
    Reversed,
    AlongMomentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub family: FamilyName,
    #[serde(default)]
    pub axis: AxisName,
    /// Rotate the orbiting frames so that `e_3` lines up with the orbit normal.
    #[serde(default = "yes")]
    pub xi_alignment: bool,
    #[serde(default)]
    pub psi0: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneName {
    #[default]
    Equatorial,
    PolarSlice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || !(self.stop >= self.start) {
            return vec![];
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Radii are in meters for physical presets and in units of the mass for
/// `geometric`. Exactly one form per end point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_rs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_altitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_radius_rs: Option<f64>,
    /// Added to the launch radius when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_offset: Option<f64>,
    #[serde(default)]
    pub plane: PlaneName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_range: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<Range>,
    #[serde(default = "one")]
    pub energy: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Wra,
    TimeReversal,
    AzimuthFlip,
    Interferometer,
    PtCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub set: Vec<Analysis>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { set: vec![Analysis::Wra] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceName {
    #[default]
    TwoPhotonHom,
    Classical,
    SinglePhoton,
}

impl From<SourceName> for Source {
    fn from(s: SourceName) -> Self {
        match s {
            SourceName::TwoPhotonHom => Source::TwoPhotonHom,
            SourceName::Classical => Source::Classical,
            SourceName::SinglePhoton => Source::SinglePhoton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerConfig {
    #[serde(default)]
    pub source: SourceName,
    #[serde(default = "plus")]
    pub sigma: i8,
    /// Alice-David distance; defaults to the chord from Alice's image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad: Option<f64>,
}

fn plus() -> i8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub geodesic_rtol: f64,
    pub geodesic_atol: f64,
    pub quad_rel: f64,
    pub quad_abs: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let g = GeodesicTolerance::default();
        let q = QuadTolerance::default();
        Self { geodesic_rtol: g.rtol, geodesic_atol: g.atol, quad_rel: q.rel_tol, quad_abs: q.abs_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, prefix: default_prefix() }
    }
}

fn default_prefix() -> String {
    "run".into()
}

/// Which launch grid a command iterates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Ratios,
    Alphas,
}

/// Physical inputs resolved from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: KerrParams,
    pub compare: Option<KerrParams>,
    pub family: ObserverFamily,
    pub r0: f64,
    pub stop: f64,
    pub plane: LaunchPlane,
    pub ratios: Vec<f64>,
    pub alphas: Vec<f64>,
    pub geodesic_tol: GeodesicTolerance,
    pub quad_tol: QuadTolerance,
}

impl ScenarioConfig {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        toml::from_str(source).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn has(&self, a: Analysis) -> bool {
        self.analysis.set.contains(&a)
    }

    /// Checks physical ranges and resolves the grid. `source` is used only
    /// to point error messages at a line.
    pub fn resolve(&self, source: &str, grid: Grid, tol_scale: f64) -> Result<Resolved, CliError> {
        let err = |section: &str, key: &str, msg: &str| CliError::Config(locate(source, section, key, msg));
        let b = &self.body;
        let pick = |p: Result<KerrParams, kerr_wra::Error>, key: &str| p.map_err(|e| err("body", key, &e.to_string()));
        let body_for = |spin_over_rs: f64, key: &str| -> Result<KerrParams, CliError> {
            match b.preset {
                Preset::Earth => pick(unit_system(Body::Earth), key),
                Preset::M87 => pick(unit_system(Body::M87 { spin_over_rs }), key),
                Preset::Custom => {
                    let m = b.mass_kg.ok_or_else(|| err("body", "preset", "custom preset needs mass_kg"))?;
                    if !(m > 0.0) {
                        return Err(err("body", "mass_kg", "mass_kg must be positive"));
                    }
                    pick(unit_system(Body::Custom { mass_kg: m, spin_over_rs }), key)
                }
                Preset::Geometric => {
                    let m = b.mass.ok_or_else(|| err("body", "preset", "geometric preset needs mass"))?;
                    if !(m >= 0.0) {
                        return Err(err("body", "mass", "mass must not be negative"));
                    }
                    pick(KerrParams::new(m, spin_over_rs * 2.0 * m), key)
                }
            }
        };
        let spin = match b.preset {
            Preset::Geometric => match (b.spin, b.mass) {
                (Some(a), Some(m)) if m > 0.0 => a / (2.0 * m),
                (Some(a), _) if a != 0.0 => return Err(err("body", "spin", "spin needs a positive mass")),
                _ => 0.0,
            },
            _ => b.spin_over_rs.unwrap_or(0.0),
        };
        let params = body_for(spin, "spin_over_rs")?;
        let compare = b.compare_spin_over_rs.map(|s| body_for(s, "compare_spin_over_rs")).transpose()?;
        let rs = params.schwarzschild_radius();

        let l = &self.launch;
        let radius = |r: Option<f64>, alt: Option<f64>, in_rs: Option<f64>, key: &str| -> Result<f64, CliError> {
            let forms = [r, alt.map(|h| EARTH_RADIUS + h), in_rs.map(|x| x * rs)];
            let set: Vec<f64> = forms.iter().flatten().copied().collect();
            match set.as_slice() {
                [v] if *v > 0.0 && v.is_finite() => Ok(*v),
                [_] => Err(err("launch", key, "radius must be positive")),
                [] => Err(err("launch", key, "missing radius")),
                _ => Err(err("launch", key, "give exactly one of radius, altitude, radius_rs")),
            }
        };
        if l.altitude.is_some() && b.preset != Preset::Earth {
            return Err(err("launch", "altitude", "altitude is only defined for the earth preset"));
        }
        let key = |forms: [(Option<f64>, &'static str); 3]| forms.iter().find(|f| f.0.is_some()).map_or(forms[0].1, |f| f.1);
        let start_key = key([(l.radius, "radius"), (l.altitude, "altitude"), (l.radius_rs, "radius_rs")]);
        let stop_key = key([(l.stop_radius, "stop_radius"), (l.stop_altitude, "stop_altitude"), (l.stop_radius_rs, "stop_radius_rs")]);
        let stop_key = if l.stop_offset.is_some() { "stop_offset" } else { stop_key };
        let r0 = radius(l.radius, l.altitude, l.radius_rs, start_key)?;
        let stop = match l.stop_offset {
            Some(d) if l.stop_radius.is_none() && l.stop_altitude.is_none() && l.stop_radius_rs.is_none() => {
                if !(d > 0.0) {
                    return Err(err("launch", "stop_offset", "stop_offset must be positive"));
                }
                r0 + d
            }
            Some(_) => return Err(err("launch", "stop_offset", "give exactly one stop radius form")),
            None => radius(l.stop_radius, l.stop_altitude, l.stop_radius_rs, stop_key)?,
        };
        if !(stop > r0) {
            return Err(err("launch", stop_key, "stop radius must lie outside the launch radius"));
        }
        if r0 <= params.outer_horizon() {
            return Err(err("launch", start_key, "launch radius is inside the horizon"));
        }
        if !(l.energy > 0.0) {
            return Err(err("launch", "energy", "energy must be positive"));
        }
        let mut ratios = l.ratios.clone().unwrap_or_default();
        if let Some(r) = &l.ratio_range {
            ratios.extend(r.values());
        }
        let alphas = l.alpha_range.as_ref().map(Range::values).unwrap_or_default();
        if ratios.iter().chain(&alphas).any(|x| !x.is_finite()) {
            return Err(err("launch", "ratios", "grid values must be finite"));
        }
        match grid {
            Grid::Alphas if alphas.is_empty() => {
                return Err(err("launch", "alpha_range", "interferometer grid is empty"));
            }
            Grid::Ratios if ratios.is_empty() => return Err(err("launch", "ratios", "launch grid is empty")),
            _ => {}
        }
        if alphas.iter().any(|&a| !(0.0..std::f64::consts::FRAC_PI_2).contains(&a)) {
            return Err(err("launch", "alpha_range", "alpha must lie in [0, pi/2)"));
        }
        if let Some(i) = &self.interferometer {
            if i.sigma != 1 && i.sigma != -1 {
                return Err(err("interferometer", "sigma", "sigma must be +1 or -1"));
            }
        }
        if self.analysis.set.is_empty() {
            return Err(err("analysis", "set", "analysis set is empty"));
        }
        let t = &self.tolerances;
        if [t.geodesic_rtol, t.geodesic_atol, t.quad_rel, t.quad_abs].iter().any(|&x| !(x > 0.0)) {
            return Err(err("tolerances", "geodesic_rtol", "tolerances must be positive"));
        }
        if !(tol_scale > 0.0) {
            return Err(CliError::Config("--tol-scale must be positive".into()));
        }
        Ok(Resolved {
            params,
            compare,
            family: self.observer.family.into(),
            r0,
            stop,
            plane: match l.plane {
                PlaneName::Equatorial => LaunchPlane::Equatorial,
                PlaneName::PolarSlice => LaunchPlane::PolarSlice,
            },
            ratios,
            alphas,
            geodesic_tol: GeodesicTolerance { rtol: t.geodesic_rtol * tol_scale, atol: t.geodesic_atol * tol_scale },
            quad_tol: QuadTolerance {
                abs_tol: t.quad_abs * tol_scale,
                rel_tol: t.quad_rel * tol_scale,
                ..QuadTolerance::default()
            },
        })
    }
}

/// Prefixes `msg` with the line of `key` inside `[section]` when it can be found.
fn locate(source: &str, section: &str, key: &str, msg: &str) -> String {
    let mut current = String::new();
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return format!("line {}: {section}.{key}: {msg}", i + 1);
                }
            }
        }
    }
    format!("{section}.{key}: {msg}")
}

//! Interferometric observables of a WRA difference: two-photon HOM
//! amplitudes, Mach-Zehnder fringes, and the satellite constellation that
//! fixes the arm lengths.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::geodesic::{integrate, launch_with_ratio, GeodesicTolerance, LaunchPlane, StopCondition, Trajectory};
use crate::quadrature::{self, QuadTolerance};
use crate::spacetime::KerrParams;
use crate::tetrad::{ObserverFamily, TetradField};
use crate::wigner::{integrate_wra, iwra_rate, lambda_along};

/// Coefficients of `|2,0>`, `|0,2>` and `|1,1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonAmplitudes {
    pub amp_20: Complex64,
    pub amp_02: Complex64,
    pub amp_11: Complex64,
}

impl TwoPhotonAmplitudes {
    pub fn total_probability(&self) -> f64 {
        self.amp_20.norm_sqr() + self.amp_02.norm_sqr() + self.amp_11.norm_sqr()
    }
}

/// State after the first beam splitter and the `pi/2` phase plate.
pub fn hom_input_split() -> TwoPhotonAmplitudes {
    TwoPhotonAmplitudes {
        amp_20: Complex64::new(0.5, 0.0),
        amp_02: Complex64::new(0.0, -0.5),
        amp_11: Complex64::new(0.0, 0.0),
    }
}

/// Output amplitudes at the second beam splitter when the arms differ by
/// the WRA `delta_psi`; the global phase `-i` is dropped.
pub fn hom_output(delta_psi: f64, sigma: i8) -> TwoPhotonAmplitudes {
    let ie = Complex64::i() * Complex64::from_polar(1.0, f64::from(sigma) * delta_psi);
    let side = (ie + 1.0) * (0.5 * FRAC_1_SQRT_2);
    TwoPhotonAmplitudes { amp_20: side, amp_02: side, amp_11: (ie - 1.0) * 0.5 }
}

/// Coincidence rate in the closed form `(1 - sin(sigma dpsi)) / 2`.
pub fn coincidence_rate(delta_psi: f64, sigma: i8) -> f64 {
    0.5 * (1.0 - (f64::from(sigma) * delta_psi).sin())
}

/// `|amp_11|^2` from [`hom_output`], which equals `(1 + sin(sigma dpsi)) / 2`.
pub fn coincidence_from_amplitudes(delta_psi: f64, sigma: i8) -> f64 {
    hom_output(delta_psi, sigma).amp_11.norm_sqr()
}

/// Closed form minus amplitude modulus; always `-sin(sigma dpsi)`.
pub fn coincidence_discrepancy(delta_psi: f64, sigma: i8) -> f64 {
    coincidence_rate(delta_psi, sigma) - coincidence_from_amplitudes(delta_psi, sigma)
}

/// Two-port Mach-Zehnder intensities for relative phase `sigma dpsi`.
pub fn mz_intensity(delta_psi: f64, sigma: i8) -> (f64, f64) {
    let half = 0.5 * f64::from(sigma) * delta_psi;
    (half.cos().powi(2), half.sin().powi(2))
}

/// Triangle data of the constellation: Alice's image at distance `a` from
/// the centre, David at `b`, arms launched at `alpha` from the radial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationGeometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub ab: f64,
    pub ad: f64,
}

impl ConstellationGeometry {
    /// Relative residuals of the three defining relations.
    pub fn residuals(&self) -> [f64; 3] {
        let Self { a, b, c, h, alpha, beta, ab, ad } = *self;
        [
            (a * a + b * b - 2.0 * a * b * (2.0 * beta).cos() - c * c).abs() / (c * c),
            (a * a + c * c - 2.0 * a * c * (std::f64::consts::PI - alpha).cos() - b * b).abs() / (b * b),
            ((ab - h / alpha.sin()).abs() / ab).max((h * (1.0 / alpha.tan() + (FRAC_PI_2 - alpha + 2.0 * beta).tan()) - ad).abs() / ad),
        ]
    }

    /// Radius of Bob, reached from Alice's image after `ab` along the arm.
    pub fn bob_radius(&self) -> f64 {
        (self.a * self.a + self.ab * self.ab + 2.0 * self.a * self.ab * self.alpha.cos()).sqrt()
    }
}

/// `c` from the law of cosines at Alice's image.
pub fn chord_to_david(a: f64, b: f64, alpha: f64) -> f64 {
    let s = alpha.sin();
    -a * alpha.cos() + (b * b - a * a * s * s).sqrt()
}

/// Solves for `beta`, then `h` and `AB`. With `ad = None` the Alice-David
/// distance is taken as `c`.
pub fn solve_constellation(a: f64, b: f64, alpha: f64, ad: Option<f64>) -> Result<ConstellationGeometry> {
    if !(a > 0.0 && b > 0.0 && alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::DomainError("constellation needs a, b > 0 and 0 < alpha < pi/2"));
    }
    let c = chord_to_david(a, b, alpha);
    let ad = ad.unwrap_or(c);
    if !(c > 0.0) || !(ad > 0.0) {
        return Err(Error::NoSolution);
    }
    let f = |beta: f64| a * a + b * b - 2.0 * a * b * (2.0 * beta).cos() - c * c;
    let beta = find_root(f, 0.0, FRAC_PI_2, 1e-12)?;
    let h = ad / (1.0 / alpha.tan() + (FRAC_PI_2 - alpha + 2.0 * beta).tan());
    if !(h > 0.0) {
        return Err(Error::NoSolution);
    }
    Ok(ConstellationGeometry { a, b, c, h, alpha, beta, ab: h / alpha.sin(), ad })
}

/// Bracketed bisection down to a narrow bracket, then secant polishing.
fn find_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSolution);
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f(x0), f(x1));
    for _ in 0..50 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > lo - 1e-6 && x2 < hi + 1e-6) {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
        if (x1 - x0).abs() < tol {
            return Ok(x1);
        }
    }
    Ok(if f0.abs() < f1.abs() { x0 } else { x1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    TwoPhotonHom,
    Classical,
    SinglePhoton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerScenario {
    pub params: KerrParams,
    pub alice_radius: f64,
    pub david_radius: f64,
    /// Launch angle from the radial direction; the arms use `+-tan(alpha)`.
    pub alpha: f64,
    pub family: ObserverFamily,
    pub source: Source,
    pub sigma: i8,
    pub ad: Option<f64>,
}

impl InterferometerScenario {
    pub fn new(params: KerrParams, alice_radius: f64, david_radius: f64, alpha: f64) -> Self {
        Self {
            params,
            alice_radius,
            david_radius,
            alpha,
            family: ObserverFamily::PolarOrbit,
            source: Source::TwoPhotonHom,
            sigma: 1,
            ad: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerResult {
    pub alpha: f64,
    pub geometry: Option<ConstellationGeometry>,
    pub bob_radius: f64,
    /// From the radial shortcut `2 D(r_B) - D(r_D)`.
    pub delta_psi: f64,
    /// From the four legs summed separately on single trajectories.
    pub delta_psi_four_leg: f64,
    pub sigma: i8,
}

impl InterferometerResult {
    pub fn coincidence(&self, sigma: i8) -> f64 {
        coincidence_rate(self.delta_psi, sigma)
    }

    pub fn mz(&self) -> (f64, f64) {
        mz_intensity(self.delta_psi, self.sigma)
    }
}

fn arm(params: &KerrParams, r0: f64, ratio: f64, stop: f64) -> Result<Trajectory> {
    let (q, st) = launch_with_ratio(params, r0, ratio, LaunchPlane::Equatorial, 1.0)?;
    integrate(params, &q, &st, StopCondition::Radius(stop), &GeodesicTolerance::default())
}

/// WRA accumulated up to `xi_split` and over the remainder of `traj`.
fn split_wra(traj: &Trajectory, field: &TetradField, xi_split: f64, tol: &QuadTolerance) -> Result<(f64, f64)> {
    let mut breaks = traj.breakpoints();
    let pos = breaks.partition_point(|&x| x < xi_split);
    if breaks[pos.min(breaks.len() - 1)] != xi_split {
        breaks.insert(pos, xi_split);
    }
    let segs = quadrature::integrate(
        |xi| {
            let (l, k) = lambda_along(traj, field, xi)?;
            let (g, r) = iwra_rate(&l, &k.n())?;
            Ok([g + r])
        },
        &breaks,
        tol,
    )?;
    let (mut first, mut rest) = (0.0, 0.0);
    for s in &segs {
        if s.b <= xi_split {
            first += s.value[0];
        } else {
            rest += s.value[0];
        }
    }
    Ok((first, rest))
}

/// Relative WRA between the two arms of the constellation.
pub fn scenario_delta_psi(scn: &InterferometerScenario, tol: &QuadTolerance) -> Result<InterferometerResult> {
    let p = &scn.params;
    let field = TetradField::new(*p, scn.family);
    let (geometry, r_bob) = if scn.alpha == 0.0 {
        (None, scn.alice_radius)
    } else {
        let g = solve_constellation(scn.alice_radius, scn.david_radius, scn.alpha, scn.ad)?;
        (Some(g), g.bob_radius())
    };
    if !(r_bob < scn.david_radius) {
        return Err(Error::DomainError("Bob must lie below David"));
    }
    let ratio = scn.alpha.tan();
    let psi_to = |sign: f64, stop: f64| -> Result<f64> {
        if stop == scn.alice_radius {
            return Ok(0.0);
        }
        Ok(integrate_wra(&arm(p, scn.alice_radius, sign * ratio, stop)?, &field, tol)?.psi())
    };
    let d_bob = psi_to(1.0, r_bob)? - psi_to(-1.0, r_bob)?;
    let d_david = psi_to(1.0, scn.david_radius)? - psi_to(-1.0, scn.david_radius)?;
    let delta_psi = 2.0 * d_bob - d_david;

    let pos = arm(p, scn.alice_radius, ratio, scn.david_radius)?;
    let neg = arm(p, scn.alice_radius, -ratio, scn.david_radius)?;
    let split = |t: &Trajectory| -> Result<(f64, f64)> {
        match t.xi_at_radius(r_bob) {
            Some(x) if x > t.xi_start() => split_wra(t, &field, x, tol),
            _ => Ok((0.0, integrate_wra(t, &field, tol)?.psi())),
        }
    };
    let (ab, cd) = split(&pos)?;
    let (ac, bd) = split(&neg)?;
    let four_leg = ab - ac + bd - cd;

    Ok(InterferometerResult { alpha: scn.alpha, geometry, bob_radius: r_bob, delta_psi, delta_psi_four_leg: four_leg, sigma: scn.sigma })
}

pub fn write_results_csv<W: Write>(results: &[InterferometerResult], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "alpha",
        "alpha_deg",
        "delta_psi_rad",
        "delta_psi_deg",
        "coincidence_rate_sigma_plus",
        "coincidence_rate_sigma_minus",
        "mz_port1",
        "mz_port2",
    ])?;
    for r in results {
        let (m1, m2) = r.mz();
        w.write_record([
            fmt17(r.alpha),
            fmt17(r.alpha.to_degrees()),
            fmt17(r.delta_psi),
            fmt17(r.delta_psi.to_degrees()),
            fmt17(r.coincidence(1)),
            fmt17(r.coincidence(-1)),
            fmt17(m1),
            fmt17(m2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

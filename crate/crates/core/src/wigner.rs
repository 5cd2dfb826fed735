//! Infinitesimal local Lorentz generator along a photon path and the
//! accumulated Wigner rotation angle of its helicity states.
//!
//! `LambdaMatrix::m[(b, a)]` holds `lambda^b_a`, the rate at which the local
//! frame turns per unit affine parameter as seen by the photon. Local
//! momenta are transported by `dk/dxi = -lambda k`.

use std::io::Write;

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::geodesic::Trajectory;
use crate::littlegroup::{eta, wigner_angle, NullWaveVector};
use crate::quadrature::{self, QuadTolerance, Segment};
use crate::spacetime::{christoffel_at, ConnectionCoefficients, Event};
use crate::tetrad::{Tetrad, TetradField};

/// Base finite-difference steps: radial steps are `FD_STEP * r`, angular
/// steps are `FD_STEP` radians (polar steps shrink near the axis). Each
/// derivative is Richardson-extrapolated over `h`, `h/2` and `h/4`.
pub const FD_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMatrix {
    pub m: Matrix4<f64>,
    pub event: Event,
}

impl LambdaMatrix {
    pub fn zero(event: Event) -> Self {
        Self { m: Matrix4::zeros(), event }
    }

    /// `lambda^b_a`.
    pub fn get(&self, b: usize, a: usize) -> f64 {
        self.m[(b, a)]
    }

    /// `max |lambda_ba + lambda_ab|` with indices lowered by `eta`, relative
    /// to the largest entry.
    pub fn antisymmetry_residual(&self) -> f64 {
        let low = eta() * self.m;
        let scale = self.m.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (low + low.transpose()).amax() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMomentum {
    pub khat: NullWaveVector,
}

impl LocalMomentum {
    pub fn n(&self) -> Vector3<f64> {
        self.khat.n()
    }
}

/// Local components `k^a = e^a_mu k^mu` of a null global momentum.
pub fn local_momentum(field: &TetradField, tetrad: &Tetrad, k_global: &Vector4<f64>) -> Result<LocalMomentum> {
    let k = tetrad.to_local(&field.params, k_global)?;
    let norm = -k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + k[3] * k[3];
    if norm.abs() > 1e-10 * k[0] * k[0] || !(k[0] > 0.0) {
        return Err(Error::NormViolation { norm, expected: 0.0 });
    }
    Ok(LocalMomentum { khat: NullWaveVector::new(k)? })
}

fn central4(f: &dyn Fn(f64) -> Result<Matrix4<f64>>, h: f64) -> Result<Matrix4<f64>> {
    let d = (f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h);
    if d.iter().all(|x| x.is_finite()) {
        Ok(d)
    } else {
        Err(Error::DifferentiationFailure)
    }
}

/// Coordinate derivative `d_mu e_a^nu` of the field at `event`.
pub fn field_derivative(field: &TetradField, event: &Event, mu: usize) -> Result<Matrix4<f64>> {
    let h = match mu {
        1 => FD_STEP * event.r,
        2 => FD_STEP.min(0.05 * event.theta.sin()),
        _ => FD_STEP,
    };
    let f = |d: f64| field.evaluate(&event.shifted(mu, d)).map(|t| t.e);
    let d1 = central4(&f, h)?;
    let d2 = central4(&f, 0.5 * h)?;
    let d4 = central4(&f, 0.25 * h)?;
    let r1 = (d2 * 16.0 - d1) / 15.0;
    let r2 = (d4 * 16.0 - d2) / 15.0;
    Ok((r2 * 64.0 - r1) / 63.0)
}

/// `lambda^b_a = e^b_nu k^mu (d_mu e_a^nu + Gamma^nu_{mu rho} e_a^rho)`.
pub fn lambda_at(field: &TetradField, event: &Event, k_global: &Vector4<f64>) -> Result<LambdaMatrix> {
    let tetrad = field.evaluate(event)?;
    lambda_with_tetrad(field, &tetrad, k_global)
}

fn lambda_with_tetrad(field: &TetradField, tetrad: &Tetrad, k: &Vector4<f64>) -> Result<LambdaMatrix> {
    let gamma = christoffel_at(&field.params, &tetrad.event)?;
    lambda_from_parts(field, tetrad, k, &gamma)
}

/// [`lambda_at`] with a caller-supplied connection.
pub fn lambda_with_connection(
    field: &TetradField,
    event: &Event,
    k_global: &Vector4<f64>,
    gamma: &ConnectionCoefficients,
) -> Result<LambdaMatrix> {
    let tetrad = field.evaluate(event)?;
    lambda_from_parts(field, &tetrad, k_global, gamma)
}

fn lambda_from_parts(field: &TetradField, tetrad: &Tetrad, k: &Vector4<f64>, gamma: &ConnectionCoefficients) -> Result<LambdaMatrix> {
    let event = tetrad.event;
    let mut nabla = Matrix4::zeros();
    for mu in 1..4 {
        if k[mu] != 0.0 {
            nabla += field_derivative(field, &event, mu)? * k[mu];
        }
    }
    for a in 0..4 {
        let col = nabla.column(a) + gamma.contract(k, &tetrad.vector(a));
        nabla.set_column(a, &col);
    }
    Ok(LambdaMatrix { m: tetrad.dual(&field.params)? * nabla, event })
}

/// `(geodetic, residual)` rates per unit affine parameter.
pub fn iwra_rate(lambda: &LambdaMatrix, n: &Vector3<f64>) -> Result<(f64, f64)> {
    let l = |b, a| lambda.get(b, a);
    let den = 1.0 + n[2];
    if !(den > 1e-12) {
        return Err(Error::AntipodalSingularity(n[2]));
    }
    let residual = n[0] / den * (-l(0, 2) + l(2, 3)) + n[1] / den * (l(0, 1) + l(3, 1));
    Ok((l(1, 2), residual))
}

/// Local generator and photon momentum at affine parameter `xi`.
pub fn lambda_along(traj: &Trajectory, field: &TetradField, xi: f64) -> Result<(LambdaMatrix, LocalMomentum)> {
    let (event, k) = traj.state_at(xi);
    let tetrad = field.evaluate(&event)?;
    let local = local_momentum(field, &tetrad, &k)?;
    Ok((lambda_with_tetrad(field, &tetrad, &k)?, local))
}

/// Default quadrature tolerance for WRA integrals.
pub fn default_tolerance() -> QuadTolerance {
    QuadTolerance::default()
}

/// Adaptive quadrature of an arbitrary vector of rates built from
/// `(lambda, n)` along the trajectory.
pub fn integrate_rates<const D: usize, F>(
    traj: &Trajectory,
    field: &TetradField,
    tol: &QuadTolerance,
    rates: F,
) -> Result<Vec<Segment<D>>>
where
    F: Fn(&LambdaMatrix, &Vector3<f64>) -> Result<[f64; D]>,
{
    let breaks = traj.breakpoints();
    quadrature::integrate(
        |xi| {
            let (l, k) = lambda_along(traj, field, xi)?;
            rates(&l, &k.n())
        },
        &breaks,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WraNode {
    pub xi: f64,
    pub rate_geodetic: f64,
    pub rate_residual: f64,
    pub cum_geodetic: f64,
    pub cum_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WraTrace {
    pub nodes: Vec<WraNode>,
    pub psi_geodetic: f64,
    pub psi_residual: f64,
    /// Sum of the per-segment error estimates.
    pub error: f64,
}

impl WraTrace {
    pub fn psi(&self) -> f64 {
        self.psi_geodetic + self.psi_residual
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "xi",
            "rate_geodetic",
            "rate_residual",
            "cum_geodetic_rad",
            "cum_residual_rad",
            "cum_total_rad",
            "cum_geodetic_deg",
            "cum_residual_deg",
            "cum_total_deg",
        ])?;
        for n in &self.nodes {
            let total = n.cum_geodetic + n.cum_residual;
            w.write_record([
                fmt17(n.xi),
                fmt17(n.rate_geodetic),
                fmt17(n.rate_residual),
                fmt17(n.cum_geodetic),
                fmt17(n.cum_residual),
                fmt17(total),
                fmt17(n.cum_geodetic.to_degrees()),
                fmt17(n.cum_residual.to_degrees()),
                fmt17(total.to_degrees()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulated WRA along the whole trajectory.
pub fn integrate_wra(traj: &Trajectory, field: &TetradField, tol: &QuadTolerance) -> Result<WraTrace> {
    let segs = integrate_rates(traj, field, tol, |l, n| {
        let (g, r) = iwra_rate(l, n)?;
        Ok([g, r])
    })?;
    let rate_at = |xi: f64| -> Result<(f64, f64)> {
        let (l, k) = lambda_along(traj, field, xi)?;
        iwra_rate(&l, &k.n())
    };
    let mut nodes = Vec::with_capacity(segs.len() + 1);
    let (g0, r0) = rate_at(segs[0].a)?;
    nodes.push(WraNode { xi: segs[0].a, rate_geodetic: g0, rate_residual: r0, cum_geodetic: 0.0, cum_residual: 0.0 });
    let (mut cg, mut cr, mut err) = (0.0, 0.0, 0.0);
    for s in &segs {
        cg += s.value[0];
        cr += s.value[1];
        err += s.error;
        let (g, r) = rate_at(s.b)?;
        nodes.push(WraNode { xi: s.b, rate_geodetic: g, rate_residual: r, cum_geodetic: cg, cum_residual: cr });
    }
    Ok(WraTrace { nodes, psi_geodetic: cg, psi_residual: cr, error: err })
}

/// WRA of the single finite local Lorentz step `exp(lambda dxi)` acting on
/// the local momentum at `event`.
pub fn finite_step_crosscheck(field: &TetradField, event: &Event, k_global: &Vector4<f64>, dxi: f64) -> Result<f64> {
    let tetrad = field.evaluate(event)?;
    let local = local_momentum(field, &tetrad, k_global)?;
    let l = lambda_with_tetrad(field, &tetrad, k_global)?;
    wigner_angle(&(l.m * dxi).exp(), &local.khat)
}

fn commutator(a: &Matrix4<f64>, b: &Matrix4<f64>) -> Matrix4<f64> {
    a * b - b * a
}

/// Ordered product of the finite local Lorentz steps along the path, with
/// each trajectory sample interval split into `subdivisions` fourth-order
/// Magnus steps; earliest factor leftmost.
pub fn composed_transformation(traj: &Trajectory, field: &TetradField, subdivisions: usize) -> Result<Matrix4<f64>> {
    let breaks = traj.breakpoints();
    let node = 0.5 / 3f64.sqrt();
    let c2 = 3f64.sqrt() / 12.0;
    let mut p = Matrix4::identity();
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / subdivisions as f64;
        for i in 0..subdivisions {
            let mid = w[0] + (i as f64 + 0.5) * h;
            let a1 = lambda_along(traj, field, mid - node * h)?.0.m;
            let a2 = lambda_along(traj, field, mid + node * h)?.0.m;
            let omega = (a1 + a2) * (0.5 * h) + commutator(&a1, &a2) * (c2 * h * h);
            p *= omega.exp();
        }
    }
    Ok(p)
}

/// WRA from the composed finite transformation, read off with one
/// little-group extraction at the end of the path and Richardson-combined
/// over `m` and `2m` subdivisions.
pub fn composed_wra(traj: &Trajectory, field: &TetradField, m: usize) -> Result<f64> {
    let (end, k) = traj.state_at(traj.xi_end());
    let tetrad = field.evaluate(&end)?;
    let khat = local_momentum(field, &tetrad, &k)?.khat;
    let coarse = wigner_angle(&composed_transformation(traj, field, m)?, &khat)?;
    let fine = wigner_angle(&composed_transformation(traj, field, 2 * m)?, &khat)?;
    let fine_c = coarse + wrap(fine - coarse);
    Ok(wrap((16.0 * fine_c - coarse) / 15.0))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{integrate, launch_with_ratio, GeodesicTolerance, LaunchPlane, StopCondition};
    use crate::littlegroup::{lorentz_residual, rotation_to};
    use crate::spacetime::KerrParams;
    use crate::tetrad::{static_frame, ObserverFamily};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_generator(rng: &mut ChaCha8Rng, scale: f64) -> Matrix4<f64> {
        let mut low = Matrix4::zeros();
        for b in 0..4 {
            for a in (b + 1)..4 {
                let v: f64 = rng.gen_range(-scale..scale);
                low[(b, a)] = v;
                low[(a, b)] = -v;
            }
        }
        eta() * low
    }

    #[test]
    fn iwra_rate_examples() {
        let ev = Event::new(0.0, 1.0, 1.0, 0.0);
        assert_eq!(iwra_rate(&LambdaMatrix::zero(ev), &Vector3::new(0.6, 0.0, 0.8)).unwrap(), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = LambdaMatrix { m: random_generator(&mut rng, 1.0), event: ev };
        assert_eq!(iwra_rate(&l, &Vector3::z()).unwrap().1, 0.0);
        let mut rot = LambdaMatrix::zero(ev);
        rot.m[(1, 2)] = 0.3;
        rot.m[(2, 1)] = -0.3;
        assert_eq!(iwra_rate(&rot, &Vector3::new(0.0, 0.6, 0.8)).unwrap(), (0.3, 0.0));
        assert!(matches!(iwra_rate(&rot, &-Vector3::z()), Err(Error::AntipodalSingularity(_))));
    }

    #[test]
    fn finite_steps_reproduce_the_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let l = random_generator(&mut rng, 1.0);
            let n = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.9..1.0)).normalize();
            let k = NullWaveVector::from_direction(1.3, &n).unwrap();
            let dxi = 1e-4;
            let lam = LambdaMatrix { m: l, event: Event::new(0.0, 1.0, 1.0, 0.0) };
            let (g, r) = iwra_rate(&lam, &n).unwrap();
            let step = wigner_angle(&(l * dxi).exp(), &k).unwrap();
            let scale = l.amax() * dxi;
            assert!((step - (g + r) * dxi).abs() <= 10.0 * scale * scale * 1.0f64.max((g + r).abs() * dxi / scale));
        }
    }

    #[test]
    fn minkowski_static_lambda_vanishes_for_radial_photons() {
        let p = KerrParams::minkowski();
        let field = TetradField::new(p, ObserverFamily::Static);
        let ev = Event::new(0.0, 5.0, 1.0, 0.4);
        let k = Vector4::new(1.0, -1.0, 0.0, 0.0);
        let l = lambda_at(&field, &ev, &k).unwrap();
        assert!(l.m.amax() < 1e-12, "{}", l.m);
    }

    #[test]
    fn static_radial_photon_only_boosts() {
        let p = KerrParams::schwarzschild(1.0).unwrap();
        let field = TetradField::new(p, ObserverFamily::Static);
        let r = 10.0;
        let ev = Event::new(0.0, r, 1.0, 0.0);
        let f = 1.0 - 2.0 / r;
        let k = Vector4::new(1.0 / f, 1.0, 0.0, 0.0);
        let t = static_frame(&p, &ev).unwrap();
        let local = local_momentum(&field, &t, &k).unwrap();
        assert_relative_eq!(local.khat.components()[0], f.powf(-0.5), epsilon = 1e-14);
        assert_relative_eq!(local.khat.components()[1], f.powf(-0.5), epsilon = 1e-14);
        let l = lambda_at(&field, &ev, &k).unwrap();
        // static observers accelerate outward with a = M / (r^2 sqrt(f))
        let accel = 1.0 / (r * r * f.sqrt());
        assert_relative_eq!(l.get(0, 1), accel * f.powf(-0.5), max_relative = 1e-10);
        assert_relative_eq!(l.get(1, 0), l.get(0, 1), max_relative = 1e-10);
        let mut rest = l.m;
        rest[(0, 1)] = 0.0;
        rest[(1, 0)] = 0.0;
        assert!(rest.amax() < 1e-11 * accel);
    }

    fn kerr_path(plane: LaunchPlane, ratio: f64) -> (KerrParams, Trajectory) {
        let p = KerrParams::new(1.0, 0.5).unwrap();
        let (q, st) = launch_with_ratio(&p, 12.0, ratio, plane, 1.0).unwrap();
        let tr = integrate(&p, &q, &st, StopCondition::Radius(40.0), &GeodesicTolerance::default()).unwrap();
        (p, tr)
    }

    #[test]
    fn composed_route_matches_quadrature() {
        for (plane, fam) in [
            (LaunchPlane::Equatorial, ObserverFamily::CircularEquatorial),
            (LaunchPlane::Equatorial, ObserverFamily::PolarOrbit),
            (LaunchPlane::PolarSlice, ObserverFamily::Zamo),
        ] {
            let (p, tr) = kerr_path(plane, 0.4);
            let field = TetradField::new(p, fam);
            let trace = integrate_wra(&tr, &field, &default_tolerance()).unwrap();
            let oracle = composed_wra(&tr, &field, 2).unwrap();
            assert!(wrap(trace.psi() - oracle).abs() < 1e-8, "{fam:?}: {} vs {oracle}", trace.psi());
        }
    }

    #[test]
    fn antisymmetry_along_a_path() {
        let (p, tr) = kerr_path(LaunchPlane::Equatorial, -0.7);
        let field = TetradField::new(p, ObserverFamily::PolarOrbit);
        for xi in tr.breakpoints() {
            let (l, _) = lambda_along(&tr, &field, xi).unwrap();
            assert!(l.antisymmetry_residual() < 1e-8);
        }
    }

    #[test]
    fn momentum_axis_kills_residual() {
        let (p, tr) = kerr_path(LaunchPlane::Equatorial, 0.9);
        let congruence = crate::tetrad::PhotonCongruence { consts: tr.conserved, sign_r: 1.0, sign_theta: 1.0 };
        let field = TetradField::new(p, ObserverFamily::CircularEquatorial)
            .with_axis(crate::tetrad::AxisPolicy::AlongMomentum(congruence));
        let trace = integrate_wra(&tr, &field, &default_tolerance()).unwrap();
        assert!(trace.psi_residual.abs() < 1e-12);
    }

    #[test]
    fn rotation_to_is_lorentz() {
        let r = rotation_to(&Vector3::new(0.2, -0.4, 0.3).normalize()).unwrap();
        assert!(lorentz_residual(&r) < 1e-14);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(0.0), 0.0);
        assert_relative_eq!(wrap(3.0 * std::f64::consts::PI), std::f64::consts::PI, epsilon = 1e-15);
        assert_relative_eq!(wrap(-FRAC_PI_2 - 4.0 * std::f64::consts::PI), -FRAC_PI_2, epsilon = 1e-14);
    }
}

//! First-order Kerr geodesics.
//!
//! The equations are integrated in Mino time `lambda` (`dxi = Sigma dlambda`)
//! with `v_r = Sigma dr/dxi` and `v_theta = Sigma dtheta/dxi` carried as state
//! variables. Their derivatives `R'/2` and `Theta'/2` are regular at turning
//! points, so the square-root branches switch on their own; after every
//! accepted step the velocities are projected back onto `+-sqrt(R)` and
//! `+-sqrt(Theta)`.

use std::io::Write;

use nalgebra::Vector4;

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::ode::{self, Tolerances};
use crate::spacetime::{
    conserved_from_momentum, metric_at, momentum_with_radial, ConservedQuantities, Event, KerrParams, RADICAND_SLACK,
};
use crate::tetrad::zamo_frame;

/// Maximum number of radial or polar turning points before giving up.
pub const MAX_TURNING_POINTS: usize = 10_000;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub event: Event,
    pub sign_r: f64,
    pub sign_theta: f64,
    pub xi: f64,
}

impl GeodesicState {
    pub fn new(event: Event, sign_r: f64, sign_theta: f64) -> Self {
        Self { event, sign_r, sign_theta, xi: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub xi: f64,
    pub state: GeodesicState,
    pub momentum: Vector4<f64>,
}

/// Where to stop integrating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    Radius(f64),
    Theta(f64),
    AffineLength(f64),
    /// Crossing of the half-plane `phi = value`.
    Azimuth(f64),
}

impl StopCondition {
    fn residual(&self, y: &[f64; 7]) -> f64 {
        match *self {
            StopCondition::Radius(r) => y[1] - r,
            StopCondition::Theta(t) => y[2] - t,
            StopCondition::AffineLength(l) => y[6] - l,
            StopCondition::Azimuth(p) => y[3] - p,
        }
    }

    fn scale(&self, length: f64) -> f64 {
        match *self {
            StopCondition::Radius(r) => r.abs(),
            StopCondition::Theta(_) | StopCondition::Azimuth(_) => 1.0,
            StopCondition::AffineLength(l) => l.abs().max(length),
        }
    }
}

/// `rtol` is relative; `atol` is relative to the natural scale of each
/// state component (radius for lengths, `|E| r^2` for `v_r`, ...).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GeodesicTolerance {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13 }
    }
}

impl GeodesicTolerance {
    pub fn scaled(&self, factor: f64) -> Self {
        Self { rtol: self.rtol * factor, atol: self.atol * factor }
    }
}

#[derive(Debug, Clone, Copy)]
struct Aux {
    v_r: f64,
    v_theta: f64,
    dv_r: f64,
    dv_theta: f64,
}

/// A sampled geodesic with cubic Hermite dense output in `xi`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub conserved: ConservedQuantities,
    pub params: KerrParams,
    pub turning_points: usize,
    aux: Vec<Aux>,
    equatorial: bool,
}

fn sign_of(v: f64, fallback: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        fallback
    }
}

/// Right-hand side in `xi`: `dx^mu/dxi` with branches from the signs.
pub fn rhs(params: &KerrParams, consts: &ConservedQuantities, state: &GeodesicState) -> Result<Vector4<f64>> {
    crate::spacetime::momentum_from_conserved(params, consts, &state.event, state.sign_r, state.sign_theta)
}

struct System<'a> {
    params: &'a KerrParams,
    consts: &'a ConservedQuantities,
    equatorial: bool,
}

impl System<'_> {
    fn deriv(&self, y: &[f64; 7]) -> [f64; 7] {
        let (r, th) = (y[1], y[2]);
        let ev = Event::new(y[0], r, th, y[3]);
        let sigma = self.params.sigma(r, th);
        let k = momentum_with_radial(self.params, self.consts, &ev, y[4], y[5]);
        let (_, dr) = self.consts.radial_potential(self.params, r);
        let dth = if self.equatorial { 0.0 } else { self.consts.polar_potential(self.params, th).1 };
        [sigma * k[0], y[4], y[5], sigma * k[3], 0.5 * dr, 0.5 * dth, sigma]
    }

    fn aux(&self, y: &[f64; 7]) -> Aux {
        let sigma = self.params.sigma(y[1], y[2]);
        let d = self.deriv(y);
        Aux { v_r: y[4], v_theta: y[5], dv_r: d[4] / sigma, dv_theta: d[5] / sigma }
    }

    /// Projects the velocities back onto the potentials where they are positive.
    fn project(&self, y: &mut [f64; 7], prev: &[f64; 7]) -> Result<()> {
        let (rr, drr) = self.consts.radial_potential(self.params, y[1]);
        let scale_r = self.consts.radial_scale(self.params, y[1]);
        if rr < -RADICAND_SLACK.sqrt() * scale_r {
            return Err(Error::NegativeRadicand { which: "radial", value: rr });
        }
        if rr > 0.0 {
            let s = sign_of(y[4], sign_of(prev[4], sign_of(drr, 1.0)));
            y[4] = s * rr.sqrt();
        }
        if self.equatorial {
            y[5] = 0.0;
            return Ok(());
        }
        let (th, dth) = self.consts.polar_potential(self.params, y[2]);
        let scale_t = self.consts.polar_scale(self.params, y[2]);
        if th < -RADICAND_SLACK.sqrt() * scale_t {
            return Err(Error::NegativeRadicand { which: "polar", value: th });
        }
        if th > 0.0 {
            let s = sign_of(y[5], sign_of(prev[5], sign_of(dth, 1.0)));
            y[5] = s * th.sqrt();
        }
        Ok(())
    }
}

fn make_sample(params: &KerrParams, consts: &ConservedQuantities, y: &[f64; 7], signs: (f64, f64)) -> Sample {
    let ev = Event::new(y[0], y[1], y[2], y[3]);
    let state = GeodesicState { event: ev, sign_r: signs.0, sign_theta: signs.1, xi: y[6] };
    Sample { xi: y[6], state, momentum: momentum_with_radial(params, consts, &ev, y[4], y[5]) }
}

/// Integrates the geodesic from `initial` until `stop` is met.
pub fn integrate(
    params: &KerrParams,
    consts: &ConservedQuantities,
    initial: &GeodesicState,
    stop: StopCondition,
    tol: &GeodesicTolerance,
) -> Result<Trajectory> {
    params.check_event(&initial.event)?;
    let e0 = initial.event;
    let (rr, _) = consts.radial_potential(params, e0.r);
    let (th, _) = consts.polar_potential(params, e0.theta);
    if rr < -RADICAND_SLACK * consts.radial_scale(params, e0.r) {
        return Err(Error::NegativeRadicand { which: "radial", value: rr });
    }
    if th < -RADICAND_SLACK * consts.polar_scale(params, e0.theta) {
        return Err(Error::NegativeRadicand { which: "polar", value: th });
    }
    let equatorial = e0.theta.cos().abs() < 1e-12 && th <= 1e-12 * consts.polar_scale(params, e0.theta);
    let sys = System { params, consts, equatorial };
    let v_theta = if equatorial { 0.0 } else { initial.sign_theta * th.max(0.0).sqrt() };
    let mut y = [e0.t, e0.r, e0.theta, e0.phi, initial.sign_r * rr.max(0.0).sqrt(), v_theta, initial.xi];

    let scale = e0.r;
    let e_abs = consts.energy.abs().max(f64::MIN_POSITIVE);
    let a = tol.atol;
    let otol = Tolerances { rtol: tol.rtol, atol: [a * scale, a * scale, a, a, a * e_abs * scale * scale, a * e_abs * scale, a * scale / e_abs] };

    let mut signs = (initial.sign_r, initial.sign_theta);
    let mut samples = vec![make_sample(params, consts, &y, signs)];
    let mut aux = vec![sys.aux(&y)];
    let mut turning = 0usize;

    let mut f = |_x: f64, y: &[f64; 7]| sys.deriv(y);
    let mut dy = f(0.0, &y);
    let kmax = dy[0].abs().max(dy[1].abs()).max(dy[2].abs() * scale).max(dy[3].abs() * scale);
    let mut h = if kmax > 0.0 { 1e-4 * scale / kmax } else { 1e-4 * scale / dy[6] };
    let mut lam = 0.0;
    let stop_scale = stop.scale(scale);

    for _ in 0..MAX_STEPS {
        let trial = ode::dp45_trial(&mut f, lam, &y, &dy, h, &otol);
        if trial.error > 1.0 || !trial.y[1].is_finite() {
            h = ode::next_step(h, trial.error);
            if (h * dy[6]).abs() < 1e-15 * y[6].abs().max(scale) {
                return Err(Error::StepUnderflow { step: h * dy[6], xi: y[6] });
            }
            continue;
        }
        let g_start = stop.residual(&y);
        let g_end = stop.residual(&trial.y);
        let crossed = g_end == 0.0 || g_start * g_end < 0.0;
        let (mut y_new, h_used) = if crossed {
            let (yr, hr) = refine_stop(&mut f, lam, &y, &dy, h, &otol, &stop, stop_scale);
            (yr, hr)
        } else {
            (trial.y, h)
        };
        sys.project(&mut y_new, &y)?;
        if y_new[1] <= params.outer_horizon() * (1.0 + 1e-9) {
            return Err(Error::HorizonViolation { r: y_new[1], horizon: params.outer_horizon() });
        }
        let ev = Event::new(y_new[0], y_new[1], y_new[2], y_new[3]);
        params.check_event(&ev)?;
        let new_signs = (sign_of(y_new[4], signs.0), sign_of(y_new[5], signs.1));
        if new_signs.0 != signs.0 {
            turning += 1;
        }
        if new_signs.1 != signs.1 {
            turning += 1;
        }
        if turning > MAX_TURNING_POINTS {
            return Err(Error::TurningPointStall(MAX_TURNING_POINTS));
        }
        signs = new_signs;
        lam += h_used;
        y = y_new;
        dy = f(lam, &y);
        samples.push(make_sample(params, consts, &y, signs));
        aux.push(sys.aux(&y));
        if crossed {
            return Ok(Trajectory { samples, conserved: *consts, params: *params, turning_points: turning, aux, equatorial });
        }
        h = ode::next_step(h, trial.error);
        if y[1] > 1e7 * scale {
            return Err(Error::StopNotReached("photon escaped"));
        }
    }
    Err(Error::StopNotReached("step budget exhausted"))
}

#[allow(clippy::too_many_arguments)]
fn refine_stop<F>(
    f: &mut F,
    lam: f64,
    y: &[f64; 7],
    dy: &[f64; 7],
    h: f64,
    tol: &Tolerances<7>,
    stop: &StopCondition,
    stop_scale: f64,
) -> ([f64; 7], f64)
where
    F: FnMut(f64, &[f64; 7]) -> [f64; 7],
{
    let g_start = stop.residual(y);
    let (mut lo, mut hi) = (0.0, h);
    let (mut g_lo, mut g_hi) = (g_start, stop.residual(&ode::dp45_trial(f, lam, y, dy, h, tol).y));
    let mut best = (ode::dp45_trial(f, lam, y, dy, h, tol).y, h);
    for iter in 0..200 {
        // regula falsi with bisection every third iteration
        let mid = if iter % 3 == 2 || g_hi == g_lo { 0.5 * (lo + hi) } else { lo - g_lo * (hi - lo) / (g_hi - g_lo) };
        let mid = if mid <= lo.min(hi) || mid >= lo.max(hi) { 0.5 * (lo + hi) } else { mid };
        let yt = ode::dp45_trial(f, lam, y, dy, mid, tol).y;
        let g = stop.residual(&yt);
        best = (yt, mid);
        if g.abs() < 1e-9 * stop_scale {
            break;
        }
        if (g > 0.0) == (g_lo > 0.0) && g_lo != 0.0 {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
            g_hi = g;
        }
    }
    best
}

impl Trajectory {
    pub fn xi_start(&self) -> f64 {
        self.samples[0].xi
    }

    pub fn xi_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].xi
    }

    pub fn is_equatorial(&self) -> bool {
        self.equatorial
    }

    /// Sample abscissae, usable as a quadrature partition.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.xi).collect()
    }

    fn locate(&self, xi: f64) -> usize {
        let n = self.samples.len();
        let idx = self.samples.partition_point(|s| s.xi <= xi);
        idx.clamp(1, n - 1) - 1
    }

    /// Dense-output event and momentum at `xi`. The momentum is rebuilt
    /// from the constants of motion, so it is null to rounding.
    pub fn state_at(&self, xi: f64) -> (Event, Vector4<f64>) {
        let i = self.locate(xi);
        let (s0, s1) = (&self.samples[i], &self.samples[i + 1]);
        let (a0, a1) = (&self.aux[i], &self.aux[i + 1]);
        let mut c = [0.0; 4];
        for (mu, cm) in c.iter_mut().enumerate() {
            *cm = ode::hermite(s0.xi, s1.xi, s0.state.event.coord(mu), s1.state.event.coord(mu), s0.momentum[mu], s1.momentum[mu], xi).0;
        }
        let ev = Event::new(c[0], c[1], c[2], c[3]);
        let v_r = ode::hermite(s0.xi, s1.xi, a0.v_r, a1.v_r, a0.dv_r, a1.dv_r, xi).0;
        let v_th = if self.equatorial { 0.0 } else { ode::hermite(s0.xi, s1.xi, a0.v_theta, a1.v_theta, a0.dv_theta, a1.dv_theta, xi).0 };
        let (rr, _) = self.conserved.radial_potential(&self.params, ev.r);
        let (th, _) = self.conserved.polar_potential(&self.params, ev.theta);
        let vr = sign_of(v_r, 0.0) * rr.max(0.0).sqrt();
        let vt = if self.equatorial { 0.0 } else { sign_of(v_th, 0.0) * th.max(0.0).sqrt() };
        (ev, momentum_with_radial(&self.params, &self.conserved, &ev, vr, vt))
    }

    /// Smallest `xi` at which `r` equals `radius`, by bisection on the dense output.
    pub fn xi_at_radius(&self, radius: f64) -> Option<f64> {
        let r0 = self.samples[0].state.event.r;
        let i = self.samples.iter().position(|s| (s.state.event.r - radius) * (r0 - radius) <= 0.0)?;
        if i == 0 {
            return Some(self.samples[0].xi);
        }
        let (mut lo, mut hi) = (self.samples[i - 1].xi, self.samples[i].xi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.state_at(mid).0.r - radius) * (r0 - radius) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Largest relative drift of `E`, `Phi`, `C` and of the null norm over all samples.
    pub fn conservation_drift(&self) -> Result<f64> {
        let c = &self.conserved;
        let e_scale = c.energy.abs();
        let l_scale = c.axial_momentum.abs().max(e_scale * self.samples[0].state.event.r);
        let c_scale = c.k.abs().max(l_scale * l_scale);
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let g = metric_at(&self.params, &s.state.event)?;
            let k = s.momentum;
            let mut norm_scale = 0.0;
            for mu in 0..4 {
                for nu in 0..4 {
                    norm_scale += (g[(mu, nu)] * k[mu] * k[nu]).abs();
                }
            }
            let norm = k.dot(&(g * k)) + c.delta1;
            worst = worst.max(norm.abs() / norm_scale);
            let lowered = g * k;
            let energy = -lowered[0];
            let axial = lowered[3];
            let (sn, cs) = s.state.event.theta.sin_cos();
            let a = self.params.spin();
            let carter = lowered[2] * lowered[2] + cs * cs * (a * a * (c.delta1 - energy * energy) + axial * axial / (sn * sn));
            worst = worst.max((energy - c.energy).abs() / e_scale);
            worst = worst.max((axial - c.axial_momentum).abs() / l_scale);
            worst = worst.max((carter - c.carter).abs() / c_scale);
        }
        Ok(worst)
    }

    /// Constants and initial state of the same curve traversed backwards
    /// from the final sample (`xi -> -xi`).
    pub fn reversed_from_end(&self) -> (ConservedQuantities, GeodesicState) {
        let c = &self.conserved;
        let rev = ConservedQuantities::new(&self.params, -c.energy, -c.axial_momentum, c.carter, c.delta1);
        let last = self.samples[self.samples.len() - 1];
        let state = GeodesicState::new(last.state.event, -last.state.sign_r, -last.state.sign_theta);
        (rev, state)
    }

    /// CSV with columns `xi, t, r, theta, phi, kt, kr, ktheta, kphi, theta_deg, phi_deg`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["xi", "t", "r", "theta", "phi", "kt", "kr", "ktheta", "kphi", "theta_deg", "phi_deg"])?;
        for s in &self.samples {
            let e = &s.state.event;
            let k = &s.momentum;
            let row = [s.xi, e.t, e.r, e.theta, e.phi, k[0], k[1], k[2], k[3], e.theta.to_degrees(), e.phi.to_degrees()];
            w.write_record(row.map(fmt17))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Photon plane for [`launch_with_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaunchPlane {
    /// Momentum in the `r`-`phi` plane at the equator.
    Equatorial,
    /// Momentum in the `r`-`theta` plane at the equator.
    PolarSlice,
}

/// Photon at `(0, r0, pi/2, 0)` whose momentum, measured by the zero
/// angular momentum observer, has transverse-to-radial ratio `ratio`.
/// The result is scaled to energy `e_norm`.
pub fn launch_with_ratio(
    params: &KerrParams,
    r0: f64,
    ratio: f64,
    plane: LaunchPlane,
    e_norm: f64,
) -> Result<(ConservedQuantities, GeodesicState)> {
    if !ratio.is_finite() || !(e_norm > 0.0) {
        return Err(Error::ForbiddenDirection);
    }
    let chi = ratio.atan();
    let (s, c) = chi.sin_cos();
    let local = match plane {
        LaunchPlane::Equatorial => Vector4::new(1.0, c, 0.0, s),
        LaunchPlane::PolarSlice => Vector4::new(1.0, c, s, 0.0),
    };
    let event = Event::new(0.0, r0, std::f64::consts::FRAC_PI_2, 0.0);
    let (consts, sign_theta) = launch_local(params, &event, &local, e_norm)?;
    let sign_theta = if plane == LaunchPlane::PolarSlice { sign_theta } else { 1.0 };
    Ok((consts, GeodesicState::new(event, 1.0, sign_theta)))
}

/// Constants for a photon with ZAMO-frame momentum `local` at `event`,
/// scaled to energy `e_norm`; also returns the sign of `k^theta`.
pub fn launch_local(params: &KerrParams, event: &Event, local: &Vector4<f64>, e_norm: f64) -> Result<(ConservedQuantities, f64)> {
    let frame = zamo_frame(params, event)?;
    let k = frame.e * local;
    let g = metric_at(params, event)?;
    let energy = -(g * k)[0];
    if !(energy > 0.0) || !(local[0] > 0.0) {
        return Err(Error::ForbiddenDirection);
    }
    let k = k * (e_norm / energy);
    let mut consts = conserved_from_momentum(params, event, &k, 0.0)?;
    consts.energy = e_norm;
    Ok((consts, sign_of(k[2], 1.0)))
}

//! Kerr geometry in Boyer-Lindquist coordinates: metric, inverse metric,
//! analytic connection, and the conserved quantities of geodesic motion.
//!
//! Coordinates are ordered `(t, r, theta, phi)` and the signature is
//! `(-, +, +, +)`. All lengths are geometric (meters, `G = c = 1`).

use nalgebra::{Matrix4, Vector4};

use crate::constants;
use crate::error::{Error, Result};

/// Below this value of `sin(theta)` the chart is treated as singular.
pub const POLE_THRESHOLD: f64 = 1e-8;

/// Mass and spin of the central body, both as geometric lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrParams {
    mass: f64,
    spin: f64,
}

impl KerrParams {
    pub fn new(mass: f64, spin: f64) -> Result<Self> {
        if !(mass >= 0.0) || !mass.is_finite() || !spin.is_finite() || spin.abs() > mass {
            return Err(Error::InvalidSpin { mass, spin });
        }
        Ok(Self { mass, spin })
    }

    pub fn minkowski() -> Self {
        Self { mass: 0.0, spin: 0.0 }
    }

    pub fn schwarzschild(mass: f64) -> Result<Self> {
        Self::new(mass, 0.0)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn spin(&self) -> f64 {
        self.spin
    }

    pub fn schwarzschild_radius(&self) -> f64 {
        2.0 * self.mass
    }

    /// Outer horizon `r+ = M + sqrt(M^2 - a^2)`.
    pub fn outer_horizon(&self) -> f64 {
        self.mass + (self.mass * self.mass - self.spin * self.spin).max(0.0).sqrt()
    }

    pub fn sigma(&self, r: f64, theta: f64) -> f64 {
        let c = theta.cos();
        r * r + self.spin * self.spin * c * c
    }

    pub fn delta(&self, r: f64) -> f64 {
        r * r - 2.0 * self.mass * r + self.spin * self.spin
    }

    /// Rejects events on or inside the horizon and events too close to a pole.
    pub fn check_event(&self, event: &Event) -> Result<()> {
        let horizon = self.outer_horizon();
        if !(event.r > horizon) || !event.r.is_finite() {
            return Err(Error::HorizonViolation { r: event.r, horizon });
        }
        let s = event.theta.sin();
        if !(s >= POLE_THRESHOLD) {
            return Err(Error::PoleSingularity { sin_theta: s });
        }
        Ok(())
    }
}

/// A spacetime point in Boyer-Lindquist coordinates. `phi` is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Event {
    pub fn new(t: f64, r: f64, theta: f64, phi: f64) -> Self {
        Self { t, r, theta, phi }
    }

    /// Coordinate `mu` in `(t, r, theta, phi)` order.
    pub fn coord(&self, mu: usize) -> f64 {
        [self.t, self.r, self.theta, self.phi][mu]
    }

    /// Copy with coordinate `mu` shifted by `delta`.
    pub fn shifted(&self, mu: usize, delta: f64) -> Self {
        let mut e = *self;
        match mu {
            0 => e.t += delta,
            1 => e.r += delta,
            2 => e.theta += delta,
            _ => e.phi += delta,
        }
        e
    }
}

pub type MetricTensor = Matrix4<f64>;

/// `gamma[mu][nu][lambda]` holds the Levi-Civita symbol of the second kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCoefficients {
    pub gamma: [[[f64; 4]; 4]; 4],
}

impl ConnectionCoefficients {
    /// `Gamma^mu_{nu lambda} a^nu b^lambda`.
    pub fn contract(&self, a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
        let mut out = Vector4::zeros();
        for mu in 0..4 {
            let mut acc = 0.0;
            for nu in 0..4 {
                for la in 0..4 {
                    acc += self.gamma[mu][nu][la] * a[nu] * b[la];
                }
            }
            out[mu] = acc;
        }
        out
    }
}

pub fn metric_at(params: &KerrParams, event: &Event) -> Result<MetricTensor> {
    params.check_event(event)?;
    Ok(metric_unchecked(params, event.r, event.theta))
}

pub(crate) fn metric_unchecked(params: &KerrParams, r: f64, theta: f64) -> MetricTensor {
    let (m, a) = (params.mass, params.spin);
    let (s, c) = theta.sin_cos();
    let s2 = s * s;
    let sigma = r * r + a * a * c * c;
    let delta = params.delta(r);
    let mut g = Matrix4::zeros();
    g[(0, 0)] = -(1.0 - 2.0 * m * r / sigma);
    g[(0, 3)] = -2.0 * m * a * r * s2 / sigma;
    g[(3, 0)] = g[(0, 3)];
    g[(1, 1)] = sigma / delta;
    g[(2, 2)] = sigma;
    g[(3, 3)] = (r * r + a * a + 2.0 * m * a * a * r * s2 / sigma) * s2;
    g
}

pub fn inverse_metric_at(params: &KerrParams, event: &Event) -> Result<MetricTensor> {
    params.check_event(event)?;
    Ok(inverse_metric_unchecked(params, event.r, event.theta))
}

pub(crate) fn inverse_metric_unchecked(params: &KerrParams, r: f64, theta: f64) -> MetricTensor {
    let g = metric_unchecked(params, r, theta);
    let s = theta.sin();
    let det_tphi = -params.delta(r) * s * s;
    let mut gi = Matrix4::zeros();
    gi[(0, 0)] = g[(3, 3)] / det_tphi;
    gi[(3, 3)] = g[(0, 0)] / det_tphi;
    gi[(0, 3)] = -g[(0, 3)] / det_tphi;
    gi[(3, 0)] = gi[(0, 3)];
    gi[(1, 1)] = 1.0 / g[(1, 1)];
    gi[(2, 2)] = 1.0 / g[(2, 2)];
    gi
}

/// Analytic `(d_r g, d_theta g)`; the metric does not depend on `t` or `phi`.
pub fn metric_derivatives(params: &KerrParams, r: f64, theta: f64) -> [MetricTensor; 2] {
    let (m, a) = (params.mass, params.spin);
    let a2 = a * a;
    let (s, c) = theta.sin_cos();
    let s2 = s * s;
    let sigma = r * r + a2 * c * c;
    let sigma2 = sigma * sigma;
    let delta = params.delta(r);
    let w = sigma - 2.0 * r * r;

    let mut dr = Matrix4::zeros();
    dr[(0, 0)] = 2.0 * m * w / sigma2;
    dr[(0, 3)] = -2.0 * m * a * s2 * w / sigma2;
    dr[(3, 0)] = dr[(0, 3)];
    dr[(1, 1)] = (2.0 * r * delta - sigma * (2.0 * r - 2.0 * m)) / (delta * delta);
    dr[(2, 2)] = 2.0 * r;
    dr[(3, 3)] = 2.0 * r * s2 + 2.0 * m * a2 * s2 * s2 * w / sigma2;

    let mut dth = Matrix4::zeros();
    dth[(0, 0)] = 4.0 * m * r * a2 * s * c / sigma2;
    dth[(0, 3)] = -4.0 * m * a * r * s * c * (r * r + a2) / sigma2;
    dth[(3, 0)] = dth[(0, 3)];
    dth[(1, 1)] = -2.0 * a2 * s * c / delta;
    dth[(2, 2)] = -2.0 * a2 * s * c;
    dth[(3, 3)] = 2.0 * (r * r + a2) * s * c
        + 2.0 * m * a2 * r * (4.0 * s2 * s * c * sigma + 2.0 * a2 * s2 * s2 * s * c) / sigma2;
    [dr, dth]
}

pub fn christoffel_at(params: &KerrParams, event: &Event) -> Result<ConnectionCoefficients> {
    params.check_event(event)?;
    Ok(christoffel_unchecked(params, event.r, event.theta))
}

pub(crate) fn christoffel_unchecked(params: &KerrParams, r: f64, theta: f64) -> ConnectionCoefficients {
    let gi = inverse_metric_unchecked(params, r, theta);
    let [d_r, d_th] = metric_derivatives(params, r, theta);
    let zero = Matrix4::zeros();
    let dg = [&zero, &d_r, &d_th, &zero];
    // lowered[rho][nu][la] = (d_nu g_{rho la} + d_la g_{rho nu} - d_rho g_{nu la}) / 2
    let mut lowered = [[[0.0; 4]; 4]; 4];
    for (rho, low) in lowered.iter_mut().enumerate() {
        for nu in 0..4 {
            for la in nu..4 {
                let v = 0.5 * (dg[nu][(rho, la)] + dg[la][(rho, nu)] - dg[rho][(nu, la)]);
                low[nu][la] = v;
                low[la][nu] = v;
            }
        }
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for (mu, gm) in gamma.iter_mut().enumerate() {
        for nu in 0..4 {
            for la in 0..4 {
                let mut acc = 0.0;
                for (rho, low) in lowered.iter().enumerate() {
                    acc += gi[(mu, rho)] * low[nu][la];
                }
                gm[nu][la] = acc;
            }
        }
    }
    ConnectionCoefficients { gamma }
}

/// Constants of motion of a Kerr geodesic. `delta1` is 0 for photons and 1
/// for massive test particles with unit-normalized four-velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub axial_momentum: f64,
    pub carter: f64,
    pub k: f64,
    pub delta1: f64,
}

impl ConservedQuantities {
    /// Builds the set from `E`, `Phi`, `C`; `K` follows from the spin.
    pub fn new(params: &KerrParams, energy: f64, axial_momentum: f64, carter: f64, delta1: f64) -> Self {
        let b = axial_momentum - params.spin() * energy;
        Self { energy, axial_momentum, carter, k: carter + b * b, delta1 }
    }

    /// Multiplies the momentum by `c > 0`. Only meaningful for photons.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            energy: self.energy * c,
            axial_momentum: self.axial_momentum * c,
            carter: self.carter * c * c,
            k: self.k * c * c,
            delta1: self.delta1,
        }
    }

    /// `P = E (r^2 + a^2) - a Phi`.
    pub fn p_radial(&self, params: &KerrParams, r: f64) -> f64 {
        let a = params.spin();
        self.energy * (r * r + a * a) - a * self.axial_momentum
    }

    /// Radial potential `R(r)` and `dR/dr`.
    pub fn radial_potential(&self, params: &KerrParams, r: f64) -> (f64, f64) {
        let m = params.mass();
        let p = self.p_radial(params, r);
        let delta = params.delta(r);
        let q = self.k + self.delta1 * r * r;
        let value = p * p - delta * q;
        let deriv = 4.0 * p * self.energy * r - (2.0 * r - 2.0 * m) * q - 2.0 * self.delta1 * r * delta;
        (value, deriv)
    }

    /// Polar potential `Theta(theta)` and `dTheta/dtheta`.
    pub fn polar_potential(&self, params: &KerrParams, theta: f64) -> (f64, f64) {
        let a = params.spin();
        let (s, c) = theta.sin_cos();
        let t = a * self.energy * s - self.axial_momentum / s;
        let value = self.k - self.delta1 * a * a * c * c - t * t;
        let dt = a * self.energy * c + self.axial_momentum * c / (s * s);
        let deriv = 2.0 * self.delta1 * a * a * c * s - 2.0 * t * dt;
        (value, deriv)
    }

    /// Magnitude scale of the radial potential terms, for tolerances.
    pub(crate) fn radial_scale(&self, params: &KerrParams, r: f64) -> f64 {
        let p = self.p_radial(params, r);
        p * p + (params.delta(r) * (self.k + self.delta1 * r * r)).abs()
    }

    pub(crate) fn polar_scale(&self, params: &KerrParams, theta: f64) -> f64 {
        let a = params.spin();
        let (s, c) = theta.sin_cos();
        let t = a * self.energy * s - self.axial_momentum / s;
        self.k.abs() + self.delta1 * a * a * c * c + t * t
    }
}

/// Relative slack on the radicands before they count as negative.
pub(crate) const RADICAND_SLACK: f64 = 1e-10;

/// Contravariant momentum `k^mu = dx^mu/dxi` reconstructed from the
/// constants of motion, with the square-root branches fixed by the signs.
pub fn momentum_from_conserved(
    params: &KerrParams,
    consts: &ConservedQuantities,
    event: &Event,
    sign_r: f64,
    sign_theta: f64,
) -> Result<Vector4<f64>> {
    params.check_event(event)?;
    let (rr, _) = consts.radial_potential(params, event.r);
    if rr < -RADICAND_SLACK * consts.radial_scale(params, event.r) {
        return Err(Error::NegativeRadicand { which: "radial", value: rr });
    }
    let (th, _) = consts.polar_potential(params, event.theta);
    if th < -RADICAND_SLACK * consts.polar_scale(params, event.theta) {
        return Err(Error::NegativeRadicand { which: "polar", value: th });
    }
    Ok(momentum_with_radial(params, consts, event, sign_r * rr.max(0.0).sqrt(), sign_theta * th.max(0.0).sqrt()))
}

/// Momentum from the constants with radicands clamped at zero; a radicand
/// within `1e-12` of its scale counts as zero so that planar motion keeps an
/// exactly vanishing component.
pub(crate) fn momentum_clamped(
    params: &KerrParams,
    consts: &ConservedQuantities,
    event: &Event,
    sign_r: f64,
    sign_theta: f64,
) -> Vector4<f64> {
    let (rr, _) = consts.radial_potential(params, event.r);
    let (th, _) = consts.polar_potential(params, event.theta);
    let rr = if rr <= 1e-12 * consts.radial_scale(params, event.r) { 0.0 } else { rr };
    let th = if th <= 1e-12 * consts.polar_scale(params, event.theta) { 0.0 } else { th };
    momentum_with_radial(params, consts, event, sign_r * rr.sqrt(), sign_theta * th.sqrt())
}

/// Same as [`momentum_from_conserved`] but with `Sigma dr/dxi = v_r` and
/// `Sigma dtheta/dxi = v_theta` supplied directly.
pub(crate) fn momentum_with_radial(
    params: &KerrParams,
    consts: &ConservedQuantities,
    event: &Event,
    v_r: f64,
    v_theta: f64,
) -> Vector4<f64> {
    let (m, a) = (params.mass(), params.spin());
    let r = event.r;
    let (s, _) = event.theta.sin_cos();
    let s2 = s * s;
    let sigma = params.sigma(r, event.theta);
    let delta = params.delta(r);
    let (e, l) = (consts.energy, consts.axial_momentum);
    let r2a2 = r * r + a * a;
    let kt = (e * (r2a2 * r2a2 - delta * a * a * s2) - 2.0 * m * r * a * l) / (delta * sigma);
    let kphi = (2.0 * m * r * a * e + (sigma - 2.0 * m * r) * l / s2) / (delta * sigma);
    Vector4::new(kt, v_r / sigma, v_theta / sigma, kphi)
}

/// Extracts `E`, `Phi`, `C`, `K` from a four-momentum at an event.
pub fn conserved_from_momentum(
    params: &KerrParams,
    event: &Event,
    four_momentum: &Vector4<f64>,
    delta1: f64,
) -> Result<ConservedQuantities> {
    let g = metric_at(params, event)?;
    let norm = four_momentum.dot(&(g * four_momentum));
    let mut scale = delta1;
    for mu in 0..4 {
        for nu in 0..4 {
            scale += (g[(mu, nu)] * four_momentum[mu] * four_momentum[nu]).abs();
        }
    }
    if (delta1 != 0.0 && delta1 != 1.0) || (norm + delta1).abs() > 1e-10 * scale {
        return Err(Error::NormViolation { norm, expected: -delta1 });
    }
    let lowered = g * four_momentum;
    let energy = -lowered[0];
    let axial = lowered[3];
    let p_theta = lowered[2];
    let a = params.spin();
    let (s, c) = event.theta.sin_cos();
    let carter = p_theta * p_theta + c * c * (a * a * (delta1 - energy * energy) + axial * axial / (s * s));
    Ok(ConservedQuantities::new(params, energy, axial, carter, delta1))
}

/// Preset gravitating bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Body {
    Earth,
    /// M87* with spin given as a fraction of the Schwarzschild radius
    /// (0.45 corresponds to `a = 0.9 M`).
    M87 { spin_over_rs: f64 },
    Custom { mass_kg: f64, spin_over_rs: f64 },
}

pub fn unit_system(body: Body) -> Result<KerrParams> {
    match body {
        Body::Earth => KerrParams::new(constants::EARTH_MASS_LENGTH, 0.0),
        Body::M87 { spin_over_rs } => {
            let m = constants::M87_SOLAR_MASSES * constants::SUN_MASS_LENGTH;
            KerrParams::new(m, spin_over_rs * 2.0 * m)
        }
        Body::Custom { mass_kg, spin_over_rs } => {
            let m = constants::mass_kg_to_length(mass_kg);
            KerrParams::new(m, spin_over_rs * 2.0 * m)
        }
    }
}

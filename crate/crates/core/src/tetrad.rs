//! Orthonormal observer frames on Kerr: ZAMO and static frames, Carter's
//! symmetric basis, and Marck's parallel-transported tetrads for circular
//! equatorial and polar spherical orbits.
//!
//! A [`Tetrad`] stores `e_a^mu` with the Boyer-Lindquist index as the row
//! and the local index as the column, so `tetrad.e * k_local` is a global
//! vector.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::littlegroup::{eta, rotation_to};
use crate::ode::{self, Tolerances};
use crate::quadrature::{self, QuadTolerance};
use crate::spacetime::{
    christoffel_at, metric_at, momentum_clamped, momentum_with_radial, ConservedQuantities, Event, KerrParams,
    RADICAND_SLACK,
};

/// Reference azimuth at which the equatorial family has `Psi = Psi0`.
pub const EQUATORIAL_PHI_REF: f64 = -PI;
/// Reference colatitude at which the polar family has `Psi = Psi0`.
pub const POLAR_THETA_REF: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tetrad {
    pub e: Matrix4<f64>,
    pub event: Event,
}

impl Tetrad {
    pub fn vector(&self, a: usize) -> Vector4<f64> {
        self.e.column(a).into_owned()
    }

    /// Dual co-frame `e^a_mu = eta_ab g_mu nu e_b^nu`; row `a`, column `mu`.
    pub fn dual(&self, params: &KerrParams) -> Result<Matrix4<f64>> {
        let g = metric_at(params, &self.event)?;
        Ok(eta() * self.e.transpose() * g)
    }

    /// Local components of a global vector.
    pub fn to_local(&self, params: &KerrParams, v: &Vector4<f64>) -> Result<Vector4<f64>> {
        Ok(self.dual(params)? * v)
    }

    /// `max |g(e_a, e_b) - eta_ab|`.
    pub fn orthonormality_residual(&self, params: &KerrParams) -> Result<f64> {
        let g = metric_at(params, &self.event)?;
        let gram = self.e.transpose() * g * self.e;
        Ok((gram - eta()).amax())
    }

    /// True when `e_0` is future directed and `(e_1, e_2, e_3)` has the
    /// orientation of `(r, theta, phi)`.
    pub fn is_right_handed(&self) -> bool {
        self.e[(0, 0)] > 0.0 && self.e.determinant() > 0.0
    }

    pub fn write_csv_row<W: Write>(&self, writer: &mut csv::Writer<W>) -> csv::Result<()> {
        let ev = self.event;
        let mut row = vec![fmt17(ev.t), fmt17(ev.r), fmt17(ev.theta), fmt17(ev.phi)];
        for mu in 0..4 {
            for a in 0..4 {
                row.push(fmt17(self.e[(mu, a)]));
            }
        }
        writer.write_record(&row)
    }

    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = ["t", "r", "theta", "phi"].iter().map(|s| s.to_string()).collect();
        for mu in ["t", "r", "theta", "phi"] {
            for a in 0..4 {
                h.push(format!("e{a}_{mu}"));
            }
        }
        h
    }
}

/// Zero-angular-momentum observers.
pub fn zamo_frame(params: &KerrParams, event: &Event) -> Result<Tetrad> {
    let g = metric_at(params, event)?;
    let omega = -g[(0, 3)] / g[(3, 3)];
    let alpha = (-g[(0, 0)] + g[(0, 3)] * g[(0, 3)] / g[(3, 3)]).sqrt();
    let mut e = Matrix4::zeros();
    e[(0, 0)] = 1.0 / alpha;
    e[(3, 0)] = omega / alpha;
    e[(1, 1)] = 1.0 / g[(1, 1)].sqrt();
    e[(2, 2)] = 1.0 / g[(2, 2)].sqrt();
    e[(3, 3)] = 1.0 / g[(3, 3)].sqrt();
    Ok(Tetrad { e, event: *event })
}

/// Observers at rest along `d_t`; undefined inside the ergoregion.
pub fn static_frame(params: &KerrParams, event: &Event) -> Result<Tetrad> {
    let g = metric_at(params, event)?;
    if !(g[(0, 0)] < 0.0) {
        return Err(Error::OutsideDomain("static observers need g_tt < 0"));
    }
    let n0 = (-g[(0, 0)]).sqrt();
    let mut e = Matrix4::zeros();
    e[(0, 0)] = 1.0 / n0;
    e[(1, 1)] = 1.0 / g[(1, 1)].sqrt();
    e[(2, 2)] = 1.0 / g[(2, 2)].sqrt();
    // d_phi + (d_phi . e0) e0, then normalise
    let proj = g[(0, 3)] / n0;
    let v = Vector4::new(proj / n0, 0.0, 0.0, 1.0);
    let norm = v.dot(&(g * v)).sqrt();
    e.set_column(3, &(v / norm));
    Ok(Tetrad { e, event: *event })
}

/// Carter's symmetric orthonormal basis; column `a` is `e_(a)` in
/// Boyer-Lindquist components.
pub fn carter_basis(params: &KerrParams, event: &Event) -> Result<Matrix4<f64>> {
    params.check_event(event)?;
    let a = params.spin();
    let r = event.r;
    let s = event.theta.sin();
    let sigma = params.sigma(r, event.theta);
    let delta = params.delta(r);
    let rs = sigma.sqrt();
    let rds = (delta * sigma).sqrt();
    let mut c = Matrix4::zeros();
    c[(0, 0)] = (r * r + a * a) / rds;
    c[(3, 0)] = a / rds;
    c[(1, 1)] = (delta / sigma).sqrt();
    c[(2, 2)] = 1.0 / rs;
    c[(0, 3)] = a * s / rs;
    c[(3, 3)] = 1.0 / (rs * s);
    Ok(c)
}

/// Maps rows `lambda_a` given in Carter components to a Boyer-Lindquist tetrad.
pub fn carter_to_bl(params: &KerrParams, event: &Event, rows: &Matrix4<f64>) -> Result<Tetrad> {
    let c = carter_basis(params, event)?;
    Ok(Tetrad { e: c * rows.transpose(), event: *event })
}

/// Inverse of [`carter_to_bl`].
pub fn bl_to_carter(params: &KerrParams, tetrad: &Tetrad) -> Result<Matrix4<f64>> {
    let c = carter_basis(params, &tetrad.event)?;
    let g = metric_at(params, &tetrad.event)?;
    Ok((eta() * c.transpose() * g * tetrad.e).transpose())
}

fn clamped_sqrt(value: f64, scale: f64, which: &'static str) -> Result<f64> {
    if value < -RADICAND_SLACK * scale {
        return Err(Error::NegativeRadicand { which, value });
    }
    Ok(value.max(0.0).sqrt())
}

/// Carter-basis components of a timelike geodesic's four-velocity.
pub fn carter_velocity(
    params: &KerrParams,
    obs: &ConservedQuantities,
    event: &Event,
    sign_r: f64,
    sign_theta: f64,
) -> Result<Vector4<f64>> {
    params.check_event(event)?;
    let a = params.spin();
    let (r, th) = (event.r, event.theta);
    let s = th.sin();
    let sigma = params.sigma(r, th);
    let delta = params.delta(r);
    let (rr, _) = obs.radial_potential(params, r);
    let (tt, _) = obs.polar_potential(params, th);
    let sr = clamped_sqrt(rr, obs.radial_scale(params, r), "radial")?;
    let st = clamped_sqrt(tt, obs.polar_scale(params, th), "polar")?;
    let rds = (delta * sigma).sqrt();
    Ok(Vector4::new(
        obs.p_radial(params, r) / rds,
        sign_r * sr / rds,
        sign_theta * st / sigma.sqrt(),
        (obs.axial_momentum / s - a * obs.energy * s) / sigma.sqrt(),
    ))
}

/// Marck's tetrad rows `lambda_0..lambda_3` in Carter components for the
/// observer with constants `obs` at `event`, rotated by the transport
/// angle `psi` in the `(lambda_1, lambda_3)` plane.
pub fn marck_tetrad_carter(
    params: &KerrParams,
    obs: &ConservedQuantities,
    event: &Event,
    psi: f64,
    sign_r: f64,
    sign_theta: f64,
) -> Result<Matrix4<f64>> {
    let u = carter_velocity(params, obs, event, sign_r, sign_theta)?;
    let a = params.spin();
    let r = event.r;
    let c = event.theta.cos();
    let k = obs.k;
    let bound = a * a * c * c;
    if !(k > bound) {
        return Err(Error::DegenerateK { k, bound });
    }
    let sk = k.sqrt();
    let alpha = ((k - bound) / (r * r + k)).sqrt();
    let beta = 1.0 / alpha;
    let ac = a * c;
    let l2 = Vector4::new(ac * u[1], ac * u[0], r * u[3], -r * u[2]) / sk;
    let x = Vector4::new(alpha * u[0], alpha * u[1], beta * u[2], beta * u[3]);
    let y = Vector4::new(alpha * r * u[1], alpha * r * u[0], -beta * ac * u[3], beta * ac * u[2]) / sk;
    let (sp, cp) = psi.sin_cos();
    let l1 = y * cp - x * sp;
    let l3 = y * sp + x * cp;
    Ok(Matrix4::from_rows(&[u.transpose(), l1.transpose(), l2.transpose(), l3.transpose()]))
}

/// Proper-time rate `dPsi/dtau` that keeps Marck's tetrad parallel transported.
pub fn marck_rate(params: &KerrParams, obs: &ConservedQuantities, r: f64, theta: f64) -> Result<f64> {
    let a = params.spin();
    let (s, c) = theta.sin_cos();
    let k = obs.k;
    let bound = a * a * c * c;
    if !(k > bound) {
        return Err(Error::DegenerateK { k, bound });
    }
    let sigma = params.sigma(r, theta);
    let p = obs.p_radial(params, r);
    Ok(k.sqrt() / sigma * (p / (r * r + k) + a * (obs.axial_momentum - a * obs.energy * s * s) / (k - bound)))
}

/// Prograde circular equatorial orbit at radius `r`.
pub fn circular_equatorial_constants(params: &KerrParams, r: f64) -> Result<ConservedQuantities> {
    let (m, a) = (params.mass(), params.spin());
    let sm = m.sqrt();
    let sr = r.sqrt();
    let core = r * sr - 3.0 * m * sr + 2.0 * a * sm;
    if !(core > 0.0) || !(r > params.outer_horizon()) {
        return Err(Error::OutsideDomain("no circular timelike orbit at this radius"));
    }
    let d = r.powf(0.75) * core.sqrt();
    let e = (r * sr - 2.0 * m * sr + a * sm) / d;
    let l = sm * (r * r - 2.0 * a * sm * sr + a * a) / d;
    Ok(ConservedQuantities::new(params, e, l, 0.0, 1.0))
}

/// Spherical orbit with zero axial angular momentum at radius `r`.
///
/// Solving `R = R' = 0` with `Phi = 0` gives
/// `E^2 = r Delta^2 / ((r^2 + a^2) D)` and
/// `K = r (M r^3 + a^2 r^2 - 3 M a^2 r + a^4) / D` with
/// `D = r^3 - 3 M r^2 + a^2 r + M a^2`, written so that nothing cancels in
/// the weak-field limit.
pub fn polar_orbit_constants(params: &KerrParams, r: f64) -> Result<ConservedQuantities> {
    let (m, a) = (params.mass(), params.spin());
    let a2 = a * a;
    let delta = params.delta(r);
    let d = r * r * r - 3.0 * m * r * r + a2 * r + m * a2;
    if !(d > 0.0) || !(delta > 0.0) {
        return Err(Error::OutsideDomain("no polar spherical orbit at this radius"));
    }
    let e2 = r * delta * delta / ((r * r + a2) * d);
    let k = r * (m * r * r * r + a2 * r * r - 3.0 * m * a2 * r + a2 * a2) / d;
    Ok(ConservedQuantities::new(params, e2.sqrt(), 0.0, k - a2 * e2, 1.0))
}

/// `dPsi/dphi` on a circular equatorial orbit.
pub fn equatorial_psi_rate(params: &KerrParams, obs: &ConservedQuantities, r: f64) -> Result<f64> {
    let ev = Event::new(0.0, r, FRAC_PI_2, 0.0);
    let u = momentum_with_radial(params, obs, &ev, 0.0, 0.0);
    Ok(marck_rate(params, obs, r, FRAC_PI_2)? / u[3])
}

/// `dPsi/dtheta` on a polar spherical orbit moving toward larger `theta`.
pub fn polar_psi_rate(params: &KerrParams, obs: &ConservedQuantities, r: f64, theta: f64) -> Result<f64> {
    let (th, _) = obs.polar_potential(params, theta);
    if !(th > 0.0) {
        return Err(Error::NegativeRadicand { which: "polar", value: th });
    }
    let sigma = params.sigma(r, theta);
    Ok(marck_rate(params, obs, r, theta)? * sigma / th.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    Equatorial,
    Polar,
}

/// `Psi` tabulated along one orbit against `phi` (equatorial) or `theta` (polar).
#[derive(Debug, Clone, PartialEq)]
pub struct MarckAngleSolution {
    pub kind: OrbitKind,
    pub radius: f64,
    pub observer: ConservedQuantities,
    knots: Vec<ode::Knot<1>>,
}

impl MarckAngleSolution {
    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// `(Psi, dPsi/dcoord)` by Hermite interpolation.
    pub fn eval(&self, coord: f64) -> (f64, f64) {
        let ks = &self.knots;
        if ks.len() == 1 {
            return (ks[0].1[0], ks[0].2[0]);
        }
        let increasing = ks[ks.len() - 1].0 > ks[0].0;
        let idx = ks.partition_point(|k| if increasing { k.0 <= coord } else { k.0 >= coord });
        let i = idx.clamp(1, ks.len() - 1);
        let (a, b) = (&ks[i - 1], &ks[i]);
        ode::hermite(a.0, b.0, a.1[0], b.1[0], a.2[0], b.2[0], coord)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.knots.iter().map(|k| (k.0, k.1[0], k.2[0]))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let coord = match self.kind {
            OrbitKind::Equatorial => "phi",
            OrbitKind::Polar => "theta",
        };
        w.write_record([coord, "psi", "psi_deg"])?;
        for (x, p, _) in self.knots() {
            w.write_record([fmt17(x), fmt17(p), fmt17(p.to_degrees())])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the transport angle along one orbit of radius `radius` from
/// `range.0` (where `Psi = psi0`) to `range.1`.
pub fn solve_marck_angle(
    params: &KerrParams,
    kind: OrbitKind,
    radius: f64,
    range: (f64, f64),
    psi0: f64,
) -> Result<MarckAngleSolution> {
    let observer = match kind {
        OrbitKind::Equatorial => circular_equatorial_constants(params, radius)?,
        OrbitKind::Polar => polar_orbit_constants(params, radius)?,
    };
    let rate = |x: f64| -> Result<f64> {
        match kind {
            OrbitKind::Equatorial => equatorial_psi_rate(params, &observer, radius),
            OrbitKind::Polar => polar_psi_rate(params, &observer, radius, x),
        }
    };
    let knots = if range.0 == range.1 {
        vec![(range.0, [psi0], [rate(range.0)?])]
    } else {
        let mut failure = None;
        let tol = Tolerances { rtol: 1e-12, atol: [1e-13] };
        let knots = ode::solve(
            |x, _| match rate(x) {
                Ok(v) => [v],
                Err(e) => {
                    failure.get_or_insert(e);
                    [f64::NAN]
                }
            },
            range.0,
            [psi0],
            range.1,
            &tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        knots?
    };
    Ok(MarckAngleSolution { kind, radius, observer, knots })
}

/// Rotation by `Xi` in the `(e_2, e_3)` plane that zeroes the `coord`
/// component of `e_2` and makes that of `e_3` positive.
pub fn xi_alignment_about(tetrad: &Tetrad, coord: usize) -> Result<(Tetrad, f64)> {
    let (y, x) = (tetrad.e[(coord, 2)], tetrad.e[(coord, 3)]);
    // angular components scale as 1/r
    if y.hypot(x) * tetrad.event.r < 1e-12 {
        return Err(Error::DegenerateAxis);
    }
    let xi = y.atan2(x);
    let (s, c) = xi.sin_cos();
    let (e2, e3) = (tetrad.vector(2), tetrad.vector(3));
    let mut out = *tetrad;
    out.e.set_column(2, &(e2 * c - e3 * s));
    out.e.set_column(3, &(e2 * s + e3 * c));
    Ok((out, xi))
}

/// Aligns the local third axis with the `theta` direction.
pub fn xi_alignment(tetrad: &Tetrad) -> Result<Tetrad> {
    xi_alignment_about(tetrad, 2).map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverFamily {
    Static,
    Zamo,
    /// Circular equatorial Marck observers; the orbit radius follows the
    /// event so the field extends off the orbit.
    CircularEquatorial,
    /// Polar spherical-orbit Marck observers, extended radially likewise.
    PolarOrbit,
}

/// Photon congruence used to point the quantization axis along the local
/// propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonCongruence {
    pub consts: ConservedQuantities,
    pub sign_r: f64,
    pub sign_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisPolicy {
    /// Third axis normal to the observer's orbital plane.
    OrbitNormal,
    /// Third axis opposite to the orbit normal (a half turn about `e_1`).
    Reversed,
    /// Third axis along the photon's local direction of motion.
    AlongMomentum(PhotonCongruence),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetradField {
    pub params: KerrParams,
    pub family: ObserverFamily,
    pub psi0: f64,
    /// Coordinate about which the `Xi` alignment acts, if enabled.
    pub xi_axis: Option<usize>,
    pub axis: AxisPolicy,
}

impl TetradField {
    pub fn new(params: KerrParams, family: ObserverFamily) -> Self {
        let xi_axis = match family {
            ObserverFamily::CircularEquatorial => Some(2),
            ObserverFamily::PolarOrbit => Some(3),
            _ => None,
        };
        Self { params, family, psi0: 0.0, xi_axis, axis: AxisPolicy::OrbitNormal }
    }

    pub fn with_axis(mut self, axis: AxisPolicy) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_psi0(mut self, psi0: f64) -> Self {
        self.psi0 = psi0;
        self
    }

    /// Unaligned Marck or coordinate-adapted frame at `event`.
    pub fn base_frame(&self, event: &Event) -> Result<Tetrad> {
        let p = &self.params;
        match self.family {
            ObserverFamily::Static => static_frame(p, event),
            ObserverFamily::Zamo => zamo_frame(p, event),
            ObserverFamily::CircularEquatorial => {
                if event.theta.cos().abs() > 1e-8 {
                    return Err(Error::OutsideDomain("equatorial family is confined to theta = pi/2"));
                }
                let obs = circular_equatorial_constants(p, event.r)?;
                let psi = self.psi0 + equatorial_psi_rate(p, &obs, event.r)? * (event.phi - EQUATORIAL_PHI_REF);
                // both radicands vanish identically on this family
                let rows = marck_tetrad_carter(p, &obs, event, psi, 0.0, 0.0)?;
                carter_to_bl(p, event, &rows)
            }
            ObserverFamily::PolarOrbit => {
                let obs = polar_orbit_constants(p, event.r)?;
                let psi = self.psi0 + polar_psi_offset(p, &obs, event.r, event.theta)?;
                let rows = marck_tetrad_carter(p, &obs, event, psi, 0.0, 1.0)?;
                carter_to_bl(p, event, &rows)
            }
        }
    }

    pub fn evaluate(&self, event: &Event) -> Result<Tetrad> {
        let mut t = self.base_frame(event)?;
        if let Some(coord) = self.xi_axis {
            t = xi_alignment_about(&t, coord)?.0;
        }
        match self.axis {
            AxisPolicy::OrbitNormal => {}
            AxisPolicy::Reversed => {
                for a in 2..4 {
                    let col = -t.vector(a);
                    t.e.set_column(a, &col);
                }
            }
            AxisPolicy::AlongMomentum(ph) => {
                let k = momentum_clamped(&self.params, &ph.consts, event, ph.sign_r, ph.sign_theta);
                let local = t.to_local(&self.params, &k)?;
                let n = Vector3::new(local[1], local[2], local[3]).normalize();
                let rot = rotation_to(&n)?;
                let r3: Matrix3<f64> = rot.fixed_view::<3, 3>(1, 1).into_owned();
                let spatial = t.e.fixed_view::<4, 3>(0, 1) * r3;
                t.e.fixed_view_mut::<4, 3>(0, 1).copy_from(&spatial);
            }
        }
        Ok(t)
    }
}

/// Free-function form of [`TetradField::evaluate`].
pub fn evaluate_field(field: &TetradField, event: &Event) -> Result<Tetrad> {
    field.evaluate(event)
}

/// `Psi(r, theta) - Psi0` for the polar family: the transport angle
/// accumulated from the equator along the orbit through radius `r`.
fn polar_psi_offset(params: &KerrParams, obs: &ConservedQuantities, r: f64, theta: f64) -> Result<f64> {
    if theta == POLAR_THETA_REF {
        return Ok(0.0);
    }
    let tol = QuadTolerance { abs_tol: 1e-15, rel_tol: 1e-13, max_segments: 200 };
    let segs = quadrature::integrate(|x| Ok([polar_psi_rate(params, obs, r, x)?]), &[POLAR_THETA_REF, theta], &tol)?;
    Ok(quadrature::total(&segs)[0])
}

/// Covariant derivative of the family's frame along the observer's own
/// worldline, relative to the size of the connection term. Only the two
/// orbiting families are meaningful here.
pub fn marck_transport_residual(field: &TetradField, ev: &Event) -> Result<f64> {
    let p = field.params;
    let (obs, coord) = match field.family {
        ObserverFamily::CircularEquatorial => (circular_equatorial_constants(&p, ev.r)?, 3),
        ObserverFamily::PolarOrbit => (polar_orbit_constants(&p, ev.r)?, 2),
        _ => return Err(Error::DomainError("transport residual needs an orbiting family")),
    };
    let (th, _) = obs.polar_potential(&p, ev.theta);
    let u = momentum_with_radial(&p, &obs, ev, 0.0, th.max(0.0).sqrt());
    let h = 1e-4;
    let frame = |k: f64| field.base_frame(&ev.shifted(coord, k * h)).map(|t| t.e);
    let de = (frame(-2.0)? - frame(2.0)? + (frame(1.0)? - frame(-1.0)?) * 8.0) / (12.0 * h);
    let gamma = christoffel_at(&p, ev)?;
    let e = field.base_frame(ev)?;
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for a in 0..4 {
        let conn = gamma.contract(&u, &e.vector(a));
        worst = worst.max((de.column(a) * u[coord] + conn).amax());
        scale = scale.max(conn.amax());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion, followed by indented detail lines, then asserts.

use std::f64::consts::FRAC_PI_2;

use kerr_wra::geodesic::{
    integrate, launch_local, launch_with_ratio, GeodesicState, GeodesicTolerance, LaunchPlane, StopCondition, Trajectory,
};
use kerr_wra::interferometer::{
    coincidence_discrepancy, coincidence_rate, hom_output, scenario_delta_psi, InterferometerScenario,
};
use kerr_wra::littlegroup::{
    boost, classical_field_phase, closed_form_yaw_wra, closed_form_yaw_wra_transverse, rotation_x, rotation_y,
    rotation_z, transform_polarization, wigner_angle, NullWaveVector,
};
use kerr_wra::spacetime::{unit_system, Body, Event, KerrParams};
use kerr_wra::symmetry::{
    delta_psi_azimuth_flip, delta_psi_time_reversal, pt_check, schwarzschild_lambda_closed_form,
};
use kerr_wra::tetrad::{marck_transport_residual, AxisPolicy, ObserverFamily, PhotonCongruence, TetradField};
use kerr_wra::wigner::{composed_wra, default_tolerance, integrate_wra, lambda_along, wrap};
use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-10;
const TRANSPORT_TOL: f64 = 1e-7;
const ANTISYM_TOL: f64 = 1e-8;
const GAUGE_TOL: f64 = 1e-10;
const EQ10_REL_TOL: f64 = 1e-6;
const DUAL_ROUTE_TOL: f64 = 1e-9;
const PT_TOL: f64 = 1e-9;
const PROB_TOL: f64 = 1e-12;
const CLASSICAL_TOL: f64 = 1e-10;

const EARTH_R0: f64 = 6_671e3;
const EARTH_STOP: f64 = 42_371e3;

fn report(name: &str, pass: bool, details: &[String]) -> bool {
    println!("{} {name}", if pass { "PASS" } else { "FAIL" });
    for d in details {
        println!("    {d}");
    }
    pass
}

fn path(p: &KerrParams, r0: f64, ratio: f64, stop: f64) -> Trajectory {
    let (q, st) = launch_with_ratio(p, r0, ratio, LaunchPlane::Equatorial, 1.0).unwrap();
    integrate(p, &q, &st, StopCondition::Radius(stop), &GeodesicTolerance::default()).unwrap()
}

/// Photon leaving `(r0, theta = 1.1)` with ZAMO-frame direction out of
/// both coordinate planes.
fn oblique(p: &KerrParams, r0: f64, stop: f64) -> Trajectory {
    let event = Event::new(0.0, r0, 1.1, 0.0);
    let (q, sign_theta) = launch_local(p, &event, &Vector4::new(1.0, 0.6, 0.48, 0.64), 1.0).unwrap();
    integrate(p, &q, &GeodesicState::new(event, 1.0, sign_theta), StopCondition::Radius(stop), &GeodesicTolerance::default()).unwrap()
}

fn earth() -> KerrParams {
    unit_system(Body::Earth).unwrap()
}

fn m87(spin_over_rs: f64) -> KerrParams {
    unit_system(Body::M87 { spin_over_rs }).unwrap()
}

struct Scenario {
    name: &'static str,
    field: TetradField,
    traj: Trajectory,
}

fn scenarios() -> Vec<Scenario> {
    let mk = KerrParams::minkowski();
    let sch = KerrParams::schwarzschild(1.0).unwrap();
    let e = earth();
    let m = m87(0.45);
    let rs = m.schwarzschild_radius();
    vec![
        Scenario { name: "minkowski static", field: TetradField::new(mk, ObserverFamily::Static), traj: oblique(&mk, 10.0, 40.0) },
        Scenario { name: "schwarzschild static", field: TetradField::new(sch, ObserverFamily::Static), traj: oblique(&sch, 10.0, 60.0) },
        Scenario { name: "earth polar", field: TetradField::new(e, ObserverFamily::PolarOrbit), traj: path(&e, EARTH_R0, -0.2, EARTH_STOP) },
        Scenario {
            name: "earth equatorial",
            field: TetradField::new(e, ObserverFamily::CircularEquatorial),
            traj: path(&e, EARTH_R0, 0.2, EARTH_STOP),
        },
        Scenario {
            name: "m87 equatorial",
            field: TetradField::new(m, ObserverFamily::CircularEquatorial),
            traj: path(&m, 4.5 * rs, 0.6, 4.5 * rs + 2e14),
        },
    ]
}

#[test]
fn oracle_equivalence() {
    let mut ok = true;
    let mut details = vec![];
    for s in scenarios() {
        let quad = integrate_wra(&s.traj, &s.field, &default_tolerance()).unwrap().psi();
        let composed = composed_wra(&s.traj, &s.field, 2).unwrap();
        let diff = wrap(quad - composed).abs();
        ok &= diff < ORACLE_TOL;
        details.push(format!("{}: psi = {quad:.6e} rad, |quadrature - composed| = {diff:.2e}", s.name));
    }
    assert!(report("oracle equivalence (< 1e-8 rad)", ok, &details));
}

#[test]
fn conservation_suite() {
    let mut ok = true;
    let mut details = vec![];
    for s in scenarios() {
        let drift = s.traj.conservation_drift().unwrap();
        let (mut ortho, mut antisym, mut transport) = (0.0f64, 0.0f64, 0.0f64);
        for sample in &s.traj.samples {
            let t = s.field.evaluate(&sample.state.event).unwrap();
            ortho = ortho.max(t.orthonormality_residual(&s.field.params).unwrap());
            let (l, _) = lambda_along(&s.traj, &s.field, sample.xi).unwrap();
            antisym = antisym.max(l.antisymmetry_residual());
            if matches!(s.field.family, ObserverFamily::CircularEquatorial | ObserverFamily::PolarOrbit) {
                transport = transport.max(marck_transport_residual(&s.field, &sample.state.event).unwrap());
            }
        }
        ok &= drift < DRIFT_TOL && ortho < ORTHO_TOL && antisym < ANTISYM_TOL && transport < TRANSPORT_TOL;
        details.push(format!(
            "{}: drift {drift:.1e}, orthonormality {ortho:.1e}, antisymmetry {antisym:.1e}, transport {transport:.1e}",
            s.name
        ));
    }
    assert!(report("conservation suite", ok, &details));
}

#[test]
fn trivial_gauge_recovery() {
    let kerr = KerrParams::new(1.0, 0.3).unwrap();
    let e = earth();
    let m = m87(0.45);
    let rs = m.schwarzschild_radius();
    let cases = [
        ("earth polar", e, ObserverFamily::PolarOrbit, path(&e, EARTH_R0, -0.2, EARTH_STOP)),
        ("kerr polar", kerr, ObserverFamily::PolarOrbit, path(&kerr, 12.0, 0.8, 40.0)),
        ("m87 equatorial", m, ObserverFamily::CircularEquatorial, path(&m, 4.5 * rs, -0.6, 4.5 * rs + 2e14)),
    ];
    let mut ok = true;
    let mut details = vec![];
    for (name, p, family, traj) in cases {
        let cong = PhotonCongruence { consts: traj.conserved, sign_r: 1.0, sign_theta: 1.0 };
        let field = TetradField::new(p, family).with_axis(AxisPolicy::AlongMomentum(cong));
        let residual = integrate_wra(&traj, &field, &default_tolerance()).unwrap().psi_residual.abs();
        let rep = delta_psi_time_reversal(&traj, &field, &default_tolerance()).unwrap();
        let worst = residual.max(rep.delta_psi.abs()).max(rep.delta_psi_closed.abs());
        ok &= worst < GAUGE_TOL;
        details.push(format!(
            "{name}: |psi_residual| {residual:.1e}, |dpsi| {:.1e}, |dpsi closed| {:.1e}",
            rep.delta_psi.abs(),
            rep.delta_psi_closed.abs()
        ));
    }
    assert!(report("trivial-gauge recovery (< 1e-10 rad)", ok, &details));
}

#[test]
fn closed_form_checks() {
    let p = KerrParams::schwarzschild(1.0).unwrap();
    let field = TetradField::new(p, ObserverFamily::PolarOrbit);
    let mut worst_eq10 = 0.0f64;
    let mut events = 0;
    for ratio in [-1.0, -0.5, 0.3, 0.8, 1.5] {
        let traj = path(&p, 12.0, ratio, 60.0);
        let (a, b) = (traj.xi_start(), traj.xi_end());
        for i in 0..10 {
            let xi = a + (b - a) * (i as f64 + 0.5) / 10.0;
            let (event, k) = traj.state_at(xi);
            let (l13, l23) = schwarzschild_lambda_closed_form(&p, &event, k[3]).unwrap();
            let (l, _) = lambda_along(&traj, &field, xi).unwrap();
            let scale = l13.abs().max(l23.abs());
            let rel = (l.get(1, 3) - l13).abs().max((l.get(2, 3) - l23).abs()) / scale;
            worst_eq10 = worst_eq10.max(rel);
            events += 1;
        }
    }
    let eq10_ok = worst_eq10 < EQ10_REL_TOL;

    // first order in dphi: the remainder must shrink like dphi^2
    let (mut worst_literal, mut worst_transverse) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let dphi = 1e-4 * 100f64.powf(i as f64 / 19.0);
        for j in 0..20 {
            let nz = -0.9 + 1.8 * j as f64 / 19.0;
            let k = NullWaveVector::from_direction(1.0, &Vector3::new(0.0, (1.0 - nz * nz).sqrt(), nz)).unwrap();
            let exact = wigner_angle(&rotation_y(dphi), &k).unwrap();
            let bound = 10.0 * dphi * dphi;
            worst_literal = worst_literal.max((closed_form_yaw_wra(dphi, nz).unwrap() - exact).abs() / bound);
            worst_transverse = worst_transverse.max((closed_form_yaw_wra_transverse(dphi, nz).unwrap() - exact).abs() / bound);
        }
    }
    let yaw_ok = worst_literal <= 1.0;
    let details = [
        format!("Schwarzschild (lambda^1_3, lambda^2_3) at {events} events: worst relative error {worst_eq10:.2e}"),
        format!("yaw formula as printed, 20x20 grid: worst |error| / (10 dphi^2) = {worst_literal:.2e}"),
        format!("yaw formula with n_y in the numerator (diagnostic): worst |error| / (10 dphi^2) = {worst_transverse:.2e}"),
    ];
    assert!(report("closed-form checks", eq10_ok && yaw_ok, &details));
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn order_of_magnitude() {
    let tol = default_tolerance();
    let mut details = vec![];

    let e = earth();
    let polar = TetradField::new(e, ObserverFamily::PolarOrbit);
    let ratios = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
    let deg = |ratio: f64| integrate_wra(&path(&e, EARTH_R0, ratio, EARTH_STOP), &polar, &tol).unwrap().psi().to_degrees().abs();
    let pos: Vec<f64> = ratios.iter().map(|&r| deg(r)).collect();
    let neg: Vec<f64> = ratios.iter().map(|&r| deg(-r)).collect();
    let in_band = pos.iter().chain(&neg).all(|&x| (1e-6..=1e-3).contains(&x));
    let ratio = neg.iter().sum::<f64>() / pos.iter().sum::<f64>();
    let earth_ok = in_band && (5.0..=20.0).contains(&ratio);
    details.push(format!("earth polar |psi| deg, ratios {ratios:?}: positive {}, negative {}", list(&pos), list(&neg)));
    details.push(format!("earth polar all in [1e-6, 1e-3] deg: {in_band}; mean negative / mean positive = {ratio:.2}"));

    let alphas: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let interf = |p: KerrParams, a: f64, b: f64| -> Vec<f64> {
        alphas
            .iter()
            .map(|&al| scenario_delta_psi(&InterferometerScenario::new(p, a, b, al), &tol).unwrap().delta_psi.to_degrees().abs())
            .collect()
    };
    let earth_int = interf(e, EARTH_R0, EARTH_STOP);
    let earth_int_med = median(earth_int.clone());
    let earth_int_ok = (1e-5..=1e-3).contains(&earth_int_med);
    details.push(format!("earth interferometer |dpsi| deg over alpha 0.1..1.0: {}, median {earth_int_med:.2e}", list(&earth_int)));

    let (m0, m1) = (m87(0.0), m87(0.45));
    let rs = m0.schwarzschild_radius();
    let spin_diff: Vec<f64> = [-1.2, -0.6, -0.2, 0.2, 0.6, 1.2]
        .iter()
        .map(|&r| {
            let psi = |p: KerrParams| {
                let field = TetradField::new(p, ObserverFamily::CircularEquatorial);
                integrate_wra(&path(&p, 4.5 * rs, r, 4.5 * rs + 2e14), &field, &tol).unwrap().psi()
            };
            wrap(psi(m1) - psi(m0)).to_degrees().abs()
        })
        .collect();
    let spin_med = median(spin_diff.clone());
    let spin_ok = (1e-3..=1e-1).contains(&spin_med);
    details.push(format!("m87 |psi(0.45 r_s) - psi(0)| deg: {}, median {spin_med:.2e}", list(&spin_diff)));

    let m87_int = interf(m1, 4.5 * rs, 30.0 * rs);
    let m87_int_med = median(m87_int.clone());
    let m87_int_ok = (1.0..=10.0).contains(&m87_int_med);
    details.push(format!("m87 interferometer |dpsi| deg over alpha 0.1..1.0: {}, median {m87_int_med:.2}", list(&m87_int)));
    details.push(format!(
        "earth polar: {earth_ok}, earth interferometer: {earth_int_ok}, m87 spin: {spin_ok}, m87 interferometer: {m87_int_ok}"
    ));
    assert!(report("order-of-magnitude reproduction", earth_ok && earth_int_ok && spin_ok && m87_int_ok, &details));
}

#[test]
fn dual_route_agreement() {
    let mut ok = true;
    let mut details = vec![];
    let kerr = KerrParams::new(1.0, 0.3).unwrap();
    let mut cases: Vec<(String, TetradField, Trajectory)> =
        scenarios().into_iter().map(|s| (s.name.to_string(), s.field, s.traj)).collect();
    cases.push(("kerr polar".into(), TetradField::new(kerr, ObserverFamily::PolarOrbit), path(&kerr, 12.0, -0.6, 40.0)));
    for (name, field, traj) in &cases {
        let rep = delta_psi_time_reversal(traj, field, &default_tolerance()).unwrap();
        let diff = (rep.delta_psi - rep.delta_psi_closed).abs();
        ok &= diff < DUAL_ROUTE_TOL;
        details.push(format!("{name}: dpsi {:.6e}, |direct - closed| {diff:.1e}", rep.delta_psi));
    }
    let sch = KerrParams::schwarzschild(1.0).unwrap();
    let field = TetradField::new(sch, ObserverFamily::PolarOrbit);
    for ratio in [0.4, 0.8] {
        let rep = delta_psi_azimuth_flip(&path(&sch, 12.0, ratio, 40.0), &path(&sch, 12.0, -ratio, 40.0), &field, &default_tolerance()).unwrap();
        let diff = (rep.delta_psi - rep.delta_psi_closed).abs();
        ok &= diff < DUAL_ROUTE_TOL;
        details.push(format!(
            "schwarzschild polar +-{ratio}: opposite-azimuth dpsi {:.6e}, closed {:.6e}, diff {diff:.1e}",
            rep.delta_psi, rep.delta_psi_closed
        ));
    }
    assert!(report("time-reversal dual-route agreement", ok, &details));
}

#[test]
fn pt_symmetry() {
    let e = earth();
    let kerr = KerrParams::new(1.0, 0.3).unwrap();
    let cases = [
        ("earth polar -0.2", e, path(&e, EARTH_R0, -0.2, EARTH_STOP)),
        ("earth polar 1.2", e, path(&e, EARTH_R0, 1.2, EARTH_STOP)),
        ("kerr polar -0.6", kerr, path(&kerr, 12.0, -0.6, 40.0)),
    ];
    let mut ok = true;
    let mut details = vec![];
    for (name, p, traj) in cases {
        let rep = pt_check(&traj, &TetradField::new(p, ObserverFamily::PolarOrbit), &default_tolerance()).unwrap();
        let (pt, t) = (rep.pt_violation().abs(), rep.t_violation().abs());
        ok &= pt < PT_TOL && t > 10.0 * PT_TOL;
        details.push(format!("{name}: |PT violation| {pt:.1e}, |T violation| {t:.3e}"));
    }
    assert!(report("PT symmetry", ok, &details));
}

#[test]
fn interferometer_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_prob, mut worst_tension) = (0.0f64, 0.0f64);
    let mut deterministic = true;
    for _ in 0..1000 {
        let d: f64 = rng.gen_range(-10.0..10.0);
        let s: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        worst_prob = worst_prob.max((hom_output(d, s).total_probability() - 1.0).abs());
        worst_tension = worst_tension.max((coincidence_discrepancy(d, s) + (f64::from(s) * d).sin()).abs());
        deterministic &= coincidence_discrepancy(d, s).to_bits() == coincidence_discrepancy(d, s).to_bits()
            && coincidence_rate(d, s).to_bits() == coincidence_rate(d, s).to_bits();
    }
    let ok = worst_prob < PROB_TOL && worst_tension < 1e-15 && deterministic;
    let details = [
        format!("worst |sum of probabilities - 1| over 1000 draws: {worst_prob:.1e}"),
        format!("closed form - |amp_11|^2 = -sin(sigma dpsi): worst deviation {worst_tension:.1e}; deterministic: {deterministic}"),
        format!("at dpsi = pi/2, sigma = +1: closed form {}, |amp_11|^2 {}", coincidence_rate(FRAC_PI_2, 1), hom_output(FRAC_PI_2, 1).amp_11.norm_sqr()),
    ];
    assert!(report("interferometer algebra", ok, &details));
}

#[test]
fn classical_quantum_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst, mut worst_angle) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < 100 {
        let l = rotation_z(rng.gen_range(-3.0..3.0))
            * rotation_y(rng.gen_range(-1.5..1.5))
            * boost(rng.gen_range(1..4), rng.gen_range(-1.5..1.5))
            * rotation_x(rng.gen_range(-3.0..3.0));
        let dir = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if dir.norm() < 0.1 {
            continue;
        }
        let Ok(k) = NullWaveVector::from_direction(rng.gen_range(0.5..2.0), &dir.normalize()) else { continue };
        let sigma: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let (Ok((quantum, _)), Ok(classical), Ok(psi)) =
            (transform_polarization(&l, &k, sigma), classical_field_phase(&l, &k, sigma), wigner_angle(&l, &k))
        else {
            continue;
        };
        worst = worst.max(wrap(classical.arg() - quantum.arg()).abs());
        worst_angle = worst_angle.max(wrap(quantum.arg() - f64::from(sigma) * psi).abs());
        n += 1;
    }
    let details = [
        format!("worst |classical - quantum phase| over {n} transformations: {worst:.1e} rad"),
        format!("worst |quantum phase - sigma psi| (diagnostic): {worst_angle:.1e} rad"),
    ];
    assert!(report("classical-quantum equivalence (< 1e-10 rad)", worst < CLASSICAL_TOL, &details));
}

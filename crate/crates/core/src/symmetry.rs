//! Non-reciprocity of the WRA: local time reversal, space inversion, the
//! opposite-azimuth comparison and the PT check.

use std::io::Write;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::geodesic::Trajectory;
use crate::quadrature::QuadTolerance;
use crate::spacetime::{ConservedQuantities, Event, KerrParams};
use crate::tetrad::TetradField;
use crate::wigner::{integrate_rates, integrate_wra, iwra_rate, LambdaMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversalKind {
    /// Rotations flip, boosts survive.
    TimeReversal,
    /// Boosts flip, rotations survive.
    SpaceInversion,
    /// Mirror of the local third axis.
    AzimuthFlip,
}

pub fn transform_lambda(lambda: &LambdaMatrix, kind: ReversalKind) -> LambdaMatrix {
    let mut out = *lambda;
    for b in 0..4 {
        for a in 0..4 {
            let flip = match kind {
                ReversalKind::TimeReversal => a > 0 && b > 0,
                ReversalKind::SpaceInversion => (a == 0) != (b == 0),
                ReversalKind::AzimuthFlip => (a == 3) != (b == 3),
            };
            if flip {
                out.m[(b, a)] = -out.m[(b, a)];
            }
        }
    }
    out
}

/// Transverse components below `1e-12` count as exact alignment with the
/// quantization axis; the bracketed terms then carry a vanishing prefactor.
fn along_axis(n: &Vector3<f64>) -> bool {
    n[0].hypot(n[1]) < 1e-12
}

/// Rate seen by the time-reversed photon at the same event.
pub fn reversed_iwra_rate(lambda: &LambdaMatrix, n: &Vector3<f64>) -> Result<f64> {
    let l = |b, a| lambda.get(b, a);
    if along_axis(n) {
        return Ok(-l(1, 2));
    }
    let den = 1.0 - n[2];
    if !(den > 1e-12) {
        return Err(Error::AntipodalSingularity(n[2]));
    }
    Ok(-l(1, 2) - n[0] / den * (-l(0, 2) - l(2, 3)) - n[1] / den * (l(0, 1) - l(3, 1)))
}

/// The four pieces of the closed asymmetry integrand
/// `rate + reversed_rate`: the rotation terms in `lambda^2_3`, `lambda^3_1`
/// and the boost terms in `lambda^0_2`, `lambda^0_1`.
pub fn asymmetry_integrand(lambda: &LambdaMatrix, n: &Vector3<f64>) -> Result<[f64; 4]> {
    let l = |b, a| lambda.get(b, a);
    if along_axis(n) {
        return Ok([0.0; 4]);
    }
    let den = 1.0 - n[2] * n[2];
    if !(den > 1e-12) {
        return Err(Error::AntipodalSingularity(n[2]));
    }
    Ok([
        2.0 * n[0] * l(2, 3) / den,
        2.0 * n[1] * l(3, 1) / den,
        2.0 * n[0] * n[2] * l(0, 2) / den,
        -2.0 * n[1] * n[2] * l(0, 1) / den,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryNode {
    pub xi: f64,
    pub cum_forward: f64,
    pub cum_transformed: f64,
    pub cum_pieces: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryReport {
    pub psi_forward: f64,
    pub psi_transformed: f64,
    /// `psi_forward - psi_transformed`.
    pub delta_psi: f64,
    /// The same difference from the closed integrand.
    pub delta_psi_closed: f64,
    /// Integrals of the four closed-integrand pieces.
    pub pieces: [f64; 4],
    pub nodes: Vec<AsymmetryNode>,
}

impl AsymmetryReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "xi",
            "cum_forward",
            "cum_transformed",
            "cum_delta_direct",
            "cum_delta_closed",
            "cum_n1_l23",
            "cum_n2_l31",
            "cum_n1n3_l02",
            "cum_n2n3_l01",
            "cum_delta_direct_deg",
            "cum_delta_closed_deg",
        ])?;
        for n in &self.nodes {
            let closed: f64 = n.cum_pieces.iter().sum();
            w.write_record([
                fmt17(n.xi),
                fmt17(n.cum_forward),
                fmt17(n.cum_transformed),
                fmt17(n.cum_forward - n.cum_transformed),
                fmt17(closed),
                fmt17(n.cum_pieces[0]),
                fmt17(n.cum_pieces[1]),
                fmt17(n.cum_pieces[2]),
                fmt17(n.cum_pieces[3]),
                fmt17((n.cum_forward - n.cum_transformed).to_degrees()),
                fmt17(closed.to_degrees()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Forward WRA against its local time reverse on the same tetrad field. The
/// reversed photon runs `xi` backwards, so its WRA is minus the integral of
/// [`reversed_iwra_rate`].
pub fn delta_psi_time_reversal(traj: &Trajectory, field: &TetradField, tol: &QuadTolerance) -> Result<AsymmetryReport> {
    let segs = integrate_rates(traj, field, tol, |l, n| {
        let (g, r) = iwra_rate(l, n)?;
        let rev = reversed_iwra_rate(l, n)?;
        let p = asymmetry_integrand(l, n)?;
        Ok([g + r, -rev, p[0], p[1], p[2], p[3]])
    })?;
    let mut acc = [0.0; 6];
    let mut nodes = vec![AsymmetryNode { xi: segs[0].a, cum_forward: 0.0, cum_transformed: 0.0, cum_pieces: [0.0; 4] }];
    for s in &segs {
        for (a, v) in acc.iter_mut().zip(s.value) {
            *a += v;
        }
        nodes.push(AsymmetryNode {
            xi: s.b,
            cum_forward: acc[0],
            cum_transformed: acc[1],
            cum_pieces: [acc[2], acc[3], acc[4], acc[5]],
        });
    }
    let pieces = [acc[2], acc[3], acc[4], acc[5]];
    Ok(AsymmetryReport {
        psi_forward: acc[0],
        psi_transformed: acc[1],
        delta_psi: acc[0] - acc[1],
        delta_psi_closed: pieces.iter().sum(),
        pieces,
        nodes,
    })
}

/// WRA difference between two photons launched with opposite azimuthal
/// momentum. The closed-integrand fields carry the time-reversal asymmetry
/// of the first path for comparison.
pub fn delta_psi_azimuth_flip(
    positive: &Trajectory,
    negative: &Trajectory,
    field: &TetradField,
    tol: &QuadTolerance,
) -> Result<AsymmetryReport> {
    let fwd = integrate_wra(positive, field, tol)?;
    let mirror = integrate_wra(negative, field, tol)?;
    let tr = delta_psi_time_reversal(positive, field, tol)?;
    Ok(AsymmetryReport {
        psi_forward: fwd.psi(),
        psi_transformed: mirror.psi(),
        delta_psi: fwd.psi() - mirror.psi(),
        delta_psi_closed: tr.delta_psi_closed,
        pieces: tr.pieces,
        nodes: tr.nodes,
    })
}

/// `(lambda^1_3, lambda^2_3)` for the polar-orbit family on a
/// Schwarzschild background, in terms of the photon's `k^phi`.
pub fn schwarzschild_lambda_closed_form(params: &KerrParams, event: &Event, k_phi: f64) -> Result<(f64, f64)> {
    if params.spin() != 0.0 {
        return Err(Error::DomainError("closed form needs zero spin"));
    }
    let rs = params.schwarzschild_radius();
    if !(event.r > 3.0 * rs) {
        return Err(Error::DomainError("closed form needs r > 3 r_s"));
    }
    let amp = -k_phi * (1.0 - rs / event.r).sqrt();
    let x = (1.0 - 3.0 * rs / event.r).sqrt() * (event.theta - std::f64::consts::FRAC_PI_2);
    Ok((amp * x.cos(), amp * x.sin()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtReport {
    pub psi_forward: f64,
    /// WRA of the time-reversed photon alone.
    pub psi_t: f64,
    /// WRA of the space-inverted photon alone.
    pub psi_p: f64,
    /// WRA after both operations.
    pub psi_pt: f64,
}

impl PtReport {
    /// `sigma psi` after PT minus before. Space inversion flips the helicity
    /// and the antiunitary time reversal conjugates the phase, so the two
    /// sign changes cancel and `sigma psi` is compared directly with `psi`.
    pub fn pt_violation(&self) -> f64 {
        self.psi_pt - self.psi_forward
    }

    pub fn t_violation(&self) -> f64 {
        self.psi_forward - self.psi_t
    }

    pub fn is_pt_symmetric(&self, tol: f64) -> bool {
        self.pt_violation().abs() < tol
    }
}

pub fn pt_check(traj: &Trajectory, field: &TetradField, tol: &QuadTolerance) -> Result<PtReport> {
    use ReversalKind::*;
    let segs = integrate_rates(traj, field, tol, |l, n| {
        let (g, r) = iwra_rate(l, n)?;
        let t = transform_lambda(l, TimeReversal);
        let (tg, tr) = iwra_rate(&t, &-n)?;
        let p = transform_lambda(l, SpaceInversion);
        let (pg, pr) = iwra_rate(&p, &-n)?;
        let pt = transform_lambda(&t, SpaceInversion);
        let (ptg, ptr) = iwra_rate(&pt, n)?;
        Ok([g + r, -(tg + tr), pg + pr, -(ptg + ptr)])
    })?;
    let v = crate::quadrature::total(&segs);
    Ok(PtReport { psi_forward: v[0], psi_t: v[1], psi_p: v[2], psi_pt: v[3] })
}

/// Constants and start state for the photon that retraces `traj` from its
/// end with reversed spatial momentum. Only a time-reversal image when the
/// spin vanishes.
pub fn retraced_launch(traj: &Trajectory) -> (ConservedQuantities, crate::geodesic::GeodesicState) {
    let c = &traj.conserved;
    let rev = ConservedQuantities::new(&traj.params, c.energy, -c.axial_momentum, c.carter, c.delta1);
    let last = traj.samples[traj.samples.len() - 1];
    let state = crate::geodesic::GeodesicState::new(last.state.event, -last.state.sign_r, -last.state.sign_theta);
    (rev, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{integrate, launch_with_ratio, GeodesicTolerance, LaunchPlane, StopCondition};
    use crate::littlegroup::eta;
    use crate::tetrad::{AxisPolicy, ObserverFamily, PhotonCongruence};
    use crate::wigner::default_tolerance;
    use nalgebra::Matrix4;
    use proptest::prelude::*;

    fn generator(v: &[f64]) -> LambdaMatrix {
        let mut low = Matrix4::zeros();
        let mut i = 0;
        for b in 0..4 {
            for a in (b + 1)..4 {
                low[(b, a)] = v[i];
                low[(a, b)] = -v[i];
                i += 1;
            }
        }
        LambdaMatrix { m: eta() * low, event: Event::new(0.0, 1.0, 1.0, 0.0) }
    }

    #[test]
    fn transform_examples() {
        let mut l = LambdaMatrix::zero(Event::new(0.0, 1.0, 1.0, 0.0));
        for k in [ReversalKind::TimeReversal, ReversalKind::SpaceInversion, ReversalKind::AzimuthFlip] {
            assert_eq!(transform_lambda(&l, k), l);
        }
        l.m[(1, 2)] = 0.5;
        l.m[(2, 1)] = -0.5;
        assert_eq!(transform_lambda(&l, ReversalKind::TimeReversal).get(1, 2), -0.5);
        let mut b = LambdaMatrix::zero(l.event);
        b.m[(0, 1)] = 0.25;
        b.m[(1, 0)] = 0.25;
        assert_eq!(transform_lambda(&b, ReversalKind::TimeReversal).get(0, 1), 0.25);
        assert_eq!(transform_lambda(&b, ReversalKind::SpaceInversion).get(0, 1), -0.25);
        assert_eq!(reversed_iwra_rate(&l, &Vector3::new(0.0, 0.0, 0.3)).unwrap(), -0.5);
    }

    proptest! {
        #[test]
        fn reversed_rate_is_rate_of_transformed(
            v in proptest::collection::vec(-1.0f64..1.0, 6),
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -0.95f64..0.95,
        ) {
            let n = Vector3::new(x, y, z);
            prop_assume!(n.norm() > 1e-3);
            let n = n.normalize();
            prop_assume!(n[2].abs() < 0.99);
            let l = generator(&v);
            let t = transform_lambda(&l, ReversalKind::TimeReversal);
            let (g, r) = iwra_rate(&t, &-n).unwrap();
            let direct = reversed_iwra_rate(&l, &n).unwrap();
            prop_assert!((g + r - direct).abs() < 1e-12);
            let (fg, fr) = iwra_rate(&l, &n).unwrap();
            let closed: f64 = asymmetry_integrand(&l, &n).unwrap().iter().sum();
            prop_assert!((fg + fr + direct - closed).abs() < 1e-11);
            for k in [ReversalKind::TimeReversal, ReversalKind::SpaceInversion, ReversalKind::AzimuthFlip] {
                prop_assert!(transform_lambda(&l, k).antisymmetry_residual() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let p = KerrParams::schwarzschild(1.0).unwrap();
        let ev = Event::new(0.0, 10.0, std::f64::consts::FRAC_PI_2, 0.0);
        let (a, b) = schwarzschild_lambda_closed_form(&p, &ev, 0.1).unwrap();
        assert_eq!(b, 0.0);
        assert!((a + 0.1 * 0.8f64.sqrt()).abs() < 1e-16);
        assert_eq!(schwarzschild_lambda_closed_form(&p, &ev, 0.0).unwrap(), (0.0, 0.0));
        assert!(schwarzschild_lambda_closed_form(&p, &Event::new(0.0, 5.0, 1.0, 0.0), 0.1).is_err());
    }

    fn path(p: KerrParams, ratio: f64) -> Trajectory {
        let (q, st) = launch_with_ratio(&p, 12.0, ratio, LaunchPlane::Equatorial, 1.0).unwrap();
        integrate(&p, &q, &st, StopCondition::Radius(40.0), &GeodesicTolerance::default()).unwrap()
    }

    #[test]
    fn both_routes_agree_and_pt_holds() {
        let p = KerrParams::new(1.0, 0.3).unwrap();
        let tr = path(p, -0.6);
        let field = TetradField::new(p, ObserverFamily::PolarOrbit);
        let rep = delta_psi_time_reversal(&tr, &field, &default_tolerance()).unwrap();
        assert!((rep.delta_psi - rep.delta_psi_closed).abs() < 1e-9);
        assert!(rep.delta_psi.abs() > 1e-6);
        let pt = pt_check(&tr, &field, &default_tolerance()).unwrap();
        assert!(pt.is_pt_symmetric(1e-9));
        assert!(pt.t_violation().abs() > 1e-6);
    }

    #[test]
    fn momentum_axis_removes_asymmetry() {
        let p = KerrParams::new(1.0, 0.3).unwrap();
        let tr = path(p, 0.8);
        let cong = PhotonCongruence { consts: tr.conserved, sign_r: 1.0, sign_theta: 1.0 };
        let field = TetradField::new(p, ObserverFamily::PolarOrbit).with_axis(AxisPolicy::AlongMomentum(cong));
        let rep = delta_psi_time_reversal(&tr, &field, &default_tolerance()).unwrap();
        assert!(rep.delta_psi.abs() < 1e-10 && rep.delta_psi_closed.abs() < 1e-10);
    }

    #[test]
    fn retraced_photon_matches_local_reversal() {
        let p = KerrParams::schwarzschild(1.0).unwrap();
        let tr = path(p, 0.7);
        let field = TetradField::new(p, ObserverFamily::Static);
        let rep = delta_psi_time_reversal(&tr, &field, &default_tolerance()).unwrap();
        let (q, st) = retraced_launch(&tr);
        let back = integrate(&p, &q, &st, StopCondition::Radius(12.0), &GeodesicTolerance::default()).unwrap();
        let psi_back = integrate_wra(&back, &field, &default_tolerance()).unwrap().psi();
        assert!((rep.psi_transformed + psi_back).abs() < 1e-9, "{} {}", rep.psi_transformed, psi_back);
    }
}

//! Flat-space Lorentz algebra for massless particles: standard boosts, the
//! little-group element `W = L(Lk)^-1 L L(k)`, its `S(alpha, beta) R_z(psi)`
//! decomposition, and helicity phases of polarization vectors.
//!
//! Rotation constructors follow the frame convention in which
//! `rotation_z(t)` has `cos t, sin t` in its first spatial row. With this
//! convention a helicity state picks up `exp(i sigma psi)` under `R_z(psi)`.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type LorentzMatrix = Matrix4<f64>;

/// Minkowski metric `diag(-1, 1, 1, 1)`.
pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// `eta L^T eta`, the inverse of an exact Lorentz matrix.
pub fn lorentz_inverse(l: &LorentzMatrix) -> LorentzMatrix {
    let e = eta();
    e * l.transpose() * e
}

/// `max |L^T eta L - eta|`.
pub fn lorentz_residual(l: &LorentzMatrix) -> f64 {
    let e = eta();
    (l.transpose() * e * l - e).abs().max()
}

fn embed(r: &Matrix3<f64>) -> LorentzMatrix {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
    m
}

pub fn rotation_x(angle: f64) -> LorentzMatrix {
    let (s, c) = angle.sin_cos();
    embed(&Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c))
}

pub fn rotation_y(angle: f64) -> LorentzMatrix {
    let (s, c) = angle.sin_cos();
    embed(&Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
}

pub fn rotation_z(angle: f64) -> LorentzMatrix {
    let (s, c) = angle.sin_cos();
    embed(&Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
}

/// Pure boost along spatial axis `axis` (1, 2 or 3).
pub fn boost(axis: usize, rapidity: f64) -> LorentzMatrix {
    let mut m = Matrix4::identity();
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    m[(0, 0)] = ch;
    m[(axis, axis)] = ch;
    m[(0, axis)] = sh;
    m[(axis, 0)] = sh;
    m
}

/// A future-directed null vector in a local orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullWaveVector {
    k: Vector4<f64>,
}

impl NullWaveVector {
    /// Accepts `k` if it is null to `1e-9` relative and future directed; the
    /// stored time component is reset to the spatial norm.
    pub fn new(k: Vector4<f64>) -> Result<Self> {
        let spatial = Vector3::new(k[1], k[2], k[3]).norm();
        let norm = spatial * spatial - k[0] * k[0];
        if !(k[0] > 0.0) || !(spatial > 0.0) || norm.abs() > 1e-9 * k[0] * k[0] {
            return Err(Error::NormViolation { norm, expected: 0.0 });
        }
        Ok(Self { k: Vector4::new(spatial, k[1], k[2], k[3]) })
    }

    /// `energy * (1, n)` for a direction `n` (normalized here).
    pub fn from_direction(energy: f64, n: &Vector3<f64>) -> Result<Self> {
        let n = n.normalize();
        Self::new(Vector4::new(energy, energy * n[0], energy * n[1], energy * n[2]))
    }

    /// `(1, 0, 0, 1)`.
    pub fn standard() -> Self {
        Self { k: Vector4::new(1.0, 0.0, 0.0, 1.0) }
    }

    pub fn components(&self) -> Vector4<f64> {
        self.k
    }

    pub fn energy(&self) -> f64 {
        self.k[0]
    }

    pub fn n(&self) -> Vector3<f64> {
        Vector3::new(self.k[1], self.k[2], self.k[3]) / self.k[0]
    }

    /// Applies a Lorentz matrix and re-validates the image.
    pub fn transformed(&self, l: &LorentzMatrix) -> Result<Self> {
        Self::new(l * self.k)
    }
}

/// Rotation taking `z` to `n` about the axis `z x n`.
pub fn rotation_to(n: &Vector3<f64>) -> Result<LorentzMatrix> {
    let n = n.normalize();
    if n[2] < -1.0 + 1e-12 {
        return Err(Error::AntipodalSingularity(n[2]));
    }
    let k = Vector3::new(-n[1], n[0], 0.0).cross_matrix();
    Ok(embed(&(Matrix3::identity() + k + k * k / (1.0 + n[2]))))
}

/// `L(k) = R(n) B_z(ln k^0)`, mapping `(1, 0, 0, 1)` onto `k`.
pub fn standard_lorentz(k: &NullWaveVector) -> Result<LorentzMatrix> {
    Ok(rotation_to(&k.n())? * boost(3, k.energy().ln()))
}

/// `W = L(Lk)^-1 L L(k)`.
pub fn little_group_element(lambda: &LorentzMatrix, k: &NullWaveVector) -> Result<LorentzMatrix> {
    let image = k.transformed(lambda)?;
    Ok(lorentz_inverse(&standard_lorentz(&image)?) * lambda * standard_lorentz(k)?)
}

/// The translation-like part of the little group.
pub fn s_matrix(alpha: f64, beta: f64) -> LorentzMatrix {
    let z = 0.5 * (alpha * alpha + beta * beta);
    Matrix4::new(
        1.0 + z, alpha, beta, -z, //
        alpha, 1.0, 0.0, -alpha, //
        beta, 0.0, 1.0, -beta, //
        z, alpha, beta, 1.0 - z,
    )
}

/// `W = S(alpha, beta) R_z(psi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittleGroupDecomposition {
    pub alpha: f64,
    pub beta: f64,
    pub psi: f64,
}

impl LittleGroupDecomposition {
    pub fn reconstruct(&self) -> LorentzMatrix {
        s_matrix(self.alpha, self.beta) * rotation_z(self.psi)
    }
}

pub fn decompose(w: &LorentzMatrix) -> Result<LittleGroupDecomposition> {
    let ks = NullWaveVector::standard().components();
    let residual = (w * ks - ks).norm();
    if residual > 1e-9 * ks.norm() {
        return Err(Error::NotLittleGroup(residual));
    }
    Ok(LittleGroupDecomposition { alpha: w[(1, 0)], beta: w[(2, 0)], psi: w[(1, 2)].atan2(w[(1, 1)]) })
}

/// Wigner rotation angle of `lambda` acting on a photon with momentum `k`.
pub fn wigner_angle(lambda: &LorentzMatrix, k: &NullWaveVector) -> Result<f64> {
    Ok(decompose(&little_group_element(lambda, k)?)?.psi)
}

/// Principal argument of `1 - dphi n_z / (n_z dphi / 2 + i (1 + n_z))`, the
/// closed form offered for an infinitesimal frame rotation about `y` of a
/// photon moving in the `yz` plane.
pub fn closed_form_yaw_wra(delta_phi: f64, n_z: f64) -> Result<f64> {
    yaw_expression(delta_phi, n_z, n_z)
}

/// The same expression with the transverse component `n_y = sqrt(1 - n_z^2)`
/// in place of `n_z` in the numerator and the real part of the denominator.
/// This variant is the one that agrees with [`wigner_angle`] at first order.
pub fn closed_form_yaw_wra_transverse(delta_phi: f64, n_z: f64) -> Result<f64> {
    yaw_expression(delta_phi, (1.0 - n_z * n_z).max(0.0).sqrt(), n_z)
}

fn yaw_expression(delta_phi: f64, numer: f64, n_z: f64) -> Result<f64> {
    if !(n_z.abs() <= 1.0) {
        return Err(Error::DomainError("n_z must lie in [-1, 1]"));
    }
    if delta_phi == 0.0 {
        return Ok(0.0);
    }
    if 1.0 + n_z < 1e-12 {
        return Err(Error::AntipodalSingularity(n_z));
    }
    let denom = Complex64::new(0.5 * numer * delta_phi, 1.0 + n_z);
    Ok((Complex64::new(1.0, 0.0) - delta_phi * numer / denom).arg())
}

/// Complex polarization four-vector with helicity `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector {
    pub components: Vector4<Complex64>,
    pub helicity: i8,
}

fn check_helicity(sigma: i8) -> Result<f64> {
    match sigma {
        1 | -1 => Ok(sigma as f64),
        _ => Err(Error::DomainError("helicity must be +1 or -1")),
    }
}

/// `epsilon(k, sigma) = R(n) (0, 1, sigma i, 0) / sqrt 2`.
pub fn polarization(k: &NullWaveVector, sigma: i8) -> Result<PolarizationVector> {
    let s = check_helicity(sigma)?;
    let r = rotation_to(&k.n())?.map(|x| Complex64::new(x, 0.0));
    let std = Vector4::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(0.0, s * std::f64::consts::FRAC_1_SQRT_2),
        Complex64::new(0.0, 0.0),
    );
    Ok(PolarizationVector { components: r * std, helicity: sigma })
}

fn spatial_overlap(a: &Vector4<Complex64>, b: &Vector4<Complex64>) -> Complex64 {
    (1..4).map(|i| a[i].conj() * b[i]).sum()
}

/// Gauge-subtracted image `L eps - ((L eps)^0 / (L k)^0) L k` and its phase
/// relative to `epsilon(Lk, sigma)`.
pub fn transform_polarization(lambda: &LorentzMatrix, k: &NullWaveVector, sigma: i8) -> Result<(Complex64, PolarizationVector)> {
    let eps = polarization(k, sigma)?;
    let image = k.transformed(lambda)?;
    let lc = lambda.map(|x| Complex64::new(x, 0.0));
    let le = lc * eps.components;
    let lk = image.components().map(|x| Complex64::new(x, 0.0));
    let u = le - lk * (le[0] / lk[0]);
    let target = polarization(&image, sigma)?;
    Ok((spatial_overlap(&target.components, &u), target))
}

/// Phase of the transverse electric field `E^i ~ (L eps)^i (Lk)^0 - (L eps)^0 (Lk)^i`
/// of a plane wave, relative to `epsilon(Lk, sigma)`.
pub fn classical_field_phase(lambda: &LorentzMatrix, k: &NullWaveVector, sigma: i8) -> Result<Complex64> {
    let eps = polarization(k, sigma)?;
    let image = k.transformed(lambda)?;
    let mut le: Vector4<Complex64> = Vector4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            le[mu] += eps.components[nu] * lambda[(mu, nu)];
        }
    }
    let lk = lambda * k.components();
    let mut field: Vector4<Complex64> = Vector4::zeros();
    for i in 1..4 {
        field[i] = le[i] * lk[0] - le[0] * lk[i];
    }
    let target = polarization(&image, sigma)?;
    let overlap = spatial_overlap(&target.components, &field);
    Ok(overlap / overlap.norm())
}

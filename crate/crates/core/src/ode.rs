//! Embedded Dormand-Prince 5(4) Runge-Kutta stepping with a standard
//! step-size controller. State vectors are fixed-size arrays.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Relative tolerance plus a per-component absolute tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

/// One trial step: the fifth-order solution, its derivative (reused as the
/// first stage of the next step) and the scaled RMS error.
#[derive(Debug, Clone, Copy)]
pub struct Trial<const N: usize> {
    pub y: [f64; N],
    pub dy: [f64; N],
    pub error: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Takes one Dormand-Prince step of size `h` from `(x, y)` with `dy = f(x, y)`.
pub fn dp45_trial<F, const N: usize>(f: &mut F, x: f64, y: &[f64; N], dy: &[f64; N], h: f64, tol: &Tolerances<N>) -> Trial<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = *dy;
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(x + h, &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(x + h, &y_new);
    let mut sum = 0.0;
    for i in 0..N {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol.atol[i] + tol.rtol * y[i].abs().max(y_new[i].abs());
        let q = err / sc;
        sum += q * q;
    }
    let error = (sum / N as f64).sqrt();
    Trial { y: y_new, dy: k7, error: if error.is_finite() { error } else { f64::INFINITY } }
}

/// Step-size proposal after a trial with scaled error `error`.
pub fn next_step(h: f64, error: f64) -> f64 {
    let factor = if error == 0.0 { 5.0 } else { (0.9 * error.powf(-0.2)).clamp(0.2, 5.0) };
    h * factor
}

/// An accepted point `(x, y, dy/dx)`.
pub type Knot<const N: usize> = (f64, [f64; N], [f64; N]);

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction), returning
/// every accepted point including both ends.
pub fn solve<F, const N: usize>(mut f: F, x0: f64, y0: [f64; N], x1: f64, tol: &Tolerances<N>) -> Result<Vec<Knot<N>>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut dy = f(x0, &y0);
    let mut out = vec![(x0, y0, dy)];
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(out);
    }
    let dir = span.signum();
    let mut h = span / 16.0;
    let (mut x, mut y) = (x0, y0);
    let min_step = span.abs() * 1e-15;
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let trial = dp45_trial(&mut f, x, &y, &dy, h, tol);
        if trial.error <= 1.0 {
            x = if (x1 - (x + h)) * dir <= 0.0 { x1 } else { x + h };
            y = trial.y;
            dy = trial.dy;
            out.push((x, y, dy));
        }
        h = next_step(h, trial.error);
        if h.abs() < min_step {
            return Err(Error::StepUnderflow { step: h.abs(), xi: x });
        }
    }
    Ok(out)
}

/// Cubic Hermite interpolation on `[x0, x1]` from values and slopes.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (value, deriv)
}

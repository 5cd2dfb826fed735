//! Globally adaptive Gauss-Kronrod (7/15) quadrature of vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of the 15-point rule on one subinterval.
#[derive(Debug, Clone, Copy)]
pub struct Segment<const D: usize> {
    pub a: f64,
    pub b: f64,
    pub value: [f64; D],
    /// Largest component of `|Kronrod - Gauss|`.
    pub error: f64,
    /// Kronrod estimate of the integral of the component-wise absolute value.
    pub abs_value: [f64; D],
}

/// Applies the 7/15 pair on `[a, b]`.
pub fn gk15<F, const D: usize>(f: &mut F, a: f64, b: f64) -> Result<Segment<D>>
where
    F: FnMut(f64) -> Result<[f64; D]>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; D];
    let mut gauss = [0.0; D];
    let mut absk = [0.0; D];
    let fc = f(center)?;
    for i in 0..D {
        kron[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
        absk[i] = WGK[7] * fc[i].abs();
    }
    for (j, x) in XGK.iter().take(7).enumerate() {
        let f1 = f(center - half * x)?;
        let f2 = f(center + half * x)?;
        for i in 0..D {
            kron[i] += WGK[j] * (f1[i] + f2[i]);
            absk[i] += WGK[j] * (f1[i].abs() + f2[i].abs());
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * (f1[i] + f2[i]);
            }
        }
    }
    let mut error: f64 = 0.0;
    for i in 0..D {
        kron[i] *= half;
        gauss[i] *= half;
        absk[i] *= half.abs();
        error = error.max((kron[i] - gauss[i]).abs());
    }
    Ok(Segment { a, b, value: kron, error, abs_value: absk })
}

struct ByError<const D: usize>(Segment<D>);

impl<const D: usize> PartialEq for ByError<D> {
    fn eq(&self, other: &Self) -> bool {
        self.0.error.total_cmp(&other.0.error) == Ordering::Equal
    }
}
impl<const D: usize> Eq for ByError<D> {}
impl<const D: usize> PartialOrd for ByError<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for ByError<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

/// Stopping rule: the summed error must fall below
/// `max(abs_tol, rel_tol * max_i integral |f_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-13, max_segments: 20_000 }
    }
}

/// Integrates over `[breaks[0], breaks[last]]`, starting from the given
/// partition and bisecting the worst segment until the tolerance is met.
/// Segments come back sorted by position.
pub fn integrate<F, const D: usize>(mut f: F, breaks: &[f64], tol: &QuadTolerance) -> Result<Vec<Segment<D>>>
where
    F: FnMut(f64) -> Result<[f64; D]>,
{
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    let mut abs_int = [0.0; D];
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let seg = gk15(&mut f, w[0], w[1])?;
        total_err += seg.error;
        for i in 0..D {
            abs_int[i] += seg.abs_value[i];
        }
        heap.push(ByError(seg));
    }
    let target = |abs_int: &[f64; D]| {
        let m = abs_int.iter().cloned().fold(0.0, f64::max);
        tol.abs_tol.max(tol.rel_tol * m)
    };
    while total_err > target(&abs_int) {
        if heap.len() >= tol.max_segments {
            return Err(Error::QuadratureStall(tol.max_segments));
        }
        let Some(ByError(worst)) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval cannot be split further in floating point
            heap.push(ByError(Segment { error: 0.0, ..worst }));
            total_err -= worst.error;
            continue;
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        total_err += left.error + right.error - worst.error;
        for i in 0..D {
            abs_int[i] += left.abs_value[i] + right.abs_value[i] - worst.abs_value[i];
        }
        heap.push(ByError(left));
        heap.push(ByError(right));
    }
    let mut segs: Vec<Segment<D>> = heap.into_iter().map(|b| b.0).collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(segs)
}

/// Sum of segment values.
pub fn total<const D: usize>(segs: &[Segment<D>]) -> [f64; D] {
    let mut out = [0.0; D];
    for s in segs {
        for i in 0..D {
            out[i] += s.value[i];
        }
    }
    out
}

//! Adaptive Gauss–Kronrod (7/15) quadrature with global subdivision.
//!
//! Subintervals live in a max-heap keyed by their error estimate; the worst
//! one is bisected until the summed estimate drops below the tolerance or the
//! subinterval budget is spent. Only interior nodes are evaluated, so
//! integrable endpoint singularities (logarithmic ones in particular) are
//! handled by geometric refinement toward the endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64) -> Result<Piece>
where
    F: Fn(f64) -> Result<f64>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx)? + f(centre + dx)?;
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    if !value.is_finite() {
        return Err(Error::QuadratureFailure {
            tolerance: f64::NAN,
            estimate: f64::INFINITY,
        });
    }
    Ok(Piece { a, b, value, error })
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_subintervals: usize,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            subintervals: 0,
        });
    }
    if b < a {
        let r = integrate(f, b, a, tol, max_subintervals)?;
        return Ok(QuadratureResult {
            value: -r.value,
            ..r
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b)?;
    let mut error = first.error;
    heap.push(first);
    while error > tol {
        if heap.len() >= max_subintervals.max(1) {
            return Err(Error::QuadratureFailure {
                tolerance: tol,
                estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // floating-point resolution exhausted
            return Err(Error::QuadratureFailure {
                tolerance: tol,
                estimate: error,
            });
        }
        let left = kronrod(&f, worst.a, mid)?;
        let right = kronrod(&f, mid, worst.b)?;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // guard against drift in the running sum
        if heap.len() % 64 == 0 {
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadratureResult {
        value,
        error,
        subintervals: heap.len(),
    })
}

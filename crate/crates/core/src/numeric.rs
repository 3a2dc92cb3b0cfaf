//! Small numerical kernels shared by the other modules: grids, golden-section
//! maximization and globally adaptive Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute tolerance used by [`integrate`] callers in this crate.
pub const QUAD_ABS_TOL: f64 = 1e-10;
/// Relative tolerance used by [`integrate`] callers in this crate.
pub const QUAD_REL_TOL: f64 = 1e-8;

const MAX_INTERVALS: usize = 4000;

/// `n` points evenly spaced on `[lo, hi]`, endpoints included.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` points geometrically spaced on `[lo, hi]`; both bounds must be positive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = lin_space(a, b, n).into_iter().map(f64::exp).collect();
    if let (Some(first), true) = (v.first_mut(), n > 0) {
        *first = lo;
    }
    if let Some(last) = v.last_mut() {
        *last = hi;
    }
    v
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns the best abscissa seen together with its value. Non-finite values
/// of `f` are treated as `-inf`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, iterations: usize) -> (f64, f64) {
    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iterations {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
            if f1 > best_f {
                best_x = x1;
                best_f = f1;
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
            if f2 > best_f {
                best_x = x2;
                best_f = f2;
            }
        }
        if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
    }
    (best_x, best_f)
}

/// Refines a maximum located on a sorted grid: golden section over the two
/// cells adjacent to `values[best]`. Returns `(x, f(x))` of the better of the
/// grid point and the refined point.
pub fn refine_grid_max<F: Fn(f64) -> f64>(
    f: F,
    grid: &[f64],
    values: &[f64],
    best: usize,
    iterations: usize,
) -> (f64, f64) {
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x, fx) = golden_max(&f, lo, hi, iterations);
    if fx > values[best] {
        (x, fx)
    } else {
        (grid[best], values[best])
    }
}

/// Index of the largest value, ignoring NaN. `None` when every value is NaN
/// or `-inf`.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan() && **v > f64::NEG_INFINITY)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
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
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over the finite interval `[a, b]`.
///
/// Bisects the piece with the largest error estimate until the total error is
/// below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}]: estimate {total} with error {total_err}"
            )));
        }
        let piece = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (piece.a + piece.b);
        let (lv, le) = kronrod15(&f, piece.a, mid);
        let (rv, re) = kronrod15(&f, mid, piece.b);
        total += lv + rv - piece.value;
        total_err += le + re - piece.err;
        heap.push(Piece {
            a: piece.a,
            b: mid,
            value: lv,
            err: le,
        });
        heap.push(Piece {
            a: mid,
            b: piece.b,
            value: rv,
            err: re,
        });
        if !total.is_finite() {
            break;
        }
    }
    // Re-sum to shed accumulated rounding from the incremental updates.
    let total: f64 = heap.iter().map(|p| p.value).sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature(format!("integral over [{a}, {b}] is {total}")))
    }
}

/// Integrates over several consecutive pieces `[b0, b1], [b1, b2], ...`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut sum = 0.0;
    for w in breaks.windows(2) {
        sum += integrate(&f, w[0], w[1], abs_tol, rel_tol)?;
    }
    Ok(sum)
}

/// `n!` in log-space.
pub fn ln_factorial(n: u32) -> f64 {
    statrs::function::gamma::ln_gamma(f64::from(n) + 1.0)
}

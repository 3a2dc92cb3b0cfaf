//! The small expression catalog of generating functions `psi(p)` (Grand
//! Lebesgue spaces) and Young–Orlicz functions `phi(lambda)` (exponential
//! `B(phi)` spaces).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::{lin_space, log_space};

/// Slowly varying factor `L` of the `phi_{m,L}` family, used on `[1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowlyVarying {
    /// `L = 1`.
    #[default]
    One,
    /// `L(x) = 1 + ln x`.
    Log,
}

impl SlowlyVarying {
    pub fn eval(self, x: f64) -> f64 {
        let x = x.max(1.0);
        match self {
            SlowlyVarying::One => 1.0,
            SlowlyVarying::Log => 1.0 + x.ln(),
        }
    }
}

/// Generating function `psi(p)` of a Grand Lebesgue space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GeneratingFunction {
    /// `p^exponent` on `[1, b)`; `b = None` means `b = inf`.
    Power {
        exponent: f64,
        #[serde(default)]
        b: Option<f64>,
    },
    /// Constant `value` on `[1, b)`.
    Constant {
        value: f64,
        #[serde(default)]
        b: Option<f64>,
    },
    /// `(b - p)^(-beta)` on `[1, b)`, `b` finite.
    Pole { b: f64, beta: f64 },
    /// `1` at `p = r` and `+inf` elsewhere; the space is `L_r`.
    Extremal { r: f64 },
    /// Values on a closed grid `[p_0, p_last]`, interpolated linearly in
    /// `(ln p, ln psi)`; `+inf` off the grid.
    Tabulated { p: Vec<f64>, values: Vec<f64> },
}

/// Domain of a generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PDomain {
    /// `[lo, hi)`, or `[lo, hi]` when `closed` is set. `hi` may be infinite.
    Range { lo: f64, hi: f64, closed: bool },
    /// A single point.
    Point(f64),
}

impl GeneratingFunction {
    pub fn power(exponent: f64) -> Self {
        GeneratingFunction::Power { exponent, b: None }
    }

    pub fn constant(value: f64) -> Self {
        GeneratingFunction::Constant { value, b: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratingFunction::Power { exponent, b } => {
                check_b(*b)?;
                if !exponent.is_finite() {
                    return Err(invalid("exponent", "must be finite"));
                }
                if *exponent < 0.0 && b.is_none() {
                    return Err(invalid("exponent", "negative exponent on [1, inf) has infimum 0"));
                }
                Ok(())
            }
            GeneratingFunction::Constant { value, b } => {
                check_b(*b)?;
                if value.is_finite() && *value > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("value", format!("must be positive, got {value}")))
                }
            }
            GeneratingFunction::Pole { b, beta } => {
                check_b(Some(*b))?;
                if beta.is_finite() && *beta >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("beta", format!("must be non-negative, got {beta}")))
                }
            }
            GeneratingFunction::Extremal { r } => {
                if r.is_finite() && *r >= 1.0 {
                    Ok(())
                } else {
                    Err(invalid("r", format!("must be in [1, inf), got {r}")))
                }
            }
            GeneratingFunction::Tabulated { p, values } => {
                if p.is_empty() || p.len() != values.len() {
                    return Err(invalid("p", "table must be non-empty with one value per point"));
                }
                if p[0] < 1.0 || p.windows(2).any(|w| w[1] <= w[0]) || p.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("p", "points must be finite, increasing and >= 1"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(invalid("values", "values must be finite and positive"));
                }
                Ok(())
            }
        }
    }

    pub fn domain(&self) -> PDomain {
        match self {
            GeneratingFunction::Power { b, .. } | GeneratingFunction::Constant { b, .. } => PDomain::Range {
                lo: 1.0,
                hi: b.unwrap_or(f64::INFINITY),
                closed: false,
            },
            GeneratingFunction::Pole { b, .. } => PDomain::Range {
                lo: 1.0,
                hi: *b,
                closed: false,
            },
            GeneratingFunction::Extremal { r } => PDomain::Point(*r),
            GeneratingFunction::Tabulated { p, .. } => PDomain::Range {
                lo: p[0],
                hi: p[p.len() - 1],
                closed: true,
            },
        }
    }

    /// Right end `b` of the domain (`inf` when unbounded).
    pub fn b(&self) -> f64 {
        match self.domain() {
            PDomain::Range { hi, .. } => hi,
            PDomain::Point(r) => r,
        }
    }

    /// `psi(p)`, `+inf` outside the domain.
    pub fn eval(&self, p: f64) -> f64 {
        let inside = match self.domain() {
            PDomain::Range { lo, hi, closed } => p >= lo && (p < hi || (closed && p <= hi)),
            PDomain::Point(r) => p == r,
        };
        if !inside {
            return f64::INFINITY;
        }
        match self {
            GeneratingFunction::Power { exponent, .. } => p.powf(*exponent),
            GeneratingFunction::Constant { value, .. } => *value,
            GeneratingFunction::Pole { b, beta } => (b - p).powf(-beta),
            GeneratingFunction::Extremal { .. } => 1.0,
            GeneratingFunction::Tabulated { p: grid, values } => interpolate_log_log(grid, values, p),
        }
    }

    /// `ln psi(p)`.
    pub fn ln_eval(&self, p: f64) -> f64 {
        self.eval(p).ln()
    }

    pub fn label(&self) -> String {
        match self {
            GeneratingFunction::Power { exponent, b } => format!("psi:power(exponent={exponent},b={})", fmt_b(*b)),
            GeneratingFunction::Constant { value, b } => format!("psi:constant(value={value},b={})", fmt_b(*b)),
            GeneratingFunction::Pole { b, beta } => format!("psi:pole(b={b},beta={beta})"),
            GeneratingFunction::Extremal { r } => format!("psi:extremal(r={r})"),
            GeneratingFunction::Tabulated { p, .. } => {
                format!("psi:tabulated({} points on [{}, {}])", p.len(), p[0], p[p.len() - 1])
            }
        }
    }
}

fn fmt_b(b: Option<f64>) -> String {
    b.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

fn check_b(b: Option<f64>) -> Result<()> {
    match b {
        Some(v) if !(v > 1.0) || v.is_nan() => Err(invalid("b", format!("must exceed 1, got {v}"))),
        _ => Ok(()),
    }
}

fn interpolate_log_log(grid: &[f64], values: &[f64], p: f64) -> f64 {
    if grid.len() == 1 || p <= grid[0] {
        return values[0];
    }
    let i = grid.partition_point(|g| *g <= p);
    if i >= grid.len() {
        return values[grid.len() - 1];
    }
    let (p0, p1) = (grid[i - 1].ln(), grid[i].ln());
    let (v0, v1) = (values[i - 1].ln(), values[i].ln());
    let w = (p.ln() - p0) / (p1 - p0);
    (v0 + w * (v1 - v0)).exp()
}

/// Even Young–Orlicz function `phi(lambda)` on `(-lambda0, lambda0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum YoungFunction {
    /// `lambda^2 / 2`, the subgaussian case.
    Quadratic {
        #[serde(default)]
        lambda0: Option<f64>,
    },
    /// `lambda^2 / 2` on `|lambda| <= 1`, then
    /// `|lambda|^m L(|lambda|) / m + 1/2 - L(1)/m`.
    #[serde(rename = "m_L")]
    PowerTail {
        m: f64,
        #[serde(default)]
        l: SlowlyVarying,
        #[serde(default)]
        lambda0: Option<f64>,
    },
}

impl YoungFunction {
    pub fn quadratic() -> Self {
        YoungFunction::Quadratic { lambda0: None }
    }

    pub fn power_tail(m: f64) -> Self {
        YoungFunction::PowerTail {
            m,
            l: SlowlyVarying::One,
            lambda0: None,
        }
    }

    pub fn lambda0(&self) -> f64 {
        match self {
            YoungFunction::Quadratic { lambda0 } | YoungFunction::PowerTail { lambda0, .. } => {
                lambda0.unwrap_or(f64::INFINITY)
            }
        }
    }

    /// `phi(lambda)`, `+inf` for `|lambda| >= lambda0`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let a = lambda.abs();
        if a >= self.lambda0() {
            return f64::INFINITY;
        }
        match self {
            YoungFunction::Quadratic { .. } => 0.5 * a * a,
            YoungFunction::PowerTail { m, l, .. } => {
                if a <= 1.0 {
                    0.5 * a * a
                } else {
                    a.powf(*m) * l.eval(a) / m + 0.5 - l.eval(1.0) / m
                }
            }
        }
    }

    /// Smallest `a >= 0` with `phi(a) >= v`; `lambda0` when `v` is beyond the
    /// range of `phi` on `[0, lambda0)`.
    pub fn inverse(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v == f64::INFINITY {
            return self.lambda0();
        }
        let l0 = self.lambda0();
        let raw = match self {
            YoungFunction::Quadratic { .. } => (2.0 * v).sqrt(),
            YoungFunction::PowerTail { m, l, .. } => {
                if v <= 0.5 {
                    (2.0 * v).sqrt()
                } else if *l == SlowlyVarying::One {
                    (m * (v - 0.5) + 1.0).powf(1.0 / m)
                } else {
                    let mut hi = 2.0;
                    while self.eval_unbounded(hi) < v {
                        hi *= 2.0;
                    }
                    let mut lo = 1.0;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if self.eval_unbounded(mid) >= v {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if hi - lo <= 1e-15 * hi {
                            break;
                        }
                    }
                    hi
                }
            }
        };
        raw.min(l0)
    }

    fn eval_unbounded(&self, a: f64) -> f64 {
        match self {
            YoungFunction::Quadratic { .. } => YoungFunction::Quadratic { lambda0: None }.eval(a),
            YoungFunction::PowerTail { m, l, .. } => YoungFunction::PowerTail {
                m: *m,
                l: *l,
                lambda0: None,
            }
            .eval(a),
        }
    }

    /// Parameter checks plus numeric checks of the Young-function
    /// conditions: `phi(0) = 0`, positive off zero, convex, and
    /// `phi''(0)` finite and positive.
    pub fn validate(&self) -> Result<()> {
        let l0 = self.lambda0();
        if !(l0 > 0.0) {
            return Err(invalid("lambda0", format!("must be positive, got {l0}")));
        }
        if let YoungFunction::PowerTail { m, .. } = self {
            if !(m.is_finite() && *m > 1.0) {
                return Err(invalid("m", format!("must exceed 1, got {m}")));
            }
        }
        if self.eval(0.0) != 0.0 {
            return Err(invalid("phi", "phi(0) must be 0"));
        }
        let top = if l0.is_finite() { l0 * (1.0 - 1e-6) } else { 20.0 };
        let grid = lin_space(0.0, top, 2001);
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        if vals.iter().skip(1).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("phi", "phi must be finite and positive off zero"));
        }
        if grid.iter().any(|&x| self.eval(-x) != self.eval(x)) {
            return Err(invalid("phi", "phi must be even"));
        }
        if !slopes_nondecreasing(&grid, &vals) {
            return Err(invalid("phi", "phi must be convex"));
        }
        let h = (1e-4f64).min(top / 4.0);
        let second = 2.0 * self.eval(h) / (h * h);
        if !(second.is_finite() && second > 0.0) {
            return Err(invalid(
                "phi",
                format!("phi''(0) must be finite and positive, estimate {second}"),
            ));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let l0 = |v: f64| if v.is_finite() { v.to_string() } else { "inf".into() };
        match self {
            YoungFunction::Quadratic { .. } => format!("phi:quadratic(lambda0={})", l0(self.lambda0())),
            YoungFunction::PowerTail { m, l, .. } => {
                format!("phi:m_L(m={m},L={l:?},lambda0={})", l0(self.lambda0()))
            }
        }
    }
}

/// Diagnostic outcome of the convexity check of `s -> phi(sqrt(s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConvVerdict {
    pub convex: bool,
    /// Most negative slope increment found (0 when convex).
    pub worst_slope_drop: f64,
    /// Abscissa `s` where it occurred.
    pub at: f64,
}

/// Numeric check that `s -> phi(sqrt(s))` is convex on `[0, lambda0^2)`.
///
/// When this holds, `B(phi)` obeys the Pythagorean sum rule with constant 1.
pub fn is_phi_conv(phi: &YoungFunction) -> PhiConvVerdict {
    let l0 = phi.lambda0();
    let s_max = if l0.is_finite() {
        (l0 * l0 * (1.0 - 1e-9)).min(1e4)
    } else {
        1e4
    };
    let mut grid = lin_space(0.0, s_max, 2001);
    grid.extend(log_space(1e-6 * s_max.min(1.0), s_max, 2001));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Near-coincident points from the two grids turn rounding into fake slope drops.
    grid.dedup_by(|b, a| *b - *a <= 1e-6 * a.abs().max(1e-9));
    let vals: Vec<f64> = grid.iter().map(|&s| phi.eval(s.sqrt())).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return PhiConvVerdict {
            convex: false,
            worst_slope_drop: f64::NAN,
            at: f64::NAN,
        };
    }
    let mut worst = 0.0;
    let mut at = 0.0;
    let slopes: Vec<f64> = grid
        .windows(2)
        .zip(vals.windows(2))
        .map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0]))
        .collect();
    for (i, w) in slopes.windows(2).enumerate() {
        let drop = w[1] - w[0];
        let tol = 1e-7 * w[0].abs().max(w[1].abs()) + 1e-12;
        if drop < -tol && drop < worst {
            worst = drop;
            at = grid[i + 1];
        }
    }
    PhiConvVerdict {
        convex: worst == 0.0,
        worst_slope_drop: worst,
        at,
    }
}

fn slopes_nondecreasing(grid: &[f64], vals: &[f64]) -> bool {
    let slopes: Vec<f64> = grid
        .windows(2)
        .zip(vals.windows(2))
        .map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0]))
        .collect();
    slopes
        .windows(2)
        .all(|w| w[1] >= w[0] - (1e-7 * w[0].abs().max(w[1].abs()) + 1e-12))
}

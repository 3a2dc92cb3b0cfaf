//! Numerical Young–Fenchel (Legendre) conjugation.
//!
//! `g*(u) = sup_{y in Dom g} (y u - g(y))` is evaluated by a geometric scan of
//! the domain followed by golden-section refinement around the best cell.
//! Domain endpoints are open; evaluation stays `1e-12` (relative) inside them.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::functions::{GeneratingFunction, PDomain, YoungFunction};
use crate::numeric::{argmax, golden_max, lin_space, log_space};

const GOLDEN_ITERATIONS: usize = 80;
const EDGE_OFFSET: f64 = 1e-12;
const SCAN_DECADES: f64 = 12.0;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Open interval `(lo, hi)`; `lo == hi` denotes a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid("domain", format!("bad interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    fn contains(&self, y: f64) -> bool {
        if self.lo == self.hi {
            y == self.lo
        } else {
            y > self.lo && y < self.hi
        }
    }
}

/// A real function together with its effective domain; `+inf` outside.
#[derive(Clone)]
pub struct DomainFunction {
    eval: RealFn,
    domain: Interval,
    grid_hint: usize,
}

impl fmt::Debug for DomainFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainFunction")
            .field("domain", &self.domain)
            .field("grid_hint", &self.grid_hint)
            .finish()
    }
}

impl DomainFunction {
    pub fn new<F>(f: F, domain: Interval) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            domain,
            grid_hint: 512,
        }
    }

    pub fn with_grid_hint(mut self, points: usize) -> Self {
        self.grid_hint = points.max(16);
        self
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn eval(&self, y: f64) -> f64 {
        if self.domain.contains(y) {
            (self.eval)(y)
        } else {
            f64::INFINITY
        }
    }

    fn eval_raw(&self, y: f64) -> f64 {
        (self.eval)(y)
    }

    /// Scan points inside the (clamped) domain.
    fn scan_grid(&self) -> Vec<f64> {
        let Interval { lo, hi } = self.domain;
        let n = self.grid_hint;
        let lo_eff = if lo.is_finite() {
            lo + EDGE_OFFSET * lo.abs().max(1.0)
        } else {
            lo
        };
        let hi_eff = if hi.is_finite() {
            hi - EDGE_OFFSET * hi.abs().max(1.0)
        } else {
            hi
        };
        let decades = |scale: f64| log_space(scale * 10f64.powf(-SCAN_DECADES), scale * 10f64.powf(SCAN_DECADES), n);
        let mut pts = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                let width = hi_eff - lo_eff;
                let mut v = lin_space(lo_eff, hi_eff, n);
                for k in 1..=12 {
                    let d = width * 10f64.powi(-k);
                    v.push(lo_eff + d);
                    v.push(hi_eff - d);
                }
                v
            }
            (true, false) => {
                let mut v: Vec<f64> = decades(lo.abs().max(1.0)).into_iter().map(|d| lo_eff + d).collect();
                v.push(lo_eff);
                v
            }
            (false, true) => {
                let mut v: Vec<f64> = decades(hi.abs().max(1.0)).into_iter().map(|d| hi_eff - d).collect();
                v.push(hi_eff);
                v
            }
            (false, false) => {
                let d = decades(1.0);
                let mut v: Vec<f64> = d.iter().map(|x| -x).collect();
                v.extend(d);
                v.push(0.0);
                v
            }
        };
        pts.retain(|y| *y >= lo_eff && *y <= hi_eff);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }
}

/// Location and value of a conjugate supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supremum {
    pub value: f64,
    /// Maximizer; `None` when the supremum is infinite.
    pub argmax: Option<f64>,
}

/// `g*(u)` together with the maximizing `y`.
pub fn legendre_sup(g: &DomainFunction, u: f64) -> Result<Supremum> {
    if u.is_nan() {
        return Err(invalid("u", "NaN"));
    }
    let Interval { lo, hi } = g.domain;
    if lo == hi {
        let v = lo * u - g.eval_raw(lo);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::EmptyDomain);
        }
        return Ok(Supremum {
            value: v,
            argmax: Some(lo),
        });
    }
    let objective = |y: f64| {
        let gy = g.eval_raw(y);
        if gy.is_nan() || gy == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            y * u - gy
        }
    };
    let grid = g.scan_grid();
    let values: Vec<f64> = grid.iter().map(|&y| objective(y)).collect();
    let best = argmax(&values).ok_or(Error::EmptyDomain)?;
    if values[best] == f64::INFINITY {
        return Ok(Supremum {
            value: f64::INFINITY,
            argmax: None,
        });
    }
    let last = grid.len() - 1;
    let open_right = best == last && hi == f64::INFINITY;
    let open_left = best == 0 && lo == f64::NEG_INFINITY;
    if open_right || open_left {
        // Probe beyond the outermost scan point.
        let anchor = if open_right {
            lo.max(0.0).min(grid[last])
        } else {
            hi.min(0.0).max(grid[0])
        };
        let edge = grid[best];
        let far1 = anchor + 10.0 * (edge - anchor);
        let far2 = anchor + 100.0 * (edge - anchor);
        let (f0, f1, f2) = (values[best], objective(far1), objective(far2));
        if f1 > f0 && f2 > f1 {
            return Ok(Supremum {
                value: f64::INFINITY,
                argmax: None,
            });
        }
        let inner = if open_right { grid[last - 1] } else { grid[1] };
        let (x, fx) = golden_max(objective, inner, far2, GOLDEN_ITERATIONS);
        let (x, fx) = [(edge, f0), (far1, f1), (far2, f2), (x, fx)]
            .into_iter()
            .fold((edge, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        return Ok(Supremum {
            value: fx,
            argmax: Some(x),
        });
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(last)];
    let (x, fx) = golden_max(objective, a, b, GOLDEN_ITERATIONS);
    let (x, fx) = if fx > values[best] {
        (x, fx)
    } else {
        (grid[best], values[best])
    };
    Ok(Supremum {
        value: fx,
        argmax: Some(x),
    })
}

/// `g*(u) = sup_{y in Dom g} (y u - g(y))` for `u >= 0`; `+inf` when unbounded.
pub fn legendre_transform(g: &DomainFunction, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(invalid("u", format!("must be non-negative, got {u}")));
    }
    legendre_sup(g, u).map(|s| s.value)
}

/// `nu(x) = sup_{|lambda| < lambda0} (lambda x - phi(lambda))` for `x >= 0`.
///
/// Evenness of `phi` lets the scan stay on `[0, lambda0)`.
pub fn nu_transform(phi: &YoungFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("must be non-negative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let phi_c = phi.clone();
    let g = DomainFunction::new(move |l| phi_c.eval(l), Interval::new(0.0, phi.lambda0())?);
    Ok(legendre_transform(&g, x)?.max(0.0))
}

/// `h(p) = p ln psi(p)` as a [`DomainFunction`] on the domain of `psi`.
pub fn h_function(psi: &GeneratingFunction) -> Result<DomainFunction> {
    psi.validate()?;
    let domain = match psi.domain() {
        PDomain::Point(r) => Interval::new(r, r)?,
        PDomain::Range { lo, hi, closed } => {
            if closed && lo == hi {
                Interval::new(lo, hi)?
            } else if closed {
                // Widen by the clamp offset so the closed ends are reachable.
                Interval::new(
                    lo - EDGE_OFFSET * lo.abs().max(1.0) * 1.5,
                    hi + EDGE_OFFSET * hi.abs().max(1.0) * 1.5,
                )?
            } else {
                Interval::new(lo - EDGE_OFFSET * lo.abs().max(1.0) * 1.5, hi)?
            }
        }
    };
    let psi_c = psi.clone();
    let clamp = psi.domain();
    Ok(DomainFunction::new(
        move |p| {
            let q = match clamp {
                PDomain::Range { lo, hi, closed } => {
                    if closed {
                        p.clamp(lo, hi)
                    } else {
                        p.max(lo)
                    }
                }
                PDomain::Point(r) => r,
            };
            q * psi_c.ln_eval(q)
        },
        domain,
    ))
}

/// `h*(y)` for `h(p) = p ln psi(p)`; drives the Grand Lebesgue tail bound.
pub fn h_star(psi: &GeneratingFunction, y: f64) -> Result<f64> {
    let h = h_function(psi)?;
    legendre_sup(&h, y).map(|s| s.value)
}

/// Closed-form asymptote of the conjugate of `phi_{m,L}`:
/// `((m-1)/m) t^(m/(m-1)) L(t^(1/(m-1)))^(-1/(m-1))`.
pub fn g_ml_asymptotic<L: Fn(f64) -> f64>(m: f64, l: L, t: f64) -> Result<f64> {
    if !(m >= 2.0 && m.is_finite()) {
        return Err(invalid("m", format!("must be at least 2, got {m}")));
    }
    if !(t >= 1.0) {
        return Err(invalid("t", format!("must be at least 1, got {t}")));
    }
    let lv = l(t.powf(1.0 / (m - 1.0)));
    if !(lv > 0.0 && lv.is_finite()) {
        return Err(invalid("L", format!("must be positive and finite, got {lv}")));
    }
    Ok((m - 1.0) / m * t.powf(m / (m - 1.0)) * lv.powf(-1.0 / (m - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::SlowlyVarying;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn quad(lo: f64, hi: f64) -> DomainFunction {
        DomainFunction::new(|y| 0.5 * y * y, Interval::new(lo, hi).unwrap())
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let g = quad(f64::NEG_INFINITY, f64::INFINITY);
        assert_relative_eq!(legendre_transform(&g, 1.0).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(legendre_transform(&g, 7.5).unwrap(), 28.125, max_relative = 1e-12);
        assert_eq!(legendre_transform(&g, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn truncated_quadratic_clamps() {
        let g = quad(-1.0, 1.0);
        assert_relative_eq!(legendre_transform(&g, 3.0).unwrap(), 2.5, epsilon = 1e-9);
    }

    #[test]
    fn entropy_like_function() {
        let g = DomainFunction::new(|y| y * y.ln(), Interval::new(1.0, f64::INFINITY).unwrap());
        assert_relative_eq!(legendre_transform(&g, 2.0).unwrap(), E, max_relative = 1e-10);
    }

    #[test]
    fn linear_objective_is_unbounded() {
        let g = DomainFunction::new(|_| 0.0, Interval::new(1.0, f64::INFINITY).unwrap());
        assert_eq!(legendre_transform(&g, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn nu_examples() {
        let phi2 = YoungFunction::quadratic();
        assert_relative_eq!(nu_transform(&phi2, 2.0).unwrap(), 2.0, max_relative = 1e-12);
        let clamped = YoungFunction::Quadratic { lambda0: Some(1.0) };
        assert_relative_eq!(nu_transform(&clamped, 3.0).unwrap(), 2.5, epsilon = 1e-9);
        assert_eq!(nu_transform(&YoungFunction::power_tail(3.0), 0.0).unwrap(), 0.0);
        assert!(nu_transform(&phi2, -1.0).is_err());
    }

    #[test]
    fn h_star_examples() {
        let psi = GeneratingFunction::power(1.0);
        assert_relative_eq!(h_star(&psi, 2.0).unwrap(), E, max_relative = 1e-10);
        assert!(h_star(&psi, 0.0).unwrap().abs() < 1e-9);
        assert_eq!(h_star(&GeneratingFunction::constant(1.0), 1.0).unwrap(), f64::INFINITY);
        // extremal psi: h is defined at one point only
        let ext = GeneratingFunction::Extremal { r: 3.0 };
        assert_relative_eq!(h_star(&ext, 2.0).unwrap(), 6.0, max_relative = 1e-15);
    }

    #[test]
    fn g_ml_examples() {
        assert_relative_eq!(g_ml_asymptotic(2.0, |_| 1.0, 3.0).unwrap(), 4.5, max_relative = 1e-15);
        assert_relative_eq!(
            g_ml_asymptotic(3.0, |_| 1.0, 8.0).unwrap(),
            2.0 / 3.0 * 8f64.powf(1.5),
            max_relative = 1e-15
        );
        assert!(g_ml_asymptotic(1.5, |_| 1.0, 3.0).is_err());
        let ratio =
            nu_transform(&YoungFunction::power_tail(3.0), 1e3).unwrap() / g_ml_asymptotic(3.0, |_| 1.0, 1e3).unwrap();
        assert!((ratio - 1.0).abs() < 0.05);
        let log_l = YoungFunction::PowerTail {
            m: 3.0,
            l: SlowlyVarying::Log,
            lambda0: None,
        };
        let ratio =
            nu_transform(&log_l, 1e6).unwrap() / g_ml_asymptotic(3.0, |x| SlowlyVarying::Log.eval(x), 1e6).unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}

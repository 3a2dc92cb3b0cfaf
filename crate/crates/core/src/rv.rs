//! Catalog of scalar random variables with exact moments, tails and moment
//! generating functions, plus a seeded sampler.
//!
//! Every law is symmetric or explicitly centered, so the mean is zero by
//! construction. The one exception, [`RvKind::TwoPointSharp`], is the
//! non-negative two-point law used to show that the Markov bound for `L_p`
//! is attained; it is flagged as non-centered and rejected wherever a sum is
//! formed.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, integrate_pieces, ln_factorial, QUAD_ABS_TOL, QUAD_REL_TOL};

/// Tolerance on `|sum(p_i v_i)|` for a [`RvKind::Bounded`] law to count as centered.
const CENTERING_TOL: f64 = 1e-12;

/// Distribution family of an [`RVSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum RvKind {
    /// `±1` with probability one half each.
    Rademacher,
    /// `N(0, sigma^2)`.
    Gaussian { sigma: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// `P(X = t) = t^-p`, `P(X = 0) = 1 - t^-p`. Not centered.
    TwoPointSharp { t: f64, p: f64 },
    /// Symmetric sign times a variable with `P(|X| > t) = exp(-t^m)`, `t >= 0`.
    WeibullSym { m: f64 },
    /// Finite discrete law on `values` with weights `probs`, mean zero.
    Bounded { values: Vec<f64>, probs: Vec<f64> },
}

/// A centered random variable: `scale` times a catalog law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RVSpec {
    kind: RvKind,
    scale: f64,
    label: String,
}

impl RVSpec {
    pub fn rademacher() -> Self {
        Self::from_kind(RvKind::Rademacher).expect("rademacher is always valid")
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::from_kind(RvKind::Gaussian { sigma })
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        Self::from_kind(RvKind::Uniform { half_width })
    }

    pub fn two_point_sharp(t: f64, p: f64) -> Result<Self> {
        Self::from_kind(RvKind::TwoPointSharp { t, p })
    }

    pub fn weibull_sym(m: f64) -> Result<Self> {
        Self::from_kind(RvKind::WeibullSym { m })
    }

    pub fn bounded(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::from_kind(RvKind::Bounded { values, probs })
    }

    /// Validates `kind` and attaches a default label.
    pub fn from_kind(kind: RvKind) -> Result<Self> {
        validate_kind(&kind)?;
        let label = default_label(&kind);
        Ok(Self {
            kind,
            scale: 1.0,
            label,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The same law multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("scale", format!("must be finite and positive, got {c}")));
        }
        Ok(Self {
            kind: self.kind.clone(),
            scale: self.scale * c,
            label: format!("{}*{}", c, self.label),
        })
    }

    pub fn kind(&self) -> &RvKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_centered(&self) -> bool {
        !matches!(self.kind, RvKind::TwoPointSharp { .. })
    }

    /// True when `x` and `-x` have the same law.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            RvKind::TwoPointSharp { .. } => false,
            RvKind::Bounded { values, probs } => {
                let mut pos: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
                let mut neg: Vec<(f64, f64)> = pos.iter().map(|&(v, p)| (-v, p)).collect();
                pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
                neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pos.iter()
                    .zip(&neg)
                    .all(|(a, b)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12)
            }
            _ => true,
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            RvKind::TwoPointSharp { t, p } => self.scale * t * t.powf(-p),
            _ => 0.0,
        }
    }

    /// Exact variance. Fails for the non-centered two-point law.
    pub fn variance(&self) -> Result<f64> {
        let base = match &self.kind {
            RvKind::Rademacher => 1.0,
            RvKind::Gaussian { sigma } => sigma * sigma,
            RvKind::Uniform { half_width } => half_width * half_width / 3.0,
            RvKind::TwoPointSharp { .. } => {
                return Err(Error::NotCentered {
                    label: self.label.clone(),
                })
            }
            RvKind::WeibullSym { m } => gamma(1.0 + 2.0 / m),
            RvKind::Bounded { values, probs } => values.iter().zip(probs).map(|(v, p)| p * v * v).sum(),
        };
        Ok(base * self.scale * self.scale)
    }

    pub fn std_dev(&self) -> Result<f64> {
        self.variance().map(f64::sqrt)
    }

    /// `ln E|X|^p` in closed form. `p` must be positive.
    pub fn ln_abs_moment(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(
                "p",
                format!("moment order must be positive and finite, got {p}"),
            ));
        }
        let base = match &self.kind {
            RvKind::Rademacher => 0.0,
            RvKind::Gaussian { sigma } => p * sigma.ln() + 0.5 * p * LN_2 + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln(),
            RvKind::Uniform { half_width } => p * half_width.ln() - (p + 1.0).ln(),
            RvKind::TwoPointSharp { t, p: q } => (p - q) * t.ln(),
            RvKind::WeibullSym { m } => ln_gamma(1.0 + p / m),
            RvKind::Bounded { values, probs } => log_sum_exp(
                values
                    .iter()
                    .zip(probs)
                    .filter(|(v, w)| **v != 0.0 && **w > 0.0)
                    .map(|(v, w)| w.ln() + p * v.abs().ln()),
            ),
        };
        let out = base + p * self.scale.ln();
        if out.is_nan() || out == f64::INFINITY {
            return Err(Error::Quadrature(format!(
                "moment of order {p} of {} is not finite",
                self.label
            )));
        }
        Ok(out)
    }

    /// `E|X|^p` for `p >= 1`.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        if p < 1.0 {
            return Err(invalid("p", format!("moment order must be >= 1, got {p}")));
        }
        let v = self.ln_abs_moment(p)?.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Quadrature(format!("E|X|^{p} overflows for {}", self.label)))
        }
    }

    /// `E|X|^p` by adaptive quadrature of `p t^(p-1) P(|X| >= t)` over `t >= 0`.
    ///
    /// Independent of the closed forms used by [`RVSpec::abs_moment`].
    pub fn abs_moment_by_quadrature(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(invalid("p", format!("moment order must be >= 1, got {p}")));
        }
        let breaks = self.tail_breakpoints(p);
        let integrand = |t: f64| {
            if t <= 0.0 {
                return if p == 1.0 { self.tail(0.0) } else { 0.0 };
            }
            p * t.powf(p - 1.0) * self.tail(t)
        };
        integrate_pieces(integrand, &breaks, QUAD_ABS_TOL, QUAD_REL_TOL)
    }

    /// Integration breakpoints for tail integrals: atoms and support edges,
    /// then a geometric ladder out to where the tail is negligible.
    fn tail_breakpoints(&self, p: f64) -> Vec<f64> {
        let s = self.scale;
        let mut pts = vec![0.0];
        match &self.kind {
            RvKind::Rademacher => pts.push(s),
            RvKind::Uniform { half_width } => pts.push(s * half_width),
            RvKind::TwoPointSharp { t, .. } => pts.push(s * t),
            RvKind::Bounded { values, .. } => {
                let mut a: Vec<f64> = values.iter().map(|v| v.abs() * s).filter(|v| *v > 0.0).collect();
                a.sort_by(|x, y| x.partial_cmp(y).unwrap());
                a.dedup();
                pts.extend(a);
            }
            RvKind::Gaussian { sigma } => {
                let unit = s * sigma;
                pts.extend(self.ladder(unit, p));
            }
            RvKind::WeibullSym { .. } => pts.extend(self.ladder(s, p)),
        }
        pts
    }

    fn ladder(&self, unit: f64, p: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut u = unit * 0.5;
        loop {
            out.push(u);
            let tail = self.tail(u);
            if tail < 1e-16 && (p.ln() + p * u.ln() + tail.ln()) < (1e-14f64).ln() {
                break;
            }
            u *= 1.5;
        }
        out
    }

    /// Two-sided tail `P(|X| >= t)`.
    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let x = t / self.scale;
        match &self.kind {
            RvKind::Rademacher => {
                if x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RvKind::Gaussian { sigma } => erfc(x / (sigma * std::f64::consts::SQRT_2)),
            RvKind::Uniform { half_width } => (1.0 - x / half_width).max(0.0),
            RvKind::TwoPointSharp { t: atom, p } => {
                if x <= *atom {
                    atom.powf(-p)
                } else {
                    0.0
                }
            }
            RvKind::WeibullSym { m } => (-x.powf(*m)).exp(),
            RvKind::Bounded { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| v.abs() >= x)
                .map(|(_, w)| *w)
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// One-sided tail `P(X >= t)`.
    pub fn upper_tail(&self, t: f64) -> f64 {
        let x = t / self.scale;
        match &self.kind {
            RvKind::Rademacher => {
                if x <= -1.0 {
                    1.0
                } else if x <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            RvKind::Gaussian { sigma } => 0.5 * erfc(x / (sigma * std::f64::consts::SQRT_2)),
            RvKind::Uniform { half_width } => ((half_width - x) / (2.0 * half_width)).clamp(0.0, 1.0),
            RvKind::TwoPointSharp { t: atom, p } => {
                if x <= 0.0 {
                    1.0
                } else if x <= *atom {
                    atom.powf(-p)
                } else {
                    0.0
                }
            }
            RvKind::WeibullSym { m } => {
                if x > 0.0 {
                    0.5 * (-x.powf(*m)).exp()
                } else {
                    1.0 - 0.5 * (-(-x).powf(*m)).exp()
                }
            }
            RvKind::Bounded { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v >= x)
                .map(|(_, w)| *w)
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// `ln E exp(lambda X)`; `+inf` when the expectation diverges.
    pub fn ln_mgf(&self, lambda: f64) -> Result<f64> {
        if lambda.is_nan() {
            return Err(invalid("lambda", "NaN"));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let l = lambda * self.scale;
        Ok(match &self.kind {
            RvKind::Rademacher => ln_cosh(l),
            RvKind::Gaussian { sigma } => 0.5 * sigma * sigma * l * l,
            RvKind::Uniform { half_width } => ln_sinhc(half_width * l),
            RvKind::TwoPointSharp { t, p } => {
                let q = t.powf(-p);
                log_sum_exp([(1.0 - q).ln(), q.ln() + l * t])
            }
            RvKind::WeibullSym { m } => weibull_ln_mgf(*m, l)?,
            RvKind::Bounded { values, probs } => {
                let big = values.iter().any(|v| (l * v).abs() >= 1.0);
                if big {
                    log_sum_exp(
                        values
                            .iter()
                            .zip(probs)
                            .filter(|(_, w)| **w > 0.0)
                            .map(|(v, w)| w.ln() + l * v),
                    )
                } else {
                    let s: f64 = values.iter().zip(probs).map(|(v, w)| w * (l * v).exp_m1()).sum();
                    s.ln_1p()
                }
            }
        })
    }

    /// `E exp(lambda X)`; `+inf` outside the finiteness domain or on overflow.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        self.ln_mgf(lambda).map(f64::exp)
    }

    /// A reusable sampler with per-law constants precomputed.
    pub fn sampler(&self) -> Sampler {
        let s = self.scale;
        match &self.kind {
            RvKind::Rademacher => Sampler::Sign(s),
            RvKind::Gaussian { sigma } => Sampler::Normal(s * sigma),
            RvKind::Uniform { half_width } => Sampler::Uniform(s * half_width),
            RvKind::TwoPointSharp { t, p } => Sampler::TwoPoint {
                value: s * t,
                prob: t.powf(-p),
            },
            RvKind::WeibullSym { m } => Sampler::Weibull {
                inv_m: 1.0 / m,
                scale: s,
            },
            RvKind::Bounded { values, probs } => {
                let mut acc = 0.0;
                let cumulative: Vec<f64> = probs
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                Sampler::Discrete {
                    values: values.iter().map(|v| v * s).collect(),
                    cumulative,
                }
            }
        }
    }

    /// `count` independent draws, reproducible from `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = self.sampler();
        (0..count).map(|_| sampler.draw(&mut rng)).collect()
    }
}

/// Precomputed draw rule for one [`RVSpec`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Sign(f64),
    Normal(f64),
    Uniform(f64),
    TwoPoint { value: f64, prob: f64 },
    Weibull { inv_m: f64, scale: f64 },
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
}

const MANTISSA: u64 = (1 << 53) - 1;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
fn open_closed_unit(bits: u64) -> f64 {
    ((bits & MANTISSA) as f64 + 1.0) * TWO_POW_M53
}

/// `x` with its sign flipped when the top bit of `bits` is clear.
#[inline]
fn with_sign(x: f64, bits: u64) -> f64 {
    f64::from_bits(x.to_bits() ^ (!bits & (1 << 63)))
}

/// Cube root of a positive finite `x`: exponent-halving seed plus three
/// Halley steps, accurate to a few ulps.
#[inline]
fn fast_cbrt(x: f64) -> f64 {
    let mut y = f64::from_bits(x.to_bits() / 3 + 0x2a9f_7893_782d_a1ce);
    for _ in 0..3 {
        let y3 = y * y * y;
        y *= (y3 + 2.0 * x) / (2.0 * y3 + x);
    }
    y
}

impl Sampler {
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Sign(s) => with_sign(*s, rng.next_u64()),
            Sampler::Normal(s) => {
                let z: f64 = rng.sample(StandardNormal);
                s * z
            }
            Sampler::Uniform(h) => h * (2.0 * open_closed_unit(rng.next_u64()) - 1.0),
            Sampler::TwoPoint { value, prob } => {
                if open_closed_unit(rng.next_u64()) <= *prob {
                    *value
                } else {
                    0.0
                }
            }
            Sampler::Weibull { inv_m, scale } => {
                let bits = rng.next_u64();
                let e = -open_closed_unit(bits).ln();
                let mag = if *inv_m == 0.5 {
                    e.sqrt()
                } else if *inv_m == 1.0 / 3.0 {
                    fast_cbrt(e)
                } else {
                    e.powf(*inv_m)
                };
                with_sign(scale * mag, bits)
            }
            Sampler::Discrete { values, cumulative } => {
                let u = open_closed_unit(rng.next_u64()) * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|c| *c < u).min(values.len() - 1);
                values[i]
            }
        }
    }
}

/// Outcome of [`check_bernstein_condition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernsteinCheck {
    pub holds: bool,
    /// `(member index, moment order)` of the first failure, members 0-based.
    pub first_violation: Option<(usize, u32)>,
}

/// Checks `E|X_i|^m <= nu * m! * kappa^(m-2) / 2` for every member and every
/// integer `m` in `[2, m_max]`, comparing in log-space.
pub fn check_bernstein_condition(specs: &[RVSpec], nu: f64, kappa: f64, m_max: u32) -> Result<BernsteinCheck> {
    if m_max < 2 {
        return Err(invalid("m_max", format!("must be at least 2, got {m_max}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid("nu", format!("must be positive, got {nu}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", format!("must be positive, got {kappa}")));
    }
    for (i, spec) in specs.iter().enumerate() {
        if !spec.is_centered() {
            return Err(Error::NotCentered {
                label: spec.label.clone(),
            });
        }
        for m in 2..=m_max {
            let lhs = spec.ln_abs_moment(f64::from(m))?;
            let rhs = nu.ln() + ln_factorial(m) + f64::from(m - 2) * kappa.ln() - LN_2;
            // Relative slack for rounding in the log-space comparison.
            if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
                return Ok(BernsteinCheck {
                    holds: false,
                    first_violation: Some((i, m)),
                });
            }
        }
    }
    Ok(BernsteinCheck {
        holds: true,
        first_violation: None,
    })
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        let sh = (0.5 * a).sinh();
        (2.0 * sh * sh).ln_1p()
    } else {
        a + (-2.0 * a).exp().ln_1p() - LN_2
    }
}

/// `ln(sinh(x) / x)`.
fn ln_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-2 {
        let a2 = a * a;
        a2 / 6.0 - a2 * a2 / 180.0 + a2 * a2 * a2 / 2835.0
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a - LN_2 + (-(-2.0 * a).exp()).ln_1p() - a.ln()
    }
}

pub(crate) fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let v: Vec<f64> = terms.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln E cosh(lambda |Z|)` for `P(|Z| > t) = exp(-t^m)`, written as
/// `ln(1 + E[cosh(lambda|Z|) - 1])` and integrated on a log scale so that
/// neither tiny nor huge `lambda` loses precision.
fn weibull_ln_mgf(m: f64, lambda: f64) -> Result<f64> {
    let l = lambda.abs();
    let ln_m = m.ln();
    // log of (cosh(l t) - 1) * density(t)
    let log_integrand = |t: f64| -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let x = l * t;
        let ln_cm1 = if x < 1.0 {
            let sh = (0.5 * x).sinh();
            (2.0 * sh * sh).ln()
        } else {
            // cosh(x) - 1 = e^x/2 * (1 - e^-x)^2
            x - LN_2 + 2.0 * (-(-x).exp()).ln_1p()
        };
        ln_cm1 + ln_m + (m - 1.0) * t.ln() - t.powf(m)
    };
    // Stationary region sits near (l/m)^(1/(m-1)); scan a wide log grid.
    let centre = (l / m).powf(1.0 / (m - 1.0)).max(1.0);
    let grid = crate::numeric::log_space(1e-3, 50.0 * centre + 50.0, 800);
    let (mut peak_t, mut peak) = (grid[0], f64::NEG_INFINITY);
    for &t in &grid {
        let v = log_integrand(t);
        if v > peak {
            peak = v;
            peak_t = t;
        }
    }
    if !peak.is_finite() {
        return Err(Error::Quadrature(format!(
            "weibull mgf integrand degenerate at lambda={lambda}"
        )));
    }
    // Upper limit where the integrand has fallen 60 nats below its peak.
    let mut upper = peak_t * 2.0;
    while log_integrand(upper) > peak - 60.0 {
        upper *= 1.5;
    }
    let scaled = |t: f64| (log_integrand(t) - peak).exp();
    let breaks = [0.0, 0.5 * peak_t, peak_t, 0.5 * (peak_t + upper), upper];
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        integral += integrate(scaled, w[0], w[1], 1e-14, 1e-11)?;
    }
    let ln_excess = peak + integral.ln();
    Ok(if ln_excess < 0.0 {
        ln_excess.exp().ln_1p()
    } else {
        ln_excess + (-ln_excess).exp().ln_1p()
    })
}

fn validate_kind(kind: &RvKind) -> Result<()> {
    let positive = |name: &'static str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(invalid(name, format!("must be finite and positive, got {v}")))
        }
    };
    match kind {
        RvKind::Rademacher => Ok(()),
        RvKind::Gaussian { sigma } => positive("sigma", *sigma),
        RvKind::Uniform { half_width } => positive("half_width", *half_width),
        RvKind::TwoPointSharp { t, p } => {
            if !(t.is_finite() && *t > 1.0) {
                return Err(invalid("t", format!("must exceed 1, got {t}")));
            }
            if !(p.is_finite() && *p > 1.0) {
                return Err(invalid("p", format!("must exceed 1, got {p}")));
            }
            Ok(())
        }
        RvKind::WeibullSym { m } => {
            if m.is_finite() && *m > 1.0 {
                Ok(())
            } else {
                Err(invalid("m", format!("must exceed 1, got {m}")))
            }
        }
        RvKind::Bounded { values, probs } => {
            if values.is_empty() || values.len() != probs.len() {
                return Err(invalid(
                    "values",
                    "values and probs must be non-empty and of equal length",
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid("values", "all values must be finite"));
            }
            if probs.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(invalid("probs", "weights must be finite and non-negative"));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(invalid("probs", format!("weights must sum to 1, got {total}")));
            }
            let mean: f64 = values.iter().zip(probs).map(|(v, w)| v * w).sum();
            let spread = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if mean.abs() > CENTERING_TOL * spread.max(1.0) {
                return Err(invalid("values", format!("law must be centered, mean is {mean}")));
            }
            let var: f64 = values.iter().zip(probs).map(|(v, w)| w * v * v).sum();
            if var <= 0.0 {
                return Err(invalid("values", "variance must be positive"));
            }
            Ok(())
        }
    }
}

fn default_label(kind: &RvKind) -> String {
    match kind {
        RvKind::Rademacher => "rademacher".into(),
        RvKind::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
        RvKind::Uniform { half_width } => format!("uniform(half_width={half_width})"),
        RvKind::TwoPointSharp { t, p } => format!("two_point_sharp(t={t},p={p})"),
        RvKind::WeibullSym { m } => format!("weibull_sym(m={m})"),
        RvKind::Bounded { values, .. } => format!("bounded({} atoms)", values.len()),
    }
}

// JSON shape: {"kind": "...", "params": {...}, "label": "..."}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Rademacher,
    Gaussian,
    Uniform,
    TwoPointSharp,
    WeibullSym,
    Bounded,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpec {
    kind: KindTag,
    #[serde(default)]
    params: RawParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<RawSpec> for RVSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let need = |name: &'static str, v: Option<f64>| v.ok_or_else(|| invalid(name, "missing parameter"));
        let p = raw.params;
        let kind = match raw.kind {
            KindTag::Rademacher => RvKind::Rademacher,
            KindTag::Gaussian => RvKind::Gaussian {
                sigma: need("sigma", p.sigma)?,
            },
            KindTag::Uniform => RvKind::Uniform {
                half_width: need("half_width", p.half_width)?,
            },
            KindTag::TwoPointSharp => RvKind::TwoPointSharp {
                t: need("t", p.t)?,
                p: need("p", p.p)?,
            },
            KindTag::WeibullSym => RvKind::WeibullSym { m: need("m", p.m)? },
            KindTag::Bounded => RvKind::Bounded {
                values: p.values.ok_or_else(|| invalid("values", "missing parameter"))?,
                probs: p.probs.ok_or_else(|| invalid("probs", "missing parameter"))?,
            },
        };
        let mut spec = RVSpec::from_kind(kind)?;
        if let Some(c) = p.scale {
            spec = spec.scaled(c)?;
        }
        if let Some(label) = raw.label {
            spec.label = label;
        }
        Ok(spec)
    }
}

impl From<RVSpec> for RawSpec {
    fn from(spec: RVSpec) -> Self {
        let mut params = RawParams::default();
        let kind = match spec.kind {
            RvKind::Rademacher => KindTag::Rademacher,
            RvKind::Gaussian { sigma } => {
                params.sigma = Some(sigma);
                KindTag::Gaussian
            }
            RvKind::Uniform { half_width } => {
                params.half_width = Some(half_width);
                KindTag::Uniform
            }
            RvKind::TwoPointSharp { t, p } => {
                params.t = Some(t);
                params.p = Some(p);
                KindTag::TwoPointSharp
            }
            RvKind::WeibullSym { m } => {
                params.m = Some(m);
                KindTag::WeibullSym
            }
            RvKind::Bounded { values, probs } => {
                params.values = Some(values);
                params.probs = Some(probs);
                KindTag::Bounded
            }
        };
        if spec.scale != 1.0 {
            params.scale = Some(spec.scale);
        }
        RawSpec {
            kind,
            params,
            label: Some(spec.label),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn catalog() -> Vec<RVSpec> {
        vec![
            RVSpec::rademacher(),
            RVSpec::gaussian(1.0).unwrap(),
            RVSpec::gaussian(2.5).unwrap(),
            RVSpec::uniform(3.0).unwrap(),
            RVSpec::weibull_sym(1.5).unwrap(),
            RVSpec::weibull_sym(2.0).unwrap(),
            RVSpec::weibull_sym(3.0).unwrap(),
            RVSpec::bounded(vec![-1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(),
        ]
    }

    #[test]
    fn sample_is_deterministic() {
        let r = RVSpec::rademacher();
        let a = r.sample(4, 7);
        assert_eq!(a, r.sample(4, 7));
        assert!(a.iter().all(|x| *x == 1.0 || *x == -1.0));
        assert_ne!(r.sample(64, 7), r.sample(64, 8));
    }

    #[test]
    fn gaussian_sample_moments() {
        let xs = RVSpec::gaussian(1.0).unwrap().sample(1_000_000, 1);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn weibull_sample_tail_at_one() {
        let xs = RVSpec::weibull_sym(2.0).unwrap().sample(1_000_000, 1);
        let frac = xs.iter().filter(|x| x.abs() > 1.0).count() as f64 / xs.len() as f64;
        assert!((frac - (-1f64).exp()).abs() < 0.002, "frac {frac}");
        let pos = xs.iter().filter(|x| **x > 0.0).count() as f64 / xs.len() as f64;
        assert!((pos - 0.5).abs() < 0.002);
    }

    #[test]
    fn bounded_sampler_respects_weights() {
        let b = RVSpec::bounded(vec![-1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let xs = b.sample(300_000, 3);
        let frac = xs.iter().filter(|x| **x == 2.0).count() as f64 / xs.len() as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn abs_moment_examples() {
        assert_eq!(RVSpec::rademacher().abs_moment(7.3).unwrap(), 1.0);
        assert_relative_eq!(
            RVSpec::gaussian(1.0).unwrap().abs_moment(4.0).unwrap(),
            3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            RVSpec::weibull_sym(2.0).unwrap().abs_moment(2.0).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(RVSpec::rademacher().abs_moment(0.5).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(RVSpec::rademacher().variance().unwrap(), 1.0);
        assert_relative_eq!(
            RVSpec::uniform(3.0).unwrap().variance().unwrap(),
            3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            RVSpec::weibull_sym(2.0).unwrap().variance().unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            RVSpec::two_point_sharp(10.0, 2.0).unwrap().variance(),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn variance_matches_second_moment() {
        for spec in catalog() {
            assert_relative_eq!(
                spec.variance().unwrap(),
                spec.abs_moment(2.0).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn mgf_examples() {
        assert_relative_eq!(
            RVSpec::gaussian(1.0).unwrap().mgf(2.0).unwrap(),
            2f64.exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            RVSpec::rademacher().mgf(1.0).unwrap(),
            1f64.cosh(),
            max_relative = 1e-14
        );
        for spec in catalog() {
            assert_eq!(spec.mgf(0.0).unwrap(), 1.0);
        }
        let u = RVSpec::uniform(1.0).unwrap();
        assert_relative_eq!(u.mgf(2.0).unwrap(), 2f64.sinh() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(u.ln_mgf(1e-4).unwrap(), 1e-8 / 6.0, max_relative = 1e-7);
    }

    #[test]
    fn weibull_mgf_matches_series() {
        // E cosh(l Z) = sum_k l^(2k) E Z^(2k) / (2k)!
        let spec = RVSpec::weibull_sym(3.0).unwrap();
        for &l in &[1e-3f64, 0.3, 1.0, 2.5] {
            let excess: f64 = (1..60)
                .map(|k| {
                    let k2 = 2.0 * k as f64;
                    (k2 * l.ln() + spec.ln_abs_moment(k2).unwrap() - ln_gamma(k2 + 1.0)).exp()
                })
                .sum();
            assert_relative_eq!(spec.ln_mgf(l).unwrap(), excess.ln_1p(), max_relative = 1e-7);
        }
        // huge lambda stays finite in log-space
        let big = RVSpec::weibull_sym(1.5).unwrap().ln_mgf(50.0).unwrap();
        assert!(big.is_finite() && big > 1e4);
        assert_eq!(RVSpec::weibull_sym(1.5).unwrap().mgf(50.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bernstein_condition_examples() {
        let r = vec![RVSpec::rademacher()];
        let ok = check_bernstein_condition(&r, 1.0, 1.0, 20).unwrap();
        assert!(ok.holds);
        let g = vec![RVSpec::gaussian(1.0).unwrap()];
        assert!(check_bernstein_condition(&g, 1.0, 1.0, 6).unwrap().holds);
        let bad = check_bernstein_condition(&r, 0.1, 1.0, 2).unwrap();
        assert_eq!(bad.first_violation, Some((0, 2)));
        assert!(check_bernstein_condition(&r, 1.0, 1.0, 1).is_err());
        // log-space copes with very large m
        assert!(check_bernstein_condition(&r, 1.0, 1.0, 300).unwrap().holds);
    }

    #[test]
    fn bernstein_condition_rejects_uncentered() {
        let s = vec![RVSpec::two_point_sharp(2.0, 2.0).unwrap()];
        assert!(check_bernstein_condition(&s, 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn construction_validation() {
        assert!(RVSpec::gaussian(0.0).is_err());
        assert!(RVSpec::uniform(-1.0).is_err());
        assert!(RVSpec::weibull_sym(1.0).is_err());
        assert!(RVSpec::two_point_sharp(1.0, 2.0).is_err());
        assert!(RVSpec::bounded(vec![1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(RVSpec::bounded(vec![0.0], vec![1.0]).is_err());
        assert!(RVSpec::bounded(vec![-1.0, 1.0], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn json_shape() {
        let s = RVSpec::gaussian(2.0).unwrap().with_label("g2");
        let js = serde_json::to_value(&s).unwrap();
        assert_eq!(
            js,
            serde_json::json!({"kind": "gaussian", "params": {"sigma": 2.0}, "label": "g2"})
        );
        let back: RVSpec = serde_json::from_value(js).unwrap();
        assert_eq!(back, s);
        let r: RVSpec = serde_json::from_str(r#"{"kind":"rademacher","params":{}}"#).unwrap();
        assert_eq!(r, RVSpec::rademacher());
        let bad = serde_json::from_str::<RVSpec>(r#"{"kind":"gaussian","params":{"sigma":-1}}"#);
        assert!(bad.is_err());
        let unknown = serde_json::from_str::<RVSpec>(r#"{"kind":"gaussian","params":{"sigma":1,"mu":2}}"#);
        assert!(unknown.is_err());
    }

    #[test]
    fn tails_are_consistent() {
        let g = RVSpec::gaussian(1.0).unwrap();
        assert_relative_eq!(g.tail(1.959963984540054), 0.05, max_relative = 1e-9);
        assert_relative_eq!(g.upper_tail(1.959963984540054), 0.025, max_relative = 1e-9);
        let u = RVSpec::uniform(2.0).unwrap();
        assert_eq!(u.tail(1.0), 0.5);
        assert_eq!(u.upper_tail(1.0), 0.25);
        let t = RVSpec::two_point_sharp(10.0, 2.0).unwrap();
        assert_eq!(t.tail(10.0), 0.01);
        assert_eq!(t.tail(10.5), 0.0);
    }

    #[test]
    fn fast_cbrt_is_accurate() {
        for &x in &[1e-300, 1e-12, 0.001, 0.3, 1.0, 2.0, 27.0, 1e5, 3.7e40] {
            let want = f64::cbrt(x);
            assert!((fast_cbrt(x) - want).abs() <= 4.0 * f64::EPSILON * want, "{x}");
        }
        assert_eq!(with_sign(2.0, 0), -2.0);
        assert_eq!(with_sign(2.0, 1 << 63), 2.0);
    }
}

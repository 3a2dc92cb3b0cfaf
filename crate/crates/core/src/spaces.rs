//! Norms and tail characteristics for Lebesgue–Riesz `L_p`, Grand Lebesgue
//! `G(psi)` and exponential `B(phi)` spaces.

use serde::{Deserialize, Serialize};

use crate::conjugate::{h_star, nu_transform};
use crate::error::{invalid, Result};
use crate::functions::{GeneratingFunction, PDomain, YoungFunction};
use crate::numeric::{argmax, golden_max, log_space};
use crate::rv::RVSpec;

/// Rosenthal constant in `K(L_p) <= C_R p / ln p`.
pub const ROSENTHAL_C: f64 = 1.77638;

/// Cap on `p` when scanning a GLS supremum with `b = inf`.
pub const DEFAULT_P_CAP: f64 = 512.0;
const P_GRID_POINTS: usize = 400;
const LAMBDA_MIN: f64 = 1e-4;
const LAMBDA_CAP: f64 = 50.0;
const LAMBDA_GRID_POINTS: usize = 400;
/// Log-log growth rate beyond the scan cap above which a norm is declared infinite.
const DIVERGENCE_RATE: f64 = 0.01;

/// Whether a tail characteristic is exact or only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Upper,
}

/// A rearrangement-invariant space of random variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "lowercase")]
pub enum SpaceDescriptor {
    Lp { p: f64 },
    Gls { psi: GeneratingFunction },
    Bphi { phi: YoungFunction },
}

impl SpaceDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceDescriptor::Lp { p } => {
                if p.is_finite() && *p >= 1.0 {
                    Ok(())
                } else {
                    Err(invalid("p", format!("L_p needs p >= 1, got {p}")))
                }
            }
            SpaceDescriptor::Gls { psi } => psi.validate(),
            SpaceDescriptor::Bphi { phi } => phi.validate(),
        }
    }

    /// Norm of `spec` in this space; `+inf` when it does not belong.
    pub fn norm(&self, spec: &RVSpec) -> Result<f64> {
        match self {
            SpaceDescriptor::Lp { p } => lp_norm(spec, *p),
            SpaceDescriptor::Gls { psi } => gls_norm(spec, psi),
            SpaceDescriptor::Bphi { phi } => bphi_norm(spec, phi),
        }
    }

    pub fn tail_characteristic(&self, t: f64) -> Result<f64> {
        tail_characteristic(self, t)
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            SpaceDescriptor::Lp { .. } => Provenance::Exact,
            _ => Provenance::Upper,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SpaceDescriptor::Lp { p } => format!("L_{p}"),
            SpaceDescriptor::Gls { psi } => format!("G({})", psi.label()),
            SpaceDescriptor::Bphi { phi } => format!("B({})", phi.label()),
        }
    }
}

/// `||X||_p = (E|X|^p)^(1/p)`.
pub fn lp_norm(spec: &RVSpec, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    Ok((spec.ln_abs_moment(p)? / p).exp())
}

/// `||X||_{G psi} = sup_p ||X||_p / psi(p)`.
///
/// Scans a 400-point geometric `p`-grid capped at `min(b, 512)`, refines the
/// best cell by golden section and, when the cap is active and the ratio is
/// still growing there, extrapolates to decide divergence.
pub fn gls_norm(spec: &RVSpec, psi: &GeneratingFunction) -> Result<f64> {
    gls_norm_capped(spec, psi, DEFAULT_P_CAP)
}

pub fn gls_norm_capped(spec: &RVSpec, psi: &GeneratingFunction, p_cap: f64) -> Result<f64> {
    psi.validate()?;
    let ln_ratio = |p: f64| -> f64 {
        let lp = psi.ln_eval(p);
        if lp == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        match spec.ln_abs_moment(p) {
            Ok(m) => m / p - lp,
            Err(_) => f64::INFINITY,
        }
    };
    let (lo, hi, closed) = match psi.domain() {
        PDomain::Point(r) => return lp_norm(spec, r),
        PDomain::Range { lo, hi, closed } => (lo, hi, closed),
    };
    let capped = hi > p_cap;
    let top = if capped {
        p_cap
    } else if closed {
        hi
    } else {
        hi * (1.0 - 1e-12)
    };
    if top <= lo {
        return Ok(ln_ratio(lo).exp());
    }
    let mut grid = log_space(lo, top, P_GRID_POINTS);
    if let GeneratingFunction::Tabulated { p, .. } = psi {
        grid.extend(p.iter().copied().filter(|x| *x >= lo && *x <= top));
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
    }
    let values: Vec<f64> = grid.iter().map(|&p| ln_ratio(p)).collect();
    if values.contains(&f64::INFINITY) {
        return Ok(f64::INFINITY);
    }
    let Some(best) = argmax(&values) else {
        return Ok(0.0);
    };
    let last = grid.len() - 1;
    let mut tail_max = f64::NEG_INFINITY;
    if capped {
        let probes: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|k| ln_ratio(k * p_cap)).collect();
        if diverging(&probes) {
            return Ok(f64::INFINITY);
        }
        tail_max = probes.iter().copied().fold(tail_max, f64::max);
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(last)];
    let (_, refined) = golden_max(ln_ratio, a, b, 80);
    Ok(refined.max(values[best]).max(tail_max).exp())
}

/// Probes at `2c, 4c, 8c` past a scan cap `c`: still growing at a log-log rate
/// above [`DIVERGENCE_RATE`] means the supremum is infinite.
fn diverging(ln_probes: &[f64]) -> bool {
    let rate = (ln_probes[2] - ln_probes[1]) / std::f64::consts::LN_2;
    rate > DIVERGENCE_RATE || ln_probes.contains(&f64::INFINITY)
}

/// Per-`lambda` minimal scale: `max_sign phi^-1(ln E exp(±lambda X)) / lambda`.
fn tau_at(spec: &RVSpec, phi: &YoungFunction, lambda: f64, symmetric: bool) -> f64 {
    let need = |l: f64| match spec.ln_mgf(l) {
        Ok(v) => phi.inverse(v) / lambda,
        Err(_) => f64::INFINITY,
    };
    let up = need(lambda);
    if symmetric {
        up
    } else {
        up.max(need(-lambda))
    }
}

/// `||X||_{B(phi)} = inf { tau : E exp(±lambda X) <= exp(phi(lambda tau)) for |lambda| < lambda0 }`.
///
/// Computed as the supremum over a geometric `lambda`-grid on
/// `(1e-4, min(lambda0 (1 - 1e-6), 50))` of the per-`lambda` minimal `tau`,
/// with golden-section refinement. Both signs are checked for asymmetric laws.
pub fn bphi_norm(spec: &RVSpec, phi: &YoungFunction) -> Result<f64> {
    phi.validate()?;
    if !spec.is_centered() {
        return Err(crate::error::Error::NotCentered {
            label: spec.label().to_string(),
        });
    }
    let symmetric = spec.is_symmetric();
    let l0 = phi.lambda0();
    let cap_by_l0 = l0 * (1.0 - 1e-6);
    let capped = cap_by_l0 > LAMBDA_CAP;
    let top = cap_by_l0.min(LAMBDA_CAP);
    let low = LAMBDA_MIN.min(top * 1e-4);
    let grid = log_space(low, top, LAMBDA_GRID_POINTS);
    let ln_tau = |l: f64| tau_at(spec, phi, l, symmetric).ln();
    let values: Vec<f64> = grid.iter().map(|&l| ln_tau(l)).collect();
    if values.contains(&f64::INFINITY) {
        return Ok(f64::INFINITY);
    }
    let Some(best) = argmax(&values) else {
        return Ok(0.0);
    };
    let last = grid.len() - 1;
    let mut tail_max = f64::NEG_INFINITY;
    if capped {
        let probes: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|k| k * LAMBDA_CAP)
            .filter(|l| *l < cap_by_l0)
            .map(ln_tau)
            .collect();
        if probes.len() == 3 && diverging(&probes) {
            return Ok(f64::INFINITY);
        }
        tail_max = probes.iter().copied().fold(tail_max, f64::max);
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(last)];
    let (_, refined) = golden_max(ln_tau, a, b, 80);
    Ok(refined.max(values[best]).max(tail_max).exp())
}

/// Worst-case tail `T^X(t)` over the unit ball of the space.
///
/// * `L_p`: `min(1, t^-p)` (exact).
/// * `G(psi)`: `min(1, exp(-h*(ln t)))` for `t >= e`, else 1 (upper bound).
/// * `B(phi)`: `min(1, exp(-nu(t)))` (upper bound).
pub fn tail_characteristic(space: &SpaceDescriptor, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let v = match space {
        SpaceDescriptor::Lp { p } => t.powf(-p),
        SpaceDescriptor::Gls { psi } => {
            if t < std::f64::consts::E {
                1.0
            } else {
                (-h_star(psi, t.ln())?).exp()
            }
        }
        SpaceDescriptor::Bphi { phi } => {
            if t == f64::INFINITY {
                0.0
            } else {
                (-nu_transform(phi, t)?).exp()
            }
        }
    };
    Ok(v.min(1.0))
}

/// Norm and tail of the two-point law that attains the `L_p` characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma11 {
    pub norm: f64,
    pub tail_at_t: f64,
}

/// Builds `P(X = t) = t^-p`, `P(X = 0) = 1 - t^-p` and returns its `L_p`
/// norm (1) and its tail at `t` (`t^-p`).
pub fn lemma11_sharpness(p: f64, t: f64) -> Result<Lemma11> {
    let spec = RVSpec::two_point_sharp(t, p)?;
    Ok(Lemma11 {
        norm: lp_norm(&spec, p)?,
        tail_at_t: spec.tail(t),
    })
}

/// `C_R p / ln p`, the Rosenthal bound on `K(L_p)`, for `p > 2`.
pub fn rosenthal_constant(p: f64) -> Result<f64> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(invalid("p", format!("Rosenthal constant needs p > 2, got {p}")));
    }
    Ok(ROSENTHAL_C * p / p.ln())
}

//! Tail bounds for normalized sums `S_n = sum xi_i / sqrt(sum sigma_i^2)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::fmt_float;
use crate::functions::{is_phi_conv, GeneratingFunction};
use crate::rv::RVSpec;
use crate::spaces::{
    gls_norm, lp_norm, rosenthal_constant, tail_characteristic, Provenance, SpaceDescriptor, ROSENTHAL_C,
};

/// Independent centered summands; `members` is cycled up to length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub struct SumProblem {
    members: Vec<RVSpec>,
    n: usize,
    sigmas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    members: Vec<RVSpec>,
    n: usize,
}

impl TryFrom<RawProblem> for SumProblem {
    type Error = Error;
    fn try_from(raw: RawProblem) -> Result<Self> {
        SumProblem::new(raw.members, raw.n)
    }
}

impl From<SumProblem> for RawProblem {
    fn from(p: SumProblem) -> Self {
        RawProblem {
            members: p.members,
            n: p.n,
        }
    }
}

impl SumProblem {
    pub fn new(members: Vec<RVSpec>, n: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("members", "at least one member is required"));
        }
        if n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        let mut sigmas = Vec::with_capacity(members.len());
        for m in &members {
            if !m.is_centered() {
                return Err(Error::NotCentered {
                    label: m.label().to_string(),
                });
            }
            let s = m.std_dev()?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("members", format!("`{}` has zero variance", m.label())));
            }
            sigmas.push(s);
        }
        Ok(Self { members, n, sigmas })
    }

    pub fn members(&self) -> &[RVSpec] {
        &self.members
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `i`-th summand (0-based), cycling through `members`.
    pub fn member(&self, i: usize) -> &RVSpec {
        &self.members[i % self.members.len()]
    }

    /// `sigma_i` of the `i`-th summand.
    pub fn sigma(&self, i: usize) -> f64 {
        self.sigmas[i % self.members.len()]
    }

    /// `sqrt(sum_{i<n} sigma_i^2)`.
    pub fn norming(&self) -> f64 {
        (0..self.n).map(|i| self.sigma(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.members.clone(), n)
    }

    /// Every member multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let members = self.members.iter().map(|m| m.scaled(c)).collect::<Result<Vec<_>>>()?;
        Self::new(members, self.n)
    }
}

/// A tail bound tabulated on a grid. `values` are raw (possibly above 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub label: String,
}

impl BoundCurve {
    /// `min(1, value)` pointwise.
    pub fn clipped(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min(1.0)).collect()
    }

    /// Pointwise multiple of the curve; used for canary runs.
    pub fn scaled(&self, factor: f64) -> BoundCurve {
        BoundCurve {
            t_grid: self.t_grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            provenance: self.provenance,
            label: format!("{} x {factor}", self.label),
        }
    }

    /// CSV with columns `t,value,clipped,provenance`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value", "clipped", "provenance"])?;
        let prov = match self.provenance {
            Provenance::Exact => "exact",
            Provenance::Upper => "upper",
        };
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            w.write_record([fmt_float(*t), fmt_float(*v), fmt_float(v.min(1.0)), prov.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "must not be empty"));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("t_grid", "values must be finite and non-negative"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "values must be strictly increasing"));
    }
    Ok(())
}

/// `2 exp(-t^2 / (2 nu n + 2 kappa t))`, the classical Bernstein bound for
/// `P(|sum xi_i| >= t)` and for `P(max_j |sum_{i<=j} xi_i| >= t)`.
pub fn classical_bernstein(nu: f64, kappa: f64, n: usize, t: f64) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid("nu", format!("must be positive, got {nu}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", format!("must be positive, got {kappa}")));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    let nn = n as f64;
    Ok(2.0 * (-t * t / (2.0 * nu * nn + 2.0 * kappa * t)).exp())
}

/// Classical bound for `S_n`: thresholds `t` are mapped to raw sums `t * norming`.
pub fn classical_curve(nu: f64, kappa: f64, n: usize, norming: f64, t_grid: &[f64]) -> Result<BoundCurve> {
    check_t_grid(t_grid)?;
    if !(norming > 0.0 && norming.is_finite()) {
        return Err(invalid("norming", format!("must be positive, got {norming}")));
    }
    let values = t_grid
        .iter()
        .map(|t| classical_bernstein(nu, kappa, n, t * norming))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        t_grid: t_grid.to_vec(),
        values,
        provenance: Provenance::Upper,
        label: format!("classical(nu={nu},kappa={kappa},n={n})"),
    })
}

/// `kappa = max_i ||xi_i||_X / sigma_i`.
pub fn kappa_relative(problem: &SumProblem, space: &SpaceDescriptor) -> Result<f64> {
    space.validate()?;
    let mut kappa: f64 = 0.0;
    for (i, m) in problem.members().iter().enumerate() {
        let norm = space.norm(m)?;
        if !norm.is_finite() {
            return Err(Error::InfiniteNorm {
                index: i,
                space: space.label(),
            });
        }
        kappa = kappa.max(norm / problem.sigma(i));
    }
    Ok(kappa)
}

/// `t -> T^Y(t / (kappa U))` with `kappa` measured in `x_space`.
pub fn modified_tail_bound(
    problem: &SumProblem,
    x_space: &SpaceDescriptor,
    y_space: &SpaceDescriptor,
    u_const: f64,
    t_grid: &[f64],
) -> Result<BoundCurve> {
    if !(u_const > 0.0 && u_const.is_finite()) {
        return Err(invalid(
            "u_const",
            format!("must be positive and finite, got {u_const}"),
        ));
    }
    check_t_grid(t_grid)?;
    y_space.validate()?;
    let kappa = kappa_relative(problem, x_space)?;
    let scale = kappa * u_const;
    let mut values = t_grid
        .par_iter()
        .map(|t| tail_characteristic(y_space, t / scale))
        .collect::<Result<Vec<_>>>()?;
    // The tail is nonincreasing, so a bound at t also bounds every larger t.
    for i in 1..values.len() {
        values[i] = values[i].min(values[i - 1]);
    }
    Ok(BoundCurve {
        t_grid: t_grid.to_vec(),
        values,
        provenance: y_space.provenance(),
        label: format!("T^{}(t/({kappa}*{u_const}))", y_space.label()),
    })
}

/// Class `B_2` route: `T^X(t / kappa)`. Only `L_2` and `B(phi)` with a
/// `Phi(conv)` function qualify.
pub fn b2_bound(problem: &SumProblem, space: &SpaceDescriptor, t_grid: &[f64]) -> Result<BoundCurve> {
    match space {
        SpaceDescriptor::Lp { p } if *p == 2.0 => {}
        SpaceDescriptor::Lp { p } => {
            return Err(Error::NotB2(format!("L_{p} is not in B2; use the wb2 route")));
        }
        SpaceDescriptor::Bphi { phi } => {
            let verdict = is_phi_conv(phi);
            if !verdict.convex {
                return Err(Error::NotB2(format!(
                    "{} fails Phi(conv): slope of phi(sqrt s) drops by {:e} at s = {}",
                    phi.label(),
                    verdict.worst_slope_drop,
                    verdict.at
                )));
            }
        }
        SpaceDescriptor::Gls { .. } => {
            return Err(Error::NotB2(format!("{} has no B2 constant", space.label())));
        }
    }
    modified_tail_bound(problem, space, space, 1.0, t_grid)
}

/// `K(X)` of class `WB_2`: Rosenthal for `L_p`, 1 for `L_2` and for `B(phi)`
/// under `Phi(conv)`, otherwise the caller's value.
pub fn wb2_constant(space: &SpaceDescriptor, user: Option<f64>) -> Result<f64> {
    if let Some(k) = user {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(invalid("k", format!("K(X) must be finite and at least 1, got {k}")));
        }
        return Ok(k);
    }
    match space {
        SpaceDescriptor::Lp { p } if *p == 2.0 => Ok(1.0),
        SpaceDescriptor::Lp { p } if *p > 2.0 => rosenthal_constant(*p),
        SpaceDescriptor::Bphi { phi } if is_phi_conv(phi).convex => Ok(1.0),
        _ => Err(Error::MissingConstant(format!("K({}) must be supplied", space.label()))),
    }
}

/// Class `WB_2` route: `T^X(t / (kappa K(X)))`.
pub fn wb2_bound(problem: &SumProblem, space: &SpaceDescriptor, k: Option<f64>, t_grid: &[f64]) -> Result<BoundCurve> {
    let k = wb2_constant(space, k)?;
    modified_tail_bound(problem, space, space, k, t_grid)
}

/// `sqrt(sum ||xi_i||^2)`.
pub fn subgaussian_sum_norm(norms: &[f64]) -> f64 {
    norms.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Moment envelope `psi(p) = max_i ||xi_i / sigma_i||_p` and its Rosenthal
/// lift `psi~(p) = C_R (p / ln p) psi(p)` on `p >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub psi: GeneratingFunction,
    pub psi_tilde: GeneratingFunction,
}

pub fn psi_envelope(problem: &SumProblem, p_grid: &[f64]) -> Result<Envelope> {
    if p_grid.is_empty() || p_grid[0] < 1.0 || p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("p_grid", "must be non-empty, increasing and start at p >= 1"));
    }
    let mut ps = Vec::new();
    let mut psi = Vec::new();
    for &p in p_grid {
        let mut v: f64 = 0.0;
        for (i, m) in problem.members().iter().enumerate() {
            let norm = lp_norm(m, p).unwrap_or(f64::INFINITY);
            v = v.max(norm / problem.sigma(i));
        }
        if !v.is_finite() {
            break;
        }
        ps.push(p);
        psi.push(v);
    }
    let tilde: Vec<(f64, f64)> = ps
        .iter()
        .zip(&psi)
        .filter(|(p, _)| **p >= 2.0)
        .map(|(&p, &v)| (p, ROSENTHAL_C * p / p.ln() * v))
        .collect();
    if !ps.iter().any(|p| *p > 2.0) || tilde.is_empty() {
        return Err(Error::EnvelopeInfinite);
    }
    Ok(Envelope {
        psi: GeneratingFunction::Tabulated { p: ps, values: psi },
        psi_tilde: GeneratingFunction::Tabulated {
            p: tilde.iter().map(|x| x.0).collect(),
            values: tilde.iter().map(|x| x.1).collect(),
        },
    })
}

/// Result of the Grand Lebesgue / Rosenthal route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlsRosenthal {
    pub envelope: Envelope,
    /// `sup_i ||xi_i / sigma_i||_{G psi}`, which bounds `sup_n ||S_n||_{G psi~}`.
    pub gls_norm: f64,
    pub curve: BoundCurve,
}

impl GlsRosenthal {
    /// Implied bound on `||S_n||_p`: `psi~(p) * gls_norm`.
    pub fn moment_bound(&self, p: f64) -> f64 {
        self.envelope.psi_tilde.eval(p) * self.gls_norm
    }
}

pub fn gls_rosenthal_bound(problem: &SumProblem, p_grid: &[f64], t_grid: &[f64]) -> Result<GlsRosenthal> {
    let envelope = psi_envelope(problem, p_grid)?;
    let mut g: f64 = 0.0;
    for (i, m) in problem.members().iter().enumerate() {
        let s = problem.sigma(i);
        g = g.max(gls_norm(m, &envelope.psi)? / s);
    }
    if !g.is_finite() {
        return Err(Error::EnvelopeInfinite);
    }
    let x = SpaceDescriptor::Gls {
        psi: envelope.psi.clone(),
    };
    let y = SpaceDescriptor::Gls {
        psi: envelope.psi_tilde.clone(),
    };
    let curve = modified_tail_bound(problem, &x, &y, 1.0, t_grid)?;
    Ok(GlsRosenthal {
        envelope,
        gls_norm: g,
        curve,
    })
}

/// Predicted tail exponent `min(m, 2)` of `sup_n T_{S_n}` for symmetric
/// Weibull summands with shape `m`.
pub fn lower_exponent(m: f64) -> Result<f64> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(invalid("m", format!("must exceed 1, got {m}")));
    }
    Ok(m.min(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::YoungFunction;
    use approx::assert_relative_eq;

    fn sub() -> SpaceDescriptor {
        SpaceDescriptor::Bphi {
            phi: YoungFunction::quadratic(),
        }
    }

    fn rademachers(n: usize) -> SumProblem {
        SumProblem::new(vec![RVSpec::rademacher()], n).unwrap()
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_bernstein(1.0, 1.0, 100, 0.0).unwrap(), 2.0);
        assert_relative_eq!(
            classical_bernstein(1.0, 1.0, 100, 10.0).unwrap(),
            2.0 * (-100.0f64 / 220.0).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            classical_bernstein(1.0, 1.0, 100, 10.0).unwrap(),
            1.269473,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            classical_bernstein(1.0, 1.0, 100, 40.0).unwrap(),
            0.006597,
            epsilon = 1e-6
        );
        assert!(classical_bernstein(0.0, 1.0, 100, 1.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_relative_eq!(
            kappa_relative(&rademachers(3), &sub()).unwrap(),
            1.0,
            max_relative = 1e-6
        );
        let gauss = SumProblem::new(
            [1.0, 2.0, 5.0].iter().map(|s| RVSpec::gaussian(*s).unwrap()).collect(),
            3,
        )
        .unwrap();
        assert_relative_eq!(kappa_relative(&gauss, &sub()).unwrap(), 1.0, max_relative = 1e-8);
        let mixed = SumProblem::new(vec![RVSpec::uniform(1.0).unwrap(), RVSpec::rademacher()], 2).unwrap();
        assert_relative_eq!(kappa_relative(&mixed, &sub()).unwrap(), 1.0, max_relative = 1e-6);
        let heavy = SumProblem::new(vec![RVSpec::rademacher(), RVSpec::weibull_sym(1.5).unwrap()], 2).unwrap();
        assert_eq!(
            kappa_relative(&heavy, &sub()),
            Err(Error::InfiniteNorm {
                index: 1,
                space: sub().label()
            })
        );
    }

    #[test]
    fn modified_examples() {
        let c = b2_bound(&rademachers(10), &sub(), &[0.0, 3.0]).unwrap();
        assert_eq!(c.clipped()[0], 1.0);
        assert_relative_eq!(c.values[1], (-4.5f64).exp(), max_relative = 1e-5);
        assert_relative_eq!(c.values[1], 0.011109, epsilon = 1e-6);

        let gauss = SumProblem::new(vec![RVSpec::gaussian(1.0).unwrap()], 5).unwrap();
        let l4 = SpaceDescriptor::Lp { p: 4.0 };
        // kappa = ||Z||_4 here, so undo it to exercise kappa = 1
        let k = kappa_relative(&gauss, &l4).unwrap();
        let curve = modified_tail_bound(&gauss, &l4, &l4, rosenthal_constant(4.0).unwrap() / k, &[20.0]).unwrap();
        assert_relative_eq!(
            curve.values[0],
            (20.0 / 5.125549233468674f64).powi(-4),
            max_relative = 1e-9
        );
        assert_relative_eq!(curve.values[0], 0.004314, epsilon = 1e-6);
    }

    #[test]
    fn routes_refuse_without_constants() {
        let p = rademachers(4);
        let bad_phi = SpaceDescriptor::Bphi {
            phi: YoungFunction::power_tail(1.6),
        };
        assert!(matches!(b2_bound(&p, &bad_phi, &[1.0]), Err(Error::NotB2(_))));
        assert!(matches!(
            b2_bound(&p, &SpaceDescriptor::Lp { p: 4.0 }, &[1.0]),
            Err(Error::NotB2(_))
        ));
        let gls = SpaceDescriptor::Gls {
            psi: GeneratingFunction::power(0.5),
        };
        assert!(matches!(wb2_constant(&gls, None), Err(Error::MissingConstant(_))));
        assert_eq!(wb2_constant(&gls, Some(3.0)).unwrap(), 3.0);
        assert_relative_eq!(
            wb2_constant(&SpaceDescriptor::Lp { p: 4.0 }, None).unwrap(),
            5.125549233468674,
            max_relative = 1e-12
        );
    }

    #[test]
    fn wb2_matches_pair_route() {
        let p = SumProblem::new(vec![RVSpec::uniform(1.0).unwrap(), RVSpec::gaussian(2.0).unwrap()], 7).unwrap();
        let l3 = SpaceDescriptor::Lp { p: 3.0 };
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.5).collect();
        let a = wb2_bound(&p, &l3, None, &t).unwrap();
        let b = modified_tail_bound(&p, &l3, &l3, rosenthal_constant(3.0).unwrap(), &t).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn sum_norm_examples() {
        assert_eq!(subgaussian_sum_norm(&[3.0, 4.0]), 5.0);
        assert_eq!(subgaussian_sum_norm(&[1.0]), 1.0);
        assert_relative_eq!(subgaussian_sum_norm(&[1.0; 9]), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn envelope_examples() {
        let grid = [1.0, 2.0, 3.0, 4.0, 6.0];
        let env = psi_envelope(&rademachers(5), &grid).unwrap();
        assert!(grid.iter().all(|p| (env.psi.eval(*p) - 1.0).abs() < 1e-12));
        assert_relative_eq!(env.psi_tilde.eval(4.0), 5.125549233468674, max_relative = 1e-9);

        let gauss = SumProblem::new(vec![RVSpec::gaussian(1.0).unwrap(), RVSpec::gaussian(5.0).unwrap()], 2).unwrap();
        let env = psi_envelope(&gauss, &grid).unwrap();
        assert_relative_eq!(env.psi.eval(4.0), 3f64.powf(0.25), max_relative = 1e-9);
        assert_relative_eq!(env.psi_tilde.eval(4.0), 6.745602, epsilon = 1e-5);
        assert!(matches!(
            psi_envelope(&gauss, &[1.0, 2.0]),
            Err(Error::EnvelopeInfinite)
        ));
    }

    #[test]
    fn gls_rosenthal_moment_bound() {
        let gauss = SumProblem::new(vec![RVSpec::gaussian(1.0).unwrap(), RVSpec::gaussian(2.0).unwrap()], 30).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 * 0.25).collect();
        let r = gls_rosenthal_bound(&gauss, &grid, &[0.0, 5.0, 50.0]).unwrap();
        assert_relative_eq!(r.gls_norm, 1.0, max_relative = 1e-6);
        assert!(r.moment_bound(4.0) > 3f64.powf(0.25));
        assert!(r.curve.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn lower_exponent_examples() {
        assert_eq!(lower_exponent(1.5).unwrap(), 1.5);
        assert_eq!(lower_exponent(3.0).unwrap(), 2.0);
        assert_eq!(lower_exponent(2.0).unwrap(), 2.0);
        assert!(lower_exponent(1.0).is_err());
    }

    #[test]
    fn problem_json_roundtrip() {
        let json = r#"{"members":[{"kind":"gaussian","params":{"sigma":2.0}},{"kind":"rademacher"}],"n":5}"#;
        let p: SumProblem = serde_json::from_str(json).unwrap();
        assert_eq!(p.n(), 5);
        assert_relative_eq!(p.norming(), (4.0f64 * 3.0 + 2.0).sqrt(), max_relative = 1e-15);
        let back: SumProblem = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"members":[{"kind":"two_point_sharp","params":{"t":2,"p":2}}],"n":1}"#;
        assert!(serde_json::from_str::<SumProblem>(bad).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let c = classical_curve(1.0, 1.0, 100, 10.0, &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,value,clipped,provenance"));
        assert_eq!(lines.next(), Some("0.00000000e0,2.00000000e0,1.00000000e0,upper"));
    }
}

//! Independent brute-force oracles for the GLS and B(phi) norms, shared by
//! the oracle tests and the acceptance runner.

#![allow(dead_code)]

use tailbound::functions::PDomain;
use tailbound::{GeneratingFunction, RVSpec, SlowlyVarying, YoungFunction};

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn members() -> Vec<RVSpec> {
    vec![
        RVSpec::rademacher(),
        RVSpec::gaussian(1.0).unwrap(),
        RVSpec::uniform(1.0).unwrap(),
        RVSpec::weibull_sym(3.0).unwrap(),
        RVSpec::weibull_sym(1.5).unwrap(),
        RVSpec::bounded(vec![-1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(),
        RVSpec::gaussian(3.0).unwrap(),
    ]
}

/// `sup_p ||X||_p / psi(p)` on `[lo, top]`: 100-point scan, then two rounds
/// of 1000 points over the cells next to the incumbent.
pub fn gls_oracle(x: &RVSpec, psi: &GeneratingFunction) -> f64 {
    let ratio = |p: f64| (x.ln_abs_moment(p).unwrap() / p).exp() / psi.eval(p);
    let (lo, top) = match psi.domain() {
        PDomain::Range { lo, hi, closed } => (
            lo,
            if hi.is_infinite() {
                512.0
            } else if closed {
                hi
            } else {
                hi * (1.0 - 1e-12)
            },
        ),
        PDomain::Point(r) => return ratio(r),
    };
    let mut grid = log_grid(lo, top, 100);
    let mut best = f64::NEG_INFINITY;
    for _round in 0..3 {
        let vals: Vec<f64> = grid.iter().map(|&p| ratio(p)).collect();
        let i = (0..vals.len())
            .max_by(|a, b| vals[*a].partial_cmp(&vals[*b]).unwrap())
            .unwrap();
        best = best.max(vals[i]);
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(grid.len() - 1)];
        grid = (0..1000).map(|k| a + (b - a) * k as f64 / 999.0).collect();
    }
    best
}

/// Minimal `tau` with `ln E exp(±lambda X) <= phi(lambda tau)` on a
/// `lambda` grid, by bisection. The grid starts with 400 geometric points and
/// is refined three times, tenfold, around the most violated constraints.
pub fn bphi_oracle(x: &RVSpec, phi: &YoungFunction) -> f64 {
    let l0 = phi.lambda0();
    let top = if l0.is_finite() {
        (l0 * (1.0 - 1e-6)).min(50.0)
    } else {
        400.0
    };
    let need = |l: f64| x.ln_mgf(l).unwrap().max(x.ln_mgf(-l).unwrap());
    let mut pts: Vec<(f64, f64)> = log_grid(1e-4_f64.min(top * 1e-4), top, 400)
        .into_iter()
        .map(|l| (l, need(l)))
        .collect();
    let mut tau = f64::NAN;
    for _round in 0..4 {
        let feasible = |tau: f64| pts.iter().all(|&(l, v)| phi.eval(l * tau) >= v);
        let mut hi = 1.0;
        while !feasible(hi) {
            hi *= 2.0;
            assert!(hi < 1e6, "no feasible tau for {}", x.label());
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        tau = hi;
        let mut binding: Vec<(usize, f64)> = (0..pts.len())
            .map(|i| (i, pts[i].1 - phi.eval(pts[i].0 * lo)))
            .filter(|(_, gap)| *gap > 0.0)
            .collect();
        binding.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let binding: Vec<usize> = binding.iter().take(3).map(|b| b.0).collect();
        let mut extra = Vec::new();
        for i in binding {
            let a = pts[i.saturating_sub(1)].0;
            let b = pts[(i + 1).min(pts.len() - 1)].0;
            extra.extend((0..40).map(|k| a + (b - a) * k as f64 / 39.0).map(|l| (l, need(l))));
        }
        pts.extend(extra);
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts.dedup_by(|a, b| a.0 == b.0);
    }
    tau
}

pub fn psi_catalog() -> Vec<GeneratingFunction> {
    vec![
        GeneratingFunction::power(0.5),
        GeneratingFunction::power(1.0),
        GeneratingFunction::power(2.0 / 3.0),
        GeneratingFunction::Power {
            exponent: 0.25,
            b: Some(20.0),
        },
        GeneratingFunction::Constant {
            value: 2.0,
            b: Some(6.0),
        },
        GeneratingFunction::Pole { b: 8.0, beta: 0.5 },
        GeneratingFunction::Pole { b: 3.0, beta: 2.0 },
        GeneratingFunction::Tabulated {
            p: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            values: vec![1.0, 1.5, 2.0, 3.0, 4.5],
        },
    ]
}

pub fn phi_catalog() -> Vec<YoungFunction> {
    vec![
        YoungFunction::quadratic(),
        YoungFunction::Quadratic { lambda0: Some(1.0) },
        YoungFunction::Quadratic { lambda0: Some(3.0) },
        YoungFunction::power_tail(3.0),
        YoungFunction::power_tail(4.0),
        YoungFunction::PowerTail {
            m: 3.0,
            l: SlowlyVarying::Log,
            lambda0: None,
        },
    ]
}

use proptest::prelude::*;
use tailbound::conjugate::{h_function, legendre_transform, DomainFunction, Interval};
use tailbound::{
    bphi_norm, gls_norm, lp_norm, modified_tail_bound, nu_transform, tail_characteristic, GeneratingFunction, RVSpec,
    SlowlyVarying, SpaceDescriptor, SumProblem, YoungFunction,
};

fn young_catalog() -> Vec<YoungFunction> {
    let mut v = vec![
        YoungFunction::quadratic(),
        YoungFunction::Quadratic { lambda0: Some(1.0) },
        YoungFunction::Quadratic { lambda0: Some(3.0) },
    ];
    for m in [1.6, 2.0, 3.0, 4.0] {
        for l in [SlowlyVarying::One, SlowlyVarying::Log] {
            v.push(YoungFunction::PowerTail { m, l, lambda0: None });
        }
    }
    v
}

fn psi_catalog() -> Vec<GeneratingFunction> {
    vec![
        GeneratingFunction::power(0.5),
        GeneratingFunction::power(1.0),
        GeneratingFunction::power(1.0 / 3.0),
        GeneratingFunction::Power {
            exponent: 0.0,
            b: Some(12.0),
        },
        GeneratingFunction::Constant {
            value: 2.0,
            b: Some(6.0),
        },
        GeneratingFunction::Pole { b: 8.0, beta: 0.5 },
        GeneratingFunction::Tabulated {
            p: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            values: vec![1.0, 1.5, 2.0, 3.0, 4.5],
        },
    ]
}

fn member_catalog() -> Vec<RVSpec> {
    vec![
        RVSpec::rademacher(),
        RVSpec::gaussian(1.0).unwrap(),
        RVSpec::uniform(1.0).unwrap(),
        RVSpec::weibull_sym(3.0).unwrap(),
        RVSpec::weibull_sym(1.5).unwrap(),
        RVSpec::bounded(vec![-1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(),
    ]
}

/// `g` as a domain function, one per catalog entry.
fn conjugation_catalog() -> Vec<(String, DomainFunction)> {
    let mut v: Vec<(String, DomainFunction)> = young_catalog()
        .into_iter()
        .map(|phi| {
            let label = phi.label();
            let l0 = phi.lambda0();
            (
                label,
                DomainFunction::new(move |x| phi.eval(x), Interval::new(-l0, l0).unwrap()),
            )
        })
        .collect();
    for psi in psi_catalog() {
        v.push((format!("h[{}]", psi.label()), h_function(&psi).unwrap()));
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenchel_young_inequality(idx in 0usize..20, y in -6.0f64..30.0, u in 0.0f64..8.0) {
        let cat = conjugation_catalog();
        let (label, g) = &cat[idx % cat.len()];
        let gy = g.eval(y);
        prop_assume!(gy.is_finite());
        let gs = legendre_transform(g, u).unwrap();
        prop_assert!(gy + gs >= y * u - 1e-9 * (1.0 + (y * u).abs()), "{label}: g({y}) + g*({u}) < y u");
    }

    #[test]
    fn conjugate_is_convex(idx in 0usize..20, u1 in 0.0f64..8.0, u2 in 0.0f64..8.0) {
        let cat = conjugation_catalog();
        let (label, g) = &cat[idx % cat.len()];
        let a = legendre_transform(g, u1).unwrap();
        let b = legendre_transform(g, u2).unwrap();
        let mid = legendre_transform(g, 0.5 * (u1 + u2)).unwrap();
        if a.is_finite() && b.is_finite() {
            prop_assert!(mid <= 0.5 * (a + b) + 1e-8 * (1.0 + a.abs() + b.abs()), "{label}: midpoint convexity");
        }
    }

    #[test]
    fn nu_is_nondecreasing(idx in 0usize..11, x in 0.0f64..20.0, dx in 0.0f64..5.0) {
        let cat = young_catalog();
        let phi = &cat[idx % cat.len()];
        let a = nu_transform(phi, x).unwrap();
        let b = nu_transform(phi, x + dx).unwrap();
        prop_assert!(b >= a - 1e-9 * (1.0 + a));
    }

    #[test]
    fn lp_norm_nondecreasing_in_p(idx in 0usize..6, p in 1.0f64..20.0, dp in 0.0f64..10.0) {
        let m = &member_catalog()[idx];
        let a = lp_norm(m, p).unwrap();
        let b = lp_norm(m, p + dp).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn tail_characteristics_are_nonincreasing(p in 1.0f64..8.0, t in 0.0f64..40.0, dt in 0.0f64..10.0) {
        let spaces = [
            SpaceDescriptor::Lp { p },
            SpaceDescriptor::Gls { psi: GeneratingFunction::power(1.0 / p) },
            SpaceDescriptor::Bphi { phi: YoungFunction::power_tail(1.0 + p) },
        ];
        for s in &spaces {
            let a = tail_characteristic(s, t).unwrap();
            let b = tail_characteristic(s, t + dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a * (1.0 + 1e-9) + 1e-15, "{}: T({}) = {a} < T({}) = {b}", s.label(), t, t + dt);
        }
    }
}

fn spaces_for_norms() -> Vec<SpaceDescriptor> {
    let mut v: Vec<SpaceDescriptor> = [1.0, 2.0, 3.5, 6.0]
        .iter()
        .map(|&p| SpaceDescriptor::Lp { p })
        .collect();
    v.extend(psi_catalog().into_iter().map(|psi| SpaceDescriptor::Gls { psi }));
    v.extend(young_catalog().into_iter().map(|phi| SpaceDescriptor::Bphi { phi }));
    v
}

#[test]
fn norms_are_homogeneous() {
    // With a finite lambda0 the admissible lambda range does not rescale, so
    // only lambda0 = inf exponential spaces are homogeneous.
    let spaces = spaces_for_norms()
        .into_iter()
        .filter(|s| !matches!(s, SpaceDescriptor::Bphi { phi } if phi.lambda0().is_finite()));
    for space in spaces {
        for m in member_catalog() {
            let base = space.norm(&m).unwrap();
            for c in [0.5, 2.0, 10.0] {
                let scaled = space.norm(&m.scaled(c).unwrap()).unwrap();
                if base.is_finite() {
                    let rel = (scaled - c * base).abs() / (c * base);
                    assert!(
                        rel < 1e-6,
                        "{} of {} scaled by {c}: {scaled} vs {}",
                        space.label(),
                        m.label(),
                        c * base
                    );
                } else {
                    assert_eq!(scaled, f64::INFINITY, "{} of {}", space.label(), m.label());
                }
            }
        }
    }
}

#[test]
fn tail_transfer_holds_on_catalog() {
    let t_grid: Vec<f64> = (1..=60).map(|i| i as f64 * 0.1).collect();
    for space in spaces_for_norms() {
        for m in member_catalog() {
            let norm = space.norm(&m).unwrap();
            if !norm.is_finite() || norm == 0.0 {
                continue;
            }
            for &t in &t_grid {
                let ch = tail_characteristic(&space, t / norm).unwrap();
                match space {
                    // The exponential bound is one-sided; both signs double it.
                    SpaceDescriptor::Bphi { .. } => {
                        assert!(
                            m.upper_tail(t) <= ch * (1.0 + 1e-9),
                            "{} {} t={t}",
                            space.label(),
                            m.label()
                        );
                        assert!(m.tail(t) <= (2.0 * ch).min(1.0) * (1.0 + 1e-9) + 1e-15);
                    }
                    _ => assert!(
                        m.tail(t) <= ch * (1.0 + 1e-9) + 1e-15,
                        "{} {} t={t}",
                        space.label(),
                        m.label()
                    ),
                }
            }
        }
    }
}

#[test]
fn extremal_psi_reduces_to_lp() {
    for r in [1.0, 2.0, 3.0, 7.5] {
        let psi = GeneratingFunction::Extremal { r };
        for m in member_catalog() {
            let a = gls_norm(&m, &psi).unwrap();
            let b = lp_norm(&m, r).unwrap();
            assert!((a - b).abs() <= 1e-9 * b, "r={r} {}: {a} vs {b}", m.label());
        }
        let gls = SpaceDescriptor::Gls {
            psi: GeneratingFunction::Extremal { r },
        };
        let lp = SpaceDescriptor::Lp { p: r };
        for t in [3.0, 10.0, 100.0] {
            let a = tail_characteristic(&gls, t).unwrap();
            let b = tail_characteristic(&lp, t).unwrap();
            // exp(-r ln t) = t^-r
            assert!((a - b).abs() <= 1e-9 * b, "r={r}, t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn bound_curve_is_scale_invariant() {
    let members = vec![
        RVSpec::gaussian(1.0).unwrap(),
        RVSpec::uniform(2.0).unwrap(),
        RVSpec::rademacher(),
    ];
    let problem = SumProblem::new(members, 9).unwrap();
    let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
    let spaces = [
        SpaceDescriptor::Bphi {
            phi: YoungFunction::quadratic(),
        },
        SpaceDescriptor::Lp { p: 4.0 },
        SpaceDescriptor::Gls {
            psi: GeneratingFunction::power(0.5),
        },
    ];
    for s in &spaces {
        let base = modified_tail_bound(&problem, s, s, 1.5, &t).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let other = modified_tail_bound(&problem.scaled(c).unwrap(), s, s, 1.5, &t).unwrap();
            for (a, b) in base.values.iter().zip(&other.values) {
                assert!((a - b).abs() <= 1e-9 * a.max(1e-300), "{} c={c}: {a} vs {b}", s.label());
            }
        }
    }
}

#[test]
fn bphi_norm_dominates_lp_scale() {
    // Subgaussian norm bounds the standard deviation.
    let sub = YoungFunction::quadratic();
    for m in member_catalog() {
        let n = bphi_norm(&m, &sub).unwrap();
        assert!(n >= m.std_dev().unwrap() * (1.0 - 1e-9), "{}", m.label());
    }
}

#[test]
fn moments_match_tail_quadrature() {
    for m in member_catalog() {
        for p in [1.0, 2.0, 3.0, 4.0, 6.0] {
            let closed = m.abs_moment(p).unwrap();
            let quad = m.abs_moment_by_quadrature(p).unwrap();
            assert!(
                (closed - quad).abs() <= 1e-6 * closed,
                "{} p={p}: {closed} vs {quad}",
                m.label()
            );
        }
    }
}

#[test]
fn conjugate_is_monotone_for_even_functions() {
    let u: Vec<f64> = (0..=80).map(|i| i as f64 * 0.1).collect();
    for phi in young_catalog() {
        let vals: Vec<f64> = u.iter().map(|&x| nu_transform(&phi, x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{}", phi.label());
        let second: Vec<f64> = vals.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        assert!(
            second.iter().all(|d| *d >= -1e-8),
            "{}: second differences",
            phi.label()
        );
    }
}

#[test]
fn double_conjugate_recovers_convex_functions() {
    for phi in young_catalog() {
        let l0 = phi.lambda0();
        let p = phi.clone();
        let star = DomainFunction::new(move |u| nu_transform(&p, u.abs()).unwrap(), Interval::real_line());
        for y in [0.3, 0.8, 1.5, 2.5] {
            if y >= l0 {
                continue;
            }
            let back = legendre_transform(&star, y).unwrap();
            let g = phi.eval(y);
            assert!(back <= g + 1e-8, "{} y={y}: {back} > {g}", phi.label());
            assert!(
                (back - g).abs() <= 1e-6 * (1.0 + g),
                "{} y={y}: {back} vs {g}",
                phi.label()
            );
        }
    }
}

#[test]
fn gls_norm_is_antitone_in_psi() {
    let pairs = [
        (GeneratingFunction::power(0.5), GeneratingFunction::power(1.0)),
        (GeneratingFunction::power(1.0 / 3.0), GeneratingFunction::power(0.5)),
        (
            GeneratingFunction::Constant {
                value: 1.0,
                b: Some(6.0),
            },
            GeneratingFunction::Constant {
                value: 2.0,
                b: Some(6.0),
            },
        ),
    ];
    for (small, large) in &pairs {
        for m in member_catalog() {
            let a = gls_norm(&m, small).unwrap();
            let b = gls_norm(&m, large).unwrap();
            assert!(
                a >= b * (1.0 - 1e-12),
                "{} vs {} on {}",
                small.label(),
                large.label(),
                m.label()
            );
        }
    }
}

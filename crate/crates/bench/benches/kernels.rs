use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tailbound::conjugate::{DomainFunction, Interval};
use tailbound::{bphi_norm, gls_norm, legendre_transform, nu_transform, simulate_sn, SimulationRun, YoungFunction};
use tailbound_bench::{members, phi, psi, weibull_problem};

fn conjugation(c: &mut Criterion) {
    let mut g = c.benchmark_group("conjugation");
    let quartic = DomainFunction::new(|x: f64| x.powi(4) / 4.0, Interval::real_line());
    g.bench_function("legendre_quartic", |b| {
        b.iter(|| legendre_transform(&quartic, black_box(3.0)).unwrap())
    });
    for (name, f) in [("quadratic", YoungFunction::quadratic()), ("m_L_3", phi())] {
        g.bench_with_input(BenchmarkId::new("nu_transform", name), &f, |b, f| {
            b.iter(|| nu_transform(f, black_box(7.5)).unwrap())
        });
    }
    g.finish();
}

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("norms");
    let (psi, phi) = (psi(), phi());
    for m in members() {
        g.bench_with_input(BenchmarkId::new("gls_norm", m.label()), &m, |b, m| {
            b.iter(|| gls_norm(m, &psi).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("bphi_norm", m.label()), &m, |b, m| {
            b.iter(|| bphi_norm(m, &phi).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_sn");
    g.sample_size(10);
    for n in [1usize, 200] {
        let run = SimulationRun::new(weibull_problem(n), 20_000, 1, false).unwrap();
        g.throughput(Throughput::Elements((n * run.reps) as u64));
        g.bench_with_input(BenchmarkId::new("weibull3", n), &run, |b, run| {
            b.iter(|| simulate_sn(run, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, conjugation, norms, simulation);
criterion_main!(benches);

//! Fixtures shared by the benchmarks.

use tailbound::{GeneratingFunction, RVSpec, SumProblem, YoungFunction};

pub fn members() -> Vec<RVSpec> {
    vec![
        RVSpec::rademacher(),
        RVSpec::gaussian(1.0).unwrap(),
        RVSpec::weibull_sym(3.0).unwrap(),
        RVSpec::weibull_sym(1.5).unwrap(),
    ]
}

pub fn psi() -> GeneratingFunction {
    GeneratingFunction::power(0.5)
}

pub fn phi() -> YoungFunction {
    YoungFunction::power_tail(3.0)
}

pub fn weibull_problem(n: usize) -> SumProblem {
    SumProblem::new(vec![RVSpec::weibull_sym(3.0).unwrap()], n).unwrap()
}

//! Modified Bernstein tail bounds for normalized sums of independent centered
//! random variables, measured in Grand Lebesgue and exponential Orlicz norms.
//!
//! The modules build on each other: [`rv`] describes the summands,
//! [`conjugate`] provides numerical Young–Fenchel transforms, [`spaces`]
//! computes norms and tail characteristics, [`bounds`] assembles the tail
//! bounds and [`harness`] checks them by simulation.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod conjugate;
pub mod error;
pub mod format;
pub mod functions;
pub mod harness;
pub mod numeric;
pub mod rv;
pub mod spaces;

pub use bounds::{
    b2_bound, classical_bernstein, classical_curve, gls_rosenthal_bound, kappa_relative, lower_exponent,
    modified_tail_bound, psi_envelope, subgaussian_sum_norm, wb2_bound, wb2_constant, BoundCurve, Envelope,
    GlsRosenthal, SumProblem,
};
pub use conjugate::{g_ml_asymptotic, h_star, legendre_transform, nu_transform, DomainFunction, Interval};
pub use error::{Error, Result};
pub use functions::{is_phi_conv, GeneratingFunction, PhiConvVerdict, SlowlyVarying, YoungFunction};
pub use harness::{
    default_exponent_window, dkw_halfwidth, empirical_tail, estimate_tail_exponent, lp_norm_estimate, simulate_sn,
    verify_bound, EmpiricalTail, ExponentFit, ExponentMethod, MomentEstimate, SimulationRun, TailReport, TailSummary,
    Verdict, VerdictKind, Violation,
};
pub use rv::{check_bernstein_condition, BernsteinCheck, RVSpec, RvKind};
pub use spaces::{
    bphi_norm, gls_norm, lemma11_sharpness, lp_norm, rosenthal_constant, tail_characteristic, Lemma11, Provenance,
    SpaceDescriptor,
};

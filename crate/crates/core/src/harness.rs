//! Seeded Monte Carlo for `S_n`, empirical tails with DKW bands, bound
//! verification and tail-exponent estimation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_t_grid, BoundCurve, SumProblem};
use crate::error::{invalid, Error, Result};
use crate::format::fmt_float;
use crate::numeric::{golden_max, log_space};
use crate::rv::Sampler;

/// Replications per random substream. Chunk `k` always uses stream `k`, so
/// the output does not depend on how chunks are spread over threads.
pub const CHUNK_REPS: usize = 16_384;
/// Smallest replication count accepted for verification.
pub const MIN_VERIFY_REPS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub problem: SumProblem,
    pub reps: usize,
    pub seed: u64,
    /// Record `max_j |S_j|` instead of `S_n`.
    #[serde(default)]
    pub maximal: bool,
}

impl SimulationRun {
    pub fn new(problem: SumProblem, reps: usize, seed: u64, maximal: bool) -> Result<Self> {
        if reps == 0 {
            return Err(invalid("reps", "must be positive"));
        }
        Ok(Self {
            problem,
            reps,
            seed,
            maximal,
        })
    }

    /// Refuses runs too small for a verification verdict.
    pub fn check_verifiable(&self) -> Result<()> {
        if self.reps < MIN_VERIFY_REPS {
            return Err(invalid(
                "reps",
                format!(
                    "verification needs at least {MIN_VERIFY_REPS} replications, got {}",
                    self.reps
                ),
            ));
        }
        Ok(())
    }
}

/// Draws `run.reps` values of `S_n` (or of the maximal statistic) on a pool of
/// `threads` workers; `threads = 0` uses the machine default. Results are
/// identical for every thread count.
pub fn simulate_sn(run: &SimulationRun, threads: usize) -> Result<Vec<f64>> {
    if run.reps == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    let samplers: Vec<Sampler> = run.problem.members().iter().map(|m| m.sampler()).collect();
    let n = run.problem.n();
    let inv_norm = 1.0 / run.problem.norming();
    let chunks = run.reps.div_ceil(CHUNK_REPS);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    let parts: Vec<Vec<f64>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                rng.set_stream(k as u64);
                let len = CHUNK_REPS.min(run.reps - k * CHUNK_REPS);
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    let mut s = 0.0;
                    let mut peak: f64 = 0.0;
                    for sampler in samplers.iter().cycle().take(n) {
                        s += sampler.draw(&mut rng);
                        if run.maximal {
                            peak = peak.max(s.abs());
                        }
                    }
                    out.push(if run.maximal { peak * inv_norm } else { s * inv_norm });
                }
                out
            })
            .collect()
    });
    Ok(parts.concat())
}

/// DKW half-width `sqrt(ln(2 / delta) / (2 reps))`.
pub fn dkw_halfwidth(reps: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if reps == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    Ok(((2.0 / delta).ln() / (2.0 * reps as f64)).sqrt())
}

fn sorted_abs(samples: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    a.sort_unstable_by(f64::total_cmp);
    a
}

/// Number of entries `>= t` in an ascending slice.
fn count_at_least(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|x| *x < t)
}

/// Empirical two-sided tail `P(|S| >= t)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub t_grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub band_halfwidth: f64,
    pub reps: usize,
    pub delta: f64,
}

pub fn empirical_tail(samples: &[f64], t_grid: &[f64], delta: f64) -> Result<EmpiricalTail> {
    if samples.is_empty() {
        return Err(invalid("samples", "must not be empty"));
    }
    check_t_grid(t_grid)?;
    let eps = dkw_halfwidth(samples.len(), delta)?;
    let sorted = sorted_abs(samples);
    let n = samples.len() as f64;
    Ok(EmpiricalTail {
        t_grid: t_grid.to_vec(),
        empirical: t_grid.iter().map(|&t| count_at_least(&sorted, t) as f64 / n).collect(),
        band_halfwidth: eps,
        reps: samples.len(),
        delta,
    })
}

/// Grid point where `empirical - band` exceeds the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    /// `empirical - band - bound`, positive.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t_grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub band_halfwidth: f64,
    pub bound: BoundCurve,
    pub violations: Vec<Violation>,
    pub reps: usize,
    pub delta: f64,
    pub seed: Option<u64>,
}

impl TailReport {
    pub fn new(tail: EmpiricalTail, bound: BoundCurve, seed: Option<u64>) -> Result<Self> {
        if tail.t_grid != bound.t_grid {
            return Err(invalid("bound", "bound and empirical tail must share the t grid"));
        }
        let violations = tail
            .empirical
            .iter()
            .zip(&bound.values)
            .enumerate()
            .filter_map(|(i, (e, b))| {
                let excess = e - tail.band_halfwidth - b;
                (excess > 0.0).then_some(Violation {
                    index: i,
                    t: tail.t_grid[i],
                    excess,
                })
            })
            .collect();
        Ok(Self {
            t_grid: tail.t_grid,
            empirical: tail.empirical,
            band_halfwidth: tail.band_halfwidth,
            bound,
            violations,
            reps: tail.reps,
            delta: tail.delta,
            seed,
        })
    }

    pub fn summary(&self) -> TailSummary {
        let verdict = verify_bound(self);
        TailSummary {
            verdict: if verdict.passed() {
                VerdictKind::Pass
            } else {
                VerdictKind::Fail
            },
            max_violation: self.violations.iter().map(|v| v.excess).fold(0.0, f64::max),
            seed: self.seed,
            reps: self.reps,
            delta: self.delta,
            band_halfwidth: self.band_halfwidth,
            bound_label: self.bound.label.clone(),
            violations: self.violations.clone(),
        }
    }

    /// CSV with columns `t,empirical,band,bound,violation`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "empirical", "band", "bound", "violation"])?;
        let mut flagged = self.violations.iter().map(|v| v.index).peekable();
        for i in 0..self.t_grid.len() {
            let hit = flagged.next_if_eq(&i).is_some();
            w.write_record([
                fmt_float(self.t_grid[i]),
                fmt_float(self.empirical[i]),
                fmt_float(self.band_halfwidth),
                fmt_float(self.bound.values[i]),
                u8::from(hit).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Pass,
    Fail,
}

/// Machine-readable outcome of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub verdict: VerdictKind,
    pub max_violation: f64,
    pub seed: Option<u64>,
    pub reps: usize,
    pub delta: f64,
    pub band_halfwidth: f64,
    pub bound_label: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(Vec<Violation>),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Pass iff `empirical - band <= bound` at every grid point.
pub fn verify_bound(report: &TailReport) -> Verdict {
    if report.violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(report.violations.clone())
    }
}

/// Monte Carlo estimate of `||S||_p` with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    pub std_error: f64,
}

pub fn lp_norm_estimate(samples: &[f64], p: f64) -> Result<MomentEstimate> {
    if samples.len() < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    let n = samples.len() as f64;
    let powers: Vec<f64> = samples.iter().map(|x| x.abs().powf(p)).collect();
    let mean = powers.iter().sum::<f64>() / n;
    let var = powers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let value = mean.powf(1.0 / p);
    let se_mean = (var / n).sqrt();
    let std_error = if mean > 0.0 { value / (p * mean) * se_mean } else { 0.0 };
    Ok(MomentEstimate { p, value, std_error })
}

/// How the tail exponent is read off the empirical tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMethod {
    /// Weighted fit of `-ln T(t) = a + beta ln t + C t^alpha` with `beta >= 0`,
    /// returning `alpha`. Absorbs the polynomial prefactor of the tail.
    #[default]
    PrefactorCorrected,
    /// Least-squares slope of `ln(-ln T(t))` against `ln t`.
    LogLogSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// Delete-a-group jackknife over interleaved sample groups.
    pub std_error: f64,
    pub usable_points: usize,
    pub method: ExponentMethod,
    /// The plain log-log slope on the same window, for reference.
    pub loglog_slope: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

const EXPONENT_GRID_POINTS: usize = 200;
const MIN_USABLE_POINTS: usize = 5;
const JACKKNIFE_GROUPS: usize = 20;
const ALPHA_MIN: f64 = 0.2;
const ALPHA_MAX: f64 = 6.0;
const ALPHA_STEP: f64 = 0.01;
/// Empirical tail levels bracketing the default exponent window.
pub const DEFAULT_TAIL_RANGE: (f64, f64) = (1e-5, 1e-1);

/// Thresholds where the empirical tail crosses `1e-1` and `1e-5`.
pub fn default_exponent_window(samples: &[f64]) -> Result<(f64, f64)> {
    let sorted = sorted_abs(samples);
    let n = sorted.len();
    let (lo_tail, hi_tail) = DEFAULT_TAIL_RANGE;
    let rank = |tail: f64| (tail * n as f64).floor() as usize;
    if rank(lo_tail) < 1 {
        return Err(Error::InsufficientTailData(format!(
            "{n} samples cannot resolve a tail of {lo_tail:e}"
        )));
    }
    let t_lo = sorted[n - rank(hi_tail)];
    let t_hi = sorted[n - rank(lo_tail)];
    if !(t_hi > t_lo && t_lo > 0.0) {
        return Err(Error::InsufficientTailData("degenerate sample quantiles".into()));
    }
    Ok((t_lo, t_hi))
}

struct TailPoints {
    ln_t: Vec<f64>,
    t: Vec<f64>,
    tail: Vec<f64>,
    weight: Vec<f64>,
}

fn tail_points(t_grid: &[f64], counts: &[usize], total: usize) -> TailPoints {
    let n = total as f64;
    let mut p = TailPoints {
        ln_t: Vec::new(),
        t: Vec::new(),
        tail: Vec::new(),
        weight: Vec::new(),
    };
    for (&t, &c) in t_grid.iter().zip(counts) {
        let tail = c as f64 / n;
        if tail > 0.0 && tail < 1.0 {
            p.ln_t.push(t.ln());
            p.t.push(t);
            p.tail.push(tail);
            p.weight.push(n * tail / (1.0 - tail));
        }
    }
    p
}

fn loglog_slope(p: &TailPoints) -> f64 {
    let y: Vec<f64> = p.tail.iter().map(|s| (-s.ln()).ln()).collect();
    let k = y.len() as f64;
    let mx = p.ln_t.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = p.ln_t.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = p.ln_t.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Weighted residual sum of squares at a fixed `alpha`; `+inf` when the
/// power term does not carry positive weight.
fn prefactor_ssr(p: &TailPoints, alpha: f64) -> f64 {
    let k = p.t.len();
    let sw: Vec<f64> = p.weight.iter().map(|w| w.sqrt()).collect();
    let y = DVector::from_iterator(k, p.tail.iter().zip(&sw).map(|(s, w)| -s.ln() * w));
    let solve = |with_log: bool| -> Option<(DVector<f64>, f64)> {
        let cols = if with_log { 3 } else { 2 };
        let a = DMatrix::from_fn(k, cols, |i, j| {
            let v = match (j, with_log) {
                (0, _) => 1.0,
                (1, true) => p.ln_t[i],
                _ => p.t[i].powf(alpha),
            };
            v * sw[i]
        });
        let coef = a.clone().svd(true, true).solve(&y, 1e-14).ok()?;
        let ssr = (&a * &coef - &y).norm_squared();
        Some((coef, ssr))
    };
    let Some((coef, ssr)) = solve(true) else {
        return f64::INFINITY;
    };
    let (c, ssr) = if coef[1] >= 0.0 {
        (coef[2], ssr)
    } else {
        match solve(false) {
            Some((coef, ssr)) => (coef[1], ssr),
            None => return f64::INFINITY,
        }
    };
    if c > 0.0 {
        ssr
    } else {
        f64::INFINITY
    }
}

fn prefactor_alpha(p: &TailPoints) -> f64 {
    let steps = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize;
    let (mut best_a, mut best_s) = (f64::NAN, f64::INFINITY);
    for i in 0..=steps {
        let a = ALPHA_MIN + i as f64 * ALPHA_STEP;
        let s = prefactor_ssr(p, a);
        if s < best_s {
            best_a = a;
            best_s = s;
        }
    }
    if !best_s.is_finite() {
        return f64::NAN;
    }
    let (a, neg) = golden_max(|a| -prefactor_ssr(p, a), best_a - ALPHA_STEP, best_a + ALPHA_STEP, 60);
    if -neg < best_s {
        a
    } else {
        best_a
    }
}

fn fit(p: &TailPoints, method: ExponentMethod) -> f64 {
    match method {
        ExponentMethod::LogLogSlope => loglog_slope(p),
        ExponentMethod::PrefactorCorrected => prefactor_alpha(p),
    }
}

/// Estimates `alpha` in `T(t) ~ exp(-C t^alpha)` from the empirical tail of
/// `|samples|` on 200 geometric points of `[t_lo, t_hi]`.
pub fn estimate_tail_exponent(samples: &[f64], t_lo: f64, t_hi: f64, method: ExponentMethod) -> Result<ExponentFit> {
    if !(t_lo > 0.0 && t_hi > t_lo && t_hi.is_finite()) {
        return Err(invalid("window", format!("need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    if samples.len() < JACKKNIFE_GROUPS * 2 {
        return Err(Error::InsufficientTailData(format!("only {} samples", samples.len())));
    }
    let t_grid = log_space(t_lo, t_hi, EXPONENT_GRID_POINTS);
    let groups: Vec<Vec<f64>> = (0..JACKKNIFE_GROUPS)
        .map(|g| {
            sorted_abs(
                &samples
                    .iter()
                    .skip(g)
                    .step_by(JACKKNIFE_GROUPS)
                    .copied()
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let group_counts: Vec<Vec<usize>> = groups
        .iter()
        .map(|s| t_grid.iter().map(|&t| count_at_least(s, t)).collect())
        .collect();
    let total: Vec<usize> = (0..t_grid.len())
        .map(|i| group_counts.iter().map(|c| c[i]).sum())
        .collect();
    let full = tail_points(&t_grid, &total, samples.len());
    let usable = full.t.len();
    if usable < MIN_USABLE_POINTS {
        return Err(Error::InsufficientTailData(format!(
            "{usable} grid points on [{t_lo}, {t_hi}] have an empirical tail strictly inside (0, 1); need {MIN_USABLE_POINTS}"
        )));
    }
    let exponent = fit(&full, method);
    if !exponent.is_finite() {
        return Err(Error::InsufficientTailData(
            "tail shape admits no positive power fit".into(),
        ));
    }
    let replicates: Vec<f64> = (0..JACKKNIFE_GROUPS)
        .into_par_iter()
        .map(|g| {
            let counts: Vec<usize> = total.iter().zip(&group_counts[g]).map(|(t, c)| t - c).collect();
            let pts = tail_points(&t_grid, &counts, samples.len() - groups[g].len());
            if pts.t.len() < MIN_USABLE_POINTS {
                f64::NAN
            } else {
                fit(&pts, method)
            }
        })
        .collect();
    let std_error = if replicates.iter().all(|r| r.is_finite()) {
        let g = JACKKNIFE_GROUPS as f64;
        let mean = replicates.iter().sum::<f64>() / g;
        ((g - 1.0) / g * replicates.iter().map(|r| (r - mean).powi(2)).sum::<f64>()).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExponentFit {
        exponent,
        std_error,
        usable_points: usable,
        method,
        loglog_slope: loglog_slope(&full),
        t_lo,
        t_hi,
    })
}

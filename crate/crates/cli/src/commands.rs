//! Subcommand implementations. Each writes its artifacts under `--out`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tailbound::format::fmt_float;
use tailbound::{
    b2_bound, classical_curve, default_exponent_window, empirical_tail, estimate_tail_exponent, gls_rosenthal_bound,
    kappa_relative, lower_exponent, lp_norm_estimate, modified_tail_bound, simulate_sn, wb2_bound, wb2_constant,
    BoundCurve, Envelope, ExponentFit, MomentEstimate, SimulationRun, SumProblem, TailReport, TailSummary, VerdictKind,
};

use crate::config::{ExperimentConfig, Route};
use crate::{CliError, Command, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

pub const BOUND_JSON: &str = "bound.json";
pub const BOUND_CSV: &str = "bound.csv";
pub const SIMULATE_JSON: &str = "simulate.json";
pub const TAIL_CSV: &str = "tail.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const MOMENT_JSON: &str = "moment.json";
pub const EXPONENT_JSON: &str = "exponent.json";
pub const EXPONENT_CSV: &str = "exponent.csv";

pub fn dispatch(command: Command, common: &Common) -> Result<Outcome, CliError> {
    if let Command::Report = command {
        return report(&common.out);
    }
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::invalid("config", "--config is required for this command"))?;
    let cfg = ExperimentConfig::from_path(path)?;
    fs::create_dir_all(&common.out).map_err(|e| CliError::Io(format!("{}: {e}", common.out.display())))?;
    match command {
        Command::Bound => bound(&cfg, &common.out),
        Command::Simulate => simulate(&cfg, common),
        Command::Verify => verify(&cfg, common),
        Command::Exponent => exponent(&cfg, common),
        Command::Report => unreachable!(),
    }
}

/// Everything `bound` computes, serialized to `bound.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub route: Route,
    pub n: usize,
    pub norming: f64,
    /// `max_i ||xi_i||_X / sigma_i`; absent on the classical route.
    pub kappa: Option<f64>,
    /// Constant dividing `kappa` in the threshold (`K(X)` or `U(X, Y)`).
    pub u_const: Option<f64>,
    pub curve: BoundCurve,
    pub clipped: Vec<f64>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
    #[serde(default)]
    pub gls_norm: Option<f64>,
}

impl BoundReport {
    /// Implied bound on `||S_n||_p` on the `gls_rosenthal` route.
    pub fn moment_bound(&self, p: f64) -> Option<f64> {
        match (&self.envelope, self.gls_norm) {
            (Some(env), Some(g)) => Some(env.psi_tilde.eval(p) * g),
            _ => None,
        }
    }
}

pub fn compute_bound(cfg: &ExperimentConfig, problem: &SumProblem) -> Result<BoundReport, CliError> {
    let t_grid = cfg.t_grid.resolve("t_grid")?;
    let mut kappa = None;
    let mut u_const = None;
    let mut envelope = None;
    let mut gls_norm = None;
    let curve = match cfg.route {
        Route::B2 => {
            let x = cfg.space_x()?;
            kappa = Some(kappa_relative(problem, x)?);
            u_const = Some(1.0);
            b2_bound(problem, x, &t_grid)?
        }
        Route::Wb2 => {
            let x = cfg.space_x()?;
            let k = wb2_constant(x, cfg.u_const)?;
            kappa = Some(kappa_relative(problem, x)?);
            u_const = Some(k);
            wb2_bound(problem, x, Some(k), &t_grid)?
        }
        Route::Pair => {
            let x = cfg.space_x()?;
            let y = cfg.space_y.as_ref().unwrap_or(x);
            let u = cfg
                .u_const
                .ok_or_else(|| CliError::invalid("u_const", "route pair needs U(X, Y); none is known in general"))?;
            kappa = Some(kappa_relative(problem, x)?);
            u_const = Some(u);
            modified_tail_bound(problem, x, y, u, &t_grid)?
        }
        Route::Classical => {
            let c = cfg
                .classical
                .ok_or_else(|| CliError::invalid("classical", "route classical needs {nu, kappa}"))?;
            classical_curve(c.nu, c.kappa, problem.n(), problem.norming(), &t_grid)?
        }
        Route::GlsRosenthal => {
            let g = gls_rosenthal_bound(problem, &cfg.p_grid()?, &t_grid)?;
            kappa = Some(g.gls_norm);
            u_const = Some(1.0);
            envelope = Some(g.envelope);
            gls_norm = Some(g.gls_norm);
            g.curve
        }
    };
    Ok(BoundReport {
        route: cfg.route,
        n: problem.n(),
        norming: problem.norming(),
        kappa,
        u_const,
        clipped: curve.clipped(),
        curve,
        envelope,
        gls_norm,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn bound(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let problem = cfg.effective_problem()?;
    let report = compute_bound(cfg, &problem)?;
    report.curve.write_csv(create(out, BOUND_CSV)?)?;
    write_json(out, BOUND_JSON, &report)?;
    println!(
        "bound: route={:?} points={} label={}",
        report.route,
        report.curve.t_grid.len(),
        report.curve.label
    );
    Ok(Outcome::Pass)
}

fn sim_run(cfg: &ExperimentConfig, common: &Common) -> Result<SimulationRun, CliError> {
    let sim = cfg.sim()?;
    let seed = common.seed.unwrap_or(sim.seed);
    Ok(SimulationRun::new(
        cfg.effective_problem()?,
        sim.reps,
        seed,
        sim.maximal,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub maximal: bool,
    pub norming: f64,
    pub mean: f64,
    pub variance: f64,
    pub band_halfwidth: f64,
}

fn simulate(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome, CliError> {
    let run = sim_run(cfg, common)?;
    let samples = simulate_sn(&run, common.threads)?;
    let t_grid = cfg.t_grid.resolve("t_grid")?;
    let tail = empirical_tail(&samples, &t_grid, cfg.sim()?.delta)?;
    let mut w = csv::Writer::from_writer(create(&common.out, TAIL_CSV)?);
    w.write_record(["t", "empirical", "band"])?;
    for (t, e) in tail.t_grid.iter().zip(&tail.empirical) {
        w.write_record([fmt_float(*t), fmt_float(*e), fmt_float(tail.band_halfwidth)])?;
    }
    w.flush()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let summary = SimulateSummary {
        n: run.problem.n(),
        reps: run.reps,
        seed: run.seed,
        maximal: run.maximal,
        norming: run.problem.norming(),
        mean,
        variance,
        band_halfwidth: tail.band_halfwidth,
    };
    write_json(&common.out, SIMULATE_JSON, &summary)?;
    println!(
        "simulate: reps={} seed={} mean={mean:.4} variance={variance:.4}",
        run.reps, run.seed
    );
    Ok(Outcome::Pass)
}

/// Sample `||S_n||_p` against the envelope bound, allowing three standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub estimate: MomentEstimate,
    pub bound: f64,
    pub verdict: VerdictKind,
}

pub const MOMENT_SE_ALLOWANCE: f64 = 3.0;

fn verify(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome, CliError> {
    let run = sim_run(cfg, common)?;
    run.check_verifiable()?;
    let delta = cfg.sim()?.delta;
    let bound = compute_bound(cfg, &run.problem)?;
    let curve = match cfg.bound_scale {
        Some(f) if !(f > 0.0 && f.is_finite()) => {
            return Err(CliError::invalid("bound_scale", "must be positive and finite"));
        }
        Some(f) => bound.curve.scaled(f),
        None => bound.curve.clone(),
    };
    let samples = simulate_sn(&run, common.threads)?;
    let tail = empirical_tail(&samples, &curve.t_grid, delta)?;
    let report = TailReport::new(tail, curve, Some(run.seed))?;
    report.write_csv(create(&common.out, REPORT_CSV)?)?;
    let summary: TailSummary = report.summary();
    write_json(&common.out, REPORT_JSON, &summary)?;
    println!(
        "verify: verdict={:?} violations={} max_violation={} reps={} seed={}",
        summary.verdict,
        summary.violations.len(),
        summary.max_violation,
        summary.reps,
        run.seed
    );
    let mut ok = summary.verdict == VerdictKind::Pass;
    if let (Some(p), Some(mb)) = (cfg.moment_p, cfg.moment_p.and_then(|p| bound.moment_bound(p))) {
        let estimate = lp_norm_estimate(&samples, p)?;
        let pass = estimate.value - MOMENT_SE_ALLOWANCE * estimate.std_error <= mb;
        let check = MomentCheck {
            estimate,
            bound: mb,
            verdict: if pass { VerdictKind::Pass } else { VerdictKind::Fail },
        };
        write_json(&common.out, MOMENT_JSON, &check)?;
        println!(
            "verify: ||S_n||_{p} = {:.6} (se {:.2e}) vs bound {mb:.6}",
            check.estimate.value, check.estimate.std_error
        );
        ok &= pass;
    } else if cfg.moment_p.is_some() {
        return Err(CliError::invalid(
            "moment_p",
            "only the gls_rosenthal route yields a moment bound",
        ));
    }
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub fit: ExponentFit,
    pub m: f64,
    pub predicted: f64,
    pub tol: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub verdict: VerdictKind,
}

fn exponent(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome, CliError> {
    let params = cfg
        .exponent
        .as_ref()
        .ok_or_else(|| CliError::invalid("exponent", "this command needs an exponent block"))?;
    if !(params.tol >= 0.0 && params.tol.is_finite()) {
        return Err(CliError::invalid("exponent.tol", "must be non-negative"));
    }
    let m = cfg.weibull_shape()?;
    let predicted = lower_exponent(m)?;
    let run = sim_run(cfg, common)?;
    run.check_verifiable()?;
    let samples = simulate_sn(&run, common.threads)?;
    let (lo, hi) = match (params.t_lo, params.t_hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (dlo, dhi) = default_exponent_window(&samples)?;
            (lo.unwrap_or(dlo), hi.unwrap_or(dhi))
        }
    };
    let fit = estimate_tail_exponent(&samples, lo, hi, params.method)?;
    let pass = (fit.exponent - predicted).abs() <= params.tol;
    let report = ExponentReport {
        fit,
        m,
        predicted,
        tol: params.tol,
        n: run.problem.n(),
        reps: run.reps,
        seed: run.seed,
        verdict: if pass { VerdictKind::Pass } else { VerdictKind::Fail },
    };
    let mut w = csv::Writer::from_writer(create(&common.out, EXPONENT_CSV)?);
    w.write_record([
        "method",
        "exponent",
        "std_error",
        "loglog_slope",
        "predicted",
        "tol",
        "usable_points",
        "t_lo",
        "t_hi",
        "verdict",
    ])?;
    let f = &report.fit;
    w.write_record([
        method_name(f.method).to_string(),
        fmt_float(f.exponent),
        fmt_float(f.std_error),
        fmt_float(f.loglog_slope),
        fmt_float(predicted),
        fmt_float(params.tol),
        f.usable_points.to_string(),
        fmt_float(f.t_lo),
        fmt_float(f.t_hi),
        verdict_name(report.verdict).to_string(),
    ])?;
    w.flush()?;
    write_json(&common.out, EXPONENT_JSON, &report)?;
    println!(
        "exponent: estimate={:.4} (se {:.4}) predicted={predicted} tol={} verdict={:?}",
        f.exponent, f.std_error, params.tol, report.verdict
    );
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn method_name(m: tailbound::ExponentMethod) -> &'static str {
    match m {
        tailbound::ExponentMethod::PrefactorCorrected => "prefactor_corrected",
        tailbound::ExponentMethod::LogLogSlope => "loglog_slope",
    }
}

fn verdict_name(v: VerdictKind) -> &'static str {
    match v {
        VerdictKind::Pass => "pass",
        VerdictKind::Fail => "fail",
    }
}

/// Prints one line per artifact found in `out`; fails if any recorded verdict failed.
fn report(out: &Path) -> Result<Outcome, CliError> {
    let mut found = 0;
    let mut ok = true;
    let path = out.join(BOUND_JSON);
    if path.exists() {
        let b: BoundReport = read_json(&path)?;
        println!("bound: route={:?} n={} label={}", b.route, b.n, b.curve.label);
        found += 1;
    }
    let path = out.join(SIMULATE_JSON);
    if path.exists() {
        let s: SimulateSummary = read_json(&path)?;
        println!("simulate: reps={} seed={} variance={:.4}", s.reps, s.seed, s.variance);
        found += 1;
    }
    let path = out.join(REPORT_JSON);
    if path.exists() {
        let s: TailSummary = read_json(&path)?;
        println!(
            "verify: {} violations={} max_violation={}",
            verdict_name(s.verdict),
            s.violations.len(),
            s.max_violation
        );
        ok &= s.verdict == VerdictKind::Pass;
        found += 1;
    }
    let path = out.join(MOMENT_JSON);
    if path.exists() {
        let m: MomentCheck = read_json(&path)?;
        println!(
            "moment: {} p={} estimate={:.6} bound={:.6}",
            verdict_name(m.verdict),
            m.estimate.p,
            m.estimate.value,
            m.bound
        );
        ok &= m.verdict == VerdictKind::Pass;
        found += 1;
    }
    let path = out.join(EXPONENT_JSON);
    if path.exists() {
        let e: ExponentReport = read_json(&path)?;
        println!(
            "exponent: {} estimate={:.4} predicted={} tol={}",
            verdict_name(e.verdict),
            e.fit.exponent,
            e.predicted,
            e.tol
        );
        ok &= e.verdict == VerdictKind::Pass;
        found += 1;
    }
    if found == 0 {
        return Err(CliError::Io(format!("no reports found in {}", out.display())));
    }
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

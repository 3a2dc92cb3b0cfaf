//! Experiment configuration, read from a single JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tailbound::numeric::{lin_space, log_space};
use tailbound::{ExponentMethod, RvKind, SpaceDescriptor, SumProblem};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// `T^X(t / kappa)`, for `L_2` and `B(phi)` under `Phi(conv)`.
    B2,
    /// `T^X(t / (kappa K(X)))`.
    Wb2,
    /// `T^Y(t / (kappa U(X, Y)))` with a caller-supplied `U`.
    Pair,
    /// `2 exp(-t^2 / (2 nu n + 2 kappa t))` at raw-sum thresholds.
    Classical,
    /// Moment envelope lifted by the Rosenthal constant.
    GlsRosenthal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    pub nu: f64,
    pub kappa: f64,
}

/// Either an explicit list or `points` values spaced on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values {
        values: Vec<f64>,
    },
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridSpec {
    pub fn resolve(&self, field: &'static str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            GridSpec::Values { values } => values.clone(),
            GridSpec::Range {
                start,
                stop,
                points,
                log,
            } => {
                if *points == 0 || !(stop >= start) {
                    return Err(CliError::invalid(field, "need points >= 1 and stop >= start"));
                }
                if *log {
                    if !(*start > 0.0) {
                        return Err(CliError::invalid(field, "log spacing needs start > 0"));
                    }
                    log_space(*start, *stop, *points)
                } else {
                    lin_space(*start, *stop, *points)
                }
            }
        };
        if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::invalid(field, "grid must be finite and strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    /// Overrides `problem.n`.
    #[serde(default)]
    pub n: Option<usize>,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub maximal: bool,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentParams {
    /// Weibull shape of the summands; read from the members when absent.
    #[serde(default)]
    pub m: Option<f64>,
    pub tol: f64,
    #[serde(default)]
    pub t_lo: Option<f64>,
    #[serde(default)]
    pub t_hi: Option<f64>,
    #[serde(default)]
    pub method: ExponentMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: SumProblem,
    pub space_x: Option<SpaceDescriptor>,
    /// Defaults to `space_x`.
    #[serde(default)]
    pub space_y: Option<SpaceDescriptor>,
    #[serde(default)]
    pub u_const: Option<f64>,
    pub route: Route,
    #[serde(default)]
    pub classical: Option<ClassicalParams>,
    pub t_grid: GridSpec,
    /// Moment orders for the `gls_rosenthal` envelope.
    #[serde(default)]
    pub p_grid: Option<GridSpec>,
    /// Moment order checked by `verify` on the `gls_rosenthal` route.
    #[serde(default)]
    pub moment_p: Option<f64>,
    #[serde(default)]
    pub sim: Option<SimParams>,
    #[serde(default)]
    pub exponent: Option<ExponentParams>,
    /// Multiplies the bound before verification; values below 1 are canaries.
    #[serde(default)]
    pub bound_scale: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The problem with `sim.n` applied.
    pub fn effective_problem(&self) -> Result<SumProblem, CliError> {
        match self.sim.as_ref().and_then(|s| s.n) {
            Some(n) => Ok(self.problem.with_n(n)?),
            None => Ok(self.problem.clone()),
        }
    }

    pub fn space_x(&self) -> Result<&SpaceDescriptor, CliError> {
        self.space_x
            .as_ref()
            .ok_or_else(|| CliError::invalid("space_x", format!("required by route {:?}", self.route)))
    }

    pub fn sim(&self) -> Result<&SimParams, CliError> {
        self.sim
            .as_ref()
            .ok_or_else(|| CliError::invalid("sim", "this command needs a sim block"))
    }

    pub fn p_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.p_grid {
            Some(g) => g.resolve("p_grid"),
            None => Ok(lin_space(1.0, 16.0, 61)),
        }
    }

    /// Weibull shape `m` for the exponent check.
    pub fn weibull_shape(&self) -> Result<f64, CliError> {
        if let Some(m) = self.exponent.as_ref().and_then(|e| e.m) {
            return Ok(m);
        }
        let mut shapes = self.problem.members().iter().map(|s| match s.kind() {
            RvKind::WeibullSym { m } => Some(*m),
            _ => None,
        });
        let first = shapes.next().flatten();
        match first {
            Some(m) if shapes.all(|x| x == Some(m)) => Ok(m),
            _ => Err(CliError::invalid(
                "exponent.m",
                "members are not a single WeibullSym family; declare m explicitly",
            )),
        }
    }
}

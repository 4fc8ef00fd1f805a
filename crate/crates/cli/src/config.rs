//! Run configuration: JSON file, inline flag overrides, and resolution of the
//! defaults that depend on the chosen function.

use std::path::Path;

use basinreach::landscape::make_builtin;
use basinreach::{CriticalKind, ObjectiveFunction, Point, StepSchedule};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    Gd,
    Flow,
    Reach,
    ReachGeneral,
    Probe,
    Eos,
    ProxCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    #[default]
    Forward,
    Reverse,
}

/// A target given either as a point or as an index into the function's
/// critical-point catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Index(usize),
    Point(Vec<f64>),
}

/// Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `name[:p1,p2,…]`, e.g. `quad:1,4` or `double_well:1.4`.
    pub function: String,
    /// `constant:C` or `power:C:P`; defaults to `constant:0.5/L`.
    pub schedule: Option<String>,
    /// Defaults to the first procedure of the subcommand.
    pub procedure: Option<Procedure>,
    pub mode: Mode,
    /// Flow direction for `run` with procedure `flow`.
    pub direction: FlowDirection,
    /// Defaults to the first cataloged local minimum (saddle for `reach-general`).
    pub target: Option<TargetSpec>,
    /// Start for `run` and `eos`; defaults to all ones.
    pub x0: Option<Vec<f64>>,
    /// Step size for `eos`; defaults to 1.
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub probe_epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed_radius: f64,
    pub n_samples: usize,
    /// Random (x, λ) pairs for `check`.
    pub n_checks: usize,
    pub gtol: f64,
    pub tol: f64,
    pub h: f64,
    pub event_refine_tol: f64,
    pub max_iter: usize,
    pub t_max: f64,
    pub kbar_max: usize,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            function: "quad:1".into(),
            schedule: None,
            procedure: None,
            mode: Mode::Discrete,
            direction: FlowDirection::Forward,
            target: None,
            x0: None,
            alpha: None,
            epsilon: 0.5,
            probe_epsilon: None,
            delta: None,
            seed_radius: 1e-3,
            n_samples: 16,
            n_checks: 500,
            gtol: 1e-10,
            tol: 1e-4,
            h: 1e-3,
            event_refine_tol: 1e-12,
            max_iter: 1_000_000,
            t_max: 100.0,
            kbar_max: 1 << 20,
            seed: 0,
            output_dir: "basinreach-out".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let field = if field == "." {
                "config".to_string()
            } else {
                field
            };
            CliError::config(&field, format!("{}: {}", path.display(), e.inner()))
        })
    }
}

/// Parses `name[:p1,p2,…]` and builds the objective.
pub fn parse_function(spec: &str) -> Result<ObjectiveFunction, CliError> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = parse_list(rest).map_err(|e| CliError::config("function", e))?;
    make_builtin(name.trim(), &params).map_err(|e| CliError::config("function", e.to_string()))
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        })
        .collect()
}

/// Everything a command needs, with defaults filled in.
pub struct Resolved {
    pub config: RunConfig,
    pub f: ObjectiveFunction,
    pub schedule: StepSchedule,
    pub procedure: Procedure,
}

impl Resolved {
    pub fn new(mut config: RunConfig, allowed: &[Procedure]) -> Result<Self, CliError> {
        let f = parse_function(&config.function)?;
        let procedure = config.procedure.unwrap_or(allowed[0]);
        if !allowed.contains(&procedure) {
            return Err(CliError::config(
                "procedure",
                format!("{procedure:?} is not available for this subcommand"),
            ));
        }
        config.procedure = Some(procedure);
        let schedule = match &config.schedule {
            Some(text) => text
                .parse::<StepSchedule>()
                .map_err(|e| CliError::config("schedule", e.to_string()))?,
            None => StepSchedule::constant(0.5 / f.lipschitz())
                .map_err(|e| CliError::config("schedule", e.to_string()))?,
        };
        config.schedule = Some(schedule.to_string());
        if let Ok(dir) = std::env::var("BASINREACH_OUT") {
            config.output_dir = dir;
        }
        let needs_target = matches!(
            procedure,
            Procedure::Reach | Procedure::ReachGeneral | Procedure::Probe
        );
        if needs_target {
            let want = if procedure == Procedure::ReachGeneral {
                CriticalKind::Saddle
            } else {
                CriticalKind::LocalMin
            };
            let point = resolve_target(&f, config.target.as_ref(), want)?;
            config.target = Some(TargetSpec::Point(point.iter().copied().collect()));
        }
        if matches!(procedure, Procedure::Gd | Procedure::Flow | Procedure::Eos) {
            let x0 = config.x0.clone().unwrap_or_else(|| vec![1.0; f.dim()]);
            if x0.len() != f.dim() {
                return Err(CliError::config(
                    "x0",
                    format!("expected {} coordinates, got {}", f.dim(), x0.len()),
                ));
            }
            config.x0 = Some(x0);
        }
        if procedure == Procedure::Eos {
            config.alpha = Some(config.alpha.unwrap_or(1.0));
        }
        Ok(Self {
            config,
            f,
            schedule,
            procedure,
        })
    }

    pub fn target(&self) -> Point {
        match &self.config.target {
            Some(TargetSpec::Point(p)) => DVector::from_column_slice(p),
            _ => unreachable!("target is resolved to a point"),
        }
    }

    pub fn x0(&self) -> Point {
        DVector::from_column_slice(self.config.x0.as_deref().expect("x0 is resolved"))
    }
}

fn resolve_target(
    f: &ObjectiveFunction,
    spec: Option<&TargetSpec>,
    want: CriticalKind,
) -> Result<Point, CliError> {
    match spec {
        Some(TargetSpec::Point(p)) => {
            if p.len() != f.dim() {
                return Err(CliError::config(
                    "target",
                    format!("expected {} coordinates, got {}", f.dim(), p.len()),
                ));
            }
            Ok(DVector::from_column_slice(p))
        }
        Some(TargetSpec::Index(i)) => f
            .critical_points()
            .get(*i)
            .map(|c| c.point.clone())
            .ok_or_else(|| CliError::config("target", format!("catalog has no entry {i}"))),
        None => f
            .critical_points()
            .iter()
            .find(|c| c.kind == want)
            .map(|c| c.point.clone())
            .ok_or_else(|| CliError::config("target", format!("catalog has no {want}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_fields_and_names_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"functon": "quad:1"}"#).is_err());
        let err = parse_function("rosenbrock").err().unwrap();
        assert_eq!(err.field.as_deref(), Some("function"));
        assert!(parse_function("quad:1,x").is_err());
    }

    #[test]
    fn targets_by_index_or_point() {
        let c: RunConfig =
            serde_json::from_str(r#"{"function": "double_well", "target": 2}"#).unwrap();
        let r = Resolved::new(c, &[Procedure::Reach]).unwrap();
        assert_eq!(r.target()[0], 1.0);
        let c: RunConfig =
            serde_json::from_str(r#"{"function": "himmelblau", "target": [3.0, 2.0]}"#).unwrap();
        assert_eq!(c.target, Some(TargetSpec::Point(vec![3.0, 2.0])));
    }
}

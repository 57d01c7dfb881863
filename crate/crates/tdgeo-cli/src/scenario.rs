//! Scenario file schema (TOML) and validation.
//!
//! A scenario is a single self-describing document with a versioned
//! `schema_version` field. Unknown fields are rejected so that typos fail
//! loudly with a field path.

use serde::{Deserialize, Serialize};
use tdgeo::{
    builtin, circle_rotation_model, circle_scaling_model, conformal_plane_model, euclidean_model,
    pendulum_model, Dual2, GeoResult, IntegratorConfig, MassSchedule, ModelBundle,
    PendulumParams, Real, TimeDepVectorField,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Geodesic,
    Forced,
    Transport,
    Flow,
    Functionals,
    TorsionProbe,
    BracketProbe,
    Validate,
    Suspension,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Geodesic => "geodesic",
            Task::Forced => "forced",
            Task::Transport => "transport",
            Task::Flow => "flow",
            Task::Functionals => "functionals",
            Task::TorsionProbe => "torsion_probe",
            Task::BracketProbe => "bracket_probe",
            Task::Validate => "validate",
            Task::Suspension => "suspension",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Chart dimension (euclidean only).
    pub dim: Option<usize>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    /// "default" (variable schedules) or "constant".
    pub masses: Option<String>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub g0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub params: Option<ModelParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub v0: Option<Vec<f64>>,
    pub w0: Option<Vec<f64>>,
    /// Time-coordinate velocity for the suspension task.
    pub v0_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSection {
    pub t1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// "rk4" or "dopri45".
    pub method: String,
    pub step: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// One of: constant, ramp, rotation, wave.
    pub name: String,
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub eps: Vec<f64>,
    /// "metric" (from the model) or "synthetic_ab" (Γ = 0, A = Id, B = 0).
    pub dotnabla: Option<String>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    /// "linear" (x0 + rate·(t − t0)) or "geodesic".
    pub kind: String,
    pub rate: Option<Vec<f64>>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trajectory: Option<String>,
    pub summary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub task: Task,
    pub model: ModelSection,
    pub initial: Option<InitialSection>,
    pub interval: Option<IntervalSection>,
    pub integrator: Option<IntegratorSection>,
    pub field: Option<FieldSection>,
    pub field2: Option<FieldSection>,
    pub probe: Option<ProbeSection>,
    pub path: Option<PathSection>,
    pub output: Option<OutputSection>,
}

/// Input-classified error carrying the offending field path.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, SchemaError> {
        let sc: Scenario =
            toml::from_str(text).map_err(|e| SchemaError(format!("scenario parse: {e}")))?;
        if sc.schema_version != SCHEMA_VERSION {
            return Err(SchemaError(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                sc.schema_version
            )));
        }
        Ok(sc)
    }

    /// Structural checks that need no model evaluation.
    pub fn check_required(&self) -> Result<(), SchemaError> {
        let need =
            |cond: bool, path: &str| if cond { Ok(()) } else { Err(SchemaError(path.into())) };
        match self.task {
            Task::Geodesic | Task::Forced => {
                need(self.initial.is_some(), "initial: required for this task")?;
                need(
                    self.initial.as_ref().is_some_and(|i| i.v0.is_some()),
                    "initial.v0: required for this task",
                )?;
                need(self.interval.is_some(), "interval.t1: required for this task")?;
            }
            Task::Transport => {
                need(self.initial.is_some(), "initial: required for this task")?;
                let i = self.initial.as_ref().unwrap();
                need(i.v0.is_some(), "initial.v0: required (base geodesic velocity)")?;
                need(i.w0.is_some(), "initial.w0: required (transported vector)")?;
                need(self.interval.is_some(), "interval.t1: required for this task")?;
            }
            Task::Flow => {
                need(self.initial.is_some(), "initial: required for this task")?;
                need(self.interval.is_some(), "interval.t1: required for this task")?;
                need(self.field.is_some(), "field: required for the flow task")?;
            }
            Task::Functionals => {
                need(self.initial.is_some(), "initial: required for this task")?;
                need(self.interval.is_some(), "interval.t1: required for this task")?;
                need(self.path.is_some(), "path: required for the functionals task")?;
            }
            Task::TorsionProbe => {
                need(self.initial.is_some(), "initial: required for this task")?;
                let i = self.initial.as_ref().unwrap();
                need(i.v0.is_some(), "initial.v0: required for this task")?;
                need(i.w0.is_some(), "initial.w0: required for this task")?;
                need(self.probe.is_some(), "probe.eps: required for this task")?;
            }
            Task::BracketProbe => {
                need(self.initial.is_some(), "initial: required for this task")?;
                need(self.field.is_some(), "field: required for this task")?;
                need(self.field2.is_some(), "field2: required for this task")?;
                need(self.probe.is_some(), "probe.eps: required for this task")?;
            }
            Task::Suspension => {
                need(self.initial.is_some(), "initial: required for this task")?;
                let i = self.initial.as_ref().unwrap();
                need(i.v0.is_some(), "initial.v0: required for this task")?;
                need(i.v0_time.is_some(), "initial.v0_time: required for this task")?;
                need(self.interval.is_some(), "interval.t1: required for this task")?;
            }
            Task::Validate => {}
        }
        Ok(())
    }

    pub fn build_model(&self) -> GeoResult<ModelBundle> {
        let p = self.model.params.clone().unwrap_or_default();
        match self.model.name.as_str() {
            "euclidean" => euclidean_model(p.dim.unwrap_or(2)),
            "conformal_plane" => conformal_plane_model(),
            "circle_scaling" => circle_scaling_model(),
            "circle_rotation" => circle_rotation_model(),
            "double_pendulum" => {
                let mut params = match p.masses.as_deref() {
                    None | Some("default") => PendulumParams::default_variable(),
                    Some("constant") => PendulumParams {
                        l1: 1.0,
                        l2: 1.0,
                        m1: MassSchedule::constant(p.m1.unwrap_or(2.0)),
                        m2: MassSchedule::constant(p.m2.unwrap_or(1.0)),
                        g0: 0.0,
                    },
                    Some(other) => {
                        return Err(tdgeo::GeomError::InvalidModel(format!(
                            "model.params.masses: unknown schedule '{other}' (default, constant)"
                        )))
                    }
                };
                if let Some(l1) = p.l1 {
                    params.l1 = l1;
                }
                if let Some(l2) = p.l2 {
                    params.l2 = l2;
                }
                params.g0 = p.g0.unwrap_or(0.0);
                pendulum_model(params)
            }
            other => builtin(other), // yields the unknown-model error
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, SchemaError> {
        let cfg = match &self.integrator {
            None => IntegratorConfig::adaptive(1e-10, 1e-10),
            Some(s) => {
                let mut cfg = match s.method.as_str() {
                    "rk4" => IntegratorConfig::rk4(s.step.ok_or_else(|| {
                        SchemaError("integrator.step: required for rk4".into())
                    })?),
                    "dopri45" => IntegratorConfig::adaptive(
                        s.abs_tol.unwrap_or(1e-10),
                        s.rel_tol.unwrap_or(1e-10),
                    ),
                    other => {
                        return Err(SchemaError(format!(
                            "integrator.method: unknown '{other}' (rk4, dopri45)"
                        )))
                    }
                };
                if let Some(ms) = s.max_steps {
                    cfg = cfg.with_max_steps(ms);
                }
                cfg
            }
        };
        cfg.validate()
            .map_err(|e| SchemaError(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

/// Built-in vector-field catalog for flow and bracket scenarios.
pub fn build_field(section: &FieldSection, dim: usize) -> Result<TimeDepVectorField, SchemaError> {
    let coeffs = section.coeffs.clone().unwrap_or_default();
    let c = move |i: usize, d: f64| coeffs.get(i).copied().unwrap_or(d);
    match section.name.as_str() {
        "constant" => {
            let v: Vec<f64> = (0..dim).map(|i| c(i, 0.0)).collect();
            if section.coeffs.as_ref().map(|v| v.len()) != Some(dim) {
                return Err(SchemaError(format!(
                    "field.coeffs: constant field needs {dim} components"
                )));
            }
            Ok(TimeDepVectorField::constant(v))
        }
        "ramp" => {
            let rates: Vec<f64> = (0..dim).map(|i| c(i, 1.0)).collect();
            Ok(TimeDepVectorField::new(dim, move |t, _| {
                rates.iter().map(|&r| t * r).collect()
            }))
        }
        "rotation" => {
            if dim != 2 {
                return Err(SchemaError("field: rotation needs a 2d model".into()));
            }
            let omega = c(0, 1.0);
            Ok(TimeDepVectorField::new(2, move |_, x| {
                vec![-x[1] * omega, x[0] * omega]
            }))
        }
        "wave" => {
            if dim != 2 {
                return Err(SchemaError("field: wave needs a 2d model".into()));
            }
            let (a, b, d) = (c(0, 0.5), c(1, 0.8), c(2, 0.1));
            Ok(TimeDepVectorField::new(2, move |t, x| {
                vec![(x[1] + t * a).sin(), (x[0]).cos() * b + t * d]
            }))
        }
        other => Err(SchemaError(format!(
            "field.name: unknown '{other}' (constant, ramp, rotation, wave)"
        ))),
    }
}

/// Analytic path fixtures for the functionals task.
pub fn build_path(
    section: &PathSection,
    x0: Vec<f64>,
    t0: f64,
) -> Result<Option<tdgeo::CurvePath>, SchemaError> {
    match section.kind.as_str() {
        "linear" => {
            let rate = section
                .rate
                .clone()
                .ok_or_else(|| SchemaError("path.rate: required for linear paths".into()))?;
            if rate.len() != x0.len() {
                return Err(SchemaError(format!(
                    "path.rate: expected dimension {}, got {}",
                    x0.len(),
                    rate.len()
                )));
            }
            let dim = x0.len();
            Ok(Some(tdgeo::CurvePath::new(dim, move |t| {
                (0..dim)
                    .map(|i| (t - t0) * rate[i] + x0[i])
                    .collect::<Vec<Dual2>>()
            })))
        }
        "geodesic" => Ok(None),
        other => Err(SchemaError(format!(
            "path.kind: unknown '{other}' (linear, geodesic)"
        ))),
    }
}

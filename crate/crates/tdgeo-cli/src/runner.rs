//! Scenario execution: dispatch to the engine, write the trajectory table,
//! the human-readable report and the machine-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use tdgeo::{
    bracket_probe_with_tol, embedded_length, flow, forced_geodesic, functionals, geodesic_metric,
    geodesic_suspension, mechanical_energy, parallel_transport, td_bracket,
    torsion_loop_probe_with_tol, torsion_operator, validate_model, ChristoffelEval, DotNabla,
    EndomorphismField, Event, GeomError, ProbeResult, TimeDepVectorField, Trajectory,
};

use crate::scenario::{build_field, build_path, Scenario, SchemaError, Task};

pub enum RunError {
    /// Schema violations, unknown names, dimension mismatches → exit 2.
    Input(String),
    /// Numerical failures in the engine → exit 3.
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Input(m) | RunError::Numeric(m) => m,
        }
    }
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Input(e.0)
    }
}

impl From<GeomError> for RunError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::UnknownModel { .. }
            | GeomError::InvalidConfig(_)
            | GeomError::InvalidModel(_)
            | GeomError::DimensionMismatch { .. } => RunError::Input(e.to_string()),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let inner: Vec<String> = v.iter().map(|&c| fmt_f64(c)).collect();
    format!("[{}]", inner.join(", "))
}

/// Deterministic key/value summary writer (stable key order, stable float
/// formatting; no hash maps anywhere).
struct Summary {
    text: String,
}

impl Summary {
    fn new(sc: &Scenario) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "schema_version = {}", crate::scenario::SCHEMA_VERSION);
        let _ = writeln!(text, "task = {:?}", sc.task.name());
        let _ = writeln!(text, "model = {:?}", sc.model.name);
        let _ = writeln!(text);
        let _ = writeln!(text, "[results]");
        Summary { text }
    }

    fn kv_f64(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key} = {}", fmt_f64(v));
    }

    fn kv_vec(&mut self, key: &str, v: &DVector<f64>) {
        let _ = writeln!(self.text, "{key} = {}", fmt_vec(v));
    }

    fn kv_usize(&mut self, key: &str, v: usize) {
        let _ = writeln!(self.text, "{key} = {v}");
    }

    fn kv_bool(&mut self, key: &str, v: bool) {
        let _ = writeln!(self.text, "{key} = {v}");
    }

    fn section(&mut self, name: &str) {
        let _ = writeln!(self.text);
        let _ = writeln!(self.text, "[{name}]");
    }

    fn quoted_kv_f64(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key:?} = {}", fmt_f64(v));
    }

    fn quoted_kv_str(&mut self, key: &str, v: &str) {
        let _ = writeln!(self.text, "{key:?} = {v:?}");
    }
}

fn trajectory_csv(tr: &Trajectory) -> String {
    let n = tr.dim();
    let mut out = String::new();
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vs: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let _ = writeln!(out, "t,{},{}", xs.join(","), vs.join(","));
    for s in tr.samples() {
        let xs: Vec<String> = s.x.iter().map(|&c| fmt_f64(c)).collect();
        let vs: Vec<String> = s.v.iter().map(|&c| fmt_f64(c)).collect();
        let _ = writeln!(out, "{},{},{}", fmt_f64(s.t), xs.join(","), vs.join(","));
    }
    out
}

struct Artifacts {
    trajectory: Option<String>,
    summary: String,
    report: String,
}

fn check_dim(name: &str, v: &[f64], dim: usize) -> Result<(), RunError> {
    if v.len() != dim {
        return Err(RunError::Input(format!(
            "{name}: expected dimension {dim}, got {}",
            v.len()
        )));
    }
    Ok(())
}

fn probe_summary(sum: &mut Summary, rep: &str, probe: &ProbeResult, reference: &DVector<f64>) -> String {
    let err = (probe.extrapolated_second_derivative.clone() - reference).amax();
    sum.kv_vec("extrapolated_second_derivative", &probe.extrapolated_second_derivative);
    sum.kv_vec("reference_value", reference);
    sum.kv_f64("max_abs_error", err);
    sum.kv_f64("convergence_order_estimate", probe.convergence_order_estimate);
    sum.kv_bool("converged", probe.converged);
    let mut report = String::from(rep);
    let _ = writeln!(report, "eps levels: {:?}", probe.epsilons);
    for (e, p) in probe.epsilons.iter().zip(&probe.endpoints) {
        let _ = writeln!(report, "  eps = {e:<8}: endpoint {}", fmt_vec(p));
    }
    let _ = writeln!(
        report,
        "extrapolated: {}",
        fmt_vec(&probe.extrapolated_second_derivative)
    );
    let _ = writeln!(report, "reference:    {}", fmt_vec(reference));
    let _ = writeln!(report, "max |error|:  {}", fmt_f64(err));
    let _ = writeln!(
        report,
        "order estimate: {} (converged: {})",
        fmt_f64(probe.convergence_order_estimate),
        probe.converged
    );
    report
}

fn execute(sc: &Scenario) -> Result<Artifacts, RunError> {
    sc.check_required()?;
    let bundle = sc.build_model()?;
    let cfg = sc.integrator()?;
    let n = bundle.dim;
    let mut sum = Summary::new(sc);
    let mut report = format!("task: {}\nmodel: {}\n", sc.task.name(), bundle.name);

    let init = sc.initial.clone();
    let get_init = || -> Result<_, RunError> {
        init.clone()
            .ok_or_else(|| RunError::Input("initial: required".into()))
    };

    match sc.task {
        Task::Geodesic | Task::Forced => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let v0 = i.v0.clone().unwrap();
            check_dim("initial.v0", &v0, n)?;
            let t1 = sc.interval.as_ref().unwrap().t1;
            let x0 = DVector::from_vec(i.x0.clone());
            let v0 = DVector::from_vec(v0);
            let tr = if sc.task == Task::Forced {
                let pot = bundle.potential.as_ref().ok_or_else(|| {
                    RunError::Input(
                        "model has no potential for the forced task; set model.params.g0 > 0"
                            .into(),
                    )
                })?;
                forced_geodesic(&bundle.metric, pot, i.t0, &x0, &v0, t1, &cfg)?
            } else {
                geodesic_metric(&bundle.metric, i.t0, &x0, &v0, t1, &cfg)?
            };
            let rep = functionals(&bundle.metric, &tr)?;
            sum.kv_f64("t_end", tr.last().t);
            sum.kv_vec("x_end", &tr.last().x);
            sum.kv_vec("v_end", &tr.last().v);
            sum.kv_f64("energy", rep.energy);
            sum.kv_f64("length", rep.length);
            sum.kv_f64("el_residual_max", rep.el_residual_max);
            if sc.task == Task::Forced {
                let pot = bundle.potential.as_ref().unwrap();
                let e0 = mechanical_energy(&bundle.metric, pot, tr.first())?;
                let e1 = mechanical_energy(&bundle.metric, pot, tr.last())?;
                sum.kv_f64("mechanical_energy_start", e0);
                sum.kv_f64("mechanical_energy_end", e1);
            }
            let _ = writeln!(
                report,
                "integrated {} samples over [{}, {}]\nendpoint: {}\nenergy {} length {} el_residual_max {}",
                tr.len(),
                tr.t_start(),
                tr.t_end(),
                fmt_vec(&tr.last().x),
                fmt_f64(rep.energy),
                fmt_f64(rep.length),
                fmt_f64(rep.el_residual_max),
            );
            Ok(Artifacts {
                trajectory: Some(trajectory_csv(&tr)),
                summary: sum.text,
                report,
            })
        }
        Task::Transport => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let v0 = i.v0.clone().unwrap();
            let w0 = i.w0.clone().unwrap();
            check_dim("initial.v0", &v0, n)?;
            check_dim("initial.w0", &w0, n)?;
            let t1 = sc.interval.as_ref().unwrap().t1;
            let x0 = DVector::from_vec(i.x0.clone());
            let v0 = DVector::from_vec(v0);
            let w0 = DVector::from_vec(w0);
            let base = geodesic_metric(&bundle.metric, i.t0, &x0, &v0, t1, &cfg)?;
            let dn = DotNabla::from_metric(&bundle.metric);
            let tr = parallel_transport(&dn, &base, &w0, &cfg)?;
            let g_start = bundle.metric.inner(i.t0, x0.as_slice(), &w0, &w0)?;
            let w_end = tr.last().x.clone();
            let g_end = bundle.metric.inner(
                base.t_end(),
                base.last().x.as_slice(),
                &w_end,
                &w_end,
            )?;
            sum.kv_vec("w_end", &w_end);
            sum.kv_f64("metric_norm_sq_start", g_start);
            sum.kv_f64("metric_norm_sq_end", g_end);
            let _ = writeln!(
                report,
                "transported along geodesic over [{}, {t1}]\nw_end {}\ng(w,w): {} -> {}",
                i.t0,
                fmt_vec(&w_end),
                fmt_f64(g_start),
                fmt_f64(g_end),
            );
            Ok(Artifacts {
                trajectory: Some(trajectory_csv(&tr)),
                summary: sum.text,
                report,
            })
        }
        Task::Flow => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let t1 = sc.interval.as_ref().unwrap().t1;
            let field = build_field(sc.field.as_ref().unwrap(), n)?;
            let tr = flow(&field, i.t0, &DVector::from_vec(i.x0.clone()), t1, &cfg)?;
            sum.kv_f64("t_end", tr.last().t);
            sum.kv_vec("x_end", &tr.last().x);
            let _ = writeln!(
                report,
                "flow of '{}' over [{}, {t1}]: endpoint {}",
                sc.field.as_ref().unwrap().name,
                i.t0,
                fmt_vec(&tr.last().x)
            );
            Ok(Artifacts {
                trajectory: Some(trajectory_csv(&tr)),
                summary: sum.text,
                report,
            })
        }
        Task::Functionals => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let t1 = sc.interval.as_ref().unwrap().t1;
            let path = sc.path.as_ref().unwrap();
            let samples = path.samples.unwrap_or(201).max(2);
            let tr = match build_path(path, i.x0.clone(), i.t0)? {
                Some(curve) => curve.to_trajectory(i.t0, t1, samples)?,
                None => {
                    let v0 = i.v0.clone().ok_or_else(|| {
                        RunError::Input("initial.v0: required for geodesic paths".into())
                    })?;
                    check_dim("initial.v0", &v0, n)?;
                    geodesic_metric(
                        &bundle.metric,
                        i.t0,
                        &DVector::from_vec(i.x0.clone()),
                        &DVector::from_vec(v0),
                        t1,
                        &cfg,
                    )?
                }
            };
            let rep = functionals(&bundle.metric, &tr)?;
            sum.kv_f64("energy", rep.energy);
            sum.kv_f64("length", rep.length);
            sum.kv_f64("el_residual_max", rep.el_residual_max);
            let _ = writeln!(
                report,
                "functionals over [{}, {t1}]: energy {} length {} el_residual_max {}",
                i.t0,
                fmt_f64(rep.energy),
                fmt_f64(rep.length),
                fmt_f64(rep.el_residual_max)
            );
            if let Some(fam) = &bundle.embedding {
                let emb = embedded_length(fam, &tr)?;
                sum.kv_f64("embedded_length", emb);
                let _ = writeln!(report, "embedded length: {}", fmt_f64(emb));
            }
            Ok(Artifacts {
                trajectory: Some(trajectory_csv(&tr)),
                summary: sum.text,
                report,
            })
        }
        Task::TorsionProbe => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let v0 = i.v0.clone().unwrap();
            let w0 = i.w0.clone().unwrap();
            check_dim("initial.v0", &v0, n)?;
            check_dim("initial.w0", &w0, n)?;
            let probe_cfg = sc.probe.as_ref().unwrap();
            let tol = probe_cfg.tolerance.unwrap_or(1e-4);
            let dn = match probe_cfg.dotnabla.as_deref() {
                None | Some("metric") => DotNabla::from_metric(&bundle.metric),
                Some("synthetic_ab") => DotNabla::new(
                    ChristoffelEval::zero(n),
                    TimeDepVectorField::zero(n),
                    EndomorphismField::identity(n),
                    EndomorphismField::zero(n),
                )?,
                Some(other) => {
                    return Err(RunError::Input(format!(
                        "probe.dotnabla: unknown '{other}' (metric, synthetic_ab)"
                    )))
                }
            };
            let e = Event::new(i.t0, i.x0.clone())?;
            let v0 = DVector::from_vec(v0);
            let w0 = DVector::from_vec(w0);
            let probe =
                torsion_loop_probe_with_tol(&dn, &e, &v0, &w0, &probe_cfg.eps, &cfg, tol)?;
            // loop limit is −𝒯(v, w)
            let reference = -torsion_operator(
                &dn,
                &TimeDepVectorField::constant(v0.iter().copied().collect()),
                &TimeDepVectorField::constant(w0.iter().copied().collect()),
                &e,
            )?;
            let report = probe_summary(&mut sum, &report, &probe, &reference);
            Ok(Artifacts {
                trajectory: None,
                summary: sum.text,
                report,
            })
        }
        Task::BracketProbe => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let probe_cfg = sc.probe.as_ref().unwrap();
            let tol = probe_cfg.tolerance.unwrap_or(1e-4);
            let xf = build_field(sc.field.as_ref().unwrap(), n)?;
            let yf = build_field(sc.field2.as_ref().unwrap(), n)?;
            let e = Event::new(i.t0, i.x0.clone())?;
            let probe = bracket_probe_with_tol(&xf, &yf, &e, &probe_cfg.eps, &cfg, tol)?;
            let reference = td_bracket(&xf, &yf, &e)?;
            let report = probe_summary(&mut sum, &report, &probe, &reference);
            Ok(Artifacts {
                trajectory: None,
                summary: sum.text,
                report,
            })
        }
        Task::Suspension => {
            let i = get_init()?;
            check_dim("initial.x0", &i.x0, n)?;
            let v0 = i.v0.clone().unwrap();
            check_dim("initial.v0", &v0, n)?;
            let s1 = sc.interval.as_ref().unwrap().t1;
            let tr = geodesic_suspension(
                &bundle.metric,
                i.t0,
                &DVector::from_vec(i.x0.clone()),
                i.v0_time.unwrap(),
                &DVector::from_vec(v0),
                s1,
                &cfg,
            )?;
            let drift = tr
                .samples()
                .iter()
                .map(|s| (s.x[0] - s.t).abs())
                .fold(0.0_f64, f64::max);
            sum.kv_f64("gamma0_end", tr.last().x[0]);
            sum.kv_f64("section_drift_max", drift);
            sum.kv_vec("x_end", &tr.last().x.rows(1, n).clone_owned());
            let _ = writeln!(
                report,
                "suspension geodesic over [{}, {s1}]\ngamma0(s1) = {}, max |gamma0(s) - s| = {}",
                i.t0,
                fmt_f64(tr.last().x[0]),
                fmt_f64(drift)
            );
            Ok(Artifacts {
                trajectory: Some(trajectory_csv(&tr)),
                summary: sum.text,
                report,
            })
        }
        Task::Validate => {
            let vrep = validate_model(&bundle)?;
            sum.kv_usize("rows_total", vrep.rows.len());
            sum.kv_usize(
                "rows_flagged",
                vrep.rows.iter().filter(|r| r.flagged).count(),
            );
            sum.section("rows");
            for r in &vrep.rows {
                sum.quoted_kv_f64(&r.quantity, r.max_abs_diff);
            }
            sum.section("adjudications");
            for a in &vrep.adjudications {
                sum.quoted_kv_str(&a.question, &a.finding);
            }
            let _ = writeln!(report, "{vrep}");
            Ok(Artifacts {
                trajectory: None,
                summary: sum.text,
                report,
            })
        }
    }
}

pub struct RunPaths {
    pub summary: PathBuf,
    pub report: PathBuf,
    pub trajectory: Option<PathBuf>,
}

/// Execute a parsed scenario, writing artifacts under `out_dir`.
pub fn run(sc: &Scenario, out_dir: &Path, quiet: bool) -> Result<RunPaths, RunError> {
    let artifacts = execute(sc)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Input(format!("output dir {}: {e}", out_dir.display())))?;
    let out = sc.output.clone();
    let summary_name = out
        .as_ref()
        .and_then(|o| o.summary.clone())
        .unwrap_or_else(|| "summary.toml".into());
    let traj_name = out
        .as_ref()
        .and_then(|o| o.trajectory.clone())
        .unwrap_or_else(|| "trajectory.csv".into());
    let summary = out_dir.join(summary_name);
    let report = out_dir.join("report.txt");
    fs::write(&summary, &artifacts.summary)
        .map_err(|e| RunError::Input(format!("write {}: {e}", summary.display())))?;
    fs::write(&report, &artifacts.report)
        .map_err(|e| RunError::Input(format!("write {}: {e}", report.display())))?;
    let trajectory = match &artifacts.trajectory {
        Some(csv) => {
            let p = out_dir.join(traj_name);
            fs::write(&p, csv)
                .map_err(|e| RunError::Input(format!("write {}: {e}", p.display())))?;
            Some(p)
        }
        None => None,
    };
    if !quiet {
        print!("{}", artifacts.report);
    }
    Ok(RunPaths {
        summary,
        report,
        trajectory,
    })
}

/// Load a scenario file and run it.
pub fn run_file(path: &Path, out_dir: &Path, quiet: bool) -> Result<RunPaths, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Input(format!("read {}: {e}", path.display())))?;
    let sc = Scenario::parse(&text)?;
    run(&sc, out_dir, quiet)
}

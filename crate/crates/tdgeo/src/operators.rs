//! Time-dependent Lie calculus and torsion: Lie derivatives, the
//! time-dependent bracket ⟦X,Y⟧ = [X,Y] + Ẏ − Ẋ, the torsion operator
//! 𝒯(X,Y) = T^∇(X,Y) + (A−B)(X−Y), and the two flow/loop limit probes that
//! recover both quantities as ε² coefficients of four-step constructions.

use nalgebra::DVector;

use crate::connection::{DotNabla, ExtendedConnection};
use crate::dual::Dual2;
use crate::dynamics::flow;
use crate::error::{GeoResult, GeomError};
use crate::fields::{Event, ScalarField, TimeDepVectorField};
use crate::integrate::{integrate, IntegratorConfig};

/// Default consistency tolerance for probe extrapolations.
pub const DEFAULT_PROBE_TOL: f64 = 1e-4;
/// Probes integrate each ε-leg with fixed-step RK4 at step = ε / this,
/// keeping integration error well below the ε² signal.
const PROBE_STEPS_PER_LEG: f64 = 64.0;

/// 𝕃_X f = ∂f/∂t + X f.
pub fn lie_derivative_scalar(
    x_field: &TimeDepVectorField,
    f: &ScalarField,
    e: &Event,
) -> GeoResult<f64> {
    let (t, x) = e.coords();
    Ok(f.dt(t, x)? + f.grad_x(t, x)?.dot(&x_field.eval(t, x)?))
}

/// 𝕃_X Y = Ẏ + [X, Y] with [X,Y]ᵏ = Xⁱ∂ᵢYᵏ − Yⁱ∂ᵢXᵏ.
pub fn lie_derivative_vector(
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<DVector<f64>> {
    let (t, x) = e.coords();
    let xv = x_field.eval(t, x)?;
    let yv = y_field.eval(t, x)?;
    Ok(y_field.dt(t, x)? + y_field.jac_x(t, x)? * xv - x_field.jac_x(t, x)? * yv)
}

/// ⟦X, Y⟧ = [X, Y] + Ẏ − Ẋ; antisymmetric by construction.
pub fn td_bracket(
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<DVector<f64>> {
    let (t, x) = e.coords();
    Ok(lie_derivative_vector(x_field, y_field, e)? - x_field.dt(t, x)?)
}

/// Suspension X̃ = ∂/∂t + X as a time-independent field on ℝ^{1+n} whose
/// coordinate 0 is the time coordinate of ℝ × M.
pub fn suspend(x_field: &TimeDepVectorField) -> TimeDepVectorField {
    let n = x_field.dim();
    let raw = x_field.raw();
    TimeDepVectorField::new(n + 1, move |_, u| {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Dual2::c(0.0) + 1.0);
        out.extend(raw(u[0], &u[1..]));
        out
    })
}

/// Result of an ε-indexed geometric limit probe.
///
/// `extrapolated_second_derivative` is the Neville limit of
/// (c(ε) − p)/ε², i.e. the estimate of ½c''(0).
#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub epsilons: Vec<f64>,
    pub endpoints: Vec<DVector<f64>>,
    pub extrapolated_second_derivative: DVector<f64>,
    /// log–log slope of ‖c(ε) − p‖ against ε; NaN when the defects are at
    /// round-off level.
    pub convergence_order_estimate: f64,
    /// Whether the last extrapolation correction fell below the tolerance.
    pub converged: bool,
    pub tolerance: f64,
}

fn validate_eps(eps_list: &[f64]) -> GeoResult<()> {
    if eps_list.len() < 2 {
        return Err(GeomError::InvalidConfig("need at least two eps levels".into()));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(GeomError::InvalidConfig(
                "eps levels must be strictly decreasing".into(),
            ));
        }
    }
    if !(eps_list[eps_list.len() - 1] > 0.0) {
        return Err(GeomError::InvalidConfig("eps levels must be positive".into()));
    }
    Ok(())
}

/// Componentwise Neville extrapolation to ε = 0 of values y_i given at
/// nodes ε_i. Returns the limit and the magnitude of the last correction.
fn neville_to_zero(eps: &[f64], ys: &[DVector<f64>]) -> (DVector<f64>, f64) {
    let m = eps.len();
    let mut tableau: Vec<DVector<f64>> = ys.to_vec();
    let mut prev_best = tableau[0].clone();
    for k in 1..m {
        for i in 0..m - k {
            let num = eps[i + k] * &tableau[i] - eps[i] * &tableau[i + 1];
            tableau[i] = num / (eps[i + k] - eps[i]);
        }
        if k == m - 1 {
            let corr = (&tableau[0] - &prev_best).amax();
            return (tableau[0].clone(), corr);
        }
        prev_best = tableau[0].clone();
    }
    (tableau[0].clone(), 0.0)
}

fn order_estimate(eps: &[f64], defects: &[f64]) -> f64 {
    let mut slopes = Vec::new();
    for i in 0..eps.len() - 1 {
        if defects[i] < 1e-14 || defects[i + 1] < 1e-14 {
            continue;
        }
        slopes.push((defects[i] / defects[i + 1]).ln() / (eps[i] / eps[i + 1]).ln());
    }
    if slopes.is_empty() {
        f64::NAN
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    }
}

fn probe_cfg(eps: f64, cfg: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig::rk4(eps / PROBE_STEPS_PER_LEG).with_max_steps(cfg.max_steps)
}

fn assemble_probe(
    base: &DVector<f64>,
    eps_list: &[f64],
    endpoints: Vec<DVector<f64>>,
    tol: f64,
) -> ProbeResult {
    let ds: Vec<DVector<f64>> = endpoints
        .iter()
        .zip(eps_list)
        .map(|(p4, &e)| (p4 - base) / (e * e))
        .collect();
    let (extrapolated, corr) = neville_to_zero(eps_list, &ds);
    let defects: Vec<f64> = endpoints.iter().map(|p4| (p4 - base).norm()).collect();
    ProbeResult {
        epsilons: eps_list.to_vec(),
        endpoints,
        extrapolated_second_derivative: extrapolated,
        convergence_order_estimate: order_estimate(eps_list, &defects),
        converged: corr < tol,
        tolerance: tol,
    }
}

/// Four-flow commutator probe: composes
/// c₁ = Φ_X(t+ε, t, p), c₂ = Φ_Y(t+2ε, t+ε, c₁),
/// c₃ = Φ_X(t+ε, t+2ε, c₂), c₄ = Φ_Y(t, t+ε, c₃)
/// and extrapolates (c₄(ε) − p)/ε² to ε = 0, which recovers ⟦X, Y⟧ at (t, p).
pub fn bracket_probe(
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
    eps_list: &[f64],
    cfg: &IntegratorConfig,
) -> GeoResult<ProbeResult> {
    bracket_probe_with_tol(x_field, y_field, e, eps_list, cfg, DEFAULT_PROBE_TOL)
}

pub fn bracket_probe_with_tol(
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
    eps_list: &[f64],
    cfg: &IntegratorConfig,
    tol: f64,
) -> GeoResult<ProbeResult> {
    validate_eps(eps_list)?;
    let (t, p) = (e.t, e.x.clone());

    let compose = |eps: f64, cfg: &IntegratorConfig| -> GeoResult<DVector<f64>> {
        let c1 = flow(x_field, t, &p, t + eps, cfg)?.last().x.clone();
        let c2 = flow(y_field, t + eps, &c1, t + 2.0 * eps, cfg)?.last().x.clone();
        let c3 = flow(x_field, t + 2.0 * eps, &c2, t + eps, cfg)?.last().x.clone();
        Ok(flow(y_field, t + eps, &c3, t, cfg)?.last().x.clone())
    };

    // c₄(0) = p exactly: zero-span flows return the start point.
    let at_zero = compose(0.0, &probe_cfg(eps_list[0], cfg))?;
    if at_zero != p {
        return Err(GeomError::ProbeFailed {
            eps: 0.0,
            reason: "zero-span composition moved the base point".into(),
        });
    }

    let mut endpoints = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p4 = compose(eps, &probe_cfg(eps, cfg)).map_err(|err| GeomError::ProbeFailed {
            eps,
            reason: err.to_string(),
        })?;
        endpoints.push(p4);
    }
    Ok(assemble_probe(&p, eps_list, endpoints, tol))
}

/// 𝒯(X, Y) = T^∇(X, Y) + (A − B)(X − Y) with
/// T^∇(X, Y)ᵏ = (Γᵏ_ij − Γᵏ_ji) Xⁱ Yʲ.
pub fn torsion_operator(
    dn: &DotNabla,
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<DVector<f64>> {
    let (t, x) = e.coords();
    let xv = x_field.eval(t, x)?;
    let yv = y_field.eval(t, x)?;
    let gamma = dn.gamma.eval(t, x)?;
    let tnabla = gamma.contract2(&xv, &yv) - gamma.contract2(&yv, &xv);
    let ab = dn.a.eval(t, x)? - dn.b.eval(t, x)?;
    Ok(tnabla + ab * (xv - yv))
}

/// The same operator through its covariant-derivative construction,
/// ∇̇_X Y − ∇̇_Y X − ⟦X, Y⟧.
pub fn torsion_via_dotnabla(
    dn: &DotNabla,
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<DVector<f64>> {
    Ok(dn.apply(x_field, y_field, e)? - dn.apply(y_field, x_field, e)?
        - td_bracket(x_field, y_field, e)?)
}

/// Evaluate both constructions and fail if they disagree beyond round-off.
pub fn torsion_operator_checked(
    dn: &DotNabla,
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<DVector<f64>> {
    let direct = torsion_operator(dn, x_field, y_field, e)?;
    let via = torsion_via_dotnabla(dn, x_field, y_field, e)?;
    let diff = (&direct - &via).amax();
    if diff > 1e-10 {
        return Err(GeomError::ProbeFailed {
            eps: 0.0,
            reason: format!("torsion constructions disagree by {diff:e}"),
        });
    }
    Ok(direct)
}

/// (endpoint, end direction, transported extras) of one loop leg.
type LegResult = (DVector<f64>, DVector<f64>, Vec<DVector<f64>>);

/// One leg of the torsion loop: geodesic of `dn` from (t_start, x, dir)
/// over a signed span, transporting `extras` in parallel alongside.
fn torsion_leg(
    dn: &DotNabla,
    t_start: f64,
    x: &DVector<f64>,
    dir: &DVector<f64>,
    extras: &[DVector<f64>],
    span: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<LegResult> {
    let n = dn.dim();
    let m = extras.len();
    let mut y0: Vec<f64> = Vec::with_capacity(n * (2 + m));
    y0.extend(x.iter());
    y0.extend(dir.iter());
    for w in extras {
        y0.extend(w.iter());
    }
    let s = integrate(
        |t, y| {
            let q = &y[..n];
            let v = DVector::from_column_slice(&y[n..2 * n]);
            let gamma = dn.gamma.eval(t, q)?;
            let c = dn.c.eval(t, q)?;
            let a = dn.a.eval(t, q)?;
            let b = dn.b.eval(t, q)?;
            let a_v = &a * &v;
            let mut dy: Vec<f64> = Vec::with_capacity(y.len());
            dy.extend(v.iter());
            let acc = -(gamma.contract2(&v, &v)) - &c - &a_v - &b * &v;
            dy.extend(acc.iter());
            for j in 0..m {
                let w = DVector::from_column_slice(&y[(2 + j) * n..(3 + j) * n]);
                let dw = -(gamma.contract2(&v, &w)) - &c - &a_v - &b * &w;
                dy.extend(dw.iter());
            }
            Ok(dy)
        },
        t_start,
        &y0,
        t_start + span,
        cfg,
    )?;
    let end = s.ys.last().unwrap();
    let p = DVector::from_column_slice(&end[..n]);
    let v = DVector::from_column_slice(&end[n..2 * n]);
    let ws = (0..m)
        .map(|j| DVector::from_column_slice(&end[(2 + j) * n..(3 + j) * n]))
        .collect();
    Ok((p, v, ws))
}

/// Four-step geodesic/transport loop: advance along the geodesic with
/// direction v for ε (transporting v, w), then along w for ε, back along the
/// transported v for −ε, and back along the transported w for −ε. The
/// extrapolated ε² coefficient of the closure defect equals −𝒯(v, w).
pub fn torsion_loop_probe(
    dn: &DotNabla,
    e: &Event,
    v0: &DVector<f64>,
    w0: &DVector<f64>,
    eps_list: &[f64],
    cfg: &IntegratorConfig,
) -> GeoResult<ProbeResult> {
    torsion_loop_probe_with_tol(dn, e, v0, w0, eps_list, cfg, DEFAULT_PROBE_TOL)
}

#[allow(clippy::too_many_arguments)]
pub fn torsion_loop_probe_with_tol(
    dn: &DotNabla,
    e: &Event,
    v0: &DVector<f64>,
    w0: &DVector<f64>,
    eps_list: &[f64],
    cfg: &IntegratorConfig,
    tol: f64,
) -> GeoResult<ProbeResult> {
    validate_eps(eps_list)?;
    let n = dn.dim();
    for got in [e.dim(), v0.len(), w0.len()] {
        if got != n {
            return Err(GeomError::DimensionMismatch { expected: n, got });
        }
    }
    let (t, p) = (e.t, e.x.clone());
    let mut endpoints = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let cfg_eps = probe_cfg(eps, cfg);
        let run = || -> GeoResult<DVector<f64>> {
            let (p1, v1, ws) = torsion_leg(dn, t, &p, v0, std::slice::from_ref(w0), eps, &cfg_eps)?;
            let w1 = ws.into_iter().next().unwrap();
            let (p2, w2, vs) = torsion_leg(dn, t + eps, &p1, &w1, &[v1], eps, &cfg_eps)?;
            let v2 = vs.into_iter().next().unwrap();
            let (p3, _, ws) = torsion_leg(dn, t + 2.0 * eps, &p2, &v2, &[w2], -eps, &cfg_eps)?;
            let w3 = ws.into_iter().next().unwrap();
            let (p4, _, _) = torsion_leg(dn, t + eps, &p3, &w3, &[], -eps, &cfg_eps)?;
            Ok(p4)
        };
        let p4 = run().map_err(|err| GeomError::ProbeFailed {
            eps,
            reason: err.to_string(),
        })?;
        endpoints.push(p4);
    }
    Ok(assemble_probe(&p, eps_list, endpoints, tol))
}

/// Torsion of an extended connection evaluated on suspensions, split into
/// its M-tangent and dt components:
/// vertical = T^∇(X,Y) + (A−B)(X−Y), horizontal = (α−β)(X−Y) + ε(X,Y) − ε(Y,X).
/// Both parts are computed from covariant derivatives and the bracket, not
/// from those formulas.
pub fn vertical_torsion_check(
    ec: &ExtendedConnection,
    x_field: &TimeDepVectorField,
    y_field: &TimeDepVectorField,
    e: &Event,
) -> GeoResult<(DVector<f64>, f64)> {
    let n = ec.dim();
    let one = ScalarField::constant(n, 1.0);
    let (h_xy, v_xy) = ec.covariant_deriv((&one, x_field), (&one, y_field), e)?;
    let (h_yx, v_yx) = ec.covariant_deriv((&one, y_field), (&one, x_field), e)?;
    // [X̃, Ỹ] is purely vertical and equals ⟦X, Y⟧
    let bracket = td_bracket(x_field, y_field, e)?;
    Ok((v_xy - v_yx - bracket, h_xy - h_yx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ChristoffelEval;
    use crate::dual::Real;
    use crate::fields::{CovectorField, EndomorphismField, MetricField};
    use crate::sample::SampleDomain;
    use nalgebra::DMatrix;

    fn tight() -> IntegratorConfig {
        IntegratorConfig::adaptive(1e-10, 1e-10)
    }

    fn conformal_plane() -> MetricField {
        MetricField::from_eval(
            2,
            |t, _| {
                let f = (t * 2.0).exp();
                DMatrix::from_fn(2, 2, |i, j| if i == j { f } else { Dual2::c(0.0) })
            },
            &SampleDomain::unit(2),
        )
        .unwrap()
    }

    /// Γ = 0, A = Id, B = 0: 𝒯(X, Y) = X − Y.
    fn shear_operator() -> DotNabla {
        DotNabla::new(
            ChristoffelEval::zero(2),
            TimeDepVectorField::zero(2),
            EndomorphismField::identity(2),
            EndomorphismField::zero(2),
        )
        .unwrap()
    }

    #[test]
    fn lie_scalar_values() {
        let e = Event::new(2.0, vec![3.0]).unwrap();
        let zero = TimeDepVectorField::zero(1);
        let f_static = ScalarField::new(1, |_, x| x[0] * x[0]);
        assert_eq!(lie_derivative_scalar(&zero, &f_static, &e).unwrap(), 0.0);

        let f = ScalarField::new(1, |t, x| t * x[0]);
        let d1 = TimeDepVectorField::constant(vec![1.0]);
        assert_eq!(lie_derivative_scalar(&d1, &f, &e).unwrap(), 5.0);
    }

    #[test]
    fn lie_scalar_matches_flow_derivative() {
        // d/dε f(t+ε, Φ^{t+ε,t}(p)) at ε = 0
        let x_field = TimeDepVectorField::new(2, |t, x| vec![(x[1] + t).sin(), x[0] * 0.5]);
        let f = ScalarField::new(2, |t, x| (x[0] * 1.3).cos() * t + x[1]);
        let e = Event::new(0.4, vec![0.2, -0.1]).unwrap();
        let exact = lie_derivative_scalar(&x_field, &f, &e).unwrap();
        let h = 1e-5;
        let probe = |eps: f64| -> f64 {
            let q = flow(&x_field, e.t, &e.x, e.t + eps, &tight()).unwrap().last().x.clone();
            f.eval(e.t + eps, q.as_slice()).unwrap()
        };
        let fd = (probe(h) - probe(-h)) / (2.0 * h);
        assert!((exact - fd).abs() < 1e-8, "exact {exact} fd {fd}");
    }

    #[test]
    fn lie_vector_hand_value() {
        // X = t∂₁, Y = x¹∂₂: 𝕃_X Y = (0, t)
        let x_field = TimeDepVectorField::new(2, |t, _| vec![t, Dual2::c(0.0)]);
        let y_field = TimeDepVectorField::new(2, |_, x| vec![Dual2::c(0.0), x[0]]);
        let e = Event::new(2.0, vec![0.3, 0.4]).unwrap();
        let l = lie_derivative_vector(&x_field, &y_field, &e).unwrap();
        assert!((l - DVector::from_vec(vec![0.0, 2.0])).amax() < 1e-14);

        // X = Y time-independent gives zero
        let s = TimeDepVectorField::new(2, |_, x| vec![x[1], x[0] * x[0]]);
        let e0 = Event::new(0.0, vec![0.5, -0.5]).unwrap();
        assert!(lie_derivative_vector(&s, &s, &e0).unwrap().amax() < 1e-14);
    }

    #[test]
    fn lie_vector_matches_flow_pullback_limit() {
        let x_field = TimeDepVectorField::new(2, |t, x| vec![(x[1] * 0.8).sin() + t * 0.2, x[0] * 0.4]);
        let y_field = TimeDepVectorField::new(2, |t, x| vec![x[0] * x[1], (t + x[0]).cos()]);
        let e = Event::new(0.3, vec![0.4, 0.1]).unwrap();
        let exact = lie_derivative_vector(&x_field, &y_field, &e).unwrap();
        let h = 1e-4;
        let pull = |eps: f64| -> DVector<f64> {
            let q = flow(&x_field, e.t, &e.x, e.t + eps, &tight()).unwrap().last().x.clone();
            let y_there = y_field.eval(e.t + eps, q.as_slice()).unwrap();
            flow_tangent_back(&x_field, e.t + eps, &q, e.t, &y_there)
        };
        let fd = (pull(h) - pull(-h)) / (2.0 * h);
        assert!((exact - fd).amax() < 1e-6);
    }

    fn flow_tangent_back(
        x_field: &TimeDepVectorField,
        t0: f64,
        p: &DVector<f64>,
        t1: f64,
        w0: &DVector<f64>,
    ) -> DVector<f64> {
        crate::dynamics::flow_tangent(x_field, t0, p, t1, w0, &tight()).unwrap()
    }

    #[test]
    fn bracket_hand_value_and_antisymmetry() {
        let x_field = TimeDepVectorField::new(2, |t, _| vec![t, Dual2::c(0.0)]);
        let y_field = TimeDepVectorField::new(2, |_, x| vec![Dual2::c(0.0), x[0]]);
        let e = Event::new(2.0, vec![0.1, 0.7]).unwrap();
        let b = td_bracket(&x_field, &y_field, &e).unwrap();
        assert!((b - DVector::from_vec(vec![-1.0, 2.0])).amax() < 1e-14);

        let xy = td_bracket(&x_field, &y_field, &e).unwrap();
        let yx = td_bracket(&y_field, &x_field, &e).unwrap();
        assert!((xy + yx).amax() < 1e-15);
        // X = Y vanishes identically
        assert!(td_bracket(&x_field, &x_field, &e).unwrap().amax() < 1e-15);
    }

    #[test]
    fn bracket_equals_vertical_part_of_suspended_bracket() {
        let x_field = TimeDepVectorField::new(2, |t, x| vec![(x[1] + t).sin(), x[0] * 0.3]);
        let y_field = TimeDepVectorField::new(2, |t, x| vec![t * x[0], (x[1]).cos()]);
        let xs = suspend(&x_field);
        let ys = suspend(&y_field);
        for (t, p) in SampleDomain::unit(2).points(8) {
            let e = Event::new(t, p.clone()).unwrap();
            let direct = td_bracket(&x_field, &y_field, &e).unwrap();
            // suspended fields are time-independent on ℝ^{1+n}
            let e_hat = Event::new(0.0, {
                let mut u = vec![t];
                u.extend(&p);
                u
            })
            .unwrap();
            let hat = td_bracket(&xs, &ys, &e_hat).unwrap();
            assert!(hat[0].abs() < 1e-13, "horizontal part should vanish");
            assert!((hat.rows(1, 2).clone_owned() - direct).amax() < 1e-12);
        }
    }

    #[test]
    fn bracket_is_not_function_linear() {
        // ⟦fX, Y⟧ ≠ f⟦X, Y⟧ on a concrete witness
        let x_field = TimeDepVectorField::new(1, |t, _| vec![t + 1.0]);
        let y_field = TimeDepVectorField::new(1, |_, x| vec![x[0]]);
        let f = ScalarField::new(1, |t, x| t + x[0]);
        let e = Event::new(0.7, vec![0.4]).unwrap();
        let lhs = td_bracket(&x_field.mul_scalar_field(&f), &y_field, &e).unwrap();
        let rhs = f.eval(0.7, &[0.4]).unwrap() * td_bracket(&x_field, &y_field, &e).unwrap();
        assert!((lhs - rhs).amax() > 1e-3);
    }

    #[test]
    fn bracket_probe_trivial_and_hand_value() {
        let zero = TimeDepVectorField::zero(2);
        let e = Event::new(0.0, vec![0.3, 0.3]).unwrap();
        let r = bracket_probe(&zero, &zero, &e, &[0.1, 0.05, 0.025], &tight()).unwrap();
        assert!(r.extrapolated_second_derivative.amax() < 1e-12);

        // X = t∂₁, Y = x¹∂₂ at (0, 0): ⟦X,Y⟧ = (−1, 0)
        let x_field = TimeDepVectorField::new(2, |t, _| vec![t, Dual2::c(0.0)]);
        let y_field = TimeDepVectorField::new(2, |_, x| vec![Dual2::c(0.0), x[0]]);
        let e0 = Event::new(0.0, vec![0.0, 0.0]).unwrap();
        let r = bracket_probe(&x_field, &y_field, &e0, &[0.1, 0.05, 0.025], &tight()).unwrap();
        let expect = td_bracket(&x_field, &y_field, &e0).unwrap();
        assert!((expect.clone() - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-14);
        assert!(
            (r.extrapolated_second_derivative - expect).amax() < 1e-6,
            "probe limit off"
        );
        assert!(r.converged);
    }

    #[test]
    fn bracket_probe_nonlinear_fields_order_two() {
        // time-derivative difference keeps both bracket components away from
        // zero (clean ε² slope); the overall 0.5 scale keeps the ε³
        // remainder small against the extrapolation tolerance
        let x_field = TimeDepVectorField::new(2, |t, x| {
            vec![((x[1]).sin() + t) * 0.5, ((x[0]).cos() - t) * 0.5]
        });
        let y_field = TimeDepVectorField::new(2, |t, x| {
            vec![(x[0] * x[1] + 0.3) * 0.5, ((t * 0.3).exp() * 0.5 + x[0] * 0.2) * 0.5]
        });
        let e = Event::new(0.2, vec![0.4, -0.3]).unwrap();
        let r = bracket_probe(&x_field, &y_field, &e, &[0.1, 0.05, 0.025], &tight()).unwrap();
        let expect = td_bracket(&x_field, &y_field, &e).unwrap();
        let err = (r.extrapolated_second_derivative.clone() - &expect).amax();
        assert!(
            err < 1e-4,
            "extrapolation error {err:.3e}; expect {expect:?}, got {:?}, defects {:?}",
            r.extrapolated_second_derivative,
            r.endpoints
                .iter()
                .map(|p| (p - &e.x).norm())
                .collect::<Vec<_>>()
        );
        assert!(
            (1.8..=2.2).contains(&r.convergence_order_estimate),
            "order {}",
            r.convergence_order_estimate
        );
    }

    #[test]
    fn eps_list_validation() {
        let zero = TimeDepVectorField::zero(1);
        let e = Event::new(0.0, vec![0.0]).unwrap();
        for bad in [vec![0.1], vec![0.05, 0.1], vec![0.1, 0.0]] {
            assert!(bracket_probe(&zero, &zero, &e, &bad, &tight()).is_err());
        }
    }

    #[test]
    fn torsion_vanishes_for_metric_operators() {
        let dn = DotNabla::from_metric(&conformal_plane());
        let x_field = TimeDepVectorField::new(2, |t, x| vec![x[1] + t, x[0] * x[0]]);
        let y_field = TimeDepVectorField::new(2, |_, x| vec![(x[0]).sin(), Dual2::c(1.0)]);
        let e = Event::new(0.3, vec![0.2, 0.5]).unwrap();
        assert!(torsion_operator(&dn, &x_field, &y_field, &e).unwrap().amax() < 1e-12);
    }

    #[test]
    fn torsion_shear_hand_values() {
        let dn = shear_operator();
        let x_field = TimeDepVectorField::constant(vec![1.0, 0.0]);
        let y_field = TimeDepVectorField::constant(vec![0.0, 1.0]);
        let e = Event::new(0.0, vec![0.0, 0.0]).unwrap();
        let t = torsion_operator(&dn, &x_field, &y_field, &e).unwrap();
        assert!((t - DVector::from_vec(vec![1.0, -1.0])).amax() < 1e-15);
        // Y = 0 isolates (A − B)(X)
        let t = torsion_operator(&dn, &x_field, &TimeDepVectorField::zero(2), &e).unwrap();
        assert!((t - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn torsion_constructions_agree() {
        // asymmetric Γ and A ≠ B: both routes must still agree exactly
        let gamma = ChristoffelEval::custom(2, false, |t, x| {
            let mut g = crate::fields::Rank3::zeros(2);
            g.set(0, 0, 1, 0.4 * t + x[1]);
            g.set(0, 1, 0, -0.2 * x[0]);
            g.set(1, 1, 1, 0.3);
            Ok(g)
        });
        let dn = DotNabla::new(
            gamma,
            TimeDepVectorField::new(2, |t, _| vec![t * 0.1, Dual2::c(0.2)]),
            EndomorphismField::new(2, |t, _| {
                Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.3 * t, 0.0, 0.5]))
            }),
            EndomorphismField::new(2, |_, x| {
                Ok(DMatrix::from_row_slice(2, 2, &[0.2, 0.0, x[0], 1.0]))
            }),
        )
        .unwrap();
        let x_field = TimeDepVectorField::new(2, |t, x| vec![(x[1] + t).sin(), x[0] * 0.7]);
        let y_field = TimeDepVectorField::new(2, |t, x| vec![x[0] * x[1], t * 0.5 + 0.1]);
        for (t, p) in SampleDomain::unit(2).points(10) {
            let e = Event::new(t, p).unwrap();
            let a = torsion_operator(&dn, &x_field, &y_field, &e).unwrap();
            let b = torsion_via_dotnabla(&dn, &x_field, &y_field, &e).unwrap();
            assert!((a - b).amax() < 1e-12);
        }
        let e = Event::new(0.5, vec![0.1, 0.2]).unwrap();
        assert!(torsion_operator_checked(&dn, &x_field, &y_field, &e).is_ok());
    }

    #[test]
    fn torsion_bilinearity_iff_a_equals_b() {
        let e = Event::new(0.2, vec![0.3, -0.4]).unwrap();
        // A ≠ B: scaling X by 2 is not linear in the operator
        let dn = shear_operator();
        let x_field = TimeDepVectorField::constant(vec![1.0, 0.0]);
        let y_field = TimeDepVectorField::constant(vec![0.0, 1.0]);
        let t1 = torsion_operator(&dn, &x_field.scale(2.0), &y_field, &e).unwrap();
        let t2 = 2.0 * torsion_operator(&dn, &x_field, &y_field, &e).unwrap();
        assert!((t1 - t2).amax() > 0.5);

        // A = B on a metric operator: bilinear and pointwise
        let dn = DotNabla::from_metric(&conformal_plane());
        let t1 = torsion_via_dotnabla(&dn, &x_field.scale(2.0), &y_field, &e).unwrap();
        let t2 = 2.0 * torsion_via_dotnabla(&dn, &x_field, &y_field, &e).unwrap();
        assert!((t1 - t2).amax() < 1e-12);
        // replacing X by a field with equal value but different derivatives
        // at e leaves the operator value unchanged
        let x_bent = TimeDepVectorField::new(2, move |t, x| {
            vec![
                1.0 + (x[0] - 0.3) * (t + 2.0) + (t - 0.2) * 0.7,
                (x[1] + 0.4) * (x[0] + 1.0) * 3.0,
            ]
        });
        let v_check = x_bent.eval(e.t, e.x.as_slice()).unwrap();
        assert!((v_check - x_field.eval(e.t, e.x.as_slice()).unwrap()).amax() < 1e-14);
        let t3 = torsion_via_dotnabla(&dn, &x_bent, &y_field, &e).unwrap();
        let t4 = torsion_via_dotnabla(&dn, &x_field, &y_field, &e).unwrap();
        assert!((t3 - t4).amax() < 1e-12);
    }

    #[test]
    fn torsion_loop_probe_shear_case() {
        let dn = shear_operator();
        let e = Event::new(0.0, vec![0.0, 0.0]).unwrap();
        let v0 = DVector::from_vec(vec![1.0, 0.0]);
        let w0 = DVector::from_vec(vec![0.0, 1.0]);
        let r =
            torsion_loop_probe(&dn, &e, &v0, &w0, &[0.1, 0.05, 0.025], &tight()).unwrap();
        // ½c''(0) = −𝒯(v, w) = −(v − w) = (−1, 1)
        let expect = DVector::from_vec(vec![-1.0, 1.0]);
        assert!(
            (r.extrapolated_second_derivative.clone() - expect).amax() < 1e-4,
            "got {:?}",
            r.extrapolated_second_derivative
        );
        assert!(
            (1.8..=2.2).contains(&r.convergence_order_estimate),
            "order {}",
            r.convergence_order_estimate
        );
    }

    #[test]
    fn torsion_loop_probe_metric_case_vanishes() {
        let dn = DotNabla::from_metric(&conformal_plane());
        let e = Event::new(0.0, vec![0.1, 0.2]).unwrap();
        let v0 = DVector::from_vec(vec![0.8, 0.1]);
        let w0 = DVector::from_vec(vec![-0.2, 0.9]);
        let r =
            torsion_loop_probe(&dn, &e, &v0, &w0, &[0.1, 0.05, 0.025], &tight()).unwrap();
        // A = Id here, so the ε³ remainder is comparatively large; the
        // three-level extrapolation still lands within the probe tolerance
        assert!(
            r.extrapolated_second_derivative.amax() < 1e-4,
            "metric loop should close: {:?}",
            r.extrapolated_second_derivative
        );
    }

    #[test]
    fn vertical_torsion_matches_formulas() {
        // suspension of a time-independent metric: both parts vanish
        let flat = MetricField::from_eval(
            2,
            |_, _| DMatrix::from_fn(2, 2, |i, j| Dual2::c(if i == j { 1.0 } else { 0.0 })),
            &SampleDomain::unit(2),
        )
        .unwrap();
        let x_field = TimeDepVectorField::new(2, |t, x| vec![x[1] * t, (x[0]).sin()]);
        let y_field = TimeDepVectorField::new(2, |t, x| vec![(t).cos() * 0.3, x[0] * x[1]]);
        let e = Event::new(0.4, vec![0.2, 0.6]).unwrap();
        let ec = ExtendedConnection::suspension(&flat);
        let (v, h) = vertical_torsion_check(&ec, &x_field, &y_field, &e).unwrap();
        assert!(v.amax() < 1e-12 && h.abs() < 1e-12);

        // conformal suspension: vertical = 0 (A = B), horizontal = 0 (ε symmetric)
        let ec = ExtendedConnection::suspension(&conformal_plane());
        let (v, h) = vertical_torsion_check(&ec, &x_field, &y_field, &e).unwrap();
        assert!(v.amax() < 1e-12 && h.abs() < 1e-12);

        // custom α = dx¹, β = 0 on a flat core: horizontal = α(X − Y)
        let core = DotNabla::new(
            ChristoffelEval::zero(2),
            TimeDepVectorField::zero(2),
            EndomorphismField::zero(2),
            EndomorphismField::zero(2),
        )
        .unwrap();
        let ec = ExtendedConnection::new(
            ScalarField::constant(2, 0.0),
            CovectorField::new(2, |_, _| Ok(DVector::from_vec(vec![1.0, 0.0]))),
            CovectorField::zero(2),
            EndomorphismField::zero(2),
            core,
        )
        .unwrap();
        let xc = TimeDepVectorField::constant(vec![1.0, 2.0]);
        let yc = TimeDepVectorField::constant(vec![0.0, 2.0]);
        let (v, h) = vertical_torsion_check(&ec, &xc, &yc, &e).unwrap();
        assert!(v.amax() < 1e-14);
        assert!((h - 1.0).abs() < 1e-14);
    }
}

//! Non-autonomous flows, geodesics of metrics and of covariant derivation
//! operators, parallel transport, and the energy/length functionals with
//! Euler–Lagrange residual diagnostics.

use std::sync::Arc;

use nalgebra::DVector;

use crate::connection::{ChristoffelEval, DotNabla};
use crate::dual::Dual2;
use crate::error::{GeoResult, GeomError};
use crate::fields::{MetricField, ScalarField, TimeDepVectorField};
use crate::integrate::{integrate, IntegratorConfig, OdeSamples};
use crate::models::EmbeddingFamily;
use crate::quad::adaptive_simpson;

/// Quadrature tolerance for the functionals.
pub const QUADRATURE_TOL: f64 = 1e-9;
/// Kinetic energies below this are treated as stationary points.
pub const STATIONARY_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct TrajSample {
    pub t: f64,
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

/// Densely sampled path with cubic Hermite interpolation between samples.
/// `t` is strictly monotone (increasing or decreasing).
#[derive(Clone, Debug)]
pub struct Trajectory {
    dim: usize,
    samples: Vec<TrajSample>,
}

impl Trajectory {
    pub fn from_samples(dim: usize, samples: Vec<TrajSample>) -> GeoResult<Self> {
        if samples.is_empty() {
            return Err(GeomError::InvalidConfig("trajectory needs >= 1 sample".into()));
        }
        for s in &samples {
            if s.x.len() != dim || s.v.len() != dim {
                return Err(GeomError::DimensionMismatch {
                    expected: dim,
                    got: s.x.len().max(s.v.len()),
                });
            }
        }
        let increasing = samples.windows(2).all(|w| w[1].t > w[0].t);
        let decreasing = samples.windows(2).all(|w| w[1].t < w[0].t);
        if samples.len() > 1 && !increasing && !decreasing {
            return Err(GeomError::InvalidConfig(
                "trajectory times must be strictly monotone".into(),
            ));
        }
        Ok(Trajectory { dim, samples })
    }

    fn from_first_order(dim: usize, s: OdeSamples) -> GeoResult<Self> {
        let samples = s
            .ts
            .iter()
            .zip(s.ys.iter().zip(s.dys.iter()))
            .map(|(&t, (y, dy))| TrajSample {
                t,
                x: DVector::from_column_slice(y),
                v: DVector::from_column_slice(dy),
            })
            .collect();
        Trajectory::from_samples(dim, samples)
    }

    fn from_second_order(dim: usize, s: OdeSamples) -> GeoResult<Self> {
        let samples = s
            .ts
            .iter()
            .zip(s.ys.iter())
            .map(|(&t, y)| TrajSample {
                t,
                x: DVector::from_column_slice(&y[..dim]),
                v: DVector::from_column_slice(&y[dim..]),
            })
            .collect();
        Trajectory::from_samples(dim, samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[TrajSample] {
        &self.samples
    }

    pub fn first(&self) -> &TrajSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajSample {
        self.samples.last().unwrap()
    }

    pub fn t_start(&self) -> f64 {
        self.first().t
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    fn check_covers(&self, t: f64) -> GeoResult<()> {
        let (a, b) = (self.t_start(), self.t_end());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let slack = 1e-9 * (hi - lo).max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(GeomError::OutsideTrajectory { t, lo, hi });
        }
        Ok(())
    }

    fn segment(&self, t: f64) -> usize {
        let sign = if self.t_end() >= self.t_start() { 1.0 } else { -1.0 };
        let key = t * sign;
        let mut lo = 0usize;
        let mut hi = self.samples.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.samples[mid].t * sign <= key {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Interpolated position at `t` (cubic Hermite through (x, v) samples).
    pub fn position(&self, t: f64) -> GeoResult<DVector<f64>> {
        self.check_covers(t)?;
        if self.samples.len() == 1 {
            return Ok(self.samples[0].x.clone());
        }
        let i = self.segment(t);
        let (s0, s1) = (&self.samples[i], &self.samples[i + 1]);
        let h = s1.t - s0.t;
        let s = (t - s0.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * &s0.x + h10 * h * &s0.v + h01 * &s1.x + h11 * h * &s1.v)
    }

    /// Interpolated velocity at `t` (derivative of the Hermite interpolant).
    pub fn velocity(&self, t: f64) -> GeoResult<DVector<f64>> {
        self.check_covers(t)?;
        if self.samples.len() == 1 {
            return Ok(self.samples[0].v.clone());
        }
        let i = self.segment(t);
        let (s0, s1) = (&self.samples[i], &self.samples[i + 1]);
        let h = s1.t - s0.t;
        let s = (t - s0.t) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        Ok(d00 * &s0.x + d10 * &s0.v + d01 * &s1.x + d11 * &s1.v)
    }

    /// Acceleration estimate at sample `i` by differentiating the local
    /// Lagrange interpolant of the stored velocities (five-point window).
    /// Deliberately independent of whatever equation produced the samples.
    pub fn accel_estimate(&self, i: usize) -> DVector<f64> {
        let n = self.samples.len();
        if n == 1 {
            return DVector::zeros(self.dim);
        }
        let width = 5.min(n);
        let lo = i.saturating_sub(width / 2).min(n - width);
        let ts: Vec<f64> = (lo..lo + width).map(|j| self.samples[j].t).collect();
        let mut acc = DVector::zeros(self.dim);
        let ti = self.samples[i].t;
        for (jj, j) in (lo..lo + width).enumerate() {
            let w = lagrange_basis_derivative(&ts, jj, ti);
            acc += w * &self.samples[j].v;
        }
        acc
    }
}

/// d/dt at `t` of the Lagrange basis polynomial for node `j` over `ts`.
fn lagrange_basis_derivative(ts: &[f64], j: usize, t: f64) -> f64 {
    let mut sum = 0.0;
    for m in 0..ts.len() {
        if m == j {
            continue;
        }
        let mut prod = 1.0 / (ts[j] - ts[m]);
        for k in 0..ts.len() {
            if k == j || k == m {
                continue;
            }
            prod *= (t - ts[k]) / (ts[j] - ts[k]);
        }
        sum += prod;
    }
    sum
}

/// Analytic curve t ↦ x(t) with exact velocity and acceleration from
/// dual-number passes; the fixture type for path-based diagnostics.
#[derive(Clone)]
pub struct CurvePath {
    dim: usize,
    f: Arc<dyn Fn(Dual2) -> Vec<Dual2> + Send + Sync>,
}

impl CurvePath {
    pub fn new(dim: usize, f: impl Fn(Dual2) -> Vec<Dual2> + Send + Sync + 'static) -> Self {
        CurvePath { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim, (self.f)(Dual2::c(t)).iter().map(|d| d.val()))
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.dim,
            (self.f)(Dual2::var_outer(t)).iter().map(|d| d.d_outer()),
        )
    }

    pub fn accel(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.dim,
            (self.f)(Dual2::var_both(t)).iter().map(|d| d.d_cross()),
        )
    }

    /// Sample uniformly into a trajectory with `count >= 2` samples.
    pub fn to_trajectory(&self, t0: f64, t1: f64, count: usize) -> GeoResult<Trajectory> {
        if count < 2 || t0 == t1 {
            return Trajectory::from_samples(
                self.dim,
                vec![TrajSample {
                    t: t0,
                    x: self.position(t0),
                    v: self.velocity(t0),
                }],
            );
        }
        let samples = (0..count)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (count - 1) as f64;
                TrajSample {
                    t,
                    x: self.position(t),
                    v: self.velocity(t),
                }
            })
            .collect();
        Trajectory::from_samples(self.dim, samples)
    }
}

/// Integrate x' = X(t, x) from (t0, p) to t1 (backwards allowed).
/// Velocity samples store X(t, x(t)).
pub fn flow(
    x_field: &TimeDepVectorField,
    t0: f64,
    p: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    let n = x_field.dim();
    if p.len() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: p.len() });
    }
    let s = integrate(
        |t, y| Ok(x_field.eval(t, y)?.data.into()),
        t0,
        p.as_slice(),
        t1,
        cfg,
    )?;
    Trajectory::from_first_order(n, s)
}

/// Push `w0` through the linearized flow: integrates ẇ = (∂X/∂x) w along
/// the base solution and returns w(t1).
pub fn flow_tangent(
    x_field: &TimeDepVectorField,
    t0: f64,
    p: &DVector<f64>,
    t1: f64,
    w0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> GeoResult<DVector<f64>> {
    let n = x_field.dim();
    for got in [p.len(), w0.len()] {
        if got != n {
            return Err(GeomError::DimensionMismatch { expected: n, got });
        }
    }
    let y0: Vec<f64> = p.iter().chain(w0.iter()).copied().collect();
    let s = integrate(
        |t, y| {
            let (x, w) = y.split_at(n);
            let dx = x_field.eval(t, x)?;
            let jac = x_field.jac_x(t, x)?;
            let dw = jac * DVector::from_column_slice(w);
            Ok(dx.iter().chain(dw.iter()).copied().collect())
        },
        t0,
        &y0,
        t1,
        cfg,
    )?;
    Ok(DVector::from_column_slice(&s.ys.last().unwrap()[n..]))
}

fn second_order_trajectory<F>(
    n: usize,
    rhs_acc: F,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory>
where
    F: Fn(f64, &[f64], &DVector<f64>) -> GeoResult<DVector<f64>>,
{
    for got in [x0.len(), v0.len()] {
        if got != n {
            return Err(GeomError::DimensionMismatch { expected: n, got });
        }
    }
    let y0: Vec<f64> = x0.iter().chain(v0.iter()).copied().collect();
    let s = integrate(
        |t, y| {
            let (x, v) = y.split_at(n);
            let vv = DVector::from_column_slice(v);
            let acc = rhs_acc(t, x, &vv)?;
            Ok(v.iter().chain(acc.iter()).copied().collect())
        },
        t0,
        &y0,
        t1,
        cfg,
    )?;
    Trajectory::from_second_order(n, s)
}

/// Geodesic of the time-dependent metric:
/// ẍᵏ + Γᵏ_ij ẋⁱẋʲ + (G⁻¹·Ġ·ẋ)ᵏ = 0.
pub fn geodesic_metric(
    m: &MetricField,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    let gamma = ChristoffelEval::levi_civita(m);
    let m = m.clone();
    second_order_trajectory(
        m.dim(),
        move |t, x, v| {
            Ok(-(gamma.eval(t, x)?.contract2(v, v)) - m.musical_endomorphism(t, x)? * v)
        },
        t0,
        x0,
        v0,
        t1,
        cfg,
    )
}

/// Geodesic of a covariant derivation operator:
/// ẍᵏ = −Γᵏ_ij ẋⁱẋʲ − Cᵏ − (A + B)ᵏᵢ ẋⁱ.
pub fn geodesic_dotnabla(
    dn: &DotNabla,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    let dn = dn.clone();
    second_order_trajectory(
        dn.dim(),
        move |t, x, v| {
            Ok(-(dn.gamma.eval(t, x)?.contract2(v, v))
                - dn.c.eval(t, x)?
                - (dn.a.eval(t, x)? + dn.b.eval(t, x)?) * v)
        },
        t0,
        x0,
        v0,
        t1,
        cfg,
    )
}

/// Geodesic of the product-metric connection on ℝ × M. State component 0 is
/// the time coordinate γ⁰; the curve parameter runs from t0 to s1 with
/// γ⁰(t0) = t0 and γ̇⁰(t0) = `v0_time`, so section-form data stays at
/// γ⁰(s) = s exactly when the spatial velocity is isotropic for ġ.
pub fn geodesic_suspension(
    m: &MetricField,
    t0: f64,
    x0: &DVector<f64>,
    v0_time: f64,
    v0: &DVector<f64>,
    s1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    let n = m.dim();
    for got in [x0.len(), v0.len()] {
        if got != n {
            return Err(GeomError::DimensionMismatch { expected: n, got });
        }
    }
    let gamma = ChristoffelEval::levi_civita(m);
    let m = m.clone();
    let mut x0_full = DVector::zeros(n + 1);
    x0_full[0] = t0;
    x0_full.rows_mut(1, n).copy_from(x0);
    let mut v0_full = DVector::zeros(n + 1);
    v0_full[0] = v0_time;
    v0_full.rows_mut(1, n).copy_from(v0);
    second_order_trajectory(
        n + 1,
        move |_, q, qdot| {
            // metric arguments come from the γ⁰ coordinate, not the parameter
            let (tau, x) = (q[0], &q[1..]);
            let v = DVector::from_column_slice(&qdot.as_slice()[1..]);
            let tau_dot = qdot[0];
            let mut acc = DVector::zeros(n + 1);
            acc[0] = 0.5 * m.dg_dt_inner(tau, x, &v, &v)?;
            let spatial =
                -(gamma.eval(tau, x)?.contract2(&v, &v)) - m.musical_endomorphism(tau, x)? * &v * tau_dot;
            acc.rows_mut(1, n).copy_from(&spatial);
            Ok(acc)
        },
        t0,
        &x0_full,
        &v0_full,
        s1,
        cfg,
    )
}

/// Geodesic of the metric with a conservative force −G⁻¹·∇V added
/// (Lagrangian convention L = T − V: the force pulls toward minima of V).
pub fn forced_geodesic(
    m: &MetricField,
    v_pot: &ScalarField,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    forced_geodesic_signed(m, v_pot, t0, x0, v0, t1, cfg, -1.0)
}

/// Same as [`forced_geodesic`] with an explicit force sign: `sign = -1.0`
/// gives ẍ = … − G⁻¹∇V, `sign = +1.0` the opposite convention. Exposed so
/// that both readings can be compared against an energy oracle.
#[allow(clippy::too_many_arguments)]
pub fn forced_geodesic_signed(
    m: &MetricField,
    v_pot: &ScalarField,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t1: f64,
    cfg: &IntegratorConfig,
    sign: f64,
) -> GeoResult<Trajectory> {
    let gamma = ChristoffelEval::levi_civita(m);
    let m = m.clone();
    let v_pot = v_pot.clone();
    second_order_trajectory(
        m.dim(),
        move |t, x, v| {
            let grad = v_pot.grad_x(t, x)?;
            Ok(-(gamma.eval(t, x)?.contract2(v, v)) - m.musical_endomorphism(t, x)? * v
                + sign * (m.cholesky(t, x)?.solve(&grad)))
        },
        t0,
        x0,
        v0,
        t1,
        cfg,
    )
}

/// Parallel transport of `w0` along `base`:
/// ẇᵏ = −Γᵏ_ij γ̇ⁱ wʲ − Cᵏ − Aᵏᵢ γ̇ⁱ − Bᵏᵢ wⁱ.
/// Returns the transported vector sampled along the base interval
/// (x-slot = w, v-slot = ẇ).
pub fn parallel_transport(
    dn: &DotNabla,
    base: &Trajectory,
    w0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> GeoResult<Trajectory> {
    let n = dn.dim();
    for got in [base.dim(), w0.len()] {
        if got != n {
            return Err(GeomError::DimensionMismatch { expected: n, got });
        }
    }
    let s = integrate(
        |t, w| {
            let x = base.position(t)?;
            let gdot = base.velocity(t)?;
            let wv = DVector::from_column_slice(w);
            let out = -(dn.gamma.eval(t, x.as_slice())?.contract2(&gdot, &wv))
                - dn.c.eval(t, x.as_slice())?
                - dn.a.eval(t, x.as_slice())? * gdot
                - dn.b.eval(t, x.as_slice())? * wv;
            Ok(out.data.into())
        },
        base.t_start(),
        w0.as_slice(),
        base.t_end(),
        cfg,
    )?;
    Trajectory::from_first_order(n, s)
}

/// Energy, length and Euler–Lagrange diagnostics of a path.
#[derive(Clone, Debug)]
pub struct FunctionalReport {
    /// ∫ ½ g_t(γ', γ') dt
    pub energy: f64,
    /// ∫ sqrt(g_t(γ', γ')) dt
    pub length: f64,
    /// Kinetic energy T(t) at the trajectory samples.
    pub kinetic_series: Vec<(f64, f64)>,
    /// max over samples of ‖∇_t γ' + G⁻¹·Ġ·γ'‖_g, with the acceleration
    /// estimated independently from the stored velocities. Samples where the
    /// metric is not invertible are skipped.
    pub el_residual_max: f64,
}

fn kinetic(m: &MetricField, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> GeoResult<f64> {
    Ok(0.5 * m.inner(t, x.as_slice(), v, v)?)
}

/// Energy and length by per-segment adaptive Simpson quadrature over the
/// Hermite interpolant, plus kinetic series and EL residual diagnostics.
pub fn functionals(m: &MetricField, base: &Trajectory) -> GeoResult<FunctionalReport> {
    if m.dim() != base.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: m.dim(),
            got: base.dim(),
        });
    }
    let kinetic_series: Vec<(f64, f64)> = base
        .samples()
        .iter()
        .map(|s| Ok((s.t, kinetic(m, s.t, &s.x, &s.v)?)))
        .collect::<GeoResult<_>>()?;

    if base.len() < 2 {
        return Ok(FunctionalReport {
            energy: 0.0,
            length: 0.0,
            kinetic_series,
            el_residual_max: 0.0,
        });
    }

    let total = (base.t_end() - base.t_start()).abs();
    let mut energy = 0.0;
    let mut length = 0.0;
    for w in base.samples().windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        let tol = QUADRATURE_TOL * ((b - a).abs() / total).max(1e-3);
        let mut t_of = |t: f64| -> GeoResult<f64> {
            kinetic(m, t, &base.position(t)?, &base.velocity(t)?)
        };
        energy += adaptive_simpson(&mut t_of, a, b, tol)?;
        let mut speed = |t: f64| -> GeoResult<f64> {
            Ok((2.0 * kinetic(m, t, &base.position(t)?, &base.velocity(t)?)?)
                .max(0.0)
                .sqrt())
        };
        length += adaptive_simpson(&mut speed, a, b, tol)?;
    }

    let gamma = ChristoffelEval::levi_civita(m);
    let mut el_residual_max = 0.0_f64;
    for (i, s) in base.samples().iter().enumerate() {
        let mus = match m.musical_endomorphism(s.t, s.x.as_slice()) {
            Ok(mu) => mu,
            Err(GeomError::NotPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        };
        let acc = base.accel_estimate(i);
        let nabla_t = acc + gamma.eval(s.t, s.x.as_slice())?.contract2(&s.v, &s.v);
        let r = nabla_t + mus * &s.v;
        el_residual_max = el_residual_max.max(m.norm(s.t, s.x.as_slice(), &r)?);
    }

    Ok(FunctionalReport {
        energy,
        length,
        kinetic_series,
        el_residual_max,
    })
}

/// Length of the ambient curve t ↦ j_t(γ(t)):
/// quadrature of ‖∂j/∂t + (∂j/∂p)·γ'‖.
pub fn embedded_length(fam: &EmbeddingFamily, base: &Trajectory) -> GeoResult<f64> {
    if fam.dim() != base.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: fam.dim(),
            got: base.dim(),
        });
    }
    if base.len() < 2 {
        return Ok(0.0);
    }
    let total = (base.t_end() - base.t_start()).abs();
    let mut out = 0.0;
    for w in base.samples().windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        let tol = QUADRATURE_TOL * ((b - a).abs() / total).max(1e-3);
        let mut speed = |t: f64| -> GeoResult<f64> {
            let x = base.position(t)?;
            let v = base.velocity(t)?;
            let dt = fam.dj_dt(t, x.as_slice())?;
            let dp = fam.dj_dp(t, x.as_slice())?;
            Ok((dt + dp * v).norm())
        };
        out += adaptive_simpson(&mut speed, a, b, tol)?;
    }
    Ok(out)
}

/// Max metric norm along the path of the length-critical equation residual
/// ∇_t γ' + G⁻¹·Ġ·γ' − (1/2T)(dT/dt)·γ', with dT/dt from the identity
/// dT/dt = ½ ġ(γ', γ') + g(∇_t γ', γ').
pub fn length_critical_residual(m: &MetricField, base: &Trajectory) -> GeoResult<f64> {
    if m.dim() != base.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: m.dim(),
            got: base.dim(),
        });
    }
    let gamma = ChristoffelEval::levi_civita(m);
    let mut worst = 0.0_f64;
    for (i, s) in base.samples().iter().enumerate() {
        let x = s.x.as_slice();
        let t2 = 2.0 * kinetic(m, s.t, &s.x, &s.v)?;
        if t2 <= 2.0 * STATIONARY_TOL {
            return Err(GeomError::StationaryPath { t: s.t });
        }
        let acc = base.accel_estimate(i);
        let nabla_t = acc + gamma.eval(s.t, x)?.contract2(&s.v, &s.v);
        let dt_dt = 0.5 * m.dg_dt_inner(s.t, x, &s.v, &s.v)? + m.inner(s.t, x, &nabla_t, &s.v)?;
        let r = &nabla_t + m.musical_endomorphism(s.t, x)? * &s.v - (dt_dt / t2) * &s.v;
        worst = worst.max(m.norm(s.t, x, &r)?);
    }
    Ok(worst)
}

/// Pointwise defect of the kinetic-energy evolution identity
/// dT/dt = ½ ġ(γ', γ') + g(∇_t γ', γ') along an analytic curve.
/// The left side is an independent central finite difference of
/// t ↦ ½ g_t(γ'(t), γ'(t)); the right side uses exact curve derivatives.
pub fn kinetic_energy_defect(m: &MetricField, path: &CurvePath, t: f64) -> GeoResult<f64> {
    let h = 1e-5 * t.abs().max(1.0);
    let t_at = |tt: f64| -> GeoResult<f64> {
        let x = path.position(tt);
        let v = path.velocity(tt);
        kinetic(m, tt, &x, &v)
    };
    let lhs = (t_at(t + h)? - t_at(t - h)?) / (2.0 * h);
    let x = path.position(t);
    let v = path.velocity(t);
    let gamma = ChristoffelEval::levi_civita(m);
    let nabla_t = path.accel(t) + gamma.eval(t, x.as_slice())?.contract2(&v, &v);
    let rhs = 0.5 * m.dg_dt_inner(t, x.as_slice(), &v, &v)?
        + m.inner(t, x.as_slice(), &nabla_t, &v)?;
    Ok((lhs - rhs).abs())
}

/// Total mechanical energy T + V at a trajectory sample.
pub fn mechanical_energy(
    m: &MetricField,
    v_pot: &ScalarField,
    s: &TrajSample,
) -> GeoResult<f64> {
    Ok(kinetic(m, s.t, &s.x, &s.v)? + v_pot.eval(s.t, s.x.as_slice())?)
}

//! Fixed-step RK4 and adaptive Dormand–Prince 4(5) integrators.
//!
//! RK4 is used where a deterministic step structure matters (limit probes
//! whose extrapolation needs a smooth error model in ε); Dormand–Prince is
//! the production integrator for trajectories.

use crate::error::{GeoResult, GeomError};

/// Stepping scheme selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4Fixed { step: f64 },
    Dopri45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
}

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed { step },
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::Dopri45 { abs_tol, rel_tol },
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> GeoResult<()> {
        if self.max_steps < 1 {
            return Err(GeomError::InvalidConfig("max_steps must be >= 1".into()));
        }
        match self.method {
            Method::Rk4Fixed { step } => {
                if !(step > 0.0) || !step.is_finite() {
                    return Err(GeomError::InvalidConfig("step must be > 0".into()));
                }
            }
            Method::Dopri45 { abs_tol, rel_tol } => {
                if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
                    return Err(GeomError::InvalidConfig("tolerances must be > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Raw integrator output: states and right-hand sides at accepted steps.
pub(crate) struct OdeSamples {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
}

pub(crate) fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    cfg: &IntegratorConfig,
) -> GeoResult<OdeSamples>
where
    F: FnMut(f64, &[f64]) -> GeoResult<Vec<f64>>,
{
    cfg.validate()?;
    if !t0.is_finite() || !t1.is_finite() || y0.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::NonFinite {
            t: t0,
            x: y0.to_vec(),
        });
    }
    if t0 == t1 {
        let dy = rhs(t0, y0)?;
        return Ok(OdeSamples {
            ts: vec![t0],
            ys: vec![y0.to_vec()],
            dys: vec![dy],
        });
    }
    match cfg.method {
        Method::Rk4Fixed { step } => rk4(&mut rhs, t0, y0, t1, step, cfg.max_steps),
        Method::Dopri45 { abs_tol, rel_tol } => {
            dopri45(&mut rhs, t0, y0, t1, abs_tol, rel_tol, cfg.max_steps)
        }
    }
}

fn check_state(t: f64, y: &[f64]) -> GeoResult<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::BlowUp { t })
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    step: f64,
    max_steps: usize,
) -> GeoResult<OdeSamples>
where
    F: FnMut(f64, &[f64]) -> GeoResult<Vec<f64>>,
{
    let span = t1 - t0;
    let n_steps = (span.abs() / step).ceil().max(1.0) as usize;
    if n_steps > max_steps {
        return Err(GeomError::IntegrationBudgetExhausted { t: t0 });
    }
    let h = span / n_steps as f64;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = OdeSamples {
        ts: Vec::with_capacity(n_steps + 1),
        ys: Vec::with_capacity(n_steps + 1),
        dys: Vec::with_capacity(n_steps + 1),
    };
    let mut k1 = rhs(t, &y)?;
    out.ts.push(t);
    out.ys.push(y.clone());
    out.dys.push(k1.clone());
    for i in 0..n_steps {
        let k2 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k1))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k2))?;
        let k4 = rhs(t + h, &axpy(&y, h, &k3))?;
        for (j, yj) in y.iter_mut().enumerate() {
            *yj += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        // land exactly on the endpoint despite rounding
        t = if i + 1 == n_steps {
            t1
        } else {
            t0 + (i + 1) as f64 * h
        };
        check_state(t, &y)?;
        k1 = rhs(t, &y)?;
        out.ts.push(t);
        out.ys.push(y.clone());
        out.dys.push(k1.clone());
    }
    Ok(out)
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri45<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_steps: usize,
) -> GeoResult<OdeSamples>
where
    F: FnMut(f64, &[f64]) -> GeoResult<Vec<f64>>,
{
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y)?;
    let mut out = OdeSamples {
        ts: vec![t],
        ys: vec![y.clone()],
        dys: vec![k1.clone()],
    };
    let mut h = (span / 100.0).min(span).max(1e-10);
    let mut attempts = 0usize;
    while (t1 - t) * dir > 0.0 {
        if attempts >= max_steps {
            return Err(GeomError::IntegrationBudgetExhausted { t });
        }
        attempts += 1;
        h = h.min((t1 - t).abs());
        let hd = h * dir;
        let mut k = vec![k1.clone()];
        for s in 0..6 {
            let mut ya = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    for (yc, kc) in ya.iter_mut().zip(kj) {
                        *yc += hd * a * kc;
                    }
                }
            }
            k.push(rhs(t + C[s] * hd, &ya)?);
        }
        let mut y5 = y.clone();
        let mut err = vec![0.0; dim];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..dim {
                y5[i] += hd * B5[j] * kj[i];
                err[i] += hd * (B5[j] - B4[j]) * kj[i];
            }
        }
        let mut norm = 0.0;
        for i in 0..dim {
            let sc = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            norm += (err[i] / sc).powi(2);
        }
        let norm = (norm / dim as f64).sqrt();
        if !norm.is_finite() {
            return Err(GeomError::BlowUp { t });
        }
        if norm <= 1.0 {
            t += hd;
            y = y5;
            check_state(t, &y)?;
            k1 = k.pop().unwrap(); // FSAL: stage 7 is the RHS at (t, y)
            out.ts.push(t);
            out.ys.push(y.clone());
            out.dys.push(k1.clone());
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(out)
}

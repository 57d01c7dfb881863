//! Connection data derived from time-dependent metrics: Christoffel symbols,
//! their time-derivative tensor, time-dependent covariant derivation
//! operators (Γ, C, A, B) and full connections on the product ℝ × M.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dual::Dual2;
use crate::error::{GeoResult, GeomError};
use crate::fields::{
    check_finite, CovectorField, EndomorphismField, Event, MetricField, Rank3, ScalarField,
    TimeDepVectorField,
};
use crate::sample::SampleDomain;

type PlainRank3Closure = dyn Fn(f64, &[f64]) -> GeoResult<Rank3> + Send + Sync;

#[derive(Clone)]
enum GammaBackend {
    /// Levi-Civita symbols of a metric; time derivative is exact.
    LeviCivita(MetricField),
    /// Black-box symbols; time derivative falls back to central differences.
    Custom {
        f: Arc<PlainRank3Closure>,
        symmetric: bool,
    },
}

/// Evaluator of time-dependent Christoffel symbols Γᵏ_ij(t, x).
#[derive(Clone)]
pub struct ChristoffelEval {
    n: usize,
    backend: GammaBackend,
}

impl ChristoffelEval {
    /// Levi-Civita symbols Γᵏ_ij = ½ gᵏˡ(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    /// of the metric at frozen t.
    pub fn levi_civita(m: &MetricField) -> Self {
        ChristoffelEval {
            n: m.dim(),
            backend: GammaBackend::LeviCivita(m.clone()),
        }
    }

    /// Wrap user-supplied symbols. `symmetric` declares Γᵏ_ij = Γᵏ_ji.
    pub fn custom(
        n: usize,
        symmetric: bool,
        f: impl Fn(f64, &[f64]) -> GeoResult<Rank3> + Send + Sync + 'static,
    ) -> Self {
        ChristoffelEval {
            n,
            backend: GammaBackend::Custom {
                f: Arc::new(f),
                symmetric,
            },
        }
    }

    pub fn zero(n: usize) -> Self {
        ChristoffelEval::custom(n, true, move |_, _| Ok(Rank3::zeros(n)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.backend {
            GammaBackend::LeviCivita(_) => true,
            GammaBackend::Custom { symmetric, .. } => *symmetric,
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> GeoResult<Rank3> {
        match &self.backend {
            GammaBackend::LeviCivita(m) => {
                let n = self.n;
                let inv = m.inverse(t, x)?;
                let dg: Vec<DMatrix<f64>> =
                    (0..n).map(|k| m.dg_dx(t, x, k)).collect::<GeoResult<_>>()?;
                let mut gamma = Rank3::zeros(n);
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut s = 0.0;
                            for l in 0..n {
                                let slij = dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)];
                                s += inv[(k, l)] * slij;
                            }
                            gamma.set(k, i, j, 0.5 * s);
                        }
                    }
                }
                Ok(gamma)
            }
            GammaBackend::Custom { f, .. } => {
                let g = f(t, x)?;
                if g.dim() != self.n {
                    return Err(GeomError::DimensionMismatch {
                        expected: self.n,
                        got: g.dim(),
                    });
                }
                if !g.is_finite() {
                    return Err(GeomError::NonFinite { t, x: x.to_vec() });
                }
                Ok(g)
            }
        }
    }

    /// The (2,1)-tensor Γ̇ᵏ_ij = ∂Γᵏ_ij/∂t.
    ///
    /// Exact differentiation through the metric for Levi-Civita symbols
    /// (dual numbers, using ∂ₜG⁻¹ = −G⁻¹ Ġ G⁻¹); central differences with
    /// step 1e-5·max(1, |t|) for black-box symbols or metrics without an
    /// exact mixed derivative.
    pub fn time_derivative(&self, t: f64, x: &[f64]) -> GeoResult<Rank3> {
        match &self.backend {
            GammaBackend::LeviCivita(m) => {
                let n = self.n;
                let inv = m.inverse(t, x)?;
                let gdot = m.dg_dt(t, x)?;
                let inv_dot = -(&inv * &gdot * &inv);
                let dg: Vec<DMatrix<f64>> =
                    (0..n).map(|k| m.dg_dx(t, x, k)).collect::<GeoResult<_>>()?;
                let d2: Vec<DMatrix<f64>> = (0..n)
                    .map(|k| m.d2g_dtdx(t, x, k))
                    .collect::<GeoResult<_>>()?;
                let mut out = Rank3::zeros(n);
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut s = 0.0;
                            for l in 0..n {
                                let slij = dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)];
                                let sdot = d2[i][(j, l)] + d2[j][(i, l)] - d2[l][(i, j)];
                                s += inv_dot[(k, l)] * slij + inv[(k, l)] * sdot;
                            }
                            out.set(k, i, j, 0.5 * s);
                        }
                    }
                }
                Ok(out)
            }
            GammaBackend::Custom { .. } => {
                let h = 1e-5 * t.abs().max(1.0);
                let plus = self.eval(t + h, x)?;
                let minus = self.eval(t - h, x)?;
                let mut out = Rank3::zeros(self.n);
                for k in 0..self.n {
                    for i in 0..self.n {
                        for j in 0..self.n {
                            out.set(
                                k,
                                i,
                                j,
                                (plus.get(k, i, j) - minus.get(k, i, j)) / (2.0 * h),
                            );
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A time-dependent covariant derivation operator, the quadruple
/// (Γ, C, A, B) acting as ∇̇_X Y = Ẏ + ∇_X Y + C + A(X) + B(Y).
#[derive(Clone)]
pub struct DotNabla {
    pub gamma: ChristoffelEval,
    pub c: TimeDepVectorField,
    pub a: EndomorphismField,
    pub b: EndomorphismField,
}

impl DotNabla {
    pub fn new(
        gamma: ChristoffelEval,
        c: TimeDepVectorField,
        a: EndomorphismField,
        b: EndomorphismField,
    ) -> GeoResult<Self> {
        let n = gamma.dim();
        for got in [c.dim(), a.dim(), b.dim()] {
            if got != n {
                return Err(GeomError::DimensionMismatch { expected: n, got });
            }
        }
        Ok(DotNabla { gamma, c, a, b })
    }

    /// Operator of a time-dependent metric: Levi-Civita Γ, C = 0 and
    /// A = B = ½ G⁻¹·Ġ.
    pub fn from_metric(m: &MetricField) -> Self {
        let n = m.dim();
        let (ma, mb) = (m.clone(), m.clone());
        DotNabla {
            gamma: ChristoffelEval::levi_civita(m),
            c: TimeDepVectorField::zero(n),
            a: EndomorphismField::new(n, move |t, x| {
                Ok(0.5 * ma.musical_endomorphism(t, x)?)
            }),
            b: EndomorphismField::new(n, move |t, x| {
                Ok(0.5 * mb.musical_endomorphism(t, x)?)
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// ∇̇_X Y at an event: Ẏ + (JacY·X + Γ(X, Y)) + C + A(X) + B(Y).
    pub fn apply(
        &self,
        x_field: &TimeDepVectorField,
        y_field: &TimeDepVectorField,
        e: &Event,
    ) -> GeoResult<DVector<f64>> {
        let n = self.dim();
        for got in [x_field.dim(), y_field.dim(), e.dim()] {
            if got != n {
                return Err(GeomError::DimensionMismatch { expected: n, got });
            }
        }
        let (t, x) = e.coords();
        let xv = x_field.eval(t, x)?;
        let yv = y_field.eval(t, x)?;
        let ydot = y_field.dt(t, x)?;
        let yjac = y_field.jac_x(t, x)?;
        let gamma = self.gamma.eval(t, x)?;
        let mut out = ydot + yjac * &xv + gamma.contract2(&xv, &yv);
        out += self.c.eval(t, x)?;
        out += self.a.apply(t, x, &xv)?;
        out += self.b.apply(t, x, &yv)?;
        check_finite(t, x, out.as_slice())?;
        Ok(out)
    }
}

/// Full connection data on ℝ × M: the decomposition
/// (λ, α, β, ε, C, A, B, ∇) of a covariant derivative on the product.
///
/// `eps` holds the 2-covariant component ε_ij; it reuses the matrix-valued
/// field storage (no index semantics are enforced by the type).
#[derive(Clone)]
pub struct ExtendedConnection {
    pub lambda: ScalarField,
    pub alpha: CovectorField,
    pub beta: CovectorField,
    pub eps: EndomorphismField,
    pub core: DotNabla,
}

impl ExtendedConnection {
    pub fn new(
        lambda: ScalarField,
        alpha: CovectorField,
        beta: CovectorField,
        eps: EndomorphismField,
        core: DotNabla,
    ) -> GeoResult<Self> {
        let n = core.dim();
        for got in [lambda.dim(), alpha.dim(), beta.dim(), eps.dim()] {
            if got != n {
                return Err(GeomError::DimensionMismatch { expected: n, got });
            }
        }
        Ok(ExtendedConnection {
            lambda,
            alpha,
            beta,
            eps,
            core,
        })
    }

    /// Levi-Civita connection of the product metric dt⊗dt + g_t:
    /// λ = 0, α = β = 0, ε = −½ ġ, C = 0, A = B = ½ G⁻¹·Ġ.
    pub fn suspension(m: &MetricField) -> Self {
        let n = m.dim();
        let me = m.clone();
        ExtendedConnection {
            lambda: ScalarField::constant(n, 0.0),
            alpha: CovectorField::zero(n),
            beta: CovectorField::zero(n),
            eps: EndomorphismField::new(n, move |t, x| Ok(-0.5 * me.dg_dt(t, x)?)),
            core: DotNabla::from_metric(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    /// The full symbol array Γ̂ᵘ_νρ on ℝ × M, index 0 being the time
    /// coordinate: Γ̂⁰₀₀ = λ, Γ̂⁰_i0 = α_i, Γ̂⁰₀ⱼ = β_j, Γ̂⁰_ij = ε_ij,
    /// Γ̂ᵏ₀₀ = Cᵏ, Γ̂ᵏ_i0 = Aᵏᵢ, Γ̂ᵏ₀ⱼ = Bᵏⱼ, Γ̂ᵏ_ij = Γᵏ_ij.
    pub fn hat_christoffel(&self, t: f64, x: &[f64]) -> GeoResult<Rank3> {
        let n = self.dim();
        let mut hat = Rank3::zeros(n + 1);
        hat.set(0, 0, 0, self.lambda.eval(t, x)?);
        let alpha = self.alpha.eval(t, x)?;
        let beta = self.beta.eval(t, x)?;
        let eps = self.eps.eval(t, x)?;
        let c = self.core.c.eval(t, x)?;
        let a = self.core.a.eval(t, x)?;
        let b = self.core.b.eval(t, x)?;
        let gamma = self.core.gamma.eval(t, x)?;
        for i in 0..n {
            hat.set(0, i + 1, 0, alpha[i]);
            hat.set(0, 0, i + 1, beta[i]);
            hat.set(i + 1, 0, 0, c[i]);
            for j in 0..n {
                hat.set(0, i + 1, j + 1, eps[(i, j)]);
                hat.set(j + 1, i + 1, 0, a[(j, i)]);
                hat.set(j + 1, 0, i + 1, b[(j, i)]);
                for k in 0..n {
                    hat.set(k + 1, i + 1, j + 1, gamma.get(k, i, j));
                }
            }
        }
        Ok(hat)
    }

    /// Covariant derivative ∇̂_X̂ Ŷ of X̂ = f⁰∂t + X, Ŷ = g⁰∂t + Y, split
    /// into its dt component and its tangent-to-M component:
    ///
    /// horizontal = f⁰ġ⁰ + X(g⁰) + λf⁰g⁰ + α(X)g⁰ + β(Y)f⁰ + ε(X, Y),
    /// vertical   = f⁰Ẏ + ∇_X Y + Cf⁰g⁰ + A(X)g⁰ + B(Y)f⁰.
    pub fn covariant_deriv(
        &self,
        xhat: (&ScalarField, &TimeDepVectorField),
        yhat: (&ScalarField, &TimeDepVectorField),
        e: &Event,
    ) -> GeoResult<(f64, DVector<f64>)> {
        let n = self.dim();
        let (f0, xf) = xhat;
        let (g0, yf) = yhat;
        for got in [f0.dim(), xf.dim(), g0.dim(), yf.dim(), e.dim()] {
            if got != n {
                return Err(GeomError::DimensionMismatch { expected: n, got });
            }
        }
        let (t, x) = e.coords();
        let f0v = f0.eval(t, x)?;
        let g0v = g0.eval(t, x)?;
        let g0dot = g0.dt(t, x)?;
        let g0grad = g0.grad_x(t, x)?;
        let xv = xf.eval(t, x)?;
        let yv = yf.eval(t, x)?;
        let eps = self.eps.eval(t, x)?;

        let horizontal = f0v * g0dot
            + g0grad.dot(&xv)
            + self.lambda.eval(t, x)? * f0v * g0v
            + self.alpha.apply(t, x, &xv)? * g0v
            + self.beta.apply(t, x, &yv)? * f0v
            + (&eps * &yv).dot(&xv);

        let ydot = yf.dt(t, x)?;
        let yjac = yf.jac_x(t, x)?;
        let gamma = self.core.gamma.eval(t, x)?;
        let nabla_xy = yjac * &xv + gamma.contract2(&xv, &yv);
        let vertical = ydot * f0v
            + nabla_xy
            + self.core.c.eval(t, x)? * (f0v * g0v)
            + self.core.a.apply(t, x, &xv)? * g0v
            + self.core.b.apply(t, x, &yv)? * f0v;

        check_finite(t, x, &[horizontal])?;
        check_finite(t, x, vertical.as_slice())?;
        Ok((horizontal, vertical))
    }
}

type ChartClosure = dyn Fn(&[Dual2]) -> Vec<Dual2> + Send + Sync;

/// A fixed (time-independent) chart diffeomorphism x = ψ(y), with exact
/// Jacobian and Hessian from dual-number passes.
#[derive(Clone)]
pub struct ChartMap {
    n: usize,
    map: Arc<ChartClosure>,
}

impl ChartMap {
    pub fn new(
        n: usize,
        map: impl Fn(&[Dual2]) -> Vec<Dual2> + Send + Sync + 'static,
    ) -> Self {
        ChartMap { n, map: Arc::new(map) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let args: Vec<Dual2> = y.iter().map(|&v| Dual2::c(v)).collect();
        (self.map)(&args).iter().map(|d| d.val()).collect()
    }

    /// J[(a, j)] = ∂xᵃ/∂yʲ.
    pub fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut j = DMatrix::zeros(n, n);
        for col in 0..n {
            let mut args: Vec<Dual2> = y.iter().map(|&v| Dual2::c(v)).collect();
            args[col] = Dual2::var_outer(y[col]);
            let out = (self.map)(&args);
            for row in 0..n {
                j[(row, col)] = out[row].d_outer();
            }
        }
        j
    }

    /// Hᵃ_ij = ∂²xᵃ/∂yⁱ∂yʲ.
    pub fn hessian(&self, y: &[f64]) -> Rank3 {
        let n = self.n;
        let mut h = Rank3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut args: Vec<Dual2> = y.iter().map(|&v| Dual2::c(v)).collect();
                if i == j {
                    args[i] = Dual2::var_both(y[i]);
                } else {
                    args[i] = Dual2::var_outer(y[i]);
                    args[j] = Dual2::var_inner(y[j]);
                }
                let out = (self.map)(&args);
                for (a, v) in out.iter().enumerate() {
                    h.set(a, i, j, v.d_cross());
                }
            }
        }
        h
    }
}

/// Pull a metric back along a chart map: g'(t, y) = Jᵀ g(t, ψ(y)) J.
/// Derivatives are assembled by the chain rule, so the result is exact
/// wherever the base metric's derivatives are.
pub fn pullback_metric(
    m: &MetricField,
    chart: &ChartMap,
    domain: &SampleDomain,
) -> GeoResult<MetricField> {
    let n = m.dim();
    if chart.dim() != n {
        return Err(GeomError::DimensionMismatch {
            expected: n,
            got: chart.dim(),
        });
    }

    // ∂g'/∂yᵏ and ∂²g'/∂t∂yᵏ share the same chain-rule shape; `time_diff`
    // selects g vs ġ inputs.
    fn spatial_derivative(
        m: &MetricField,
        chart: &ChartMap,
        t: f64,
        y: &[f64],
        k: usize,
        time_diff: bool,
    ) -> GeoResult<DMatrix<f64>> {
        let n = m.dim();
        let x = chart.apply(y);
        let j = chart.jacobian(y);
        let hess = chart.hessian(y);
        // H(k)[(a, i)] = ∂²xᵃ/∂yⁱ∂yᵏ
        let hk = DMatrix::from_fn(n, n, |a, i| hess.get(a, i, k));
        let g = if time_diff {
            m.dg_dt(t, &x)?
        } else {
            m.g(t, &x)?
        };
        let mut dg_chain = DMatrix::zeros(n, n);
        for a in 0..n {
            let da = if time_diff {
                m.d2g_dtdx(t, &x, a)?
            } else {
                m.dg_dx(t, &x, a)?
            };
            dg_chain += da * j[(a, k)];
        }
        Ok(hk.transpose() * &g * &j + j.transpose() * dg_chain * &j + j.transpose() * g * hk)
    }

    let (m_g, m_dt, m_dx, m_d2) = (m.clone(), m.clone(), m.clone(), m.clone());
    let (c_g, c_dt, c_dx, c_d2) = (chart.clone(), chart.clone(), chart.clone(), chart.clone());

    MetricField::from_closed_form(
        n,
        move |t, y| {
            let x = c_g.apply(y);
            let j = c_g.jacobian(y);
            Ok(j.transpose() * m_g.g(t, &x)? * j)
        },
        move |t, y, k| spatial_derivative(&m_dx, &c_dx, t, y, k, false),
        move |t, y| {
            let x = c_dt.apply(y);
            let j = c_dt.jacobian(y);
            Ok(j.transpose() * m_dt.dg_dt(t, &x)? * j)
        },
        Some(Arc::new(move |t, y, k| {
            spatial_derivative(&m_d2, &c_d2, t, y, k, true)
        })),
        domain,
    )
}

/// Transform a (2,1)-tensor with x-chart components `t_x` (evaluated at
/// x = ψ(y)) into the y-chart: T'ᵏ_ij = (J⁻¹)ᵏˡ Tˡ_ab Jᵃᵢ Jᵇⱼ.
pub fn pull_tensor21(t_x: &Rank3, jac: &DMatrix<f64>) -> GeoResult<Rank3> {
    let n = t_x.dim();
    let jinv = jac
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::InvalidConfig("chart Jacobian is singular".into()))?;
    let mut out = Rank3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            s += jinv[(k, l)] * t_x.get(l, a, b) * jac[(a, i)] * jac[(b, j)];
                        }
                    }
                }
                out.set(k, i, j, s);
            }
        }
    }
    Ok(out)
}

/// The inhomogeneous part of the Christoffel transformation law,
/// (J⁻¹)ᵏₐ Hᵃ_ij — the amount by which Γ fails to be a tensor under ψ.
pub fn christoffel_inhomogeneous_term(chart: &ChartMap, y: &[f64]) -> GeoResult<Rank3> {
    let n = chart.dim();
    let j = chart.jacobian(y);
    let jinv = j
        .try_inverse()
        .ok_or_else(|| GeomError::InvalidConfig("chart Jacobian is singular".into()))?;
    let h = chart.hessian(y);
    let mut out = Rank3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for jj in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += jinv[(k, a)] * h.get(a, i, jj);
                }
                out.set(k, i, jj, s);
            }
        }
    }
    Ok(out)
}

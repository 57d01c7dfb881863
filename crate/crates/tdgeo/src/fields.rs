//! Differentiable field abstractions over (t, x): scalar fields, metric
//! fields, time-dependent vector fields and endomorphism fields, with exact
//! first derivatives from dual-number passes.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dual::Dual2;
use crate::error::{GeoResult, GeomError};
use crate::sample::SampleDomain;

/// Number of Halton points used by construction-time sanity sampling.
pub(crate) const CONSTRUCTION_SAMPLES: usize = 32;
/// Construction-time asymmetry rejection threshold for metrics.
pub const METRIC_ASYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn check_finite(t: f64, x: &[f64], vals: &[f64]) -> GeoResult<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::NonFinite { t, x: x.to_vec() })
    }
}

fn dual_args(x: &[f64]) -> Vec<Dual2> {
    x.iter().map(|&v| Dual2::c(v)).collect()
}

/// A point (t, x) of the extended space ℝ × M in a fixed chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: DVector<f64>,
}

impl Event {
    pub fn new(t: f64, x: impl Into<DVector<f64>>) -> GeoResult<Self> {
        let x = x.into();
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite {
                t,
                x: x.iter().copied().collect(),
            });
        }
        Ok(Event { t, x })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn coords(&self) -> (f64, &[f64]) {
        (self.t, self.x.as_slice())
    }
}

/// A tangent vector attached to an event.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Event,
    pub v: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: Event, v: impl Into<DVector<f64>>) -> GeoResult<Self> {
        let v = v.into();
        if v.len() != base.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: base.dim(),
                got: v.len(),
            });
        }
        Ok(TangentVector { base, v })
    }
}

type ScalarClosure = dyn Fn(Dual2, &[Dual2]) -> Dual2 + Send + Sync;
type VectorClosure = dyn Fn(Dual2, &[Dual2]) -> Vec<Dual2> + Send + Sync;
type MatrixClosure = dyn Fn(Dual2, &[Dual2]) -> DMatrix<Dual2> + Send + Sync;
type PlainMatrixClosure = dyn Fn(f64, &[f64]) -> GeoResult<DMatrix<f64>> + Send + Sync;
type PlainMatrixDirClosure = dyn Fn(f64, &[f64], usize) -> GeoResult<DMatrix<f64>> + Send + Sync;
type PlainVectorClosure = dyn Fn(f64, &[f64]) -> GeoResult<DVector<f64>> + Send + Sync;

/// Directional metric derivative closure (t, x, k) ↦ ∂g/∂xᵏ, shared by the
/// closed-form constructors.
pub type MatrixDirClosure = Arc<dyn Fn(f64, &[f64], usize) -> GeoResult<DMatrix<f64>> + Send + Sync>;

/// Time-dependent scalar field f(t, x) with exact gradient and time
/// derivative obtained by dual-number propagation (not finite differences).
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    f: Arc<ScalarClosure>,
}

impl ScalarField {
    pub fn new(
        n: usize,
        f: impl Fn(Dual2, &[Dual2]) -> Dual2 + Send + Sync + 'static,
    ) -> Self {
        ScalarField { n, f: Arc::new(f) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField::new(n, move |_, _| Dual2::c(c))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> GeoResult<f64> {
        let v = (self.f)(Dual2::c(t), &dual_args(x)).val();
        check_finite(t, x, &[v])?;
        Ok(v)
    }

    /// ∂f/∂xᵏ for all k.
    pub fn grad_x(&self, t: f64, x: &[f64]) -> GeoResult<DVector<f64>> {
        let mut g = DVector::zeros(self.n);
        for k in 0..self.n {
            let mut args = dual_args(x);
            args[k] = Dual2::var_outer(x[k]);
            g[k] = (self.f)(Dual2::c(t), &args).d_outer();
        }
        check_finite(t, x, g.as_slice())?;
        Ok(g)
    }

    /// ∂f/∂t.
    pub fn dt(&self, t: f64, x: &[f64]) -> GeoResult<f64> {
        let v = (self.f)(Dual2::var_outer(t), &dual_args(x)).d_outer();
        check_finite(t, x, &[v])?;
        Ok(v)
    }

    pub(crate) fn raw(&self) -> Arc<ScalarClosure> {
        self.f.clone()
    }
}

/// Time-dependent vector field X(t, x) with spatial Jacobian and time
/// derivative Ẋ from dual-number passes.
#[derive(Clone)]
pub struct TimeDepVectorField {
    n: usize,
    f: Arc<VectorClosure>,
}

impl TimeDepVectorField {
    pub fn new(
        n: usize,
        f: impl Fn(Dual2, &[Dual2]) -> Vec<Dual2> + Send + Sync + 'static,
    ) -> Self {
        TimeDepVectorField { n, f: Arc::new(f) }
    }

    pub fn zero(n: usize) -> Self {
        TimeDepVectorField::new(n, move |_, _| vec![Dual2::c(0.0); n])
    }

    pub fn constant(v: Vec<f64>) -> Self {
        let n = v.len();
        TimeDepVectorField::new(n, move |_, _| v.iter().map(|&c| Dual2::c(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> GeoResult<DVector<f64>> {
        let out = (self.f)(Dual2::c(t), &dual_args(x));
        self.check_len(t, x, out.len())?;
        let v = DVector::from_iterator(self.n, out.iter().map(|d| d.val()));
        check_finite(t, x, v.as_slice())?;
        Ok(v)
    }

    /// Jacobian J with J[(i, j)] = ∂Xⁱ/∂xʲ.
    pub fn jac_x(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.n, self.n);
        for col in 0..self.n {
            let mut args = dual_args(x);
            args[col] = Dual2::var_outer(x[col]);
            let out = (self.f)(Dual2::c(t), &args);
            self.check_len(t, x, out.len())?;
            for row in 0..self.n {
                j[(row, col)] = out[row].d_outer();
            }
        }
        check_finite(t, x, j.as_slice())?;
        Ok(j)
    }

    /// Ẋ = ∂X/∂t.
    pub fn dt(&self, t: f64, x: &[f64]) -> GeoResult<DVector<f64>> {
        let out = (self.f)(Dual2::var_outer(t), &dual_args(x));
        self.check_len(t, x, out.len())?;
        let v = DVector::from_iterator(self.n, out.iter().map(|d| d.d_outer()));
        check_finite(t, x, v.as_slice())?;
        Ok(v)
    }

    /// Pointwise sum of two fields of equal dimension.
    pub fn add(&self, other: &TimeDepVectorField) -> TimeDepVectorField {
        assert_eq!(self.n, other.n);
        let (a, b) = (self.f.clone(), other.f.clone());
        TimeDepVectorField::new(self.n, move |t, x| {
            a(t, x)
                .into_iter()
                .zip(b(t, x))
                .map(|(u, v)| u + v)
                .collect()
        })
    }

    /// Pointwise scaling by a constant.
    pub fn scale(&self, c: f64) -> TimeDepVectorField {
        let f = self.f.clone();
        TimeDepVectorField::new(self.n, move |t, x| {
            f(t, x).into_iter().map(|u| u * c).collect()
        })
    }

    /// Pointwise product f·X with a scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> TimeDepVectorField {
        assert_eq!(self.n, s.dim());
        let f = self.f.clone();
        let sf = s.raw();
        TimeDepVectorField::new(self.n, move |t, x| {
            let c = sf(t, x);
            f(t, x).into_iter().map(|u| u * c).collect()
        })
    }

    pub(crate) fn raw(&self) -> Arc<VectorClosure> {
        self.f.clone()
    }

    fn check_len(&self, t: f64, x: &[f64], got: usize) -> GeoResult<()> {
        if got == self.n {
            Ok(())
        } else {
            let _ = (t, x);
            Err(GeomError::DimensionMismatch {
                expected: self.n,
                got,
            })
        }
    }
}

/// Time-dependent endomorphism of the tangent bundle, evaluated pointwise.
#[derive(Clone)]
pub struct EndomorphismField {
    n: usize,
    f: Arc<PlainMatrixClosure>,
}

impl EndomorphismField {
    pub fn new(
        n: usize,
        f: impl Fn(f64, &[f64]) -> GeoResult<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        EndomorphismField { n, f: Arc::new(f) }
    }

    pub fn zero(n: usize) -> Self {
        EndomorphismField::new(n, move |_, _| Ok(DMatrix::zeros(n, n)))
    }

    pub fn identity(n: usize) -> Self {
        EndomorphismField::new(n, move |_, _| Ok(DMatrix::identity(n, n)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        let m = (self.f)(t, x)?;
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: m.nrows().max(m.ncols()),
            });
        }
        check_finite(t, x, m.as_slice())?;
        Ok(m)
    }

    /// Apply to a vector: A(X).
    pub fn apply(&self, t: f64, x: &[f64], v: &DVector<f64>) -> GeoResult<DVector<f64>> {
        Ok(self.eval(t, x)? * v)
    }
}

/// Time-dependent 1-form, evaluated pointwise.
#[derive(Clone)]
pub struct CovectorField {
    n: usize,
    f: Arc<PlainVectorClosure>,
}

impl CovectorField {
    pub fn new(
        n: usize,
        f: impl Fn(f64, &[f64]) -> GeoResult<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        CovectorField { n, f: Arc::new(f) }
    }

    pub fn zero(n: usize) -> Self {
        CovectorField::new(n, move |_, _| Ok(DVector::zeros(n)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> GeoResult<DVector<f64>> {
        let v = (self.f)(t, x)?;
        if v.len() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        check_finite(t, x, v.as_slice())?;
        Ok(v)
    }

    /// Pairing α(X).
    pub fn apply(&self, t: f64, x: &[f64], v: &DVector<f64>) -> GeoResult<f64> {
        Ok(self.eval(t, x)?.dot(v))
    }
}

/// Rank-3 array Tᵏ_ij, k upper, i j lower.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3 {
    n: usize,
    comps: Vec<f64>,
}

impl Rank3 {
    pub fn zeros(n: usize) -> Self {
        Rank3 {
            n,
            comps: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.comps[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.comps[(k * self.n + i) * self.n + j] = v;
    }

    /// Σ_{ij} Tᵏ_ij uⁱ vʲ for each k.
    pub fn contract2(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.get(k, i, j) * u[i] * v[j];
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Rank3) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest |Tᵏ_ij − Tᵏ_ji|.
    pub fn max_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|v| v.is_finite())
    }
}

/// Provenance of a metric's derivative data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricProvenance {
    /// Hand-written derivative closures.
    ClosedForm,
    /// Derivatives from dual-number lifting of the matrix evaluator.
    AutodiffFromEval,
}

#[derive(Clone)]
enum MetricBackend {
    Autodiff {
        g: Arc<MatrixClosure>,
    },
    ClosedForm {
        g: Arc<PlainMatrixClosure>,
        dg_dx: Arc<PlainMatrixDirClosure>,
        dg_dt: Arc<PlainMatrixClosure>,
        /// ∂²g/∂t∂xᵏ; when absent, consumers fall back to central
        /// differences in t.
        d2g_dtdx: Option<Arc<PlainMatrixDirClosure>>,
    },
}

/// Time-dependent Riemannian metric g_ij(t, x) with first derivatives.
///
/// Positive definiteness is checked lazily wherever an inverse is requested
/// (Cholesky); symmetry is enforced by symmetrization with the residual
/// checked against [`METRIC_ASYMMETRY_TOL`] at construction sampling.
#[derive(Clone)]
pub struct MetricField {
    n: usize,
    provenance: MetricProvenance,
    backend: MetricBackend,
    max_asymmetry_sampled: f64,
}

fn symmetrize(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let sym = 0.5 * (m + m.transpose());
    let res = (m - &sym).amax();
    (sym, res)
}

impl MetricField {
    /// Build a metric from a matrix evaluator; derivatives come from
    /// dual-number lifting. Sanity-samples the evaluator over `domain`.
    pub fn from_eval(
        n: usize,
        g: impl Fn(Dual2, &[Dual2]) -> DMatrix<Dual2> + Send + Sync + 'static,
        domain: &SampleDomain,
    ) -> GeoResult<Self> {
        let m = MetricField {
            n,
            provenance: MetricProvenance::AutodiffFromEval,
            backend: MetricBackend::Autodiff { g: Arc::new(g) },
            max_asymmetry_sampled: 0.0,
        };
        m.construction_sampling(domain)
    }

    /// Build a metric from hand-written value and derivative closures.
    pub fn from_closed_form(
        n: usize,
        g: impl Fn(f64, &[f64]) -> GeoResult<DMatrix<f64>> + Send + Sync + 'static,
        dg_dx: impl Fn(f64, &[f64], usize) -> GeoResult<DMatrix<f64>> + Send + Sync + 'static,
        dg_dt: impl Fn(f64, &[f64]) -> GeoResult<DMatrix<f64>> + Send + Sync + 'static,
        d2g_dtdx: Option<MatrixDirClosure>,
        domain: &SampleDomain,
    ) -> GeoResult<Self> {
        let m = MetricField {
            n,
            provenance: MetricProvenance::ClosedForm,
            backend: MetricBackend::ClosedForm {
                g: Arc::new(g),
                dg_dx: Arc::new(dg_dx),
                dg_dt: Arc::new(dg_dt),
                d2g_dtdx,
            },
            max_asymmetry_sampled: 0.0,
        };
        m.construction_sampling(domain)
    }

    fn construction_sampling(mut self, domain: &SampleDomain) -> GeoResult<Self> {
        if domain.dim() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: domain.dim(),
            });
        }
        let mut worst = 0.0_f64;
        for (t, x) in domain.points(CONSTRUCTION_SAMPLES) {
            let raw = self.eval_raw(t, &x)?;
            check_finite(t, &x, raw.as_slice())?;
            let (_, res) = symmetrize(&raw);
            if res > METRIC_ASYMMETRY_TOL {
                return Err(GeomError::NotSymmetric {
                    t,
                    x,
                    residual: res,
                });
            }
            worst = worst.max(res);
        }
        self.max_asymmetry_sampled = worst;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> MetricProvenance {
        self.provenance
    }

    /// Largest asymmetry residual seen during construction sampling.
    pub fn max_asymmetry_sampled(&self) -> f64 {
        self.max_asymmetry_sampled
    }

    fn eval_raw(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        match &self.backend {
            MetricBackend::Autodiff { g } => {
                let m = g(Dual2::c(t), &dual_args(x));
                self.check_shape(&m)?;
                Ok(DMatrix::from_fn(self.n, self.n, |i, j| m[(i, j)].val()))
            }
            MetricBackend::ClosedForm { g, .. } => {
                let m = g(t, x)?;
                self.check_shape_f(&m)?;
                Ok(m)
            }
        }
    }

    /// g(t, x), symmetrized.
    pub fn g(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        let raw = self.eval_raw(t, x)?;
        check_finite(t, x, raw.as_slice())?;
        Ok(symmetrize(&raw).0)
    }

    /// ġ = ∂g/∂t, symmetrized.
    pub fn dg_dt(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        let raw = match &self.backend {
            MetricBackend::Autodiff { g } => {
                let m = g(Dual2::var_outer(t), &dual_args(x));
                self.check_shape(&m)?;
                DMatrix::from_fn(self.n, self.n, |i, j| m[(i, j)].d_outer())
            }
            MetricBackend::ClosedForm { dg_dt, .. } => {
                let m = dg_dt(t, x)?;
                self.check_shape_f(&m)?;
                m
            }
        };
        check_finite(t, x, raw.as_slice())?;
        Ok(symmetrize(&raw).0)
    }

    /// ∂g/∂xᵏ, symmetrized in (i, j).
    pub fn dg_dx(&self, t: f64, x: &[f64], k: usize) -> GeoResult<DMatrix<f64>> {
        let raw = match &self.backend {
            MetricBackend::Autodiff { g } => {
                let mut args = dual_args(x);
                args[k] = Dual2::var_outer(x[k]);
                let m = g(Dual2::c(t), &args);
                self.check_shape(&m)?;
                DMatrix::from_fn(self.n, self.n, |i, j| m[(i, j)].d_outer())
            }
            MetricBackend::ClosedForm { dg_dx, .. } => {
                let m = dg_dx(t, x, k)?;
                self.check_shape_f(&m)?;
                m
            }
        };
        check_finite(t, x, raw.as_slice())?;
        Ok(symmetrize(&raw).0)
    }

    /// ∂²g/∂t∂xᵏ. Exact where the backend supports it, otherwise a central
    /// difference in t of ∂g/∂xᵏ with step 1e-5·max(1, |t|).
    pub fn d2g_dtdx(&self, t: f64, x: &[f64], k: usize) -> GeoResult<DMatrix<f64>> {
        match &self.backend {
            MetricBackend::Autodiff { g } => {
                let mut args = dual_args(x);
                args[k] = Dual2::var_inner(x[k]);
                let m = g(Dual2::var_outer(t), &args);
                self.check_shape(&m)?;
                let raw = DMatrix::from_fn(self.n, self.n, |i, j| m[(i, j)].d_cross());
                check_finite(t, x, raw.as_slice())?;
                Ok(symmetrize(&raw).0)
            }
            MetricBackend::ClosedForm { d2g_dtdx, .. } => {
                if let Some(d2) = d2g_dtdx {
                    let m = d2(t, x, k)?;
                    self.check_shape_f(&m)?;
                    check_finite(t, x, m.as_slice())?;
                    Ok(symmetrize(&m).0)
                } else {
                    let h = 1e-5 * t.abs().max(1.0);
                    let plus = self.dg_dx(t + h, x, k)?;
                    let minus = self.dg_dx(t - h, x, k)?;
                    Ok((plus - minus) / (2.0 * h))
                }
            }
        }
    }

    pub(crate) fn cholesky(&self, t: f64, x: &[f64]) -> GeoResult<Cholesky<f64, Dyn>> {
        let g = self.g(t, x)?;
        Cholesky::new(g).ok_or_else(|| GeomError::NotPositiveDefinite {
            t,
            x: x.to_vec(),
        })
    }

    /// G⁻¹ via Cholesky solve.
    pub fn inverse(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        Ok(self.cholesky(t, x)?.inverse())
    }

    /// The (1,1)-field G⁻¹·Ġ coupling metric time-variation into the
    /// geodesic equation.
    pub fn musical_endomorphism(&self, t: f64, x: &[f64]) -> GeoResult<DMatrix<f64>> {
        let gdot = self.dg_dt(t, x)?;
        Ok(self.cholesky(t, x)?.solve(&gdot))
    }

    /// Inner product g_t(u, v).
    pub fn inner(&self, t: f64, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> GeoResult<f64> {
        Ok((self.g(t, x)? * v).dot(u))
    }

    /// ġ(u, v).
    pub fn dg_dt_inner(
        &self,
        t: f64,
        x: &[f64],
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> GeoResult<f64> {
        Ok((self.dg_dt(t, x)? * v).dot(u))
    }

    /// Metric norm sqrt(g(v, v)); clamps tiny negative round-off.
    pub fn norm(&self, t: f64, x: &[f64], v: &DVector<f64>) -> GeoResult<f64> {
        Ok(self.inner(t, x, v, v)?.max(0.0).sqrt())
    }

    fn check_shape(&self, m: &DMatrix<Dual2>) -> GeoResult<()> {
        if m.nrows() == self.n && m.ncols() == self.n {
            Ok(())
        } else {
            Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: m.nrows().max(m.ncols()),
            })
        }
    }

    fn check_shape_f(&self, m: &DMatrix<f64>) -> GeoResult<()> {
        if m.nrows() == self.n && m.ncols() == self.n {
            Ok(())
        } else {
            Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: m.nrows().max(m.ncols()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Real;

    fn euclidean(n: usize) -> MetricField {
        MetricField::from_eval(
            n,
            move |_, _| {
                DMatrix::from_fn(n, n, |i, j| Dual2::c(if i == j { 1.0 } else { 0.0 }))
            },
            &SampleDomain::unit(n),
        )
        .unwrap()
    }

    pub(crate) fn conformal_plane() -> MetricField {
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

    #[test]
    fn scalar_field_polynomial() {
        let f = ScalarField::new(1, |t, x| t * x[0]);
        let g = f.grad_x(2.0, &[3.0]).unwrap();
        assert_eq!(g[0], 2.0);
        assert_eq!(f.dt(2.0, &[3.0]).unwrap(), 3.0);
    }

    #[test]
    fn scalar_field_sin_difference() {
        let f = ScalarField::new(2, |_, x| (x[0] - x[1]).sin());
        let g = f.grad_x(0.0, &[0.0, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
        assert!((g[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_field_dt_matches_finite_difference() {
        let f = ScalarField::new(1, |t, _| (t * 2.0).exp());
        let ad = f.dt(0.5, &[0.0]).unwrap();
        let h = 1e-6;
        let fd = (f.eval(0.5 + h, &[0.0]).unwrap() - f.eval(0.5 - h, &[0.0]).unwrap()) / (2.0 * h);
        assert!((ad - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert!((ad - fd).abs() < 1e-7);
    }

    #[test]
    fn euclidean_metric_derivatives_vanish() {
        let m = euclidean(3);
        let x = [0.3, -0.4, 1.0];
        assert_eq!(m.dg_dt(0.7, &x).unwrap(), DMatrix::zeros(3, 3));
        for k in 0..3 {
            assert_eq!(m.dg_dx(0.7, &x, k).unwrap(), DMatrix::zeros(3, 3));
        }
        let inv = m.inverse(0.7, &x).unwrap();
        assert!((inv - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn circle_scaling_metric() {
        // g = t² dθ⊗dθ: ġ(1) = 2, G⁻¹(2) = 1/4
        let m = MetricField::from_eval(
            1,
            |t, _| DMatrix::from_element(1, 1, t * t),
            &SampleDomain::new((0.25, 2.0), vec![(-3.2, 3.2)]),
        )
        .unwrap();
        assert!((m.dg_dt(1.0, &[0.0]).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((m.inverse(2.0, &[0.0]).unwrap()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn conformal_plane_derivatives() {
        let m = conformal_plane();
        let gdot = m.dg_dt(0.0, &[0.1, 0.2]).unwrap();
        assert!((gdot - 2.0 * DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        // musical endomorphism is 2·Id at every (t, x)
        let mu = m.musical_endomorphism(0.8, &[1.0, -1.0]).unwrap();
        assert!((mu - 2.0 * DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        // time-independent metric gives the zero endomorphism
        let e = euclidean(2);
        assert!(e.musical_endomorphism(0.3, &[0.0, 0.0]).unwrap().amax() < 1e-15);
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let r = MetricField::from_eval(
            2,
            |_, _| {
                DMatrix::from_fn(2, 2, |i, j| {
                    Dual2::c(if i == j {
                        1.0
                    } else if i < j {
                        0.1
                    } else {
                        0.0
                    })
                })
            },
            &SampleDomain::unit(2),
        );
        assert!(matches!(r, Err(GeomError::NotSymmetric { .. })));
    }

    #[test]
    fn non_positive_definite_reported_with_position() {
        let m = MetricField::from_eval(
            1,
            |t, _| DMatrix::from_element(1, 1, t * t),
            &SampleDomain::new((0.25, 2.0), vec![(0.0, 1.0)]),
        )
        .unwrap();
        match m.inverse(0.0, &[0.5]) {
            Err(GeomError::NotPositiveDefinite { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("expected positive-definiteness failure, got {other:?}"),
        }
    }

    #[test]
    fn vector_field_jacobian_and_dt() {
        let x_field = TimeDepVectorField::new(2, |t, x| vec![t * x[1], x[0] * x[0]]);
        let j = x_field.jac_x(2.0, &[3.0, 5.0]).unwrap();
        assert_eq!(j[(0, 0)], 0.0);
        assert_eq!(j[(0, 1)], 2.0);
        assert_eq!(j[(1, 0)], 6.0);
        assert_eq!(j[(1, 1)], 0.0);
        let dt = x_field.dt(2.0, &[3.0, 5.0]).unwrap();
        assert_eq!(dt[0], 5.0);
        assert_eq!(dt[1], 0.0);
    }

    #[test]
    fn fields_are_shareable_across_threads() {
        let m = conformal_plane();
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let m = m.clone();
                std::thread::spawn(move || {
                    m.musical_endomorphism(0.1 * k as f64, &[0.0, 0.0]).unwrap()[(0, 0)]
                })
            })
            .collect();
        for h in handles {
            assert!((h.join().unwrap() - 2.0).abs() < 1e-12);
        }
    }
}

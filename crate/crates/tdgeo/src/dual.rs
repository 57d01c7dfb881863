//! Forward-mode dual numbers, nested two levels deep.
//!
//! All differentiable model inputs (metrics, vector fields, scalar fields,
//! embeddings, curves, chart maps) are written once as closures over [`Dual2`].
//! Seeding the outer level gives first derivatives, seeding both levels gives
//! the mixed second derivatives needed for Christoffel time-derivatives,
//! chart Hessians and curve accelerations. One derivative direction per pass.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and nested duals.
pub trait Real:
    Copy
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(c: f64) -> Self;
    /// Real part with all derivative information stripped.
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Real for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// A dual number `re + eps·d` with `d² = 0`.
#[derive(Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

pub type Dual1 = Dual<f64>;
/// Two nested dual levels; the working scalar of every field closure.
pub type Dual2 = Dual<Dual1>;

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual {
            re,
            eps: T::zero(),
        }
    }
}

impl Dual2 {
    /// Plain value with no derivative seeds.
    pub fn c(v: f64) -> Self {
        Dual::constant(Dual::constant(v))
    }

    /// Seed the outer derivative direction.
    pub fn var_outer(v: f64) -> Self {
        Dual::new(Dual::constant(v), Dual::constant(1.0))
    }

    /// Seed the inner derivative direction.
    pub fn var_inner(v: f64) -> Self {
        Dual::new(Dual::new(v, 1.0), Dual::constant(0.0))
    }

    /// Seed both directions (for second derivatives in one variable,
    /// or mixed partials when the seeds go to different arguments).
    pub fn var_both(v: f64) -> Self {
        Dual::new(Dual::new(v, 1.0), Dual::constant(1.0))
    }

    pub fn val(self) -> f64 {
        self.re.re
    }
    /// Derivative along the outer seed.
    pub fn d_outer(self) -> f64 {
        self.eps.re
    }
    /// Derivative along the inner seed.
    pub fn d_inner(self) -> f64 {
        self.re.eps
    }
    /// Mixed (outer, inner) second derivative.
    pub fn d_cross(self) -> f64 {
        self.eps.eps
    }
}

impl<T: Real> fmt::Debug for Dual<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+ε{:?}", self.re, self.eps)
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(
            self.re * rhs.re,
            self.re * rhs.eps + self.eps * rhs.re,
        )
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Dual::new(
            self.re / rhs.re,
            (self.eps * rhs.re - self.re * rhs.eps) / (rhs.re * rhs.re),
        )
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        Dual::new(self.re + T::from_f64(rhs), self.eps)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.re - T::from_f64(rhs), self.eps)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        let c = T::from_f64(rhs);
        Dual::new(self.re * c, self.eps * c)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        let c = T::from_f64(rhs);
        Dual::new(self.re / c, self.eps / c)
    }
}

impl<T: Real> Add<Dual<T>> for f64 {
    type Output = Dual<T>;
    fn add(self, rhs: Dual<T>) -> Dual<T> {
        rhs + self
    }
}

impl<T: Real> Sub<Dual<T>> for f64 {
    type Output = Dual<T>;
    fn sub(self, rhs: Dual<T>) -> Dual<T> {
        Dual::new(T::from_f64(self) - rhs.re, -rhs.eps)
    }
}

impl<T: Real> Mul<Dual<T>> for f64 {
    type Output = Dual<T>;
    fn mul(self, rhs: Dual<T>) -> Dual<T> {
        rhs * self
    }
}

impl<T: Real> Div<Dual<T>> for f64 {
    type Output = Dual<T>;
    fn div(self, rhs: Dual<T>) -> Dual<T> {
        Dual::constant(T::from_f64(self)) / rhs
    }
}

impl<T: Real> Real for Dual<T> {
    fn from_f64(c: f64) -> Self {
        Dual::constant(T::from_f64(c))
    }

    fn value(self) -> f64 {
        self.re.value()
    }

    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s + s))
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Dual::new(
            self.re.powi(n),
            self.eps * T::from_f64(n as f64) * self.re.powi(n - 1),
        )
    }
}

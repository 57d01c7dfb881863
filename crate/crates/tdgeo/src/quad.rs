//! Adaptive Simpson quadrature.

use crate::error::{GeoResult, GeomError};

const MAX_DEPTH: usize = 48;

/// Integrate `f` over [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64) -> GeoResult<f64>
where
    F: FnMut(f64) -> GeoResult<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = simpson(a, b, fa, fm, fb);
    step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> GeoResult<f64>
where
    F: FnMut(f64) -> GeoResult<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(GeomError::QuadratureFailed { a, b });
    }
    if depth == 0 {
        return Err(GeomError::QuadratureFailed { a, b });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let l = step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive_simpson(&mut |t: f64| Ok(t * t), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn embedded_circle_speed_integral() {
        // ∫_0^1 sqrt(1 + 4π²t²) dt = sqrt(1+4π²)/2 + asinh(2π)/(4π) ≈ 3.383044
        let tau = 2.0 * std::f64::consts::PI;
        let v =
            adaptive_simpson(&mut |t: f64| Ok((1.0 + tau * tau * t * t).sqrt()), 0.0, 1.0, 1e-10)
                .unwrap();
        let exact = (1.0 + tau * tau).sqrt() / 2.0 + (tau).asinh() / (2.0 * tau);
        assert!((v - exact).abs() < 1e-9, "v={v} exact={exact}");
        assert!((v - 3.383044).abs() < 1e-6);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let fwd = adaptive_simpson(&mut |t: f64| Ok(t.cos()), 0.0, 1.0, 1e-10).unwrap();
        let bwd = adaptive_simpson(&mut |t: f64| Ok(t.cos()), 1.0, 0.0, 1e-10).unwrap();
        assert!((fwd + bwd).abs() < 1e-12);
    }
}

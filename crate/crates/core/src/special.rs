//! Special functions needed by the worked examples: `K₀`, its Laplace
//! transform, and the Gaussian tail integral `h` with its inverse.
//!
//! `K₀` is computed from its integral representations rather than from
//! polynomial approximations, so the representations themselves are under
//! test.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{integrate_real_line, integrate_semiinfinite, Decay, QuadratureBudget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IntegralRep,
    Series,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialFnResult {
    pub value: f64,
    pub est_error: f64,
    pub method: Method,
    /// Set when the true value is below the smallest representable double.
    pub underflow: bool,
}

/// `√π / 2`, the total mass of `e^{-u²}` on `(0, ∞)`.
pub const HALF_SQRT_PI: f64 = 0.886_226_925_452_758_013_649_083_741_671_f64;

/// `K₀(x) = ∫₁^∞ (t² − 1)^{-1/2} e^{-xt} dt`.
///
/// The substitution `t = cosh w` removes the inverse-square-root singularity
/// at `t = 1` and leaves `e^{-x} ∫₀^∞ exp(-2x sinh²(w/2)) dw`, an analytic
/// integrand with double-exponential decay. The trapezoidal rule converges
/// geometrically on it; step halving supplies the error estimate.
pub fn bessel_k0(x: f64) -> Result<SpecialFnResult> {
    if !(x > 0.0) || x.is_nan() {
        return Err(LevyError::Domain(format!("K0 needs x > 0, got {x}")));
    }
    if x > 740.0 {
        return Ok(SpecialFnResult {
            value: 0.0,
            est_error: 0.0,
            method: Method::IntegralRep,
            underflow: true,
        });
    }
    let f = |w: f64| {
        let s = (0.5 * w).sinh();
        (-2.0 * x * s * s).exp()
    };
    // exp(-2x sinh²(w/2)) < 1e-20 beyond this point.
    let w_max = 2.0 * (23.1 / x).sqrt().asinh();
    let mut h = 0.5_f64.min(w_max / 8.0);
    let mut n = (w_max / h).ceil() as usize;
    let mut sum = 0.5 * f(0.0) + (1..=n).map(|k| f(k as f64 * h)).sum::<f64>();
    let mut prev = sum * h;
    let mut error = f64::INFINITY;
    for _ in 0..12 {
        // Refine: add the midpoints of the current grid.
        let mids: f64 = (0..n).map(|k| f((k as f64 + 0.5) * h)).sum();
        sum += mids;
        h *= 0.5;
        n *= 2;
        let cur = sum * h;
        error = (cur - prev).abs();
        prev = cur;
        if error <= 1e-15 * cur {
            break;
        }
    }
    let scale = (-x).exp();
    let value = prev * scale;
    Ok(SpecialFnResult {
        value,
        est_error: error * scale + 4.0 * f64::EPSILON * value,
        method: Method::IntegralRep,
        underflow: value == 0.0,
    })
}

/// `K₀(x) = ½ ∫₀^∞ e^{-t - x²/(4t)} t^{-1} dt`, evaluated with `t = e^v` by
/// adaptive Gauss–Kronrod around the peak at `v = ln(x/2)`. Independent of
/// [`bessel_k0`]; used to cross-check it.
pub fn bessel_k0_alt(x: f64) -> Result<SpecialFnResult> {
    if !(x > 0.0) {
        return Err(LevyError::Domain(format!("K0 needs x > 0, got {x}")));
    }
    let q = 0.25 * x * x;
    let budget = QuadratureBudget::with_rel_tol(1e-13);
    let r = integrate_real_line(
        |v: f64| (-v.exp() - q * (-v).exp()).exp(),
        (0.5 * x).ln(),
        Decay::exponential(1.0),
        Decay::exponential(1.0),
        &budget,
    )?;
    Ok(SpecialFnResult {
        value: 0.5 * r.value,
        est_error: 0.5 * r.error,
        method: Method::IntegralRep,
        underflow: r.value == 0.0,
    })
}

/// Plain value of [`bessel_k0`]; panics only for `x ≤ 0`.
pub fn k0(x: f64) -> f64 {
    bessel_k0(x).map(|r| r.value).unwrap_or(f64::NAN)
}

/// Width of the series window around the removable singularity at `s = 1`.
const LAPLACE_SERIES_WIDTH: f64 = 1e-4;

/// `φ_{K₀}(s) = ∫₀^∞ e^{-sx} K₀(x) dx`.
pub fn laplace_k0(s: f64) -> f64 {
    if s == 1.0 {
        return 1.0;
    }
    let d = 1.0 - s;
    if d.abs() < LAPLACE_SERIES_WIDTH {
        return 1.0 + d / 3.0 + 2.0 * d * d / 15.0;
    }
    if s < 1.0 {
        s.acos() / (1.0 - s * s).sqrt()
    } else {
        (s + (s * s - 1.0).sqrt()).ln() / (s * s - 1.0).sqrt()
    }
}

/// Laplace transform `E e^{-sX}` of the type-A law built from `K₀`:
/// `exp(-γ₀ s + φ_{K₀}(s) - π/2)`.
pub fn type_a_laplace(s: f64, gamma0: f64) -> Result<f64> {
    if !(s >= 0.0) || !(gamma0 >= 0.0) {
        return Err(LevyError::Domain(format!(
            "need s ≥ 0 and γ₀ ≥ 0, got s = {s}, γ₀ = {gamma0}"
        )));
    }
    let phi = if s == 0.0 { FRAC_PI_2 } else { laplace_k0(s) };
    Ok((-gamma0 * s + phi - FRAC_PI_2).exp())
}

/// `h(t) = ∫_t^∞ e^{-u²} du`, written as `e^{-t²} ∫₀^∞ e^{-2tv - v²} dv` so the
/// quadrature keeps full relative accuracy for large `t`.
pub fn h(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(LevyError::OutOfRange(format!("h needs t ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(HALF_SQRT_PI);
    }
    let decay = if t > 1.0 {
        Decay::exponential(2.0 * t)
    } else {
        Decay::Exponential {
            rate: 1.0,
            power: 2.0,
        }
    };
    let budget = QuadratureBudget::with_rel_tol(1e-13);
    let r = integrate_semiinfinite(|v: f64| (-v * (2.0 * t + v)).exp(), 0.0, decay, &budget)?;
    Ok((-t * t).exp() * r.value)
}

/// Inverse of [`h`] on `(0, √π/2]`, by Newton's method safeguarded with
/// bisection (`h' = -e^{-t²}`).
pub fn h_inverse(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= HALF_SQRT_PI * (1.0 + 1e-15)) {
        return Err(LevyError::OutOfRange(format!(
            "h* is defined on (0, √π/2], got {s}"
        )));
    }
    if s >= HALF_SQRT_PI {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h(hi)? > s {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            return Err(LevyError::RootFind(format!("no bracket for h*({s})")));
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = h(t)? - s;
        if v == 0.0 || v.abs() <= 1e-15 * s {
            return Ok(t);
        }
        if v > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t + v * (t * t).exp();
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-15 * t.max(1.0) {
            return Ok(next);
        }
        t = next;
    }
    if hi - lo <= 1e-12 * hi.max(1.0) {
        return Ok(t);
    }
    Err(LevyError::RootFind(format!("h*({s}) did not converge")))
}

/// `∫₀^∞ K₀(x) dx`, computed numerically (the log singularity at the origin
/// is integrable and handled by the endpoint substitution).
pub fn k0_integral(budget: &QuadratureBudget) -> Result<f64> {
    let r = integrate_semiinfinite(k0, 0.0, Decay::exponential(1.0), budget)?;
    Ok(r.value)
}

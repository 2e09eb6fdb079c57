//! Named measures used throughout the checks: the worked examples built on
//! `K₀` and a few elementary densities.

use std::f64::consts::PI;

use crate::error::Result;
use crate::quadrature::Decay;
use crate::radial::{PolarLevyMeasure, RadialDensity, RadialMeasure};
use crate::special::k0;

/// `(π/4) x^{-1/2} e^{-√x} dx`, whose `𝒜₁` image has density `K₀(r)`.
pub fn ex41() -> RadialMeasure {
    RadialMeasure::from_density(
        RadialDensity::new(
            0.0,
            f64::INFINITY,
            Decay::Exponential {
                rate: 1.0,
                power: 0.5,
            },
            |x: f64| PI / 4.0 * x.powf(-0.5) * (-x.sqrt()).exp(),
        )
        .expect("valid density")
        .with_left_exponent(-0.5)
        .with_label("ex41"),
    )
}

/// `(√π/4) x^{-1/2} e^{-x/4} dx`, the `Υ⁰`-preimage of [`ex41`].
pub fn ex42() -> RadialMeasure {
    RadialMeasure::from_density(
        RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(0.25), |x: f64| {
            PI.sqrt() / 4.0 * x.powf(-0.5) * (-x / 4.0).exp()
        })
        .expect("valid density")
        .with_left_exponent(-0.5)
        .with_label("ex42"),
    )
}

/// `e^{-r} dr`.
pub fn exp_density() -> RadialMeasure {
    RadialMeasure::from_density(
        RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), |r: f64| (-r).exp())
            .expect("valid density")
            .with_label("exp"),
    )
}

/// `r e^{-r} dr`: increasing on `(0, 1)`.
pub fn gamma2_density() -> RadialMeasure {
    RadialMeasure::from_density(
        RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), |r: f64| r * (-r).exp())
            .expect("valid density")
            .with_left_exponent(1.0)
            .with_label("gamma2"),
    )
}

/// `K₀(r) dr` in closed form.
pub fn k0_density() -> RadialMeasure {
    RadialMeasure::from_density(
        RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), k0)
            .expect("valid density")
            .with_label("K0"),
    )
}

/// Indicator of `(a, b)`.
pub fn uniform(a: f64, b: f64) -> Result<RadialMeasure> {
    Ok(RadialMeasure::from_density(
        RadialDensity::new(a, b, Decay::Compact, |_| 1.0)?.with_label(format!("1({a},{b})")),
    ))
}

pub fn dirac(at: f64) -> Result<RadialMeasure> {
    RadialMeasure::dirac(at)
}

/// One-dimensional Lévy measure on the positive half-line.
pub fn on_line(radial: RadialMeasure) -> PolarLevyMeasure {
    PolarLevyMeasure::one_dimensional(radial)
}

//! Shared fixtures for the criterion benches.

use levyarc::battery;
use levyarc::transforms::log_grid;
use levyarc::PolarLevyMeasure;

/// Radii used by the tabulation benches.
pub fn radius_grid() -> Vec<f64> {
    log_grid(0.05, 8.0, 32)
}

/// `(π/4) x^{-1/2} e^{-√x}` on the line; its first arcsine transform is `K₀`.
pub fn k0_source() -> PolarLevyMeasure {
    battery::on_line(battery::ex41())
}

/// `(√π/4) x^{-1/2} e^{-x/4}` on the line; its `Υ⁰` image is [`k0_source`].
pub fn upsilon_source() -> PolarLevyMeasure {
    battery::on_line(battery::ex42())
}

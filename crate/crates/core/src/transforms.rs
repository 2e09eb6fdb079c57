//! Arcsine transformations, the half-integral and its inversion, and
//! Upsilon (dilation-mixture) transformations.
//!
//! Every output is lazy: a density part is an evaluator that integrates the
//! input on demand, together with endpoint metadata derived from the input's
//! metadata. Composite transforms therefore never compound a discretisation
//! error, and the quadrature inside an evaluator always knows where the
//! singularities of its integrand are.

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{
    integrate_segment, sqrt_decay, Decay, Estimate, QuadratureBudget, QuadratureError, Segment,
};
use crate::radial::{dilate_density, Atom, PolarLevyMeasure, RadialDensity, RadialMeasure};

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_286_948_079_451_560_772_6;

/// Arcsine densities `a₁(r; s) = (2/π)(s − r²)^{-1/2}` on `0 < r < √s` and
/// `a₂(r; s) = (2/π)(s² − r²)^{-1/2}` on `0 < r < s`. Returns `+∞` on the
/// boundary of the support and `0` outside it.
pub fn arcsine_density(k: u32, r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(LevyError::Domain(format!("need r, s > 0, got r = {r}, s = {s}")));
    }
    let gap = match k {
        1 => s - r * r,
        2 => s * s - r * r,
        _ => return Err(LevyError::Domain(format!("arcsine index must be 1 or 2, got {k}"))),
    };
    Ok(if gap > 0.0 {
        FRAC_2_PI / gap.sqrt()
    } else if gap == 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

/// Output of a transform: per-direction radial measures whose density parts
/// are lazy evaluators, plus a description of how they were obtained.
#[derive(Clone, Debug)]
pub struct TransformedDensity {
    pub measure: PolarLevyMeasure,
    pub provenance: String,
}

impl TransformedDensity {
    pub fn new(measure: PolarLevyMeasure, provenance: impl Into<String>) -> Self {
        Self {
            measure,
            provenance: provenance.into(),
        }
    }

    pub fn radial(&self, direction: usize) -> &RadialMeasure {
        &self.measure.components()[direction].radial
    }

    pub fn directions(&self) -> usize {
        self.measure.components().len()
    }

    /// Density (atoms excluded) along `direction` at radius `r`.
    pub fn density(&self, direction: usize, r: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        self.radial(direction).density(r, budget)
    }

    /// Evaluates every direction on `grid`, in parallel; row order is
    /// direction-major and independent of the thread count.
    pub fn tabulate(&self, grid: &[f64], budget: &QuadratureBudget) -> Result<DensityTable> {
        let jobs: Vec<(usize, f64)> = (0..self.directions())
            .flat_map(|d| grid.iter().map(move |&r| (d, r)))
            .collect();
        let rows = jobs
            .par_iter()
            .map(|&(d, r)| {
                self.density(d, r, budget).map(|e| DensityRow {
                    direction_index: d,
                    r,
                    density: e.value,
                    est_error: e.error,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let atoms = (0..self.directions())
            .flat_map(|d| {
                self.radial(d).atoms().iter().map(move |a| AtomRow {
                    direction_index: d,
                    location: a.location,
                    mass: a.mass,
                })
            })
            .collect();
        Ok(DensityTable { rows, atoms })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub direction_index: usize,
    pub r: f64,
    pub density: f64,
    pub est_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub direction_index: usize,
    pub location: f64,
    pub mass: f64,
}

/// Tabulated densities with per-point error estimates; atoms listed apart.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
    pub atoms: Vec<AtomRow>,
}

impl DensityTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction_index,r,density,est_error\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                row.direction_index, row.r, row.density, row.est_error
            ));
        }
        out
    }

    pub fn atoms_csv(&self) -> String {
        let mut out = String::from("direction_index,location,mass\n");
        for a in &self.atoms {
            out.push_str(&format!("{},{:e},{:e}\n", a.direction_index, a.location, a.mass));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Kernels

/// `∫_{max(x,a)}^{b} (s − x)^{-1/2} ℓ(s) ds` with `s = x + w²`.
fn abel_kernel(
    part: &RadialDensity,
    x: f64,
    budget: &QuadratureBudget,
) -> std::result::Result<Estimate, QuadratureError> {
    let (a, b) = (part.lower(), part.upper());
    if x >= b {
        return Ok(Estimate::default());
    }
    let (w_lo, lo_exp) = if x < a {
        ((a - x).sqrt(), part.left_exponent())
    } else if x == a {
        (0.0, 2.0 * part.left_exponent())
    } else {
        (0.0, 0.0)
    };
    let seg = Segment {
        lo: w_lo,
        hi: if b.is_finite() { (b - x).sqrt() } else { f64::INFINITY },
        lo_exponent: lo_exp,
        hi_exponent: part.right_exponent(),
        decay: sqrt_decay(part.decay()),
    };
    let inner = budget.inner();
    integrate_segment(|w| 2.0 * part.value(x + w * w, &inner), &seg, budget)
}

/// `∫_{max(r,a)}^{b} (s² − r²)^{-1/2} ℓ(s) ds` with `s = √(r² + w²)`.
fn a2_kernel(
    part: &RadialDensity,
    r: f64,
    budget: &QuadratureBudget,
) -> std::result::Result<Estimate, QuadratureError> {
    let (a, b) = (part.lower(), part.upper());
    if r >= b {
        return Ok(Estimate::default());
    }
    let (w_lo, lo_exp) = if r < a {
        (((a - r) * (a + r)).sqrt(), part.left_exponent())
    } else if r == a {
        (0.0, 2.0 * part.left_exponent())
    } else {
        (0.0, 0.0)
    };
    let decay = match part.decay() {
        Decay::Polynomial(g) => Decay::Polynomial(g - 1.0),
        d => d,
    };
    let seg = Segment {
        lo: w_lo,
        hi: if b.is_finite() { ((b - r) * (b + r)).sqrt() } else { f64::INFINITY },
        lo_exponent: lo_exp,
        hi_exponent: part.right_exponent(),
        decay,
    };
    let inner = budget.inner();
    integrate_segment(
        |w| {
            let s = r.hypot(w);
            part.value(s, &inner) / s
        },
        &seg,
        budget,
    )
}

fn map_decay(d: Decay, poly: impl Fn(f64) -> f64, power: impl Fn(f64) -> f64) -> Decay {
    match d {
        Decay::Compact => Decay::Compact,
        Decay::Polynomial(g) => Decay::Polynomial(poly(g)),
        Decay::Exponential { rate, power: p } => Decay::Exponential {
            rate,
            power: power(p),
        },
    }
}

fn a1_of_part(part: &RadialDensity) -> Result<RadialDensity> {
    let src = part.clone();
    let left = if part.lower() == 0.0 {
        (2.0 * part.left_exponent() + 1.0).min(0.0)
    } else {
        0.0
    };
    Ok(RadialDensity::from_evaluator(
        0.0,
        part.upper().sqrt(),
        map_decay(part.decay(), |g| 2.0 * g + 1.0, |p| 2.0 * p),
        move |r, b| abel_kernel(&src, r * r, b).map(|e| e.scale(FRAC_2_PI)),
    )?
    .with_left_exponent(left)
    .with_right_exponent(part.right_exponent() + 0.5)
    .with_label(format!("A1({})", part.label())))
}

fn a2_of_part(part: &RadialDensity) -> Result<RadialDensity> {
    let src = part.clone();
    let left = if part.lower() == 0.0 {
        part.left_exponent().min(0.0)
    } else {
        0.0
    };
    Ok(RadialDensity::from_evaluator(
        0.0,
        part.upper(),
        part.decay(),
        move |r, b| a2_kernel(&src, r, b).map(|e| e.scale(FRAC_2_PI)),
    )?
    .with_left_exponent(left)
    .with_right_exponent(part.right_exponent() + 0.5)
    .with_label(format!("A2({})", part.label())))
}

fn half_integral_of_part(part: &RadialDensity) -> Result<RadialDensity> {
    let src = part.clone();
    let left = if part.lower() == 0.0 {
        (part.left_exponent() + 0.5).min(0.0)
    } else {
        0.0
    };
    Ok(RadialDensity::from_evaluator(
        0.0,
        part.upper(),
        map_decay(part.decay(), |g| g + 0.5, |p| p),
        move |u, b| abel_kernel(&src, u, b).map(|e| e.scale(INV_SQRT_PI)),
    )?
    .with_left_exponent(left)
    .with_right_exponent(part.right_exponent() + 0.5)
    .with_label(format!("half({})", part.label())))
}

/// Density `c (end − x)^{-1/2}` on `(0, end)`; `end = √s` for `𝒜₁` etc.
fn inverse_sqrt_atom(k_kind: AtomKernel, atom: &Atom) -> Result<RadialDensity> {
    let (s, w) = (atom.location, atom.mass);
    let (upper, label) = match k_kind {
        AtomKernel::A1 => (s.sqrt(), "A1"),
        AtomKernel::A2 => (s, "A2"),
        AtomKernel::Half => (s, "half"),
    };
    let f = move |x: f64| match k_kind {
        AtomKernel::A1 => w * FRAC_2_PI / (s - x * x).sqrt(),
        AtomKernel::A2 => w * FRAC_2_PI / ((s - x) * (s + x)).sqrt(),
        AtomKernel::Half => w * INV_SQRT_PI / (s - x).sqrt(),
    };
    Ok(RadialDensity::new(0.0, upper, Decay::Compact, f)?
        .with_right_exponent(-0.5)
        .with_label(format!("{label}(atom {s})")))
}

#[derive(Clone, Copy)]
enum AtomKernel {
    A1,
    A2,
    Half,
}

fn arcsine_radial(k: u32, nu: &RadialMeasure) -> Result<RadialMeasure> {
    let kernel = if k == 1 { AtomKernel::A1 } else { AtomKernel::A2 };
    let mut parts = Vec::new();
    for a in nu.atoms() {
        parts.push(inverse_sqrt_atom(kernel, a)?);
    }
    for p in nu.parts() {
        parts.push(if k == 1 { a1_of_part(p)? } else { a2_of_part(p)? });
    }
    RadialMeasure::new(Vec::new(), parts)
}

fn check_k(k: u32) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(LevyError::Domain(format!("arcsine index must be 1 or 2, got {k}")))
    }
}

/// Budget for domain checks: finiteness matters, not digits.
fn domain_budget() -> QuadratureBudget {
    QuadratureBudget::with_rel_tol(1e-6)
}

/// `𝒜ₖ(ν)`: per direction `r ↦ (2/π) ∫_{(r^{2/k}, ∞)} (s^k − r²)^{-1/2} ν_ξ(ds)`.
/// Atoms contribute `w a_k(r; s)` exactly.
pub fn arcsine_transform(k: u32, nu: &PolarLevyMeasure) -> Result<TransformedDensity> {
    check_k(k)?;
    if !nu.in_ml(k, &domain_budget())?.member {
        return Err(LevyError::Domain(format!(
            "𝒜{k} needs ∫(1 ∧ |x|^{k}) ν(dx) < ∞"
        )));
    }
    Ok(TransformedDensity::new(
        nu.map_radial(|r| arcsine_radial(k, r))?,
        format!("A{k}"),
    ))
}

/// `𝒜ₖ(ν)` computed as the dilation mixture of `ν^{(k/2)}` against the
/// arcsine law `a₁(u; 1) du` on `(0, 1)`. Independent of
/// [`arcsine_transform`]; exists to cross-check it.
pub fn arcsine_transform_upsilon_form(k: u32, nu: &PolarLevyMeasure) -> Result<TransformedDensity> {
    check_k(k)?;
    if !nu.in_ml(k, &domain_budget())?.member {
        return Err(LevyError::Domain(format!(
            "𝒜{k} needs ∫(1 ∧ |x|^{k}) ν(dx) < ∞"
        )));
    }
    let tau = DilationMeasure::arcsine();
    let powered = nu.p_transform(k as f64 / 2.0)?;
    let m = powered.map_radial(|r| upsilon_radial(r, &tau))?;
    Ok(TransformedDensity::new(m, format!("Ups[arcsine](p[{}])", k as f64 / 2.0)))
}

/// Fractional half-integral `𝔄(ρ)(u) = π^{-1/2} ∫_{(u,∞)} (s − u)^{-1/2} ρ(ds)`,
/// returned as a measure made only of density parts.
pub fn half_integral(rho: &RadialMeasure) -> Result<RadialMeasure> {
    for p in rho.parts() {
        if p.upper().is_infinite() && !p.decay().integrable_with_power(-0.5) {
            return Err(LevyError::Domain(format!(
                "half-integral needs ∫_(b,∞) s^(-1/2) ρ(ds) < ∞; part {} decays too slowly",
                p.label()
            )));
        }
    }
    let mut parts = Vec::new();
    for a in rho.atoms() {
        parts.push(inverse_sqrt_atom(AtomKernel::Half, a)?);
    }
    for p in rho.parts() {
        parts.push(half_integral_of_part(p)?);
    }
    RadialMeasure::new(Vec::new(), parts)
}

/// `C₁(α) = π^{-1/2} B(α + 1, 1/2) = Γ(α + 1)/Γ(α + 3/2)`, the constant in
/// `∫_(b,∞) u^α 𝔄(ρ)(du) ≤ C₁ ∫_(b,∞) s^{α+1/2} ρ(ds)`, obtained by extending
/// the inner integral `∫_b^s u^α (s − u)^{-1/2} du` down to 0.
pub fn half_integral_moment_constant(alpha: f64) -> Result<f64> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(LevyError::Domain(format!("moment bound needs alpha > -1, got {alpha}")));
    }
    Ok((libm::lgamma(alpha + 1.0) - libm::lgamma(alpha + 1.5)).exp())
}

/// Both sides of the tail-moment bound beyond `b`:
/// `(∫_(b,∞) u^α 𝔄(ρ)(du), C₁(α) ∫_(b,∞) s^{α+1/2} ρ(ds))`.
pub fn half_integral_moment_bound(
    rho: &RadialMeasure,
    alpha: f64,
    b: f64,
    budget: &QuadratureBudget,
) -> Result<(f64, f64)> {
    let c1 = half_integral_moment_constant(alpha)?;
    let lhs = half_integral(rho)?.integrate_from(|u| u.powf(alpha), b, &[], budget)?.value;
    let rhs = rho.integrate_from(|s| s.powf(alpha + 0.5), b, &[], budget)?.value;
    Ok((lhs, c1 * rhs))
}

// ---------------------------------------------------------------------------
// Inversion

/// Outcome of the range test for `𝒜ₖ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCertificate {
    pub in_range: bool,
    /// Largest violation of nonnegativity / monotonicity of the normalised
    /// recovered tail (0 when none).
    pub worst_violation: f64,
    /// Argument at which `worst_violation` occurred.
    pub at: f64,
    /// Positive density up to the end of its support, no atoms.
    pub support_ok: bool,
    pub tolerance: f64,
    pub grid_points: usize,
}

/// Tail tolerance for the range certificate (absolute, on normalised tails).
pub const RANGE_TOLERANCE: f64 = 1e-6;

/// Recovered tail functions `u ↦ ν_ξ((u, ∞))`, one per direction.
#[derive(Clone, Debug)]
pub struct ArcsineInverse {
    k: u32,
    /// `𝔄(g_ξ)` with `g_ξ(s) = (√π/2) ℓ̃_ξ(√s)`.
    tails: Vec<RadialMeasure>,
}

impl ArcsineInverse {
    pub fn directions(&self) -> usize {
        self.tails.len()
    }

    /// `ν_ξ((u, ∞))`.
    pub fn tail(&self, direction: usize, u: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        let x = if self.k == 2 { u * u } else { u };
        self.tails[direction].density(x, budget)
    }

    /// Range certificate on the given grid of `u` values.
    pub fn certify(&self, direction: usize, grid: &[f64], budget: &QuadratureBudget) -> Result<(f64, f64)> {
        // Near the end of the support the nested substitutions lose relative
        // accuracy; a partial value is good enough as long as its error is far
        // below the certificate tolerance.
        let values = grid
            .par_iter()
            .map(|&u| match self.tail(direction, u, budget) {
                Ok(e) => Ok(e.value),
                Err(LevyError::Quadrature(QuadratureError::NonConvergent { value, error }))
                    if error <= 0.01 * RANGE_TOLERANCE * value.abs().max(1.0) =>
                {
                    Ok(value)
                }
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok((0.0, grid.first().copied().unwrap_or(0.0)));
        }
        let mut worst = 0.0;
        let mut at = grid[0];
        for i in 0..values.len() {
            let neg = -values[i] / scale;
            if neg > worst {
                worst = neg;
                at = grid[i];
            }
            if i > 0 {
                let inc = (values[i] - values[i - 1]) / scale;
                if inc > worst {
                    worst = inc;
                    at = grid[i];
                }
            }
        }
        Ok((worst, at))
    }
}

/// `g(s) = (√π/2) ℓ̃(√s)` as a density on `(a², b²)`.
fn inversion_density(part: &RadialDensity) -> Result<RadialDensity> {
    let c = 0.5 * PI.sqrt();
    let src = part.clone();
    let left = if part.lower() == 0.0 {
        0.5 * part.left_exponent()
    } else {
        part.left_exponent()
    };
    Ok(RadialDensity::from_evaluator(
        part.lower() * part.lower(),
        part.upper() * part.upper(),
        map_decay(part.decay(), |g| 0.5 * g, |p| 0.5 * p),
        move |s, b| {
            let r = s.sqrt();
            if src.contains(r) {
                src.evaluate(r, b).map(|e| e.scale(c)).map_err(|e| match e {
                    LevyError::Quadrature(q) => q,
                    other => QuadratureError::DomainError(other.to_string()),
                })
            } else {
                Ok(Estimate::default())
            }
        },
    )?
    .with_left_exponent(left)
    .with_right_exponent(part.right_exponent())
    .with_label(format!("g({})", part.label())))
}

/// Support property of `𝒜ₖ` outputs: positive density on `(0, b)`, zero after,
/// no atoms. Checked on a grid.
pub fn support_property(radial: &RadialMeasure, budget: &QuadratureBudget) -> Result<bool> {
    if radial.has_atoms() {
        return Ok(false);
    }
    if radial.is_zero() {
        return Ok(true);
    }
    if radial.inf_support() > 0.0 {
        return Ok(false);
    }
    let top = radial.sup_support();
    let grid = default_radius_grid(radial, 64);
    for &r in grid.iter().filter(|&&r| r < top) {
        if radial.density(r, budget)?.value <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Log-spaced radii covering the bulk of a radial measure's support.
pub fn default_radius_grid(radial: &RadialMeasure, n: usize) -> Vec<f64> {
    let top = radial.sup_support();
    let hi = if top.is_finite() {
        top * (1.0 - 1e-4)
    } else {
        radial
            .parts()
            .iter()
            .filter(|p| p.upper().is_infinite())
            .map(|p| match p.decay() {
                Decay::Exponential { rate, power } => (30.0 / rate).powf(1.0 / power),
                _ => 1e3,
            })
            .fold(1.0f64, f64::max)
    };
    let lo = (1e-3 * hi).min(1e-2);
    log_grid(lo, hi, n)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn invert_radial(ltilde: &RadialMeasure) -> Result<RadialMeasure> {
    let parts = ltilde
        .parts()
        .iter()
        .map(inversion_density)
        .collect::<Result<Vec<_>>>()?;
    half_integral(&RadialMeasure::new(Vec::new(), parts)?)
}

/// Inverts `𝒜ₖ`: from `ℓ̃ = 𝒜ₖ(ν)` recovers the tails of `ν`.
///
/// With `g(u) = (√π/2) ℓ̃(√u)`, `𝔄(g)(u) = ν((u, ∞))` for `k = 1`; for
/// `k = 2` the same computation yields the tails of `ν^{(2)}`, so
/// `ν((u, ∞)) = 𝔄(g)(u²)`. The tails are lazy; no certificate is computed.
pub fn invert_arcsine_unchecked(k: u32, ltilde: &TransformedDensity) -> Result<ArcsineInverse> {
    check_k(k)?;
    let tails = (0..ltilde.directions())
        .map(|d| invert_radial(ltilde.radial(d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ArcsineInverse { k, tails })
}

/// Range test: inversion followed by a nonnegativity / monotonicity check of
/// the recovered tails plus the support property, per direction.
pub fn range_certificate(
    k: u32,
    ltilde: &TransformedDensity,
    budget: &QuadratureBudget,
) -> Result<Vec<RangeCertificate>> {
    let inv = invert_arcsine_unchecked(k, ltilde)?;
    (0..ltilde.directions())
        .map(|d| {
            let radial = ltilde.radial(d);
            let support_ok = support_property(radial, budget)?;
            let mut grid = default_radius_grid(radial, 48);
            if k == 1 {
                // Tails of ν are indexed by u = r².
                for g in grid.iter_mut() {
                    *g *= *g;
                }
            }
            let (worst, at) = inv.certify(d, &grid, budget)?;
            Ok(RangeCertificate {
                in_range: support_ok && worst <= RANGE_TOLERANCE,
                worst_violation: worst,
                at,
                support_ok,
                tolerance: RANGE_TOLERANCE,
                grid_points: grid.len(),
            })
        })
        .collect()
}

/// Inverts `𝒜ₖ` and certifies the result; a failed certificate means `ℓ̃` is
/// not in the range of `𝒜ₖ` and is reported as [`LevyError::NegativeTail`].
pub fn invert_arcsine(
    k: u32,
    ltilde: &TransformedDensity,
    budget: &QuadratureBudget,
) -> Result<ArcsineInverse> {
    let certs = range_certificate(k, ltilde, budget)?;
    if let Some(c) = certs.iter().find(|c| !c.in_range) {
        let detail = if c.support_ok {
            format!("violation {:.3e} exceeds {:.0e}", c.worst_violation, c.tolerance)
        } else {
            "density vanishes inside its support or has atoms".to_string()
        };
        return Err(LevyError::NegativeTail { u: c.at, detail });
    }
    invert_arcsine_unchecked(k, ltilde)
}

// ---------------------------------------------------------------------------
// Upsilon transformations

/// Mixing measure `τ` of an Upsilon transformation
/// `Υ_τ(ν)(B) = ∫₀^∞ ν(u^{-1}B) τ(du)`.
#[derive(Clone, Debug)]
pub struct DilationMeasure {
    pub measure: RadialMeasure,
    pub name: String,
}

impl DilationMeasure {
    pub fn new(measure: RadialMeasure, name: impl Into<String>) -> Self {
        Self {
            measure,
            name: name.into(),
        }
    }

    /// `e^{-u} du`, giving `Υ⁰`.
    pub fn exponential() -> Self {
        let d = RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), |u: f64| (-u).exp())
            .expect("valid density")
            .with_label("exp");
        Self::new(RadialMeasure::from_density(d), "Ups0")
    }

    /// `β u^{-α-1} e^{-u^β} du`, giving `Υ_{α,β}`.
    pub fn alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha < 2.0) || !(beta > 0.0 && beta <= 2.0) {
            return Err(LevyError::Domain(format!(
                "Υ_(α,β) needs α < 2 and 0 < β ≤ 2, got α = {alpha}, β = {beta}"
            )));
        }
        let d = RadialDensity::new(
            0.0,
            f64::INFINITY,
            Decay::Exponential {
                rate: 1.0,
                power: beta,
            },
            move |u: f64| beta * u.powf(-alpha - 1.0) * (-u.powf(beta)).exp(),
        )?
        .with_left_exponent(-alpha - 1.0)
        .with_label(format!("ab[{alpha},{beta}]"));
        Ok(Self::new(RadialMeasure::from_density(d), format!("Ups[{alpha},{beta}]")))
    }

    /// Arcsine law `a₁(u; 1) du = (2/π)(1 − u²)^{-1/2} du` on `(0, 1)`.
    pub fn arcsine() -> Self {
        let d = RadialDensity::new(0.0, 1.0, Decay::Compact, |u: f64| {
            FRAC_2_PI / ((1.0 - u) * (1.0 + u)).sqrt()
        })
        .expect("valid density")
        .with_right_exponent(-0.5)
        .with_label("arcsine");
        Self::new(RadialMeasure::from_density(d), "Ups[arcsine]")
    }

    pub fn dirac(at: f64) -> Result<Self> {
        Ok(Self::new(RadialMeasure::dirac(at)?, format!("Ups[delta {at}]")))
    }
}

/// `∫ q(u) ℓ(y/u) u^{-1} du` over `u ∈ (c, d) ∩ (y/b, y/a)`.
fn mixture_kernel(
    q: &RadialDensity,
    l: &RadialDensity,
    y: f64,
    budget: &QuadratureBudget,
) -> std::result::Result<Estimate, QuadratureError> {
    let (c, d) = (q.lower(), q.upper());
    let (a, b) = (l.lower(), l.upper());
    let from_b = if b.is_finite() { y / b } else { 0.0 };
    let to_a = if a > 0.0 { y / a } else { f64::INFINITY };
    let lo = c.max(from_b);
    let hi = d.min(to_a);
    if !(hi > lo) {
        return Ok(Estimate::default());
    }
    let lo_exp = if lo == 0.0 {
        q.left_exponent()
            + match l.decay() {
                Decay::Polynomial(g) => -g - 1.0,
                _ => 0.0,
            }
    } else {
        let mut e = 0.0;
        if lo == c {
            e += q.left_exponent();
        }
        if lo == from_b {
            e += l.right_exponent();
        }
        e
    };
    let (hi_exp, decay) = if hi.is_infinite() {
        let decay = match q.decay() {
            Decay::Polynomial(g) => Decay::Polynomial(g - l.left_exponent() - 1.0),
            other => other,
        };
        (0.0, decay)
    } else {
        let mut e = 0.0;
        if hi == d {
            e += q.right_exponent();
        }
        if hi == to_a {
            e += l.left_exponent();
        }
        (e, Decay::Compact)
    };
    let seg = Segment {
        lo,
        hi,
        lo_exponent: lo_exp,
        hi_exponent: hi_exp,
        decay,
    };
    let inner = budget.inner();
    integrate_segment(
        |u| {
            let lv = l.value(y / u, &inner);
            if lv == 0.0 {
                0.0
            } else {
                q.value(u, &inner) * lv / u
            }
        },
        &seg,
        budget,
    )
}

/// Decay of a dilation mixture when both factors are unbounded.
fn mixture_decay(q: &RadialDensity, l: &RadialDensity) -> Decay {
    let (d, b) = (q.upper(), l.upper());
    match (d.is_finite(), b.is_finite()) {
        (true, true) => Decay::Compact,
        (false, true) => match q.decay() {
            Decay::Exponential { rate, power } => Decay::Exponential {
                rate: rate * b.powf(-power),
                power,
            },
            other => other,
        },
        (true, false) => match l.decay() {
            Decay::Exponential { rate, power } => Decay::Exponential {
                rate: rate * d.powf(-power),
                power,
            },
            other => other,
        },
        (false, false) => match (q.decay(), l.decay()) {
            (
                Decay::Exponential { rate: c1, power: p1 },
                Decay::Exponential { rate: c2, power: p2 },
            ) => {
                // Saddle point of c1 u^p1 + c2 (y/u)^p2.
                let v = ((c2 * p2) / (c1 * p1)).powf(1.0 / (p1 + p2));
                Decay::Exponential {
                    rate: c1 * v.powf(p1) + c2 * v.powf(-p2),
                    power: p1 * p2 / (p1 + p2),
                }
            }
            (Decay::Polynomial(g1), Decay::Polynomial(g2)) => Decay::Polynomial(g1.max(g2)),
            (Decay::Polynomial(g), _) | (_, Decay::Polynomial(g)) => Decay::Polynomial(g),
            _ => Decay::Compact,
        },
    }
}

fn mixture_part(q: &RadialDensity, l: &RadialDensity) -> Result<RadialDensity> {
    let lower = if q.lower() == 0.0 || l.lower() == 0.0 {
        0.0
    } else {
        q.lower() * l.lower()
    };
    let upper = q.upper() * l.upper();
    let left = if lower == 0.0 {
        match (q.lower() == 0.0, l.lower() == 0.0) {
            (true, true) => q.left_exponent().min(l.left_exponent()),
            (true, false) => q.left_exponent(),
            _ => l.left_exponent(),
        }
    } else {
        q.left_exponent() + l.left_exponent() + 1.0
    };
    let right = if upper.is_finite() {
        q.right_exponent() + l.right_exponent() + 1.0
    } else {
        0.0
    };
    let (qq, ll) = (q.clone(), l.clone());
    Ok(RadialDensity::from_evaluator(lower, upper, mixture_decay(q, l), move |y, b| {
        mixture_kernel(&qq, &ll, y, b)
    })?
    .with_left_exponent(left)
    .with_right_exponent(right)
    .with_label(format!("mix({}, {})", q.label(), l.label())))
}

/// Radial part of `Υ_τ(ν)`.
pub fn upsilon_radial(nu: &RadialMeasure, tau: &DilationMeasure) -> Result<RadialMeasure> {
    let t = &tau.measure;
    let mut atoms = Vec::new();
    let mut parts = Vec::new();
    for ta in t.atoms() {
        for na in nu.atoms() {
            atoms.push(Atom {
                location: ta.location * na.location,
                mass: ta.mass * na.mass,
            });
        }
        for np in nu.parts() {
            parts.push(dilate_density(np, ta.location, ta.mass));
        }
    }
    for tp in t.parts() {
        for na in nu.atoms() {
            parts.push(dilate_density(tp, na.location, na.mass));
        }
        for np in nu.parts() {
            parts.push(mixture_part(tp, np)?);
        }
    }
    RadialMeasure::from_parts_merging(atoms, parts)
}

/// Whether `∫∫ (1 ∧ u²s²) τ(du) ν(ds) < ∞`, i.e. `Υ_τ(ν)` is a Lévy measure,
/// decided from the declared metadata.
pub fn upsilon_domain_ok(nu: &RadialMeasure, tau: &DilationMeasure) -> bool {
    // K(s) = ∫ (1 ∧ u²s²) τ(du) grows like s^grow as s → ∞ and behaves like
    // s^small as s → 0.
    let mut grow: f64 = 0.0;
    let mut small: f64 = 2.0;
    for p in tau.measure.parts() {
        if p.lower() == 0.0 {
            let e = p.left_exponent();
            if e <= -3.0 {
                return false;
            }
            if e <= -1.0 {
                grow = grow.max(-e - 1.0 + if e == -1.0 { 1e-9 } else { 0.0 });
            }
        }
        if p.upper().is_infinite() {
            if let Decay::Polynomial(g) = p.decay() {
                if g >= -1.0 {
                    return false;
                }
                if g > -3.0 {
                    small = small.min(-g - 1.0);
                }
            }
        }
    }
    nu.parts().iter().all(|p| p.integrable(0.0, small, grow))
        && (grow == 0.0 || nu.atoms().iter().all(|a| a.location.is_finite()))
}

/// General Upsilon transformation `Υ_τ(ν)(B) = ∫₀^∞ ν(u^{-1}B) τ(du)`.
pub fn upsilon_general(nu: &PolarLevyMeasure, tau: &DilationMeasure) -> Result<TransformedDensity> {
    for c in nu.components() {
        if !upsilon_domain_ok(&c.radial, tau) {
            return Err(LevyError::Domain(format!(
                "{} of this measure is not a Lévy measure",
                tau.name
            )));
        }
    }
    Ok(TransformedDensity::new(
        nu.map_radial(|r| upsilon_radial(r, tau))?,
        tau.name.clone(),
    ))
}

/// `Υ⁰(ν)(B) = ∫₀^∞ ν(u^{-1}B) e^{-u} du`.
pub fn upsilon0(nu: &PolarLevyMeasure) -> Result<TransformedDensity> {
    upsilon_general(nu, &DilationMeasure::exponential())
}

/// `Υ_{α,β}`, dilation measure `β u^{-α-1} e^{-u^β} du`.
pub fn upsilon_alpha_beta(nu: &PolarLevyMeasure, alpha: f64, beta: f64) -> Result<TransformedDensity> {
    upsilon_general(nu, &DilationMeasure::alpha_beta(alpha, beta)?)
}

/// Result of comparing `Υ_{-2,2}(𝒜₁(ρ))` with `𝒜₁(Υ⁰(ρ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub max_discrepancy: f64,
    /// `(direction, r, lhs, rhs)` per grid point.
    pub points: Vec<(usize, f64, f64, f64)>,
}

/// Evaluates both sides of `Υ_{-2,2}(𝒜₁(ρ)) = 𝒜₁(Υ⁰(ρ))` on `grid` and
/// returns the largest relative discrepancy.
pub fn check_commutation(
    rho: &PolarLevyMeasure,
    grid: &[f64],
    budget: &QuadratureBudget,
) -> Result<CommutationReport> {
    if !rho.in_ml(1, &domain_budget())?.member {
        return Err(LevyError::Domain("commutation check needs ρ ∈ 𝔐¹_L".into()));
    }
    let lhs = upsilon_alpha_beta(&arcsine_transform(1, rho)?.measure, -2.0, 2.0)?;
    let rhs = arcsine_transform(1, &upsilon0(rho)?.measure)?;
    compare_densities(&lhs, &rhs, grid, budget)
}

/// Pointwise relative discrepancy `|l − r| / (|l| + floor)` of two transforms
/// with the same directions.
pub fn compare_densities(
    lhs: &TransformedDensity,
    rhs: &TransformedDensity,
    grid: &[f64],
    budget: &QuadratureBudget,
) -> Result<CommutationReport> {
    let a = lhs.tabulate(grid, budget)?;
    let b = rhs.tabulate(grid, budget)?;
    let mut max = 0.0f64;
    let mut points = Vec::with_capacity(a.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let rel = (x.density - y.density).abs() / (x.density.abs() + f64::MIN_POSITIVE);
        max = max.max(if rel.is_nan() { f64::INFINITY } else { rel });
        points.push((x.direction_index, x.r, x.density, y.density));
    }
    Ok(CommutationReport {
        max_discrepancy: max,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::k0;

    fn budget() -> QuadratureBudget {
        QuadratureBudget::with_rel_tol(1e-10)
    }

    fn one(m: RadialMeasure) -> PolarLevyMeasure {
        PolarLevyMeasure::one_dimensional(m)
    }

    fn delta(s: f64) -> PolarLevyMeasure {
        one(RadialMeasure::dirac(s).unwrap())
    }

    fn ex41() -> RadialMeasure {
        RadialMeasure::from_density(
            RadialDensity::new(
                0.0,
                f64::INFINITY,
                Decay::Exponential { rate: 1.0, power: 0.5 },
                |x: f64| PI / 4.0 * x.powf(-0.5) * (-x.sqrt()).exp(),
            )
            .unwrap()
            .with_left_exponent(-0.5),
        )
    }

    fn ex42() -> RadialMeasure {
        RadialMeasure::from_density(
            RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(0.25), |x: f64| {
                PI.sqrt() / 4.0 * x.powf(-0.5) * (-x / 4.0).exp()
            })
            .unwrap()
            .with_left_exponent(-0.5),
        )
    }

    fn exp_density() -> RadialMeasure {
        RadialMeasure::from_density(
            RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), |r: f64| (-r).exp()).unwrap(),
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn arcsine_density_values() {
        let v = arcsine_density(1, 0.5, 1.0).unwrap();
        assert!((v - FRAC_2_PI / 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(arcsine_density(1, 2.0, 1.0).unwrap(), 0.0);
        assert!((arcsine_density(2, 0.5, 1.0).unwrap() - FRAC_2_PI / 0.75f64.sqrt()).abs() < 1e-15);
        assert!(arcsine_density(1, 1.0, 1.0).unwrap().is_infinite());
        assert!(arcsine_density(3, 0.5, 1.0).is_err());
    }

    #[test]
    fn a1_of_dirac() {
        let t = arcsine_transform(1, &delta(1.0)).unwrap();
        for r in [0.1, 0.5, 0.9] {
            let v = t.density(0, r, &budget()).unwrap().value;
            assert!((v - FRAC_2_PI / (1.0 - r * r).sqrt()).abs() < 1e-14);
        }
        assert_eq!(t.density(0, 1.5, &budget()).unwrap().value, 0.0);
    }

    #[test]
    fn a1_of_example_41_is_k0() {
        let t = arcsine_transform(1, &one(ex41())).unwrap();
        for r in [0.05, 0.3, 1.0, 2.0, 5.0, 8.0] {
            let v = t.density(0, r, &budget()).unwrap().value;
            assert!(rel(v, k0(r)) < 1e-8, "r = {r}: {v} vs {}", k0(r));
        }
    }

    #[test]
    fn a1_of_example_42_density() {
        let t = arcsine_transform(1, &one(ex42())).unwrap();
        for x in [0.1f64, 1.0, 3.0] {
            let want = 0.5 / PI.sqrt() * (-x * x / 8.0).exp() * k0(x * x / 8.0);
            let v = t.density(0, x, &budget()).unwrap().value;
            assert!(rel(v, want) < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn upsilon_form_agrees() {
        let b = budget();
        let direct = arcsine_transform(1, &delta(1.0)).unwrap();
        let ups = arcsine_transform_upsilon_form(1, &delta(1.0)).unwrap();
        for i in 1..10 {
            let r = i as f64 / 10.0;
            let (x, y) = (direct.density(0, r, &b).unwrap().value, ups.density(0, r, &b).unwrap().value);
            assert!(rel(y, x) < 1e-8);
        }
        let direct = arcsine_transform(1, &one(ex41())).unwrap();
        let ups = arcsine_transform_upsilon_form(1, &one(ex41())).unwrap();
        for r in [0.1, 0.5, 1.0, 2.5, 5.0] {
            let (x, y) = (direct.density(0, r, &b).unwrap().value, ups.density(0, r, &b).unwrap().value);
            assert!(rel(y, x) < 1e-7, "r = {r}: {x} vs {y}");
        }
    }

    #[test]
    fn a2_is_a1_of_square() {
        let b = budget();
        for nu in [delta(1.5), one(ex41()), one(exp_density())] {
            let lhs = arcsine_transform(2, &nu).unwrap();
            let rhs = arcsine_transform(1, &nu.p_transform(2.0).unwrap()).unwrap();
            for r in [0.2, 0.7, 1.1, 3.0] {
                let (x, y) = (lhs.density(0, r, &b).unwrap().value, rhs.density(0, r, &b).unwrap().value);
                assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-12), "r = {r}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn half_integral_examples() {
        let b = budget();
        let h = half_integral(&RadialMeasure::dirac(2.0).unwrap()).unwrap();
        let v = h.density(0.5, &b).unwrap().value;
        assert!((v - INV_SQRT_PI / 1.5f64.sqrt()).abs() < 1e-15);
        let hh = half_integral(&half_integral(&RadialMeasure::dirac(1.0).unwrap()).unwrap()).unwrap();
        for u in [0.05, 0.5, 0.95] {
            assert!((hh.density(u, &b).unwrap().value - 1.0).abs() < 1e-9);
        }
        assert_eq!(hh.density(1.5, &b).unwrap().value, 0.0);
    }

    #[test]
    fn half_integral_of_exponential_vs_riemann() {
        // Oracle: 10⁶-point midpoint sum after s = u + w², w ∈ (0, 12).
        let h = half_integral(&exp_density()).unwrap();
        for u in [0.5f64, 1.0, 2.0] {
            let n = 1_000_000;
            let wmax = 12.0;
            let dw = wmax / n as f64;
            let oracle: f64 = (0..n)
                .map(|i| {
                    let w = (i as f64 + 0.5) * dw;
                    2.0 * (-(u + w * w)).exp()
                })
                .sum::<f64>()
                * dw
                * INV_SQRT_PI;
            let v = h.density(u, &budget()).unwrap().value;
            assert!(rel(v, oracle) < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn half_integral_domain() {
        let slow = RadialMeasure::from_density(
            RadialDensity::new(1.0, f64::INFINITY, Decay::Polynomial(-0.4), |s: f64| s.powf(-0.4)).unwrap(),
        );
        assert!(matches!(half_integral(&slow), Err(LevyError::Domain(_))));
    }

    #[test]
    fn inversion_examples() {
        let b = budget();
        let t = arcsine_transform(1, &delta(1.0)).unwrap();
        let inv = invert_arcsine(1, &t, &b).unwrap();
        for u in [0.1, 0.5, 0.9] {
            assert!((inv.tail(0, u, &b).unwrap().value - 1.0).abs() < 1e-8);
        }
        assert_eq!(inv.tail(0, 1.2, &b).unwrap().value, 0.0);

        // K₀ given as a closed-form density → tails (π/2) e^{-√u}.
        let k0_density = TransformedDensity::new(
            one(RadialMeasure::from_density(
                RadialDensity::new(0.0, f64::INFINITY, Decay::exponential(1.0), k0).unwrap(),
            )),
            "K0",
        );
        let inv = invert_arcsine(1, &k0_density, &b).unwrap();
        for u in [0.1f64, 1.0, 4.0, 9.0] {
            let want = PI / 2.0 * (-u.sqrt()).exp();
            assert!(rel(inv.tail(0, u, &b).unwrap().value, want) < 1e-7, "u = {u}");
        }
    }

    #[test]
    fn inversion_rejects_non_range() {
        let b = QuadratureBudget::with_rel_tol(1e-8);
        let indicator = TransformedDensity::new(
            one(RadialMeasure::from_density(
                RadialDensity::new(1.0, 2.0, Decay::Compact, |_| 1.0).unwrap(),
            )),
            "1_(1,2)",
        );
        assert!(matches!(
            invert_arcsine(1, &indicator, &b),
            Err(LevyError::NegativeTail { .. })
        ));
        let certs = range_certificate(1, &indicator, &b).unwrap();
        assert!(!certs[0].support_ok);
        assert!(certs[0].worst_violation > 1e-3);
    }

    #[test]
    fn k2_roundtrip() {
        let b = budget();
        let nu = one(exp_density());
        let inv = invert_arcsine(2, &arcsine_transform(2, &nu).unwrap(), &b).unwrap();
        for u in [0.3f64, 1.0, 2.0] {
            let want = (-u).exp();
            assert!(rel(inv.tail(0, u, &b).unwrap().value, want) < 1e-7);
        }
    }

    #[test]
    fn upsilon_examples() {
        let b = budget();
        let u0 = upsilon0(&delta(1.0)).unwrap();
        for y in [0.1f64, 1.0, 3.0] {
            assert!(rel(u0.density(0, y, &b).unwrap().value, (-y).exp()) < 1e-14);
        }
        let u = upsilon0(&one(ex42())).unwrap();
        for y in [0.05f64, 0.5, 2.0, 10.0] {
            let want = PI / 4.0 * y.powf(-0.5) * (-y.sqrt()).exp();
            assert!(rel(u.density(0, y, &b).unwrap().value, want) < 1e-8, "y = {y}");
        }
        let g = upsilon_alpha_beta(&delta(1.0), -2.0, 2.0).unwrap();
        for y in [0.3f64, 1.0, 2.0] {
            assert!(rel(g.density(0, y, &b).unwrap().value, 2.0 * y * (-y * y).exp()) < 1e-14);
        }
        // Υ_{-1,1} = Υ⁰.
        let a = upsilon_alpha_beta(&one(ex42()), -1.0, 1.0).unwrap();
        for y in [0.2, 1.5] {
            let (x, z) = (a.density(0, y, &b).unwrap().value, u.density(0, y, &b).unwrap().value);
            assert!(rel(x, z) < 1e-12);
        }
        assert!(upsilon_alpha_beta(&delta(1.0), 2.0, 1.0).is_err());
        assert!(upsilon_alpha_beta(&delta(1.0), 0.0, 2.5).is_err());
    }

    #[test]
    fn upsilon_general_instances() {
        let b = budget();
        let id = upsilon_general(&one(ex41()), &DilationMeasure::dirac(1.0).unwrap()).unwrap();
        for y in [0.1, 1.0, 5.0] {
            let want = ex41().density_value(y, &b);
            assert!(rel(id.density(0, y, &b).unwrap().value, want) < 1e-15);
        }
        let nu = one(exp_density());
        let a2 = arcsine_transform(2, &nu).unwrap();
        let ups = upsilon_general(&nu, &DilationMeasure::arcsine()).unwrap();
        for y in [0.2, 1.0, 3.0] {
            let (x, z) = (a2.density(0, y, &b).unwrap().value, ups.density(0, y, &b).unwrap().value);
            assert!(rel(z, x) < 1e-8);
        }
    }

    #[test]
    fn upsilon_domain() {
        // Υ_{1,1} needs ∫^∞ s ν(ds) < ∞.
        let heavy = RadialMeasure::from_density(
            RadialDensity::new(1.0, f64::INFINITY, Decay::Polynomial(-1.5), |s: f64| s.powf(-1.5)).unwrap(),
        );
        assert!(upsilon_alpha_beta(&one(heavy.clone()), 1.0, 1.0).is_err());
        assert!(upsilon0(&one(heavy)).is_ok());
    }

    #[test]
    fn first_moment_identities() {
        let b = QuadratureBudget::with_rel_tol(1e-10);
        let rho = arcsine_transform(1, &delta(1.0)).unwrap();
        let m = rho.radial(0).moment(1.0, &b).unwrap().value;
        assert!((m - FRAC_2_PI).abs() < 1e-10);
        let m0 = upsilon0(&rho.measure).unwrap().radial(0).moment(1.0, &b).unwrap().value;
        assert!((m0 - FRAC_2_PI).abs() < 1e-8, "{m0}");
        let m22 = upsilon_alpha_beta(&rho.measure, -2.0, 2.0).unwrap().radial(0).moment(1.0, &b).unwrap().value;
        assert!((m22 - 1.0 / PI.sqrt()).abs() < 1e-8, "{m22}");
    }

    #[test]
    fn table_csv_is_stable() {
        let t = arcsine_transform(1, &delta(1.0)).unwrap();
        let tab = t.tabulate(&[0.5, 0.25], &budget()).unwrap();
        let csv = tab.to_csv();
        assert!(csv.starts_with("direction_index,r,density,est_error\n0,5e-1,"));
        assert_eq!(csv, t.tabulate(&[0.5, 0.25], &budget()).unwrap().to_csv());
    }

    #[test]
    fn moment_constant_closed_forms() {
        let sp = std::f64::consts::PI.sqrt();
        assert!((half_integral_moment_constant(0.0).unwrap() - 2.0 / sp).abs() < 1e-14);
        assert!((half_integral_moment_constant(1.0).unwrap() - 4.0 / (3.0 * sp)).abs() < 1e-14);
        assert!(half_integral_moment_constant(-1.0).is_err());
    }

    #[test]
    fn moment_bound_on_battery() {
        let b = budget();
        let battery = [
            ("delta2", crate::battery::dirac(2.0).unwrap()),
            ("exp", crate::battery::exp_density()),
            ("ex41", crate::battery::ex41()),
            ("ex42", crate::battery::ex42()),
            ("uniform", crate::battery::uniform(0.5, 3.0).unwrap()),
        ];
        for (name, rho) in &battery {
            for alpha in [0.0, 1.0] {
                let (lhs, rhs) = half_integral_moment_bound(rho, alpha, 1.0, &b).unwrap();
                assert!(lhs > 0.0 && lhs <= rhs * (1.0 + 1e-9), "{name}, alpha {alpha}: {lhs} > {rhs}");
            }
        }
        // Single atom, α = 0: the left side is 2π^{-1/2}(s − b)^{1/2}.
        let (lhs, _) = half_integral_moment_bound(&battery[0].1, 0.0, 1.0, &b).unwrap();
        assert!((lhs - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn moment_bound_holds_for_atoms(s in 0.2f64..10.0, alpha in 0.0f64..2.0, cut in 0.05f64..0.95) {
                let rho = crate::battery::dirac(s).unwrap();
                let (lhs, rhs) = half_integral_moment_bound(&rho, alpha, cut * s, &budget()).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-9));
            }
        }
    }
}

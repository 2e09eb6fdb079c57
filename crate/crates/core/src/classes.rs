//! Class membership: a finite-difference falsifier for complete monotonicity,
//! the arcsine representation of completely monotone functions, the
//! Gaussian/arcsine mixture identity, and classification of Lévy measures
//! into the Jurek class U, the Bondesson class B, type G and the range of the
//! arcsine transforms.
//!
//! None of these tests proves membership; every verdict carries the grid, the
//! worst violation found and the tolerance it was judged against.

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{
    integrate_semiinfinite, sqrt_decay, Decay, Estimate, QuadratureBudget, QuadratureError,
};
use crate::radial::{PolarLevyMeasure, RadialMeasure};
use crate::special::HALF_SQRT_PI;
use crate::transforms::{default_radius_grid, log_grid, range_certificate, TransformedDensity};

/// Relative tolerance of the complete-monotonicity and monotonicity tests.
pub const CM_TOLERANCE: f64 = 1e-6;
/// Highest difference order used by the complete-monotonicity test.
pub const CM_MAX_ORDER: usize = 8;
/// Grid density of the monotonicity (Jurek) test.
pub const MONOTONE_POINTS_PER_DECADE: usize = 64;
/// Grid density of the complete-monotonicity tests run by [`classify`].
pub const CM_POINTS_PER_DECADE: usize = 16;

/// Step sizes are `x · STEP_NUMERATORS[i] / 16`.
const STEP_NUMERATORS: [usize; 3] = [1, 2, 4];

// ---------------------------------------------------------------------------
// Complete monotonicity

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CmVerdict {
    Consistent,
    Violated { x: f64, n: usize, h: f64 },
}

/// Outcome of [`is_completely_monotone`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub verdict: CmVerdict,
    /// Largest `−(−1)ⁿ Δₕⁿ g(x) / |g(x)|` over the grid (0 when none is
    /// negative).
    pub worst_violation: f64,
    pub at: f64,
    pub tolerance: f64,
    pub max_order: usize,
    pub grid_points: usize,
    /// Grid points where `g(x) = 0`, so no relative test was possible.
    pub underflow: Vec<f64>,
}

impl CmReport {
    pub fn consistent(&self) -> bool {
        self.verdict == CmVerdict::Consistent
    }
}

/// `lo..=hi` with `per_decade` log-spaced points per decade.
pub fn decade_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize + 1;
    log_grid(lo, hi, n)
}

/// Falsification test for complete monotonicity: checks
/// `(−1)ⁿ Δₕⁿ g(x) ≥ −tol·|g(x)|` for `n ≤ max_order` and
/// `h ∈ {x/16, x/8, x/4}` at every grid point.
pub fn is_completely_monotone<F>(g: F, grid: &[f64], max_order: usize, tol: f64) -> Result<CmReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    cm_test(|x| Ok(g(x)), grid, max_order, tol)
}

struct PointResult {
    worst: f64,
    n: usize,
    h: f64,
    underflow: bool,
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for j in 1..n {
        row[j] = row[j - 1] * (n + 1 - j) as f64 / j as f64;
    }
    row
}

fn cm_point<F>(g: &F, x: f64, max_order: usize) -> Result<PointResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let reach = STEP_NUMERATORS[STEP_NUMERATORS.len() - 1] * max_order;
    let mut cache: Vec<Option<f64>> = vec![None; reach + 1];
    let mut value = |m: usize| -> Result<f64> {
        if let Some(v) = cache[m] {
            return Ok(v);
        }
        let arg = x * (1.0 + m as f64 / 16.0);
        let v = g(arg)?;
        if !v.is_finite() {
            return Err(LevyError::Domain(format!("function is not finite at {arg}")));
        }
        cache[m] = Some(v);
        Ok(v)
    };
    let g0 = value(0)?;
    if g0 == 0.0 {
        return Ok(PointResult {
            worst: 0.0,
            n: 0,
            h: 0.0,
            underflow: true,
        });
    }
    let mut out = PointResult {
        worst: 0.0,
        n: 0,
        h: 0.0,
        underflow: false,
    };
    if g0 < 0.0 {
        out.worst = 1.0;
    }
    for &k in &STEP_NUMERATORS {
        let vals = (0..=max_order)
            .map(|j| value(k * j))
            .collect::<Result<Vec<_>>>()?;
        for n in 1..=max_order {
            let row = binomial_row(n);
            let s: f64 = (0..=n)
                .map(|j| if j % 2 == 0 { row[j] * vals[j] } else { -row[j] * vals[j] })
                .sum();
            let v = -s / g0.abs();
            if v > out.worst {
                out.worst = v;
                out.n = n;
                out.h = x * k as f64 / 16.0;
            }
        }
    }
    Ok(out)
}

fn cm_test<F>(g: F, grid: &[f64], max_order: usize, tol: f64) -> Result<CmReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(LevyError::Domain("grid points must be positive and finite".into()));
    }
    let points = grid
        .par_iter()
        .map(|&x| cm_point(&g, x, max_order))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0;
    let mut at = grid.first().copied().unwrap_or(0.0);
    let mut order = 0;
    let mut step = 0.0;
    let mut underflow = Vec::new();
    for (p, &x) in points.iter().zip(grid) {
        if p.underflow {
            underflow.push(x);
        }
        if p.worst > worst {
            worst = p.worst;
            at = x;
            order = p.n;
            step = p.h;
        }
    }
    let verdict = if worst > tol {
        CmVerdict::Violated {
            x: at,
            n: order,
            h: step,
        }
    } else {
        CmVerdict::Consistent
    };
    Ok(CmReport {
        verdict,
        worst_violation: worst,
        at,
        tolerance: tol,
        max_order,
        grid_points: grid.len(),
        underflow,
    })
}

// ---------------------------------------------------------------------------
// Bernstein and arcsine representations

/// Bernstein measure `Q` of a completely monotone `g(u) = ∫ e^{-uv} Q(dv)`.
/// Lives on `(0, ∞)`, so `Q({0}) = 0` by construction.
#[derive(Clone, Debug)]
pub struct BernsteinMeasure {
    q: RadialMeasure,
}

impl BernsteinMeasure {
    /// Requires `∫ (v^{-1/2} ∧ v^{-3/2}) Q(dv) < ∞`, which is what
    /// `∫ (1 ∧ r²) g(r²) dr < ∞` amounts to.
    pub fn new(q: RadialMeasure) -> Result<Self> {
        if let Some(p) = q.parts().iter().find(|p| !p.integrable(0.0, -0.5, -1.5)) {
            return Err(LevyError::Domain(format!(
                "∫ (v^(-1/2) ∧ v^(-3/2)) Q(dv) diverges for part {}",
                p.label()
            )));
        }
        Ok(Self { q })
    }

    pub fn measure(&self) -> &RadialMeasure {
        &self.q
    }
}

/// `g(u) = ∫ e^{-uv} Q(dv)` together with
/// `h(s) = (√π/2) ∫ e^{-sv} v^{1/2} Q(dv)`, so that
/// `g(r²) = ∫ a₁(r; s) h(s) ds`.
#[derive(Clone, Debug)]
pub struct ArcsineRepresentation {
    q: RadialMeasure,
}

pub fn cm_to_arcsine_rep(q: &BernsteinMeasure) -> ArcsineRepresentation {
    ArcsineRepresentation { q: q.q.clone() }
}

impl ArcsineRepresentation {
    pub fn g(&self, u: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if !(u > 0.0) {
            return Err(LevyError::Domain(format!("g needs u > 0, got {u}")));
        }
        self.q.integrate(|v| (-u * v).exp(), budget)
    }

    pub fn h(&self, s: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if !(s > 0.0) {
            return Err(LevyError::Domain(format!("h needs s > 0, got {s}")));
        }
        Ok(self.q.integrate(|v| (-s * v).exp() * v.sqrt(), budget)?.scale(HALF_SQRT_PI))
    }

    /// Decay of `h` at infinity, from the behaviour of `Q` near the origin.
    pub fn h_decay(&self) -> Decay {
        let bottom = self.q.inf_support();
        if self.q.is_zero() {
            Decay::Compact
        } else if bottom > 0.0 {
            Decay::exponential(bottom)
        } else {
            let alpha = self
                .q
                .parts()
                .iter()
                .filter(|p| p.lower() == 0.0)
                .map(|p| p.left_exponent())
                .fold(f64::INFINITY, f64::min);
            Decay::Polynomial(-(1.5 + alpha))
        }
    }

    /// `∫ a₁(r; s) h(s) ds`, by quadrature over `s = r² + w²`.
    pub fn arcsine_side(&self, r: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if !(r > 0.0) {
            return Err(LevyError::Domain(format!("need r > 0, got {r}")));
        }
        if self.q.is_zero() {
            return Ok(Estimate::default());
        }
        let inner = budget.inner();
        let r2 = r * r;
        let f = |w: f64| 2.0 * FRAC_2_PI * self.h(r2 + w * w, &inner).map(|e| e.value).unwrap_or(f64::NAN);
        Ok(integrate_semiinfinite(f, 0.0, sqrt_decay(self.h_decay()), budget)?)
    }
}

// ---------------------------------------------------------------------------
// Gaussian density as an arcsine mixture

/// Symmetric arcsine density `a(x; s) = π^{-1}(s − x²)^{-1/2}` on `|x| < √s`.
pub fn symmetric_arcsine(x: f64, s: f64) -> f64 {
    let gap = s - x * x;
    if gap < 0.0 {
        0.0
    } else {
        arcsine_at_gap(gap)
    }
}

/// Both sides of `φ(x; t) = t^{-1} ∫₀^∞ e^{-s/t} a(x; s) ds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianArcsine {
    pub x: f64,
    pub t: f64,
    /// `(2πt)^{-1/2} e^{-x²/(2t)}`.
    pub closed_form: f64,
    /// `t^{-1} ∫ e^{-s/t} a(x; s) ds` by quadrature.
    pub mixture: f64,
    pub mixture_error: f64,
    /// `t^{-1} ∫ e^{-s/t} a(x; 2s) ds`: the same mixture with the arcsine
    /// parameter doubled, i.e. an exponential mixing law of mean `2t`.
    pub doubled_mixture: f64,
}

impl GaussianArcsine {
    pub fn discrepancy(&self) -> f64 {
        (self.mixture - self.closed_form).abs() / self.closed_form
    }

    pub fn doubled_discrepancy(&self) -> f64 {
        (self.doubled_mixture - self.closed_form).abs() / self.closed_form
    }
}

fn arcsine_mixture(x: f64, t: f64, stretch: f64, budget: &QuadratureBudget) -> Result<Estimate> {
    // a(x; c·s) is singular at s = x²/c. With s = x²/c + w² the gap
    // c·s − x² = c·w² is exact, so the kernel is evaluated at its gap rather
    // than at a rounded s.
    let lower = x * x / stretch;
    let f = |w: f64| {
        let s = lower + w * w;
        2.0 * w * (-s / t).exp() * arcsine_at_gap(stretch * w * w) / t
    };
    Ok(integrate_semiinfinite(f, 0.0, sqrt_decay(Decay::exponential(1.0 / t)), budget)?)
}

/// `a(x; s)` expressed through `s − x²`.
fn arcsine_at_gap(gap: f64) -> f64 {
    if gap > 0.0 {
        1.0 / (PI * gap.sqrt())
    } else {
        f64::INFINITY
    }
}

/// Evaluates both sides of the Gaussian/arcsine mixture identity.
pub fn gaussian_arcsine_identity(x: f64, t: f64, budget: &QuadratureBudget) -> Result<GaussianArcsine> {
    if !(t > 0.0 && t.is_finite()) || !x.is_finite() {
        return Err(LevyError::Domain(format!("need finite x and t > 0, got x = {x}, t = {t}")));
    }
    let closed_form = (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
    let mixture = arcsine_mixture(x, t, 1.0, budget)?;
    let doubled = arcsine_mixture(x, t, 2.0, budget)?;
    Ok(GaussianArcsine {
        x,
        t,
        closed_form,
        mixture: mixture.value,
        mixture_error: mixture.error,
        doubled_mixture: doubled.value,
    })
}

// ---------------------------------------------------------------------------
// Classification

/// Evidence behind one class flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub grid_points: usize,
    pub worst_violation: f64,
    pub at: f64,
    pub tolerance: f64,
    pub note: String,
}

/// A class flag: `None` when the test was inconclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFlag {
    pub value: Option<bool>,
    pub certificate: Certificate,
}

impl ClassFlag {
    fn decided(value: bool, certificate: Certificate) -> Self {
        Self {
            value: Some(value),
            certificate,
        }
    }

    fn plain(value: bool, tolerance: f64, note: impl Into<String>) -> Self {
        Self::decided(
            value,
            Certificate {
                grid_points: 0,
                worst_violation: 0.0,
                at: 0.0,
                tolerance,
                note: note.into(),
            },
        )
    }

    fn inconclusive(tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            value: None,
            certificate: Certificate {
                grid_points: 0,
                worst_violation: 0.0,
                at: 0.0,
                tolerance,
                note: note.into(),
            },
        }
    }

    pub fn is_true(&self) -> bool {
        self.value == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.value == Some(false)
    }

    /// Conjunction over directions; certificates are merged.
    fn and(self, other: ClassFlag) -> ClassFlag {
        let value = match (self.value, other.value) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (None, _) | (_, None) => None,
            _ => Some(true),
        };
        let (a, b) = (self.certificate, other.certificate);
        let (worst, at) = if b.worst_violation > a.worst_violation {
            (b.worst_violation, b.at)
        } else {
            (a.worst_violation, a.at)
        };
        let note = match (a.note.is_empty(), b.note.is_empty()) {
            (true, _) => b.note,
            (_, true) => a.note,
            _ if a.note == b.note => a.note,
            _ => format!("{}; {}", a.note, b.note),
        };
        ClassFlag {
            value,
            certificate: Certificate {
                grid_points: a.grid_points + b.grid_points,
                worst_violation: worst,
                at,
                tolerance: a.tolerance.max(b.tolerance),
                note,
            },
        }
    }
}

/// Class flags of a Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub ml1: ClassFlag,
    pub ml2: ClassFlag,
    pub jurek_u: ClassFlag,
    pub bondesson_b: ClassFlag,
    pub type_g: ClassFlag,
    pub type_a_range: ClassFlag,
}

impl ClassVerdict {
    /// `B ⇒ U` and `G ⇒ range(𝒜₁)` whenever both sides were decided.
    pub fn implications_hold(&self) -> bool {
        let b_u = !(self.bondesson_b.is_true() && self.jurek_u.is_false());
        let g_a = !(self.type_g.is_true() && self.type_a_range.is_false());
        b_u && g_a
    }

    /// `(name, flag)` in a fixed order.
    pub fn flags(&self) -> [(&'static str, &ClassFlag); 6] {
        [
            ("ML1", &self.ml1),
            ("ML2", &self.ml2),
            ("Jurek_U", &self.jurek_u),
            ("Bondesson_B", &self.bondesson_b),
            ("typeG_G", &self.type_g),
            ("typeA_range", &self.type_a_range),
        ]
    }
}

/// Density value, accepting a non-converged estimate whose error is
/// negligible at the test tolerance.
fn lenient_density(radial: &RadialMeasure, r: f64, budget: &QuadratureBudget) -> Result<f64> {
    match radial.density(r, budget) {
        Ok(e) => Ok(e.value),
        Err(LevyError::Quadrature(QuadratureError::NonConvergent { value, error }))
            if error <= 1e-3 * CM_TOLERANCE * value.abs() =>
        {
            Ok(value)
        }
        Err(e) => Err(e),
    }
}

fn radius_range(radial: &RadialMeasure) -> (f64, f64) {
    let g = default_radius_grid(radial, 2);
    (g[0], g[1])
}

fn ml_flag(nu: &PolarLevyMeasure, k: u32, budget: &QuadratureBudget) -> ClassFlag {
    match nu.in_ml(k, budget) {
        Ok(m) => ClassFlag::plain(
            m.member,
            budget.rel_tol,
            format!(
                "∫(1∧r^{k}) dν = {:e}{}",
                m.certificate,
                if m.from_metadata { " (finiteness from metadata)" } else { "" }
            ),
        ),
        Err(e) => ClassFlag::inconclusive(budget.rel_tol, e.to_string()),
    }
}

fn monotone_flag(radial: &RadialMeasure, budget: &QuadratureBudget) -> ClassFlag {
    if radial.has_atoms() {
        return ClassFlag::plain(false, CM_TOLERANCE, "radial component has atoms");
    }
    if radial.is_zero() {
        return ClassFlag::plain(true, CM_TOLERANCE, "zero measure");
    }
    let (lo, hi) = radius_range(radial);
    let grid = decade_grid(lo, hi, MONOTONE_POINTS_PER_DECADE);
    let values = match grid
        .par_iter()
        .map(|&r| lenient_density(radial, r, budget))
        .collect::<Result<Vec<_>>>()
    {
        Ok(v) => v,
        Err(e) => return ClassFlag::inconclusive(CM_TOLERANCE, e.to_string()),
    };
    let mut worst = 0.0;
    let mut at = grid[0];
    for i in 1..values.len() {
        let scale = values[i].abs().max(values[i - 1].abs());
        if scale == 0.0 {
            continue;
        }
        let inc = (values[i] - values[i - 1]) / scale;
        if inc > worst {
            worst = inc;
            at = grid[i];
        }
    }
    ClassFlag::decided(
        worst <= CM_TOLERANCE,
        Certificate {
            grid_points: grid.len(),
            worst_violation: worst,
            at,
            tolerance: CM_TOLERANCE,
            note: String::new(),
        },
    )
}

fn cm_flag<F>(f: F, lo: f64, hi: f64, what: &str) -> ClassFlag
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = decade_grid(lo, hi, CM_POINTS_PER_DECADE);
    match cm_test(f, &grid, CM_MAX_ORDER, CM_TOLERANCE) {
        Ok(rep) => {
            let note = match &rep.verdict {
                CmVerdict::Consistent => String::new(),
                CmVerdict::Violated { x, n, h } => format!("{what}: order {n} fails at x = {x:e}, h = {h:e}"),
            };
            ClassFlag::decided(
                rep.consistent(),
                Certificate {
                    grid_points: rep.grid_points,
                    worst_violation: rep.worst_violation,
                    at: rep.at,
                    tolerance: rep.tolerance,
                    note,
                },
            )
        }
        Err(e) => ClassFlag::inconclusive(CM_TOLERANCE, e.to_string()),
    }
}

fn bondesson_flag(radial: &RadialMeasure, budget: &QuadratureBudget) -> ClassFlag {
    if radial.has_atoms() {
        return ClassFlag::plain(false, CM_TOLERANCE, "radial component has atoms");
    }
    if radial.is_zero() {
        return ClassFlag::plain(true, CM_TOLERANCE, "zero measure");
    }
    let (lo, hi) = radius_range(radial);
    cm_flag(|r| lenient_density(radial, r, budget), lo, hi, "ℓ(r)")
}

fn type_g_flag(radial: &RadialMeasure, budget: &QuadratureBudget) -> ClassFlag {
    if radial.has_atoms() {
        return ClassFlag::plain(false, CM_TOLERANCE, "radial component has atoms");
    }
    if radial.is_zero() {
        return ClassFlag::plain(true, CM_TOLERANCE, "zero measure");
    }
    let (lo, hi) = radius_range(radial);
    cm_flag(|u| lenient_density(radial, u.sqrt(), budget), lo * lo, hi * hi, "ℓ(√u)")
}

/// Classifies a Lévy measure given by lazily evaluated radial densities.
/// Each flag is the conjunction over directions.
pub fn classify(nu: &TransformedDensity, budget: &QuadratureBudget) -> ClassVerdict {
    let measure = &nu.measure;
    let ml1 = ml_flag(measure, 1, budget);
    let ml2 = ml_flag(measure, 2, budget);
    let all = |f: &dyn Fn(&RadialMeasure) -> ClassFlag| -> ClassFlag {
        measure
            .components()
            .iter()
            .map(|c| f(&c.radial))
            .reduce(ClassFlag::and)
            .unwrap_or_else(|| ClassFlag::plain(true, CM_TOLERANCE, "zero measure"))
    };
    let jurek_u = all(&|r| monotone_flag(r, budget));
    let bondesson_b = if jurek_u.is_false() {
        ClassFlag::plain(false, CM_TOLERANCE, "not in U, hence not in B")
    } else {
        all(&|r| bondesson_flag(r, budget))
    };
    let type_g = all(&|r| type_g_flag(r, budget));
    let type_a_range = type_a_flag(nu, &type_g, budget);
    ClassVerdict {
        ml1,
        ml2,
        jurek_u,
        bondesson_b,
        type_g,
        type_a_range,
    }
}

fn type_a_flag(nu: &TransformedDensity, type_g: &ClassFlag, budget: &QuadratureBudget) -> ClassFlag {
    let certified = match range_certificate(1, nu, budget) {
        Ok(certs) => certs
            .into_iter()
            .map(|c| {
                ClassFlag::decided(
                    c.in_range,
                    Certificate {
                        grid_points: c.grid_points,
                        worst_violation: c.worst_violation,
                        at: c.at,
                        tolerance: c.tolerance,
                        note: if c.support_ok {
                            String::new()
                        } else {
                            "support property fails".into()
                        },
                    },
                )
            })
            .reduce(ClassFlag::and)
            .unwrap_or_else(|| ClassFlag::plain(true, CM_TOLERANCE, "zero measure")),
        Err(e) => ClassFlag::inconclusive(crate::transforms::RANGE_TOLERANCE, e.to_string()),
    };
    if type_g.is_true() && !certified.is_true() {
        let mut flag = certified;
        flag.value = Some(true);
        flag.certificate.note = format!("implied by type G; inversion: {}", flag.certificate.note);
        flag
    } else {
        certified
    }
}

/// [`classify`] for a measure given directly.
pub fn classify_measure(nu: &PolarLevyMeasure, budget: &QuadratureBudget) -> ClassVerdict {
    classify(&TransformedDensity::new(nu.clone(), "input"), budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{dirac, ex41, exp_density, gamma2_density, k0_density, on_line};
    use crate::radial::RadialDensity;
    use crate::special::k0;
    use crate::transforms::{arcsine_transform, invert_arcsine, upsilon0};
    use proptest::prelude::*;

    fn budget() -> QuadratureBudget {
        QuadratureBudget::with_rel_tol(1e-10)
    }

    fn grid() -> Vec<f64> {
        decade_grid(1e-2, 1e2, CM_POINTS_PER_DECADE)
    }

    #[test]
    fn binomial_rows() {
        assert_eq!(binomial_row(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        assert_eq!(binomial_row(8)[4], 70.0);
    }

    #[test]
    fn exp_is_cm() {
        let rep = is_completely_monotone(|u| (-u).exp(), &grid(), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
        assert!(rep.consistent(), "{rep:?}");
    }

    #[test]
    fn k0_sqrt_is_cm() {
        let rep = is_completely_monotone(|u| k0(u.sqrt()), &grid(), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
        assert!(rep.consistent(), "{rep:?}");
    }

    #[test]
    fn u_exp_is_not_cm() {
        let rep = is_completely_monotone(|u| u * (-u).exp(), &grid(), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
        match rep.verdict {
            CmVerdict::Violated { x, n, .. } => assert!(x < 1.0 && n == 1, "at {x}, order {n}"),
            v => panic!("expected violation, got {v:?}"),
        }
    }

    #[test]
    fn underflow_is_flagged() {
        let rep = is_completely_monotone(|u| (-u).exp(), &[800.0, 1.0], 4, CM_TOLERANCE).unwrap();
        assert_eq!(rep.underflow, vec![800.0]);
        assert!(rep.consistent());
    }

    #[test]
    fn nonfinite_is_rejected() {
        assert!(is_completely_monotone(|_| f64::NAN, &[1.0], 2, CM_TOLERANCE).is_err());
    }

    #[test]
    fn bernstein_dirac() {
        let q = BernsteinMeasure::new(dirac(1.0).unwrap()).unwrap();
        let rep = cm_to_arcsine_rep(&q);
        let b = budget();
        for r in [0.5, 1.0, 2.0] {
            assert!((rep.g(r * r, &b).unwrap().value - (-r * r).exp()).abs() < 1e-15);
            let s = rep.arcsine_side(r, &b).unwrap().value;
            assert!((s - (-r * r).exp()).abs() < 1e-8, "r = {r}: {s}");
        }
        assert!((rep.h(2.0, &b).unwrap().value - HALF_SQRT_PI * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn bernstein_density_matches_closed_form() {
        // Q(dv) = e^{-v} dv: g(u) = 1/(1+u), h(s) = (π/4)(1+s)^{-3/2}.
        let q = BernsteinMeasure::new(exp_density()).unwrap();
        let rep = cm_to_arcsine_rep(&q);
        let b = budget();
        for s in [0.1, 1.0, 5.0] {
            let h = rep.h(s, &b).unwrap().value;
            assert!((h - PI / 4.0 * (1.0 + s).powf(-1.5)).abs() < 1e-9);
        }
        for r in [0.3, 1.0, 3.0] {
            let lhs = rep.arcsine_side(r, &b).unwrap().value;
            assert!((lhs - 1.0 / (1.0 + r * r)).abs() < 1e-8, "r = {r}: {lhs}");
        }
    }

    #[test]
    fn bernstein_zero_and_domain() {
        let rep = cm_to_arcsine_rep(&BernsteinMeasure::new(RadialMeasure::zero()).unwrap());
        assert_eq!(rep.g(1.0, &budget()).unwrap().value, 0.0);
        assert_eq!(rep.h(1.0, &budget()).unwrap().value, 0.0);
        assert_eq!(rep.arcsine_side(1.0, &budget()).unwrap().value, 0.0);
        // v^{-1.6} near 0 is too singular.
        let bad = RadialDensity::new(0.0, 1.0, Decay::Compact, |v: f64| v.powf(-1.6))
            .unwrap()
            .with_left_exponent(-1.6);
        assert!(BernsteinMeasure::new(RadialMeasure::from_density(bad)).is_err());
    }

    #[test]
    fn gaussian_mixture_values() {
        let b = budget();
        let r = gaussian_arcsine_identity(0.0, 1.0, &b).unwrap();
        assert!((r.closed_form - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        // With a(x; s) as written the mixture is the N(0, t/2) density.
        assert!((r.mixture - 1.0 / PI.sqrt()).abs() < 1e-10);
        assert!(r.doubled_discrepancy() < 1e-10);
        for (x, t) in [(1.0, 1.0), (2.0, 0.5), (0.3, 3.0)] {
            let r = gaussian_arcsine_identity(x, t, &b).unwrap();
            let half = (-x * x / t).exp() / (PI * t).sqrt();
            assert!((r.mixture - half).abs() < 1e-10 * half.max(1e-3), "{r:?}");
            assert!(r.doubled_discrepancy() < 1e-8, "{r:?}");
        }
        assert!(gaussian_arcsine_identity(1.0, 0.0, &b).is_err());
    }

    #[test]
    fn classify_a1_of_dirac() {
        let td = arcsine_transform(1, &on_line(dirac(1.0).unwrap())).unwrap();
        let v = classify(&td, &budget());
        assert!(v.jurek_u.is_false(), "{:?}", v.jurek_u);
        assert!(v.bondesson_b.is_false());
        assert!(v.type_a_range.is_true(), "{:?}", v.type_a_range);
        assert!(v.ml1.is_true() && v.ml2.is_true());
        assert!(v.implications_hold());
    }

    #[test]
    fn classify_k0_density() {
        let v = classify_measure(&on_line(k0_density()), &budget());
        assert!(v.type_g.is_true(), "{:?}", v.type_g);
        assert!(v.type_a_range.is_true(), "{:?}", v.type_a_range);
        assert!(v.jurek_u.is_true() && v.bondesson_b.is_true());
    }

    #[test]
    fn classify_exponential() {
        let v = classify_measure(&on_line(exp_density()), &budget());
        assert!(v.jurek_u.is_true(), "{:?}", v.jurek_u);
        assert!(v.bondesson_b.is_true(), "{:?}", v.bondesson_b);
        assert!(v.type_g.is_true(), "{:?}", v.type_g);
        assert!(v.type_a_range.is_true());
    }

    #[test]
    fn classify_negatives() {
        let b = budget();
        let v = classify_measure(&on_line(gamma2_density()), &b);
        assert!(v.jurek_u.is_false() && v.bondesson_b.is_false() && v.type_g.is_false());
        let v = classify_measure(&on_line(dirac(1.0).unwrap()), &b);
        assert!(v.jurek_u.is_false() && v.type_g.is_false() && v.type_a_range.is_false());
        let v = classify_measure(&on_line(crate::battery::uniform(1.0, 2.0).unwrap()), &b);
        assert!(v.jurek_u.is_false() && v.type_a_range.is_false());
    }

    #[test]
    fn type_g_chain_recovers_cm_tails() {
        // ν̃ with density K₀ is of type G; the recovered ν has CM density,
        // equivalently CM tails vanishing at infinity.
        let b = budget();
        let td = TransformedDensity::new(on_line(k0_density()), "K0");
        assert!(classify(&td, &b).type_g.is_true());
        let inv = invert_arcsine(1, &td, &b).unwrap();
        let tails = |u: f64| inv.tail(0, u, &b).map(|e| e.value);
        let rep = cm_test(tails, &decade_grid(1e-2, 1e2, 8), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
        assert!(rep.consistent(), "{rep:?}");
        // The Υ⁰ preimage exists: Υ⁰(ex42) = ex41 is CM-densitied.
        let ex41_cm = is_completely_monotone(
            |x| PI / 4.0 * x.powf(-0.5) * (-x.sqrt()).exp(),
            &grid(),
            CM_MAX_ORDER,
            CM_TOLERANCE,
        )
        .unwrap();
        assert!(ex41_cm.consistent());
    }

    #[test]
    fn jurek_members_are_in_range() {
        let b = budget();
        for m in [exp_density(), k0_density(), crate::battery::uniform(0.0, 1.0).unwrap()] {
            let v = classify_measure(&on_line(m), &b);
            assert!(v.jurek_u.is_true(), "{:?}", v.jurek_u);
            assert!(v.type_a_range.is_true(), "{:?}", v.type_a_range);
        }
    }

    #[test]
    fn upsilon0_preserves_ml1() {
        let b = budget();
        let not_ml1 = RadialMeasure::from_density(
            RadialDensity::new(0.0, 1.0, Decay::Compact, |r: f64| r.powf(-2.5))
                .unwrap()
                .with_left_exponent(-2.5),
        );
        for m in [dirac(1.0).unwrap(), ex41(), crate::battery::ex42(), not_ml1] {
            let nu = on_line(m);
            let before = nu.in_ml(1, &b).unwrap().member;
            let after = upsilon0(&nu).unwrap().measure.in_ml(1, &b).unwrap().member;
            assert_eq!(before, after);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn exponential_mixtures_are_cm(a in 0.1f64..5.0, b in 0.1f64..5.0, w in 0.0f64..1.0) {
            let g = |u: f64| w * (-a * u).exp() + (1.0 - w) * (-b * u).exp();
            let rep = is_completely_monotone(g, &decade_grid(1e-2, 10.0, 8), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
            prop_assert!(rep.consistent());
        }

        #[test]
        fn shifted_bumps_are_not_cm(c in 0.5f64..5.0) {
            let g = |u: f64| (-(u - c) * (u - c)).exp();
            let rep = is_completely_monotone(g, &decade_grid(1e-2, 10.0, 16), CM_MAX_ORDER, CM_TOLERANCE).unwrap();
            prop_assert!(!rep.consistent());
        }

        #[test]
        fn gaussian_doubled_mixture(x in -3.0f64..3.0, t in 0.2f64..4.0) {
            let r = gaussian_arcsine_identity(x, t, &budget()).unwrap();
            prop_assert!(r.doubled_discrepancy() < 1e-8);
        }
    }
}

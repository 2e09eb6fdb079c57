//! Stochastic integrals `∫₀^T f(t) dX_t` of deterministic integrands against
//! Lévy processes: the induced map on Lévy–Khintchine triplets, an
//! approximate sampler, and a characteristic-function check tying the two
//! together.
//!
//! Characteristic functions use the centring `1/(1 + |x|²)`:
//! `ψ(z) = −½⟨Σz, z⟩ + i⟨γ, z⟩ + ∫ (e^{i⟨x,z⟩} − 1 − i⟨x,z⟩/(1+|x|²)) ν(dx)`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery;
use crate::error::{LevyError, Result};
use crate::quadrature::{adaptive, integrate_segment, Decay, QuadratureBudget, QuadratureError, Segment};
use crate::radial::{LevyTriplet, PolarLevyMeasure, RadialDensity, RadialMeasure};
use crate::special::{h_inverse, HALF_SQRT_PI};
use crate::transforms::{upsilon_general, DilationMeasure};

// ---------------------------------------------------------------------------
// Integrands

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrandKind {
    /// `cos(πt/2)` on `(0, 1)`.
    CosHalfPi,
    /// `(log 1/t)^{1/2}` on `(0, 1)`.
    LogSqrt,
    /// `h*(s)`, the inverse of `h(t) = ∫_t^∞ e^{-u²} du`, on `(0, √π/2)`.
    GInverse,
    /// `1` on `(0, 1)`: the law of `X₁` itself.
    Identity,
    Custom,
}

type Integrand = dyn Fn(f64) -> f64 + Send + Sync;

/// A nonnegative square-integrable integrand on `(0, T)` together with its
/// dilation measure, the image of Lebesgue measure on `(0, T)` under `f`.
#[derive(Clone)]
pub struct IntegrandSpec {
    pub kind: IntegrandKind,
    pub name: String,
    pub horizon: f64,
    /// `∫₀^T f(t)² dt`.
    pub square_integral: f64,
    f: Arc<Integrand>,
    dilation: DilationMeasure,
}

impl fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("square_integral", &self.square_integral)
            .finish()
    }
}

fn gaussian_tail_density(rate_power_one: bool) -> RadialDensity {
    // e^{-u²} (rate_power_one = false) or 2u e^{-u²} (true) on (0, ∞).
    let decay = Decay::Exponential {
        rate: 1.0,
        power: 2.0,
    };
    if rate_power_one {
        RadialDensity::new(0.0, f64::INFINITY, decay, |u: f64| 2.0 * u * (-u * u).exp())
            .expect("valid density")
            .with_left_exponent(1.0)
            .with_label("2u exp(-u^2)")
    } else {
        RadialDensity::new(0.0, f64::INFINITY, decay, |u: f64| (-u * u).exp())
            .expect("valid density")
            .with_label("exp(-u^2)")
    }
}

impl IntegrandSpec {
    pub fn cos_half_pi() -> Self {
        Self {
            kind: IntegrandKind::CosHalfPi,
            name: "cos_half_pi".into(),
            horizon: 1.0,
            square_integral: 0.5,
            f: Arc::new(|t: f64| (FRAC_PI_2 * t).cos()),
            dilation: DilationMeasure::arcsine(),
        }
    }

    pub fn log_sqrt() -> Self {
        Self {
            kind: IntegrandKind::LogSqrt,
            name: "log_sqrt".into(),
            horizon: 1.0,
            square_integral: 1.0,
            f: Arc::new(|t: f64| if t > 0.0 { (-t.ln()).max(0.0).sqrt() } else { f64::INFINITY }),
            dilation: DilationMeasure::new(
                RadialMeasure::from_density(gaussian_tail_density(true)),
                "log_sqrt",
            ),
        }
    }

    pub fn g_inverse() -> Self {
        Self {
            kind: IntegrandKind::GInverse,
            name: "g_inverse".into(),
            horizon: HALF_SQRT_PI,
            // ∫₀^∞ u² e^{-u²} du
            square_integral: 0.5 * HALF_SQRT_PI,
            f: Arc::new(|s: f64| if s > 0.0 { h_inverse(s).unwrap_or(f64::NAN) } else { f64::INFINITY }),
            dilation: DilationMeasure::new(
                RadialMeasure::from_density(gaussian_tail_density(false)),
                "g_inverse",
            ),
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: IntegrandKind::Identity,
            name: "identity".into(),
            horizon: 1.0,
            square_integral: 1.0,
            f: Arc::new(|_| 1.0),
            dilation: DilationMeasure::dirac(1.0).expect("valid atom"),
        }
    }

    /// User integrand. `f` must be nonnegative on `(0, horizon)` and
    /// `dilation` must be its dilation measure; both the total mass (`= T`)
    /// and the second moment (`= ∫f²`) of `dilation` are checked against
    /// quadrature of `f`.
    pub fn custom<F>(
        name: impl Into<String>,
        horizon: f64,
        f: F,
        dilation: DilationMeasure,
        budget: &QuadratureBudget,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(LevyError::Domain(format!("horizon must be positive, got {horizon}")));
        }
        let f: Arc<Integrand> = Arc::new(f);
        let g = f.clone();
        let sq = match adaptive(|t| g(t).powi(2), 0.0, horizon, 0.0, budget) {
            Ok(e) if e.value.is_finite() => e.value,
            Ok(_) | Err(QuadratureError::DivergentIntegral) => {
                return Err(LevyError::Domain("integrand is not square integrable".into()))
            }
            Err(e) => return Err(e.into()),
        };
        let mass = dilation.measure.integrate(|_| 1.0, budget)?.value;
        let second = dilation.measure.integrate(|u| u * u, budget)?.value;
        let tol = 1e3 * budget.rel_tol;
        if (mass - horizon).abs() > tol * horizon || (second - sq).abs() > tol * sq.max(1e-300) {
            return Err(LevyError::Validation(format!(
                "dilation measure (mass {mass}, second moment {second}) does not match the integrand (T = {horizon}, ∫f² = {sq})"
            )));
        }
        Ok(Self {
            kind: IntegrandKind::Custom,
            name: name.into(),
            horizon,
            square_integral: sq,
            f,
            dilation,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "cos_half_pi" | "phi_cos" | "cos" => Ok(Self::cos_half_pi()),
            "log_sqrt" | "psi_m22" => Ok(Self::log_sqrt()),
            "g_inverse" | "g" => Ok(Self::g_inverse()),
            "identity" | "none" => Ok(Self::identity()),
            other => Err(LevyError::Validation(format!("unknown integrand `{other}`"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn dilation(&self) -> &DilationMeasure {
        &self.dilation
    }

    /// `∫₀^T f(t)² dt` by quadrature (independent of the stored constant).
    pub fn square_integral_numeric(&self, budget: &QuadratureBudget) -> Result<f64> {
        let f = self.f.clone();
        Ok(integrate_segment(|t| f(t).powi(2), &Segment::finite(0.0, self.horizon), budget)?.value)
    }
}

// ---------------------------------------------------------------------------
// Triplet maps

/// `C_ξ(c) = ∫ r (1/(1 + c²r²) − 1/(1 + r²)) ν_ξ(dr)`.
fn centring_shift(radial: &RadialMeasure, c: f64, budget: &QuadratureBudget) -> Result<f64> {
    if c == 1.0 || radial.is_zero() {
        return Ok(0.0);
    }
    let c2 = c * c;
    // Written as a single fraction to avoid cancellation for small r.
    let g = move |r: f64| {
        let r2 = r * r;
        r * r2 * (1.0 - c2) / ((1.0 + c2 * r2) * (1.0 + r2))
    };
    Ok(radial.integrate_with_breaks(g, &[1.0], budget)?.value)
}

/// `γ̃ = ∫₀^T f(t) (γ + ∫ x (1/(1+|f(t)x|²) − 1/(1+|x|²)) ν(dx)) dt`.
pub fn map_gamma(mu: &LevyTriplet, f: &IntegrandSpec, budget: &QuadratureBudget) -> Result<DVector<f64>> {
    let seg = Segment::finite(0.0, f.horizon);
    let first = integrate_segment(|t| f.eval(t), &seg, budget)?.value;
    let mut out = &mu.gamma * first;
    let inner = budget.inner();
    for c in mu.nu.components() {
        if c.radial.is_zero() {
            continue;
        }
        let failure = std::sync::Mutex::new(None);
        let w = integrate_segment(
            |t| {
                let ft = f.eval(t);
                match centring_shift(&c.radial, ft, &inner) {
                    Ok(v) => ft * v,
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            &seg,
            budget,
        );
        if let Some(e) = failure.into_inner().expect("lock") {
            return Err(e);
        }
        let w = w?.value;
        for (o, x) in out.iter_mut().zip(&c.direction) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// Triplet of `∫₀^T f(t) dX_t`: `Σ̃ = (∫f²) Σ`, `ν̃ = Υ_τ(ν)` with `τ` the
/// dilation measure of `f`, and `γ̃` by [`map_gamma`].
pub fn map_triplet(mu: &LevyTriplet, f: &IntegrandSpec, budget: &QuadratureBudget) -> Result<LevyTriplet> {
    let (sigma, nu) = map_sigma_nu(&mu.sigma, &mu.nu, f)?;
    let gamma = map_gamma(mu, f, budget)?;
    // Φ_f maps infinitely divisible laws to infinitely divisible laws, so ν̃
    // is a Lévy measure whenever ν is; no further check is needed.
    Ok(LevyTriplet { sigma, nu, gamma })
}

/// Gaussian part and Lévy measure of the image under `f`, without the
/// (nested-quadrature) drift.
pub fn map_sigma_nu(
    sigma: &DMatrix<f64>,
    nu: &PolarLevyMeasure,
    f: &IntegrandSpec,
) -> Result<(DMatrix<f64>, PolarLevyMeasure)> {
    Ok((sigma * f.square_integral, upsilon_general(nu, &f.dilation)?.measure))
}

/// `Φ_cos`: integrand `cos(πt/2)` on `(0, 1)`.
pub fn phi_cos(mu: &LevyTriplet, budget: &QuadratureBudget) -> Result<LevyTriplet> {
    map_triplet(mu, &IntegrandSpec::cos_half_pi(), budget)
}

/// `Ψ_{-2,2}`: integrand `(log 1/t)^{1/2}` on `(0, 1)`.
pub fn psi_m22(mu: &LevyTriplet, budget: &QuadratureBudget) -> Result<LevyTriplet> {
    map_triplet(mu, &IntegrandSpec::log_sqrt(), budget)
}

/// `𝒢`: integrand `h*` on `(0, √π/2)`.
pub fn g_map(mu: &LevyTriplet, budget: &QuadratureBudget) -> Result<LevyTriplet> {
    map_triplet(mu, &IntegrandSpec::g_inverse(), budget)
}

/// Radial density of `ν̃` straight from the time-domain formula
/// `ν̃(B) = ∫₀^T dt ∫ 1_B(f(t)x) ν(dx)`, i.e.
/// `ℓ̃(r) = ∫₀^T ℓ(r/f(t)) f(t)^{-1} dt` for the density parts of `ν`.
/// Atoms are not supported here.
pub fn pushforward_density(
    radial: &RadialMeasure,
    f: &IntegrandSpec,
    r: f64,
    budget: &QuadratureBudget,
) -> Result<f64> {
    if radial.has_atoms() {
        return Err(LevyError::Domain("time-domain pushforward needs a measure without atoms".into()));
    }
    let inner = budget.inner();
    let g = |t: f64| {
        let ft = f.eval(t);
        if !(ft > 0.0) || !ft.is_finite() {
            return 0.0;
        }
        radial.density_value(r / ft, &inner) / ft
    };
    Ok(integrate_segment(g, &Segment::finite(0.0, f.horizon), budget)?.value)
}

// ---------------------------------------------------------------------------
// Characteristic functions

/// `ψ(z)` as `(Re, Im)`.
pub fn characteristic_exponent(mu: &LevyTriplet, z: &[f64], budget: &QuadratureBudget) -> Result<(f64, f64)> {
    let d = mu.dim();
    if z.len() != d {
        return Err(LevyError::Validation(format!("z must have dimension {d}")));
    }
    let zv = DVector::from_column_slice(z);
    let mut re = -0.5 * zv.dot(&(&mu.sigma * &zv));
    let mut im = mu.gamma.dot(&zv);
    for c in mu.nu.components() {
        let w: f64 = c.direction.iter().zip(z).map(|(a, b)| a * b).sum();
        if w == 0.0 || c.radial.is_zero() {
            continue;
        }
        let cr = c
            .radial
            .integrate_with_breaks(|r| -2.0 * (0.5 * r * w).sin().powi(2), &[1.0], budget)?;
        let ci = c
            .radial
            .integrate_with_breaks(|r| (r * w).sin() - r * w / (1.0 + r * r), &[1.0], budget)?;
        re += cr.value;
        im += ci.value;
    }
    Ok((re, im))
}

/// `E e^{i⟨z, X₁⟩}` as `(Re, Im)`.
pub fn characteristic_function(mu: &LevyTriplet, z: &[f64], budget: &QuadratureBudget) -> Result<(f64, f64)> {
    let (re, im) = characteristic_exponent(mu, z, budget)?;
    let m = re.exp();
    Ok((m * im.cos(), m * im.sin()))
}

// ---------------------------------------------------------------------------
// Sampling

/// Approximation parameters of the sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Jumps of size `≤ eps` are replaced by their mean and a Gaussian with
    /// their covariance.
    pub eps: f64,
    /// Time grid resolution.
    pub n_steps: usize,
    /// Upper bound on the expected number of jumps per replica.
    pub max_jumps: usize,
    /// Cells of the tabulated radial distribution of large jumps.
    pub cells: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            n_steps: 1024,
            max_jumps: 100_000,
            cells: 2048,
        }
    }
}

/// Inverse-CDF table of a radial measure restricted to `(eps, ∞)`.
#[derive(Clone, Debug)]
struct RadialTable {
    /// `(lo, hi)`; atoms have `lo == hi`.
    cells: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl RadialTable {
    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        let target = u * self.total();
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.cells.len() - 1);
        let (lo, hi) = self.cells[i];
        if hi.is_finite() {
            lo + (hi - lo) * v
        } else {
            lo
        }
    }
}

/// Far end of the support beyond which the tail mass is negligible.
fn effective_top(radial: &RadialMeasure, total: f64, budget: &QuadratureBudget) -> Result<f64> {
    let top = radial.sup_support();
    if top.is_finite() {
        return Ok(top);
    }
    let mut r = crate::transforms::default_radius_grid(radial, 2)[1];
    for _ in 0..80 {
        if radial.tail(r, budget)?.value <= 1e-14 * total {
            return Ok(r);
        }
        r *= 2.0;
    }
    Err(LevyError::Inconclusive("radial tail does not become negligible".into()))
}

fn radial_table(radial: &RadialMeasure, cfg: &SamplerConfig, budget: &QuadratureBudget) -> Result<RadialTable> {
    let mut cells = Vec::new();
    let mut masses = Vec::new();
    for a in radial.atoms().iter().filter(|a| a.location > cfg.eps) {
        cells.push((a.location, a.location));
        masses.push(a.mass);
    }
    let total = radial.tail(cfg.eps, budget)?.value;
    if !total.is_finite() {
        return Err(LevyError::Domain(format!(
            "ν(r > {}) is infinite; the compound Poisson approximation needs a finite rate",
            cfg.eps
        )));
    }
    if !radial.parts().is_empty() {
        let top = effective_top(radial, total, budget)?;
        let inner = budget.inner();
        for p in radial.parts() {
            let a = p.lower().max(cfg.eps);
            let b = p.upper().min(top);
            if !(b > a) {
                continue;
            }
            let nodes = crate::transforms::log_grid(a, b, cfg.cells.max(2));
            let segs = p.segments(cfg.eps, &nodes);
            let cell_masses = segs
                .par_iter()
                .map(|seg| integrate_segment(|r| p.value(r, &inner), seg, budget).map(|e| e.value))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            for (seg, m) in segs.iter().zip(cell_masses) {
                cells.push((seg.lo, seg.hi));
                masses.push(m.max(0.0));
            }
        }
    }
    let mut acc = 0.0;
    let cumulative = masses
        .iter()
        .map(|m| {
            acc += m;
            acc
        })
        .collect();
    Ok(RadialTable { cells, cumulative })
}

/// Precomputed jump law, drift and Gaussian factor of the approximating
/// process: Brownian part with covariance `Σ + Σ_ε`, drift `b`, and compound
/// Poisson jumps from `ν` restricted to `|x| > ε`.
#[derive(Clone, Debug)]
pub struct LevySampler {
    dim: usize,
    config: SamplerConfig,
    directions: Vec<DVector<f64>>,
    tables: Vec<RadialTable>,
    direction_cumulative: Vec<f64>,
    /// Jump rate `ν(|x| > ε)`.
    pub rate: f64,
    /// `b = γ − ∫_{|x|>ε} x/(1+|x|²) ν(dx) + ∫_{|x|≤ε} x|x|²/(1+|x|²) ν(dx)`.
    pub drift: DVector<f64>,
    /// `Σ + ∫_{|x|≤ε} x xᵀ ν(dx)`.
    pub covariance: DMatrix<f64>,
    sqrt_covariance: DMatrix<f64>,
}

impl LevySampler {
    pub fn new(mu: &LevyTriplet, config: SamplerConfig, budget: &QuadratureBudget) -> Result<Self> {
        if !(config.eps > 0.0) || config.n_steps == 0 {
            return Err(LevyError::Validation("sampler needs eps > 0 and n_steps ≥ 1".into()));
        }
        let d = mu.dim();
        let eps = config.eps;
        let mut drift = mu.gamma.clone();
        let mut covariance = mu.sigma.clone();
        let mut directions = Vec::new();
        let mut tables = Vec::new();
        let mut direction_cumulative = Vec::new();
        let mut rate = 0.0;
        for c in mu.nu.components() {
            let xi = DVector::from_column_slice(&c.direction);
            let radial = &c.radial;
            if radial.is_zero() {
                continue;
            }
            let big = radial.integrate_from(|r| r / (1.0 + r * r), eps, &[], budget)?.value;
            let small_drift = radial
                .integrate_with_breaks(
                    |r| if r <= eps { r * r * r / (1.0 + r * r) } else { 0.0 },
                    &[eps],
                    budget,
                )?
                .value;
            let small_var = radial
                .integrate_with_breaks(|r| if r <= eps { r * r } else { 0.0 }, &[eps], budget)?
                .value;
            drift += &xi * (small_drift - big);
            covariance += &xi * xi.transpose() * small_var;
            let table = radial_table(radial, &config, budget)?;
            rate += table.total();
            direction_cumulative.push(rate);
            directions.push(xi);
            tables.push(table);
        }
        let eig = SymmetricEigen::new(covariance.clone());
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let sqrt_covariance = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self {
            dim: d,
            config,
            directions,
            tables,
            direction_cumulative,
            rate,
            drift,
            covariance,
            sqrt_covariance,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn expected_jumps(&self, horizon: f64) -> f64 {
        self.rate * horizon
    }

    fn check_budget(&self, horizon: f64) -> Result<()> {
        let expected = self.expected_jumps(horizon);
        if expected > self.config.max_jumps as f64 {
            return Err(LevyError::SamplerOverflow {
                expected,
                budget: self.config.max_jumps,
            });
        }
        Ok(())
    }

    fn jump<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let u: f64 = rng.random::<f64>() * self.rate;
        let k = self
            .direction_cumulative
            .partition_point(|&c| c <= u)
            .min(self.directions.len() - 1);
        let r = self.tables[k].sample(rng.random(), rng.random());
        &self.directions[k] * r
    }

    fn jump_count<R: Rng>(&self, horizon: f64, rng: &mut R) -> u64 {
        let lambda = self.rate * horizon;
        if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(rng) as u64
        } else {
            0
        }
    }

    fn normal<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let n = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
        &self.sqrt_covariance * n
    }
}

/// Per-replica generator: seeded from the master seed, one stream per replica,
/// so results do not depend on scheduling.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// One approximate path on a uniform time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    /// `X_{t_k}`, starting at the origin.
    pub values: Vec<Vec<f64>>,
    pub eps: f64,
    pub seed: u64,
    pub replica: u64,
    pub jumps: usize,
    pub method: String,
}

const METHOD: &str = "compound Poisson above eps, Gaussian small-jump compensation";

impl LevySampler {
    /// Path of replica `replica` on `[0, horizon]`.
    pub fn path(&self, horizon: f64, seed: u64, replica: u64) -> Result<PathSample> {
        self.check_budget(horizon)?;
        let n = self.config.n_steps;
        let dt = horizon / n as f64;
        let mut rng = replica_rng(seed, replica);
        let mut inc: Vec<DVector<f64>> = (0..n)
            .map(|_| &self.drift * dt + self.normal(&mut rng) * dt.sqrt())
            .collect();
        let count = self.jump_count(horizon, &mut rng);
        for _ in 0..count {
            let t: f64 = rng.random::<f64>() * horizon;
            let k = ((t / dt) as usize).min(n - 1);
            inc[k] += self.jump(&mut rng);
        }
        let mut values = Vec::with_capacity(n + 1);
        let mut x = DVector::zeros(self.dim);
        values.push(x.iter().copied().collect());
        for d in inc {
            x += d;
            values.push(x.iter().copied().collect());
        }
        Ok(PathSample {
            times: (0..=n).map(|k| k as f64 * dt).collect(),
            values,
            eps: self.config.eps,
            seed,
            replica,
            jumps: count as usize,
            method: METHOD.into(),
        })
    }
}

pub fn sample_levy_path(
    mu: &LevyTriplet,
    horizon: f64,
    config: SamplerConfig,
    seed: u64,
    budget: &QuadratureBudget,
) -> Result<PathSample> {
    LevySampler::new(mu, config, budget)?.path(horizon, seed, 0)
}

/// Independent samples in `ℝᵈ`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub dim: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// One row per replica, `d` columns.
    pub fn to_csv(&self) -> String {
        let mut out = (1..=self.dim).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in 0..self.len() {
            let row = self.row(i).iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// Left-endpoint values of `f` on the time grid; where `f` is infinite at a
/// left endpoint (`t = 0` for the logarithmic integrands) the cell average is
/// used instead.
fn riemann_weights(f: &IntegrandSpec, n: usize, budget: &QuadratureBudget) -> Result<Vec<f64>> {
    let dt = f.horizon / n as f64;
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let v = f.eval(t);
            if v.is_finite() {
                Ok(v)
            } else {
                let seg = Segment::finite(t, t + dt);
                Ok(integrate_segment(|s| f.eval(s), &seg, budget)?.value / dt)
            }
        })
        .collect()
}

/// `N` independent samples of the left-endpoint Riemann–Stieltjes sum
/// `Σ_k f(t_k)(X_{t_{k+1}} − X_{t_k})` for the approximating process. The
/// Brownian and drift contributions of all cells are combined exactly (a sum
/// of independent Gaussians), jumps are placed at uniform times and weighted
/// by the value of `f` on their cell.
pub fn sample_stochastic_integral(
    mu: &LevyTriplet,
    f: &IntegrandSpec,
    n_samples: usize,
    seed: u64,
    config: SamplerConfig,
    budget: &QuadratureBudget,
) -> Result<SampleSet> {
    let sampler = LevySampler::new(mu, config, budget)?;
    sampler.check_budget(f.horizon)?;
    let n = config.n_steps;
    let dt = f.horizon / n as f64;
    let w = riemann_weights(f, n, budget)?;
    let s1: f64 = w.iter().sum::<f64>() * dt;
    let s2: f64 = w.iter().map(|x| x * x).sum::<f64>() * dt;
    let rows = (0..n_samples as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica);
            let mut x = &sampler.drift * s1 + sampler.normal(&mut rng) * s2.sqrt();
            let count = sampler.jump_count(f.horizon, &mut rng);
            for _ in 0..count {
                let t: f64 = rng.random::<f64>() * f.horizon;
                let k = ((t / dt) as usize).min(n - 1);
                x += sampler.jump(&mut rng) * w[k];
            }
            x.iter().copied().collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(SampleSet {
        dim: mu.dim(),
        seed,
        values: rows.into_iter().flatten().collect(),
    })
}

// ---------------------------------------------------------------------------
// Characteristic-function validation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub z: Vec<f64>,
    pub empirical: (f64, f64),
    pub analytic: (f64, f64),
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfComparison {
    pub n_samples: usize,
    pub max_deviation: f64,
    /// `3 · safety / √N` with safety factor 2.
    pub bound: f64,
    pub pass: bool,
    pub points: Vec<CfPoint>,
}

pub const CF_SAFETY: f64 = 2.0;

/// `z = t e₁` for `n` equally spaced `t` in `[lo, hi]`.
pub fn line_grid(dim: usize, lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let t = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            let mut z = vec![0.0; dim];
            z[0] = t;
            z
        })
        .collect()
}

/// `sup_z |empirical CF − analytic CF|` over `z_grid`.
pub fn empirical_cf_compare(
    samples: &SampleSet,
    target: &LevyTriplet,
    z_grid: &[Vec<f64>],
    budget: &QuadratureBudget,
) -> Result<CfComparison> {
    let n = samples.len();
    if n == 0 {
        return Err(LevyError::Validation("no samples".into()));
    }
    let points = z_grid
        .par_iter()
        .map(|z| {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let phase: f64 = samples.row(i).iter().zip(z).map(|(x, y)| x * y).sum();
                re += phase.cos();
                im += phase.sin();
            }
            let empirical = (re / n as f64, im / n as f64);
            let analytic = characteristic_function(target, z, budget)?;
            let deviation = (empirical.0 - analytic.0).hypot(empirical.1 - analytic.1);
            Ok(CfPoint {
                z: z.clone(),
                empirical,
                analytic,
                deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let bound = 3.0 * CF_SAFETY / (n as f64).sqrt();
    Ok(CfComparison {
        n_samples: n,
        max_deviation,
        bound,
        pass: max_deviation <= bound,
        points,
    })
}

// ---------------------------------------------------------------------------
// Named triplets

/// Triplets used by the simulation checks: `gaussian` (standard normal),
/// `poisson` (unit-rate Poisson: `ν = δ₁`, `γ = 1/2` under the
/// `1/(1+|x|²)` centring), `ex42` (`ν` = the `Υ⁰`-preimage of the `K₀`
/// example), `k0` (`ν(dx) = K₀(x) dx`, `γ = ∫ x/(1+x²) K₀(x) dx`, i.e. a
/// driftless subordinator) and `symmetric_exp` (`e^{-|x|}` on both sides).
pub fn named_triplet(name: &str, budget: &QuadratureBudget) -> Result<LevyTriplet> {
    let one = DMatrix::from_element(1, 1, 1.0);
    let zero = DMatrix::zeros(1, 1);
    let none = DVector::zeros(1);
    match name {
        "gaussian" => LevyTriplet::gaussian(one),
        "poisson" => LevyTriplet::new(
            zero,
            battery::on_line(battery::dirac(1.0)?),
            DVector::from_element(1, 0.5),
        ),
        "ex42" => LevyTriplet::new(zero, battery::on_line(battery::ex42()), none),
        "k0" => {
            let nu = battery::k0_density();
            let g = nu.integrate_with_breaks(|x| x / (1.0 + x * x), &[1.0], budget)?.value;
            LevyTriplet::new(zero, battery::on_line(nu), DVector::from_element(1, g))
        }
        "symmetric_exp" => LevyTriplet::new(
            zero,
            PolarLevyMeasure::new(
                1,
                vec![vec![1.0], vec![-1.0]],
                None,
                vec![battery::exp_density(), battery::exp_density()],
            )?,
            none,
        ),
        other => Err(LevyError::Validation(format!("unknown triplet `{other}`"))),
    }
}

/// Analytic mean `γ + ∫ x |x|²/(1+|x|²) ν(dx)` when `∫|x| ν(dx)` is finite
/// at infinity.
pub fn triplet_mean(mu: &LevyTriplet, budget: &QuadratureBudget) -> Result<DVector<f64>> {
    let mut m = mu.gamma.clone();
    for c in mu.nu.components() {
        let v = c
            .radial
            .integrate_with_breaks(|r| r * r * r / (1.0 + r * r), &[1.0], budget)?
            .value;
        for (o, x) in m.iter_mut().zip(&c.direction) {
            *o += v * x;
        }
    }
    Ok(m)
}

/// `∫₀^T f(t) dt` for the named integrands (closed forms).
pub fn first_integral(kind: IntegrandKind) -> Option<f64> {
    match kind {
        IntegrandKind::CosHalfPi => Some(FRAC_2_PI),
        IntegrandKind::LogSqrt => Some(HALF_SQRT_PI),
        IntegrandKind::GInverse => Some(0.5),
        IntegrandKind::Identity => Some(1.0),
        IntegrandKind::Custom => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::type_a_laplace;
    use crate::transforms::{arcsine_transform, log_grid, upsilon_alpha_beta};
    use proptest::prelude::*;

    fn budget() -> QuadratureBudget {
        QuadratureBudget::with_rel_tol(1e-10)
    }

    fn small() -> SamplerConfig {
        SamplerConfig {
            eps: 1e-4,
            n_steps: 256,
            max_jumps: 10_000,
            cells: 512,
        }
    }

    #[test]
    fn square_integrals() {
        let b = budget();
        for f in [
            IntegrandSpec::cos_half_pi(),
            IntegrandSpec::log_sqrt(),
            IntegrandSpec::g_inverse(),
            IntegrandSpec::identity(),
        ] {
            let q = f.square_integral_numeric(&b).unwrap();
            assert!((q - f.square_integral).abs() < 1e-8, "{}: {q}", f.name);
            let m = f.dilation().measure.integrate(|u| u * u, &b).unwrap().value;
            assert!((m - f.square_integral).abs() < 1e-9, "{}: {m}", f.name);
            let mass = f.dilation().measure.integrate(|_| 1.0, &b).unwrap().value;
            assert!((mass - f.horizon).abs() < 1e-9, "{}: {mass}", f.name);
            let first = integrate_segment(|t| f.eval(t), &Segment::finite(0.0, f.horizon), &b)
                .unwrap()
                .value;
            assert!((first - first_integral(f.kind).unwrap()).abs() < 1e-8, "{}", f.name);
        }
    }

    #[test]
    fn custom_integrand_is_checked() {
        let b = budget();
        let ok = IntegrandSpec::custom("cos", 1.0, |t| (FRAC_PI_2 * t).cos(), DilationMeasure::arcsine(), &b);
        assert!((ok.unwrap().square_integral - 0.5).abs() < 1e-10);
        let bad = IntegrandSpec::custom("two", 1.0, |_| 2.0, DilationMeasure::arcsine(), &b);
        assert!(bad.is_err());
        let not_l2 = IntegrandSpec::custom("sing", 1.0, |t: f64| t.powf(-0.5), DilationMeasure::arcsine(), &b);
        assert!(not_l2.is_err());
    }

    #[test]
    fn gaussian_scales() {
        let b = budget();
        let mu = named_triplet("gaussian", &b).unwrap();
        let phi = phi_cos(&mu, &b).unwrap();
        assert!((phi.sigma[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(phi.nu.is_zero() && phi.gamma[0] == 0.0);
        let psi = psi_m22(&mu, &b).unwrap();
        assert!((psi.sigma[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_cos_of_dirac_is_arcsine() {
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let out = phi_cos(&mu, &b).unwrap();
        for r in [0.1, 0.5, 0.9] {
            let v = out.nu.components()[0].radial.density(r, &b).unwrap().value;
            assert!((v - FRAC_2_PI / (1.0 - r * r).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_cos_matches_a2() {
        let b = budget();
        let mu = named_triplet("ex42", &b).unwrap();
        let out = phi_cos(&mu, &b).unwrap();
        let a2 = arcsine_transform(2, &mu.nu).unwrap();
        let f = IntegrandSpec::cos_half_pi();
        for r in log_grid(0.05, 20.0, 9) {
            let u = out.nu.components()[0].radial.density(r, &b).unwrap().value;
            let v = a2.density(0, r, &b).unwrap().value;
            let w = pushforward_density(&mu.nu.components()[0].radial, &f, r, &b).unwrap();
            assert!((u - v).abs() < 1e-8 * v, "r = {r}: {u} vs {v}");
            assert!((w - v).abs() < 1e-7 * v, "r = {r}: {w} vs {v}");
        }
    }

    #[test]
    fn psi_matches_upsilon_m22() {
        let b = budget();
        let mu = named_triplet("ex42", &b).unwrap();
        let out = psi_m22(&mu, &b).unwrap();
        let ups = upsilon_alpha_beta(&mu.nu, -2.0, 2.0).unwrap();
        let f = IntegrandSpec::log_sqrt();
        for r in log_grid(0.05, 20.0, 7) {
            let u = out.nu.components()[0].radial.density(r, &b).unwrap().value;
            let v = ups.density(0, r, &b).unwrap().value;
            let w = pushforward_density(&mu.nu.components()[0].radial, &f, r, &b).unwrap();
            assert!((u - v).abs() < 1e-8 * v, "r = {r}");
            assert!((w - v).abs() < 1e-6 * v, "r = {r}: {w} vs {v}");
        }
        // Lévy action on δ₁.
        let p = psi_m22(&named_triplet("poisson", &b).unwrap(), &b).unwrap();
        let v = p.nu.components()[0].radial.density(0.7, &b).unwrap().value;
        assert!((v - 1.4 * (-0.49f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_gamma_vanishes() {
        let b = budget();
        let mu = named_triplet("symmetric_exp", &b).unwrap();
        for f in [IntegrandSpec::cos_half_pi(), IntegrandSpec::log_sqrt()] {
            let g = map_gamma(&mu, &f, &b).unwrap();
            assert_eq!(g[0], 0.0);
        }
    }

    #[test]
    fn gamma_of_poisson_by_hand() {
        // ν = δ₁, γ = 1/2: γ̃ = ∫ f (1/2 + 1/(1+f²) − 1/2) dt = ∫ f/(1+f²) dt.
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let f = IntegrandSpec::cos_half_pi();
        let g = map_gamma(&mu, &f, &b).unwrap()[0];
        let c = |t: f64| (FRAC_PI_2 * t).cos();
        let expect = adaptive(|t| c(t) / (1.0 + c(t) * c(t)), 0.0, 1.0, 0.0, &b).unwrap().value;
        assert!((g - expect).abs() < 1e-10);
    }

    #[test]
    fn cf_of_gaussian_and_poisson() {
        let b = budget();
        let g = named_triplet("gaussian", &b).unwrap();
        let (re, im) = characteristic_function(&g, &[2.0], &b).unwrap();
        assert!((re - (-2.0f64).exp()).abs() < 1e-15 && im == 0.0);
        let p = named_triplet("poisson", &b).unwrap();
        let z = 1.3f64;
        let (re, im) = characteristic_function(&p, &[z], &b).unwrap();
        let m = (z.cos() - 1.0).exp();
        assert!((re - m * z.sin().cos()).abs() < 1e-12);
        assert!((im - m * z.sin().sin()).abs() < 1e-12);
    }

    #[test]
    fn brownian_variance() {
        let b = budget();
        let mu = named_triplet("gaussian", &b).unwrap();
        let s = sample_stochastic_integral(&mu, &IntegrandSpec::identity(), 20_000, 3, small(), &b).unwrap();
        let n = s.len() as f64;
        let var = s.values.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt() * 2.0, "{var}");
        let path = sample_levy_path(&mu, 2.0, small(), 5, &b).unwrap();
        assert_eq!(path.values[0], vec![0.0]);
        assert_eq!(path.times.len(), 257);
        assert!((path.times[256] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_jump_count() {
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let sampler = LevySampler::new(&mu, small(), &b).unwrap();
        assert!((sampler.rate - 1.0).abs() < 1e-15);
        assert!(sampler.drift[0].abs() < 1e-15, "{}", sampler.drift[0]);
        let n = 5000;
        let total: usize = (0..n).map(|i| sampler.path(1.0, 11, i).unwrap().jumps).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn ex41_mean() {
        let b = budget();
        let mu = LevyTriplet::new(
            DMatrix::zeros(1, 1),
            battery::on_line(battery::ex41()),
            DVector::from_element(1, 0.3),
        )
        .unwrap();
        let mean = triplet_mean(&mu, &b).unwrap()[0];
        let s = sample_stochastic_integral(&mu, &IntegrandSpec::identity(), 40_000, 1, small(), &b).unwrap();
        let n = s.len() as f64;
        let m = s.values.iter().sum::<f64>() / n;
        let var = s.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        assert!((m - mean).abs() < 3.0 * (var / n).sqrt(), "{m} vs {mean}");
    }

    #[test]
    fn type_a_laplace_by_simulation() {
        let b = budget();
        let mu = named_triplet("k0", &b).unwrap();
        let s = sample_stochastic_integral(&mu, &IntegrandSpec::identity(), 40_000, 2, small(), &b).unwrap();
        for sv in [0.5, 1.0, 2.0] {
            let vals: Vec<f64> = s.values.iter().map(|x| (-sv * x).exp()).collect();
            let n = vals.len() as f64;
            let m = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n / n).sqrt();
            let exact = type_a_laplace(sv, 0.0).unwrap();
            assert!((m - exact).abs() < 3.0 * sd, "s = {sv}: {m} vs {exact}");
        }
    }

    #[test]
    fn sampler_overflow() {
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let cfg = SamplerConfig {
            max_jumps: 0,
            ..small()
        };
        let err = sample_stochastic_integral(&mu, &IntegrandSpec::identity(), 10, 1, cfg, &b).unwrap_err();
        assert!(matches!(err, LevyError::SamplerOverflow { .. }));
    }

    #[test]
    fn sampling_is_reproducible() {
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let f = IntegrandSpec::cos_half_pi();
        let a = sample_stochastic_integral(&mu, &f, 1000, 9, small(), &b).unwrap();
        let c = sample_stochastic_integral(&mu, &f, 1000, 9, small(), &b).unwrap();
        assert_eq!(a.to_csv(), c.to_csv());
        let d = sample_stochastic_integral(&mu, &f, 1000, 10, small(), &b).unwrap();
        assert_ne!(a.values, d.values);
    }

    #[test]
    fn cf_compare_small() {
        let b = budget();
        let mu = named_triplet("poisson", &b).unwrap();
        let f = IntegrandSpec::cos_half_pi();
        let s = sample_stochastic_integral(&mu, &f, 20_000, 4, small(), &b).unwrap();
        let target = phi_cos(&mu, &b).unwrap();
        let cmp = empirical_cf_compare(&s, &target, &line_grid(1, -5.0, 5.0, 11), &b).unwrap();
        assert!(cmp.pass, "{} > {}", cmp.max_deviation, cmp.bound);
    }

    #[test]
    fn composition_commutes_and_g_relation() {
        let b = QuadratureBudget::with_rel_tol(1e-9);
        for name in ["ex42", "poisson"] {
            let mu = named_triplet(name, &b).unwrap();
            let pf = psi_m22(&phi_cos(&mu, &b).unwrap(), &b).unwrap();
            let fp = phi_cos(&psi_m22(&mu, &b).unwrap(), &b).unwrap();
            let g = g_map(&mu, &b).unwrap();
            assert!((pf.sigma[(0, 0)] - fp.sigma[(0, 0)]).abs() < 1e-15);
            assert!((pf.gamma[0] - fp.gamma[0]).abs() < 1e-7 * pf.gamma[0].abs().max(1.0), "{name}");
            for r in [0.2, 1.0, 3.0] {
                let x = pf.nu.components()[0].radial.density(r, &b).unwrap().value;
                let y = fp.nu.components()[0].radial.density(r, &b).unwrap().value;
                let z = g.nu.components()[0].radial.density(r, &b).unwrap().value;
                assert!((x - y).abs() < 1e-7 * x, "{name} r = {r}: {x} vs {y}");
                // 𝒢 carries the dilation measure e^{-u²} du, Ψ∘Φ carries (2/√π) e^{-u²} du.
                assert!((z - HALF_SQRT_PI * x).abs() < 1e-7 * x, "{name} r = {r}: {z} vs {x}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn sigma_scales_linearly(s in 0.1f64..10.0) {
            let b = budget();
            let mu = LevyTriplet::gaussian(DMatrix::from_element(1, 1, s)).unwrap();
            let out = phi_cos(&mu, &b).unwrap();
            prop_assert!((out.sigma[(0, 0)] - 0.5 * s).abs() <= 1e-15 * s);
        }

        #[test]
        fn identity_map_is_identity(z in -4.0f64..4.0) {
            let b = budget();
            let mu = named_triplet("poisson", &b).unwrap();
            let out = map_triplet(&mu, &IntegrandSpec::identity(), &b).unwrap();
            let x = characteristic_function(&mu, &[z], &b).unwrap();
            let y = characteristic_function(&out, &[z], &b).unwrap();
            prop_assert!((x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12);
        }
    }
}

//! Radial measures on `(0, ∞)` and their polar assemblies.
//!
//! A [`RadialMeasure`] is a finite list of atoms plus density parts. A density
//! part carries its support, the power-law exponents of the density at each
//! finite endpoint and its decay at infinity; the quadrature layer uses these
//! to remove endpoint singularities and to size tail panels, and the
//! integrability checks use them to answer "is this integral infinite?"
//! analytically instead of watching partial sums grow.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{
    integrate_segment, Decay, Estimate, QuadratureBudget, QuadratureError, Segment,
};

/// Density evaluator. The budget is the accuracy requested by the caller, so
/// that densities which are themselves integrals can tighten accordingly.
pub type Evaluator =
    dyn Fn(f64, &QuadratureBudget) -> std::result::Result<Estimate, QuadratureError> + Send + Sync;

/// A density on an open interval `(lower, upper)` with endpoint metadata.
#[derive(Clone)]
pub struct RadialDensity {
    lower: f64,
    upper: f64,
    left_exponent: f64,
    right_exponent: f64,
    decay: Decay,
    eval: Arc<Evaluator>,
    label: Arc<str>,
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("label", &self.label)
            .field("support", &(self.lower, self.upper))
            .field("left_exponent", &self.left_exponent)
            .field("right_exponent", &self.right_exponent)
            .field("decay", &self.decay)
            .finish()
    }
}

impl RadialDensity {
    /// Closed-form density. `decay` must be [`Decay::Compact`] exactly when
    /// `upper` is finite.
    pub fn new<F>(lower: f64, upper: f64, decay: Decay, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_evaluator(lower, upper, decay, move |r, _| Ok(Estimate::exact(f(r))))
    }

    /// Density whose values come with error estimates (typically integrals).
    pub fn from_evaluator<F>(lower: f64, upper: f64, decay: Decay, f: F) -> Result<Self>
    where
        F: Fn(f64, &QuadratureBudget) -> std::result::Result<Estimate, QuadratureError>
            + Send
            + Sync
            + 'static,
    {
        let d = Self {
            lower,
            upper,
            left_exponent: 0.0,
            right_exponent: 0.0,
            decay,
            eval: Arc::new(f),
            label: Arc::from("density"),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_left_exponent(mut self, e: f64) -> Self {
        self.left_exponent = e;
        self
    }

    pub fn with_right_exponent(mut self, e: f64) -> Self {
        self.right_exponent = e;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower >= 0.0 && self.lower.is_finite()) || !(self.upper > self.lower) {
            return Err(LevyError::Validation(format!(
                "density support ({}, {}) must satisfy 0 ≤ a < b ≤ ∞",
                self.lower, self.upper
            )));
        }
        match (self.upper.is_finite(), self.decay) {
            (true, Decay::Compact) => {}
            (false, Decay::Compact) => {
                return Err(LevyError::Validation(
                    "unbounded support needs a polynomial or exponential decay".into(),
                ))
            }
            (true, _) => {
                return Err(LevyError::Validation(
                    "bounded support must use compact decay".into(),
                ))
            }
            (false, Decay::Exponential { rate, power }) if !(rate > 0.0 && power > 0.0) => {
                return Err(LevyError::Validation(
                    "exponential decay needs positive rate and power".into(),
                ))
            }
            (false, Decay::Polynomial(b)) if !b.is_finite() => {
                return Err(LevyError::Validation("polynomial decay exponent must be finite".into()))
            }
            _ => {}
        }
        if !self.left_exponent.is_finite() || !self.right_exponent.is_finite() {
            return Err(LevyError::Validation("endpoint exponents must be finite".into()));
        }
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }
    pub fn upper(&self) -> f64 {
        self.upper
    }
    pub fn left_exponent(&self) -> f64 {
        self.left_exponent
    }
    pub fn right_exponent(&self) -> f64 {
        self.right_exponent
    }
    pub fn decay(&self) -> Decay {
        self.decay
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.lower && r < self.upper
    }

    /// Value with error estimate; zero outside the open support.
    pub fn evaluate(&self, r: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if !self.contains(r) {
            return Ok(Estimate::default());
        }
        Ok((self.eval)(r, budget)?)
    }

    /// Best-effort value for use inside other quadratures: a non-converged
    /// inner integral contributes its partial value.
    pub fn value(&self, r: f64, budget: &QuadratureBudget) -> f64 {
        if !self.contains(r) {
            return 0.0;
        }
        match (self.eval)(r, budget) {
            Ok(e) => e.value,
            Err(e) => e.partial().map(|p| p.value).unwrap_or(f64::NAN),
        }
    }

    /// Integration segment over the whole support.
    pub fn segment(&self) -> Segment {
        Segment {
            lo: self.lower,
            hi: self.upper,
            lo_exponent: self.left_exponent,
            hi_exponent: if self.upper.is_finite() { self.right_exponent } else { 0.0 },
            decay: self.decay,
        }
    }

    /// Segments covering `support ∩ (from, ∞)`, split at `breaks`.
    pub fn segments(&self, from: f64, breaks: &[f64]) -> Vec<Segment> {
        let lo = self.lower.max(from);
        if lo >= self.upper {
            return Vec::new();
        }
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&b| b > lo && b < self.upper)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut points = vec![lo];
        points.extend(cuts);
        points.push(self.upper);
        let n = points.len() - 1;
        (0..n)
            .map(|i| Segment {
                lo: points[i],
                hi: points[i + 1],
                lo_exponent: if i == 0 && lo == self.lower { self.left_exponent } else { 0.0 },
                hi_exponent: if i == n - 1 && self.upper.is_finite() {
                    self.right_exponent
                } else {
                    0.0
                },
                decay: if i == n - 1 { self.decay } else { Decay::Compact },
            })
            .collect()
    }

    /// True when `∫_{support ∩ (from,∞)} w(r) ℓ(r) dr < ∞` for a weight behaving
    /// like `r^near0` at the origin and `r^at_inf` at infinity.
    pub fn integrable(&self, from: f64, near0: f64, at_inf: f64) -> bool {
        if from >= self.upper {
            return true;
        }
        if from <= self.lower {
            let k = if self.lower == 0.0 { near0 } else { 0.0 };
            if self.left_exponent + k <= -1.0 {
                return false;
            }
        }
        if self.upper.is_finite() {
            self.right_exponent > -1.0
        } else {
            self.decay.integrable_with_power(at_inf)
        }
    }

    /// `c · ℓ`.
    pub fn scaled(&self, c: f64) -> RadialDensity {
        let inner = self.eval.clone();
        let mut d = self.clone();
        d.eval = Arc::new(move |r, b| inner(r, b).map(|e| e.scale(c)));
        d
    }

    /// Density of the image measure under `r ↦ r^p`.
    pub fn p_transform(&self, p: f64) -> RadialDensity {
        let inner = self.eval.clone();
        let q = 1.0 / p;
        let decay = match self.decay {
            Decay::Compact => Decay::Compact,
            Decay::Polynomial(g) => Decay::Polynomial((g + 1.0) * q - 1.0),
            Decay::Exponential { rate, power } => Decay::Exponential {
                rate,
                power: power * q,
            },
        };
        let left = if self.lower == 0.0 {
            (self.left_exponent + 1.0) * q - 1.0
        } else {
            self.left_exponent
        };
        RadialDensity {
            lower: self.lower.powf(p),
            upper: self.upper.powf(p),
            left_exponent: left,
            right_exponent: self.right_exponent,
            decay,
            eval: Arc::new(move |u, b| {
                let r = u.powf(q);
                inner(r, b).map(|e| e.scale(q * u.powf(q - 1.0)))
            }),
            label: Arc::from(format!("p[{p}]({})", self.label)),
        }
    }

    /// Checks on a grid that `ℓ(r) / |r − end|^exponent` stays within a factor
    /// `bound` of itself as `r` approaches each finite endpoint.
    pub fn exponents_consistent(&self, bound: f64, budget: &QuadratureBudget) -> bool {
        let width = if self.upper.is_finite() {
            self.upper - self.lower
        } else {
            1.0
        };
        let check = |end: f64, sign: f64, exponent: f64| {
            let ratios: Vec<f64> = (2..9)
                .map(|k| {
                    let d = width * 0.5 * 10f64.powi(-k);
                    let r = end + sign * d;
                    self.value(r, budget).abs() / d.powf(exponent)
                })
                .filter(|v| v.is_finite() && *v > 0.0)
                .collect();
            if ratios.is_empty() {
                return true;
            }
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            max <= bound * min
        };
        let left_ok = check(self.lower, 1.0, self.left_exponent);
        let right_ok = !self.upper.is_finite() || check(self.upper, -1.0, self.right_exponent);
        left_ok && right_ok
    }
}

/// A point mass at `location > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A σ-finite measure on `(0, ∞)`: atoms plus density parts.
#[derive(Clone, Debug, Default)]
pub struct RadialMeasure {
    atoms: Vec<Atom>,
    parts: Vec<RadialDensity>,
}

impl RadialMeasure {
    pub fn new(atoms: Vec<Atom>, parts: Vec<RadialDensity>) -> Result<Self> {
        let mut atoms = atoms;
        for a in &atoms {
            if !(a.location > 0.0 && a.location.is_finite()) {
                return Err(LevyError::Validation(format!(
                    "atom locations must be positive and finite, got {}",
                    a.location
                )));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(LevyError::Validation(format!(
                    "atom masses must be positive and finite, got {}",
                    a.mass
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        if atoms.windows(2).any(|w| w[0].location == w[1].location) {
            return Err(LevyError::Validation("duplicate atom location".into()));
        }
        Ok(Self { atoms, parts })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(location: f64) -> Result<Self> {
        Self::new(
            vec![Atom {
                location,
                mass: 1.0,
            }],
            Vec::new(),
        )
    }

    pub fn from_density(d: RadialDensity) -> Self {
        Self {
            atoms: Vec::new(),
            parts: vec![d],
        }
    }

    /// Atoms are merged when locations coincide.
    pub fn from_parts_merging(atoms: Vec<Atom>, parts: Vec<RadialDensity>) -> Result<Self> {
        let mut sorted = atoms;
        sorted.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
        for a in sorted {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        Self::new(merged, parts)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn parts(&self) -> &[RadialDensity] {
        &self.parts
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.parts.is_empty()
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Sum of the density parts at `r` (atoms excluded).
    pub fn density(&self, r: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        let mut acc = Estimate::default();
        for p in &self.parts {
            acc = acc + p.evaluate(r, budget)?;
        }
        Ok(acc)
    }

    pub fn density_value(&self, r: f64, budget: &QuadratureBudget) -> f64 {
        self.parts.iter().map(|p| p.value(r, budget)).sum()
    }

    /// Supremum of the support (`∞` for unbounded densities, `0` if zero).
    pub fn sup_support(&self) -> f64 {
        let a = self.atoms.last().map(|a| a.location).unwrap_or(0.0);
        self.parts.iter().map(|p| p.upper).fold(a, f64::max)
    }

    /// Infimum of the support.
    pub fn inf_support(&self) -> f64 {
        let a = self.atoms.first().map(|a| a.location).unwrap_or(f64::INFINITY);
        self.parts.iter().map(|p| p.lower).fold(a, f64::min)
    }

    pub fn scaled(&self, c: f64) -> RadialMeasure {
        RadialMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location,
                    mass: a.mass * c,
                })
                .collect(),
            parts: self.parts.iter().map(|p| p.scaled(c)).collect(),
        }
    }

    /// Sum of two measures (atoms at equal locations are merged).
    pub fn plus(&self, other: &RadialMeasure) -> RadialMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().copied());
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Self::from_parts_merging(atoms, parts).expect("sum of valid measures is valid")
    }

    /// `∫ f dν` where `f` is smooth except possibly at `breaks`.
    pub fn integrate_with_breaks<F>(&self, f: F, breaks: &[f64], budget: &QuadratureBudget) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_from(f, 0.0, breaks, budget)
    }

    /// `∫ f dν`.
    pub fn integrate<F>(&self, f: F, budget: &QuadratureBudget) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_from(f, 0.0, &[], budget)
    }

    /// `∫_{(from, ∞)} f dν`.
    pub fn integrate_from<F>(&self, f: F, from: f64, breaks: &[f64], budget: &QuadratureBudget) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
    {
        let mut acc = Estimate::default();
        for a in self.atoms.iter().filter(|a| a.location > from) {
            acc = acc + Estimate::exact(f(a.location) * a.mass);
        }
        let inner = budget.inner();
        for p in &self.parts {
            for seg in p.segments(from, breaks) {
                let r = integrate_segment(|r| f(r) * p.value(r, &inner), &seg, budget)?;
                acc = acc + r;
            }
        }
        Ok(acc)
    }

    /// `ν((u, ∞))`; `+∞` when the tail mass is infinite. For `u ≤ 0` this is
    /// the total mass.
    pub fn tail(&self, u: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if self.parts.iter().any(|p| !p.integrable(u, 0.0, 0.0)) {
            return Ok(Estimate::exact(f64::INFINITY));
        }
        self.integrate_from(|_| 1.0, u, &[], budget)
    }

    /// `∫ (1 ∧ r^k) ν(dr)`, `+∞` when infinite.
    pub fn truncated_moment(&self, k: u32, budget: &QuadratureBudget) -> Result<Estimate> {
        if k != 1 && k != 2 {
            return Err(LevyError::Domain(format!("truncated moments use k ∈ {{1, 2}}, got {k}")));
        }
        let kf = k as f64;
        if self.parts.iter().any(|p| !p.integrable(0.0, kf, 0.0)) {
            return Ok(Estimate::exact(f64::INFINITY));
        }
        self.integrate_with_breaks(|r| if r < 1.0 { r.powi(k as i32) } else { 1.0 }, &[1.0], budget)
    }

    /// `∫ r^q ν(dr)`, `+∞` when infinite.
    pub fn moment(&self, q: f64, budget: &QuadratureBudget) -> Result<Estimate> {
        if self.parts.iter().any(|p| !p.integrable(0.0, q, q)) {
            return Ok(Estimate::exact(f64::INFINITY));
        }
        self.integrate_with_breaks(|r| r.powf(q), &[1.0], budget)
    }

    /// Image under `r ↦ r^p`.
    pub fn p_transform(&self, p: f64) -> Result<RadialMeasure> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(LevyError::Domain(format!("p-transform needs p > 0, got {p}")));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        Ok(RadialMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.powf(p),
                    mass: a.mass,
                })
                .collect(),
            parts: self.parts.iter().map(|d| d.p_transform(p)).collect(),
        })
    }

    /// Image under `r ↦ c r` for `c > 0`.
    pub fn dilate(&self, c: f64) -> RadialMeasure {
        RadialMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location * c,
                    mass: a.mass,
                })
                .collect(),
            parts: self.parts.iter().map(|p| dilate_density(p, c, 1.0)).collect(),
        }
    }
}

/// Density of `m · (image of ℓ(r)dr under r ↦ c r)`: `y ↦ m ℓ(y/c)/c`.
pub fn dilate_density(p: &RadialDensity, c: f64, m: f64) -> RadialDensity {
    let inner = p.eval.clone();
    let decay = match p.decay {
        Decay::Exponential { rate, power } => Decay::Exponential {
            rate: rate * c.powf(-power),
            power,
        },
        d => d,
    };
    RadialDensity {
        lower: p.lower * c,
        upper: p.upper * c,
        left_exponent: p.left_exponent,
        right_exponent: p.right_exponent,
        decay,
        eval: Arc::new(move |y, b| inner(y / c, b).map(|e| e.scale(m / c))),
        label: p.label.clone(),
    }
}

/// Outcome of a domain-membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// `Σ_ξ ∫ (1 ∧ r^k) ν_ξ(dr)`; infinite when not a member.
    pub certificate: f64,
    /// True when the verdict rests on declared metadata because quadrature
    /// could not certify the value within budget.
    pub from_metadata: bool,
}

/// One direction of a polar decomposition.
#[derive(Clone, Debug)]
pub struct PolarComponent {
    pub direction: Vec<f64>,
    pub radial: RadialMeasure,
}

/// Lévy measure in polar form: finitely many unit directions, each with a
/// radial measure. Direction weights are folded into the radial parts, so the
/// spherical measure is `Σ δ_ξ`.
#[derive(Clone, Debug)]
pub struct PolarLevyMeasure {
    dim: usize,
    components: Vec<PolarComponent>,
}

impl PolarLevyMeasure {
    pub fn new(
        dim: usize,
        directions: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        radial: Vec<RadialMeasure>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LevyError::Validation("dimension must be at least 1".into()));
        }
        if directions.len() != radial.len() {
            return Err(LevyError::Validation(format!(
                "{} directions but {} radial measures",
                directions.len(),
                radial.len()
            )));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; directions.len()]);
        if weights.len() != directions.len() {
            return Err(LevyError::Validation("one weight per direction is required".into()));
        }
        let mut components = Vec::with_capacity(directions.len());
        for ((xi, w), nu) in directions.into_iter().zip(weights).zip(radial) {
            if xi.len() != dim {
                return Err(LevyError::Validation(format!(
                    "direction {xi:?} does not have dimension {dim}"
                )));
            }
            let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(LevyError::Validation(format!(
                    "direction {xi:?} is not a unit vector (norm {norm})"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(LevyError::Validation(format!("weights must be positive, got {w}")));
            }
            if components.iter().any(|c: &PolarComponent| {
                c.direction.iter().zip(&xi).all(|(a, b)| (a - b).abs() <= 1e-12)
            }) {
                return Err(LevyError::Validation(format!("duplicate direction {xi:?}")));
            }
            let radial = if w == 1.0 { nu } else { nu.scaled(w) };
            components.push(PolarComponent {
                direction: xi,
                radial,
            });
        }
        Ok(Self { dim, components })
    }

    /// One-dimensional measure concentrated on the positive half-line.
    pub fn one_dimensional(radial: RadialMeasure) -> Self {
        Self {
            dim: 1,
            components: vec![PolarComponent {
                direction: vec![1.0],
                radial,
            }],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[PolarComponent] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.radial.is_zero())
    }

    /// Same directions, radial parts mapped by `f`.
    pub fn map_radial<F>(&self, mut f: F) -> Result<PolarLevyMeasure>
    where
        F: FnMut(&RadialMeasure) -> Result<RadialMeasure>,
    {
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            components.push(PolarComponent {
                direction: c.direction.clone(),
                radial: f(&c.radial)?,
            });
        }
        Ok(PolarLevyMeasure {
            dim: self.dim,
            components,
        })
    }

    pub fn p_transform(&self, p: f64) -> Result<PolarLevyMeasure> {
        self.map_radial(|r| r.p_transform(p))
    }

    /// Tests `∫ (1 ∧ |x|^k) ν(dx) < ∞`.
    pub fn in_ml(&self, k: u32, budget: &QuadratureBudget) -> Result<Membership> {
        let mut total = 0.0;
        let mut from_metadata = false;
        for c in &self.components {
            match c.radial.truncated_moment(k, budget) {
                Ok(e) if e.value.is_infinite() => {
                    return Ok(Membership {
                        member: false,
                        certificate: f64::INFINITY,
                        from_metadata: true,
                    })
                }
                Ok(e) => total += e.value,
                Err(LevyError::Quadrature(QuadratureError::DivergentIntegral)) => {
                    return Ok(Membership {
                        member: false,
                        certificate: f64::INFINITY,
                        from_metadata: false,
                    })
                }
                Err(LevyError::Quadrature(QuadratureError::NonConvergent { value, .. })) => {
                    // Metadata already said the integral is finite.
                    from_metadata = true;
                    total += value;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Membership {
            member: true,
            certificate: total,
            from_metadata,
        })
    }
}

/// Lévy–Khintchine triplet `(Σ, ν, γ)`.
#[derive(Clone, Debug)]
pub struct LevyTriplet {
    pub sigma: DMatrix<f64>,
    pub nu: PolarLevyMeasure,
    pub gamma: DVector<f64>,
}

impl LevyTriplet {
    pub fn new(sigma: DMatrix<f64>, nu: PolarLevyMeasure, gamma: DVector<f64>) -> Result<Self> {
        let d = nu.dim();
        if sigma.nrows() != d || sigma.ncols() != d || gamma.len() != d {
            return Err(LevyError::Validation(format!(
                "triplet components must have dimension {d}"
            )));
        }
        for i in 0..d {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 {
                    return Err(LevyError::Validation("Σ must be symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(sigma.clone());
        if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
            return Err(LevyError::Validation("Σ must be positive semidefinite".into()));
        }
        let m = nu.in_ml(2, &QuadratureBudget::with_rel_tol(1e-6))?;
        if !m.member {
            return Err(LevyError::Validation(
                "ν is not a Lévy measure: ∫(1 ∧ |x|²) ν(dx) is infinite".into(),
            ));
        }
        Ok(Self { sigma, nu, gamma })
    }

    pub fn gaussian(sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        Self::new(sigma, PolarLevyMeasure::zero(d), DVector::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.nu.dim()
    }
}

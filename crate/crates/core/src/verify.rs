//! Verification suites: every closed-form and property check of the library,
//! collected into a versioned, deterministic JSON report.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::battery;
use crate::classes::{
    classify, classify_measure, decade_grid, gaussian_arcsine_identity, is_completely_monotone, CmVerdict,
    ClassFlag, CM_MAX_ORDER, CM_POINTS_PER_DECADE, CM_TOLERANCE,
};
use crate::error::{LevyError, Result};
use crate::quadrature::{integrate_segment, QuadratureBudget, Segment};
use crate::radial::{LevyTriplet, PolarLevyMeasure, RadialMeasure};
use crate::special::{bessel_k0_alt, k0_integral, laplace_k0, HALF_SQRT_PI};
use crate::stochastic::{
    empirical_cf_compare, line_grid, map_sigma_nu, named_triplet, phi_cos, sample_stochastic_integral,
    IntegrandSpec, SamplerConfig,
};
use crate::transforms::{
    arcsine_transform, check_commutation, half_integral, invert_arcsine, log_grid, upsilon0, upsilon_alpha_beta,
    TransformedDensity,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Sup-norm bound on the empirical characteristic function deviation.
pub const MC_CF_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Examples,
    Lemmas,
    Commutation,
    MonteCarlo,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["all", "examples", "lemmas", "commutation", "montecarlo"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Examples => "examples",
            Suite::Lemmas => "lemmas",
            Suite::Commutation => "commutation",
            Suite::MonteCarlo => "montecarlo",
        }
    }
}

impl FromStr for Suite {
    type Err = LevyError;

    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "all" => Ok(Suite::All),
            "examples" => Ok(Suite::Examples),
            "lemmas" => Ok(Suite::Lemmas),
            "commutation" => Ok(Suite::Commutation),
            "montecarlo" => Ok(Suite::MonteCarlo),
            other => Err(LevyError::Validation(format!(
                "unknown suite `{other}`; expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub budget: QuadratureBudget,
    pub mc_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            budget: QuadratureBudget::default(),
            mc_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// The statement being checked.
    pub anchor: String,
    /// Measured discrepancy; `null` in JSON when the computation failed.
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn measured(id: impl Into<String>, anchor: &str, discrepancy: f64, tolerance: f64) -> Check {
        Check {
            id: id.into(),
            anchor: anchor.to_string(),
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
            detail: String::new(),
        }
    }

    fn failed(id: impl Into<String>, anchor: &str, tolerance: f64, err: &LevyError) -> Check {
        Check {
            id: id.into(),
            anchor: anchor.to_string(),
            discrepancy: f64::INFINITY,
            tolerance,
            pass: false,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = detail.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_evals: usize,
    pub mc_samples: usize,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub suite: Suite,
    pub pass: bool,
    pub summary: Summary,
    pub environment: Environment,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn new(suite: Suite, cfg: &VerifyConfig, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            schema: SCHEMA_VERSION,
            suite,
            pass: passed == checks.len(),
            summary: Summary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
            },
            environment: Environment {
                seed: cfg.seed,
                rel_tol: cfg.budget.rel_tol,
                abs_floor: cfg.budget.abs_floor,
                max_evals: cfg.budget.max_evals,
                mc_samples: cfg.mc_samples,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// One line per check followed by the totals.
    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<40} discrepancy {:.3e} (tol {:.1e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.discrepancy,
                c.tolerance
            );
        }
        let _ = writeln!(
            out,
            "{}: {} of {} checks passed",
            self.suite.name(),
            self.summary.passed,
            self.summary.total
        );
        out
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> VerificationReport {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Examples) {
        checks.extend(examples(cfg));
    }
    if matches!(suite, Suite::All | Suite::Lemmas) {
        checks.extend(lemmas(cfg));
    }
    if matches!(suite, Suite::All | Suite::Commutation) {
        checks.extend(commutation(cfg));
    }
    if matches!(suite, Suite::All | Suite::MonteCarlo) {
        checks.extend(monte_carlo(cfg));
    }
    VerificationReport::new(suite, cfg, checks)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let d = (a - b).abs() / b.abs();
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

fn delta(s: f64) -> PolarLevyMeasure {
    battery::on_line(RadialMeasure::dirac(s).expect("positive location"))
}

/// Largest relative error of `got(x)` against `want(x)` over `grid`.
fn sup_rel<G, W>(grid: &[f64], got: G, want: W) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
    W: Fn(f64) -> Result<f64>,
{
    let mut worst = (0.0, grid.first().copied().unwrap_or(0.0));
    for &x in grid {
        let e = rel(got(x)?, want(x)?);
        if e > worst.0 || e.is_infinite() {
            worst = (e, x);
        }
    }
    Ok(worst)
}

fn grid_check(id: &str, anchor: &str, tol: f64, outcome: Result<(f64, f64)>) -> Check {
    match outcome {
        Ok((d, at)) => Check::measured(id, anchor, d, tol).with_detail(format!("worst at {at}")),
        Err(e) => Check::failed(id, anchor, tol, &e),
    }
}

fn density_of(t: &TransformedDensity, r: f64, b: &QuadratureBudget) -> Result<f64> {
    Ok(t.density(0, r, b)?.value)
}

// ---------------------------------------------------------------------------
// Worked examples

pub fn examples(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let grid = log_grid(0.05, 8.0, 20);
    let mut out = Vec::new();

    let anchor = "A1 of (pi/4) x^(-1/2) e^(-sqrt x) dx has density K0(r)";
    let outcome = arcsine_transform(1, &battery::on_line(battery::ex41())).and_then(|t| {
        sup_rel(&grid, |r| density_of(&t, r, b), |r| Ok(bessel_k0_alt(r)?.value))
    });
    out.push(grid_check("examples.a1_ex41_is_k0", anchor, 1e-6, outcome));

    let anchor = "Ups0 of (sqrt(pi)/4) x^(-1/2) e^(-x/4) dx is (pi/4) x^(-1/2) e^(-sqrt x)";
    let ygrid = log_grid(0.05, 20.0, 20);
    let outcome = upsilon0(&battery::on_line(battery::ex42())).and_then(|t| {
        sup_rel(
            &ygrid,
            |y| density_of(&t, y, b),
            |y| Ok(PI / 4.0 * y.powf(-0.5) * (-y.sqrt()).exp()),
        )
    });
    out.push(grid_check("examples.ups0_ex42_is_ex41", anchor, 1e-7, outcome));

    let anchor = "A1 of (sqrt(pi)/4) x^(-1/2) e^(-x/4) dx has density (2 sqrt(pi))^(-1) e^(-x^2/8) K0(x^2/8)";
    let outcome = arcsine_transform(1, &battery::on_line(battery::ex42())).and_then(|t| {
        sup_rel(
            &grid,
            |x| density_of(&t, x, b),
            |x| {
                let q = x * x / 8.0;
                Ok((-q).exp() * bessel_k0_alt(q)?.value / (2.0 * PI.sqrt()))
            },
        )
    });
    out.push(grid_check("examples.a1_ex42_closed_form", anchor, 1e-6, outcome));
    out
}

// ---------------------------------------------------------------------------
// Lemmas, special values and classification

fn roundtrip_battery() -> Vec<(&'static str, RadialMeasure, Vec<f64>)> {
    let inside: Vec<f64> = (0..20).map(|i| 0.05 + 0.9 * f64::from(i) / 19.0).collect();
    vec![
        ("delta1", RadialMeasure::dirac(1.0).expect("atom"), inside),
        ("exp", battery::exp_density(), log_grid(0.05, 8.0, 20)),
        ("ex42", battery::ex42(), log_grid(0.05, 8.0, 20)),
    ]
}

pub fn lemmas(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let mut out = Vec::new();

    for (name, rho, grid) in roundtrip_battery() {
        let anchor = "the half-integral applied twice gives the tail u -> rho((u, inf))";
        let outcome = half_integral(&rho)
            .and_then(|h| half_integral(&h))
            .and_then(|hh| sup_rel(&grid, |u| Ok(hh.density(u, b)?.value), |u| Ok(rho.tail(u, b)?.value)));
        out.push(grid_check(&format!("lemmas.half_integral_twice.{name}"), anchor, 1e-5, outcome));

        let anchor = "inverting A1 of nu recovers the tails of nu";
        let nu = battery::on_line(rho.clone());
        let outcome = arcsine_transform(1, &nu)
            .and_then(|t| invert_arcsine(1, &t, b))
            .and_then(|inv| sup_rel(&grid, |u| Ok(inv.tail(0, u, b)?.value), |u| Ok(rho.tail(u, b)?.value)));
        out.push(grid_check(&format!("lemmas.inversion_roundtrip.{name}"), anchor, 1e-4, outcome));
    }

    let battery_p: Vec<(&str, PolarLevyMeasure)> = vec![
        ("delta1.5", delta(1.5)),
        ("exp", battery::on_line(battery::exp_density())),
        ("ex41", battery::on_line(battery::ex41())),
        ("ex42", battery::on_line(battery::ex42())),
    ];
    let grid = log_grid(0.1, 5.0, 12);
    for (name, nu) in &battery_p {
        let anchor = "A2(nu) = A1(nu^(2)) pointwise";
        let outcome = (|| {
            let lhs = arcsine_transform(2, nu)?;
            let rhs = arcsine_transform(1, &nu.p_transform(2.0)?)?;
            sup_rel(&grid, |r| density_of(&rhs, r, b), |r| density_of(&lhs, r, b))
        })();
        out.push(grid_check(&format!("lemmas.a2_is_a1_of_square.{name}"), anchor, 1e-8, outcome));

        let anchor = "A1(nu) = A2(nu^(1/2)) pointwise";
        let outcome = (|| {
            let lhs = arcsine_transform(1, nu)?;
            let rhs = arcsine_transform(2, &nu.p_transform(0.5)?)?;
            sup_rel(&grid, |r| density_of(&rhs, r, b), |r| density_of(&lhs, r, b))
        })();
        out.push(grid_check(&format!("lemmas.a1_is_a2_of_root.{name}"), anchor, 1e-8, outcome));
    }

    out.extend(special_values(cfg));
    out.extend(gaussian_arcsine(cfg));
    out.extend(classification(cfg));
    out
}

fn special_values(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let mut out = Vec::new();
    let anchor = "integral of K0 over (0, inf) is pi/2";
    out.push(match k0_integral(b) {
        Ok(v) => Check::measured("special.k0_integral", anchor, (v - PI / 2.0).abs(), 1e-8),
        Err(e) => Check::failed("special.k0_integral", anchor, 1e-8, &e),
    });

    let anchor = "Laplace transform of K0 equals 1 at s = 1 and is continuous there";
    let at_one = laplace_k0(1.0);
    let limits = [laplace_k0(1.0 - 1e-9), laplace_k0(1.0 + 1e-9)];
    let d = limits.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let mut c = Check::measured("special.laplace_k0_at_one", anchor, d, 1e-8)
        .with_detail(format!("value at 1 = {at_one}; one-sided values {limits:?}"));
    c.pass &= at_one == 1.0;
    out.push(c);

    for (u, v) in [(0.0, 1.0), (0.3, 2.0)] {
        let anchor = "integral over (u, v) of (s-u)^(-1/2) (v-s)^(-1/2) ds is pi";
        let id = format!("special.arcsine_integral.{u}_{v}");
        let seg = Segment::finite(u, v).with_exponents(-0.5, -0.5);
        out.push(
            match integrate_segment(|s| 1.0 / ((s - u) * (v - s)).sqrt(), &seg, b) {
                Ok(e) => Check::measured(id, anchor, (e.value - PI).abs(), 1e-10),
                Err(e) => Check::failed(id, anchor, 1e-10, &e.into()),
            },
        );
    }
    out
}

/// `(x, t)` pairs for the Gaussian/arcsine mixture identity.
pub const GAUSSIAN_ARCSINE_PAIRS: [(f64, f64); 9] = [
    (0.0, 0.5),
    (0.0, 1.0),
    (0.5, 1.0),
    (1.0, 1.0),
    (1.0, 0.25),
    (2.0, 0.5),
    (0.3, 3.0),
    (1.5, 2.0),
    (3.0, 4.0),
];

fn gaussian_arcsine(cfg: &VerifyConfig) -> Vec<Check> {
    let anchor = "N(0, t) density = t^(-1) * integral of e^(-s/t) a(x; s) ds with a(x; s) = pi^(-1) (s - x^2)^(-1/2)";
    GAUSSIAN_ARCSINE_PAIRS
        .iter()
        .map(|&(x, t)| {
            let id = format!("gaussian_arcsine.x{x}_t{t}");
            match gaussian_arcsine_identity(x, t, &cfg.budget) {
                Ok(r) => Check::measured(id, anchor, r.discrepancy(), 1e-8).with_detail(format!(
                    "closed form {:e}, mixture {:e}; with a(x; 2s) the discrepancy is {:.2e}",
                    r.closed_form,
                    r.mixture,
                    r.doubled_discrepancy()
                )),
                Err(e) => Check::failed(id, anchor, 1e-8, &e),
            }
        })
        .collect()
}

fn flag_check(id: &str, anchor: &str, flag: &ClassFlag, expected: bool) -> Check {
    let c = &flag.certificate;
    Check {
        id: id.to_string(),
        anchor: anchor.to_string(),
        discrepancy: c.worst_violation,
        tolerance: c.tolerance,
        pass: flag.value == Some(expected),
        detail: format!(
            "value {:?}; {} grid points, worst at {}; {}",
            flag.value, c.grid_points, c.at, c.note
        ),
    }
}

fn classification(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let mut out = Vec::new();
    match arcsine_transform(1, &delta(1.0)) {
        Ok(t) => {
            let v = classify(&t, b);
            out.push(flag_check(
                "classes.a1_delta1_not_jurek_u",
                "the arcsine density of delta1 is increasing, so not in the Jurek class",
                &v.jurek_u,
                false,
            ));
            out.push(flag_check(
                "classes.a1_delta1_type_a",
                "A1 of delta1 lies in the range of A1",
                &v.type_a_range,
                true,
            ));
        }
        Err(e) => out.push(Check::failed("classes.a1_delta1", "A1 of delta1", 0.0, &e)),
    }
    let v = classify_measure(&battery::on_line(battery::k0_density()), b);
    out.push(flag_check(
        "classes.k0_type_g",
        "the K0 density is g(r^2) with g completely monotone",
        &v.type_g,
        true,
    ));

    let grid = decade_grid(1e-2, 1e2, CM_POINTS_PER_DECADE);
    let cm_cases: [(&str, &str, fn(f64) -> f64, bool); 2] = [
        ("classes.u_exp_not_cm", "u e^(-u) is not completely monotone", |u| u * (-u).exp(), false),
        ("classes.exp_cm", "e^(-u) is completely monotone", |u| (-u).exp(), true),
    ];
    for (id, anchor, g, expected) in cm_cases {
        out.push(match is_completely_monotone(g, &grid, CM_MAX_ORDER, CM_TOLERANCE) {
            Ok(rep) => {
                let detail = match rep.verdict {
                    CmVerdict::Consistent => format!("consistent on {} points", rep.grid_points),
                    CmVerdict::Violated { x, n, h } => format!("order-{n} difference negative at x = {x}, h = {h}"),
                };
                Check {
                    id: id.to_string(),
                    anchor: anchor.to_string(),
                    discrepancy: rep.worst_violation,
                    tolerance: rep.tolerance,
                    pass: rep.consistent() == expected,
                    detail,
                }
            }
            Err(e) => Check::failed(id, anchor, CM_TOLERANCE, &e),
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Commutation relations and triplet maps

/// Battery triplets with a Gaussian part so the covariance maps are visible.
fn composition_triplets(b: &QuadratureBudget) -> Result<Vec<(&'static str, LevyTriplet)>> {
    ["ex42", "poisson"]
        .into_iter()
        .map(|name| {
            let t = named_triplet(name, b)?;
            Ok((name, LevyTriplet::new(DMatrix::identity(1, 1), t.nu, t.gamma)?))
        })
        .collect()
}

pub fn commutation(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let mut out = Vec::new();
    let grid = log_grid(0.05, 5.0, 20);
    for (name, rho) in [("delta1", delta(1.0)), ("ex42", battery::on_line(battery::ex42()))] {
        let anchor = "Ups_{-2,2}(A1(rho)) = A1(Ups0(rho))";
        let outcome = check_commutation(&rho, &grid, b).map(|r| {
            let at = r
                .points
                .iter()
                .map(|p| (rel(p.2, p.3), p.1))
                .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
            (r.max_discrepancy, at.1)
        });
        out.push(grid_check(&format!("commutation.ups_a1.{name}"), anchor, 1e-5, outcome));
    }

    // First moments of Ups0 and Ups_{-2,2} of A1(delta1): 2/pi and 1/sqrt(pi).
    let moments = arcsine_transform(1, &delta(1.0)).and_then(|t| {
        let m0 = upsilon0(&t.measure)?.radial(0).moment(1.0, b)?.value;
        let m22 = upsilon_alpha_beta(&t.measure, -2.0, 2.0)?.radial(0).moment(1.0, b)?.value;
        Ok((m0, m22))
    });
    match moments {
        Ok((m0, m22)) => {
            out.push(Check::measured(
                "commutation.witness.moment_ups0",
                "first moment of Ups0(A1(delta1)) is 2/pi",
                (m0 - FRAC_2_PI).abs(),
                1e-7,
            ));
            out.push(Check::measured(
                "commutation.witness.moment_ups_m22",
                "first moment of Ups_{-2,2}(A1(delta1)) is 1/sqrt(pi)",
                (m22 - 1.0 / PI.sqrt()).abs(),
                1e-7,
            ));
            out.push(Check::measured(
                "commutation.witness.ratio",
                "the two first moments are in ratio 1 : sqrt(pi)/2",
                (m22 / m0 - HALF_SQRT_PI).abs(),
                1e-6,
            ));
        }
        Err(e) => out.push(Check::failed("commutation.witness", "first moments", 1e-7, &e)),
    }

    out.extend(triplet_maps(cfg));
    out
}

fn triplet_maps(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let mut out = Vec::new();
    let gauss = LevyTriplet::gaussian(DMatrix::identity(1, 1)).expect("unit Gaussian");
    for (id, anchor, spec, want) in [
        (
            "triplets.phi_cos_gaussian_scale",
            "Phi_cos maps Sigma to Sigma/2",
            IntegrandSpec::cos_half_pi(),
            0.5,
        ),
        (
            "triplets.psi_m22_gaussian_scale",
            "Psi_{-2,2} maps Sigma to Sigma",
            IntegrandSpec::log_sqrt(),
            1.0,
        ),
    ] {
        let outcome = (|| {
            let mapped = crate::stochastic::map_triplet(&gauss, &spec, b)?;
            let numeric = spec.square_integral_numeric(b)?;
            Ok((mapped.sigma[(0, 0)] - want)
                .abs()
                .max((spec.square_integral - want).abs())
                .max((numeric - want).abs()))
        })();
        out.push(match outcome {
            Ok(d) => Check::measured(id, anchor, d, 1e-12),
            Err(e) => Check::failed(id, anchor, 1e-12, &e),
        });
    }

    let grid = log_grid(0.1, 4.0, 12);
    let triplets = match composition_triplets(b) {
        Ok(t) => t,
        Err(e) => {
            out.push(Check::failed("triplets.composition", "battery triplets", 1e-5, &e));
            return out;
        }
    };
    let (phi, psi, g_spec) = (IntegrandSpec::cos_half_pi(), IntegrandSpec::log_sqrt(), IntegrandSpec::g_inverse());
    for (name, mu) in &triplets {
        // Only (Σ, ν) enter the comparison; the drift of a composition is a
        // triply nested integral and is not part of it.
        let outcome = (|| {
            let then = |s: &DMatrix<f64>, n: &PolarLevyMeasure, a: &IntegrandSpec, b: &IntegrandSpec| {
                let (s, n) = map_sigma_nu(s, n, a)?;
                map_sigma_nu(&s, &n, b)
            };
            let pf = then(&mu.sigma, &mu.nu, &phi, &psi)?;
            let fp = then(&mu.sigma, &mu.nu, &psi, &phi)?;
            let g = map_sigma_nu(&mu.sigma, &mu.nu, &g_spec)?;
            Ok((pf, fp, g))
        })();
        let (pf, fp, g) = match outcome {
            Ok(x) => x,
            Err(e) => {
                out.push(Check::failed(format!("triplets.composition.{name}"), "G = Psi Phi = Phi Psi", 1e-5, &e));
                continue;
            }
        };
        let dens = |t: &(DMatrix<f64>, PolarLevyMeasure), r: f64| -> Result<f64> {
            Ok(t.1.components()[0].radial.density(r, b)?.value)
        };

        let anchor = "Psi_{-2,2} o Phi_cos = Phi_cos o Psi_{-2,2}: Levy densities";
        let outcome = sup_rel(&grid, |r| dens(&fp, r), |r| dens(&pf, r));
        out.push(grid_check(&format!("triplets.psi_phi_commute.nu.{name}"), anchor, 1e-5, outcome));
        out.push(Check::measured(
            format!("triplets.psi_phi_commute.sigma.{name}"),
            "Psi_{-2,2} o Phi_cos = Phi_cos o Psi_{-2,2}: Gaussian parts",
            (pf.0[(0, 0)] - fp.0[(0, 0)]).abs(),
            1e-10,
        ));

        let anchor = "G = Psi_{-2,2} o Phi_cos: Levy densities";
        let outcome = sup_rel(&grid, |r| dens(&g, r), |r| dens(&pf, r));
        let ratio = dens(&g, 1.0).and_then(|x| Ok(x / dens(&pf, 1.0)?)).unwrap_or(f64::NAN);
        out.push(
            grid_check(&format!("triplets.g_is_composition.nu.{name}"), anchor, 1e-5, outcome).with_detail(format!(
                "density ratio G / (Psi o Phi) at r = 1 is {ratio:.12} (sqrt(pi)/2 = {HALF_SQRT_PI:.12})"
            )),
        );
        out.push(
            Check::measured(
                format!("triplets.g_is_composition.sigma.{name}"),
                "G = Psi_{-2,2} o Phi_cos: Gaussian parts",
                (g.0[(0, 0)] - pf.0[(0, 0)]).abs(),
                1e-10,
            )
            .with_detail(format!("G gives {}, Psi o Phi gives {}", g.0[(0, 0)], pf.0[(0, 0)])),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Monte Carlo

pub fn monte_carlo(cfg: &VerifyConfig) -> Vec<Check> {
    let b = &cfg.budget;
    let f = IntegrandSpec::cos_half_pi();
    let z = line_grid(1, -5.0, 5.0, 21);
    let mut out = Vec::new();
    for (k, name) in ["gaussian", "poisson"].into_iter().enumerate() {
        let id = format!("montecarlo.phi_cos.{name}");
        let anchor = "samples of the integral of cos(pi t/2) dX_t over (0, 1) have the characteristic function of Phi_cos";
        let seed = cfg.seed.wrapping_add(k as u64);
        let outcome = (|| {
            let mu = named_triplet(name, b)?;
            let target = phi_cos(&mu, b)?;
            let samples = sample_stochastic_integral(&mu, &f, cfg.mc_samples, seed, SamplerConfig::default(), b)?;
            let cmp = empirical_cf_compare(&samples, &target, &z, b)?;
            let again = sample_stochastic_integral(&mu, &f, cfg.mc_samples.min(1000), seed, SamplerConfig::default(), b)?;
            let reproducible = again.values[..] == samples.values[..again.values.len()];
            Ok((cmp, reproducible))
        })();
        match outcome {
            Ok((cmp, reproducible)) => {
                let worst = cmp
                    .points
                    .iter()
                    .fold((0.0, 0.0), |acc, p| if p.deviation > acc.0 { (p.deviation, p.z[0]) } else { acc });
                out.push(Check::measured(id, anchor, cmp.max_deviation, MC_CF_TOLERANCE).with_detail(format!(
                    "N = {}, 21 points on [-5, 5], worst at z = {}, 3-sigma bound {:.4}",
                    cmp.n_samples, worst.1, cmp.bound
                )));
                let rid = format!("montecarlo.reproducible.{name}");
                out.push(Check {
                    id: rid,
                    anchor: "a fixed seed reproduces the samples bit for bit".into(),
                    discrepancy: if reproducible { 0.0 } else { 1.0 },
                    tolerance: 0.0,
                    pass: reproducible,
                    detail: String::new(),
                });
            }
            Err(e) => out.push(Check::failed(id, anchor, MC_CF_TOLERANCE, &e)),
        }
    }
    out
}

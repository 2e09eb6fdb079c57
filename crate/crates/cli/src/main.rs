use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use levyarc::nalgebra::{DMatrix, DVector};
use levyarc::special::type_a_laplace;
use levyarc::stochastic::{
    empirical_cf_compare, line_grid, map_triplet, named_triplet, sample_stochastic_integral, CfComparison,
};
use levyarc::transforms::{
    arcsine_transform, default_radius_grid, log_grid, upsilon0, upsilon_alpha_beta, upsilon_general,
};
use levyarc::{
    classify, parse_measure_spec, run_suite, DilationMeasure, IntegrandSpec, LevyError, LevyTriplet, MeasureSpec,
    PolarLevyMeasure, QuadratureBudget, SamplerConfig, Suite, TransformedDensity, VerifyConfig,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "levyarc", version)]
#[command(about = "Arcsine and Upsilon transformations of Lévy measures: tables, checks and simulation")]
struct Cli {
    /// Relative tolerance requested from every quadrature.
    #[arg(long, global = true, env = "LEVYARC_REL_TOL", default_value_t = 1e-10)]
    rel_tol: f64,
    /// Integrand evaluations allowed per quadrature.
    #[arg(long, global = true, env = "LEVYARC_MAX_EVALS", default_value_t = 1_000_000)]
    max_evals: usize,
    /// Seed for every random stream.
    #[arg(long, global = true, env = "LEVYARC_SEED", default_value_t = 7)]
    seed: u64,
    /// Directory receiving output files given by relative path.
    #[arg(long, global = true, env = "LEVYARC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the density of a transformed measure as CSV.
    Transform {
        /// Measure spec file (`-` for standard input).
        spec: PathBuf,
        /// A1, A2, p:<p>, Ups0, Ups:<alpha>,<beta> or UpsTau:<file>.
        #[arg(short, long)]
        transform: String,
        /// Log-spaced grid `lo:hi:n`.
        #[arg(long, conflicts_with = "r")]
        grid: Option<String>,
        /// Explicit radii.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        /// CSV output; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        #[arg(value_parser = Suite::NAMES)]
        suite: String,
        /// Report path; `verify-<suite>.json` in the output directory when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Samples per Monte Carlo check.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Decide class memberships of a measure, or of its image under a transform.
    Classify {
        spec: PathBuf,
        #[arg(short, long)]
        transform: Option<String>,
        /// JSON output; `classify.json` in the output directory when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sample a stochastic integral and compare with its characteristic function.
    Simulate {
        /// Named triplet: gaussian, poisson, ex42, k0, symmetric_exp.
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        triplet: Option<String>,
        /// Measure spec file for the Lévy measure.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Gaussian variance (times the identity) used with `--spec`.
        #[arg(long, default_value_t = 0.0)]
        sigma2: f64,
        /// Drift components used with `--spec`.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = MapName::PhiCos)]
        map: MapName,
        #[arg(short = 'n', long, default_value_t = 100_000)]
        samples: usize,
        /// Jumps of size at most `eps` are replaced by their Gaussian approximation.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1024)]
        steps: usize,
        /// Samples CSV; `samples.csv` in the output directory when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Characteristic-function summary; `simulate.json` in the output directory when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Laplace transform exp(-gamma0 s + phi_K0(s) - pi/2) of the K0 type-A law.
    TypeALaplace {
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        gamma0: f64,
    },
    /// Print a measure spec in canonical form.
    Fmt { spec: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapName {
    None,
    PhiCos,
    PsiM22,
    G,
}

impl MapName {
    fn integrand(self) -> IntegrandSpec {
        match self {
            MapName::None => IntegrandSpec::identity(),
            MapName::PhiCos => IntegrandSpec::cos_half_pi(),
            MapName::PsiM22 => IntegrandSpec::log_sqrt(),
            MapName::G => IntegrandSpec::g_inverse(),
        }
    }
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// Quadrature, root finding or sampler failure: exit code 3.
    Numerical(String),
}

impl From<LevyError> for Failure {
    fn from(e: LevyError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

struct Context {
    budget: QuadratureBudget,
    seed: u64,
    out_dir: PathBuf,
}

impl Context {
    fn path(&self, given: Option<&PathBuf>, default: &str) -> PathBuf {
        match given {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.out_dir.join(p),
            None => self.out_dir.join(default),
        }
    }

    fn write(&self, path: &Path, content: &str) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        }
        fs::write(path, content).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> CliResult<MeasureSpec> {
    let text = read_text(path)?;
    parse_measure_spec(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn apply_transform(name: &str, nu: &PolarLevyMeasure) -> CliResult<TransformedDensity> {
    let usage = || {
        Failure::Usage(format!(
            "unknown transform `{name}`; expected A1, A2, p:<p>, Ups0, Ups:<alpha>,<beta> or UpsTau:<file>"
        ))
    };
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| usage());
    let t = match name {
        "A1" => arcsine_transform(1, nu)?,
        "A2" => arcsine_transform(2, nu)?,
        "Ups0" => upsilon0(nu)?,
        _ => {
            if let Some(p) = name.strip_prefix("p:") {
                let p = number(p)?;
                TransformedDensity::new(nu.p_transform(p)?, name)
            } else if let Some(ab) = name.strip_prefix("Ups:") {
                let (a, b) = ab.split_once(',').ok_or_else(usage)?;
                upsilon_alpha_beta(nu, number(a)?, number(b)?)?
            } else if let Some(file) = name.strip_prefix("UpsTau:") {
                let spec = read_spec(Path::new(file))?;
                if spec.radial.len() != 1 {
                    return Err(Failure::Usage(format!("{file}: a dilation measure has exactly one radial part")));
                }
                let tau = DilationMeasure::new(spec.radial[0].to_measure()?, format!("UpsTau[{file}]"));
                upsilon_general(nu, &tau)?
            } else {
                return Err(usage());
            }
        }
    };
    Ok(t)
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::Usage(format!("grid `{s}` is not lo:hi:n with 0 < lo < hi and n >= 1"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let (lo, hi, n) = (
        lo.parse::<f64>().map_err(|_| bad())?,
        hi.parse::<f64>().map_err(|_| bad())?,
        n.parse::<usize>().map_err(|_| bad())?,
    );
    if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 1) {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, n))
}

fn cmd_transform(
    ctx: &Context,
    spec: &Path,
    transform: &str,
    grid: Option<&str>,
    r: Option<Vec<f64>>,
    out: Option<&PathBuf>,
) -> CliResult<ExitCode> {
    let nu = read_spec(spec)?.to_measure()?;
    let t = apply_transform(transform, &nu)?;
    let grid = match (grid, r) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(r)) => {
            if r.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Failure::Usage("radii must be positive and finite".into()));
            }
            r
        }
        (None, None) if t.directions() > 0 => default_radius_grid(t.radial(0), 64),
        (None, None) => Vec::new(),
    };
    let table = t.tabulate(&grid, &ctx.budget)?;
    for a in &table.atoms {
        eprintln!("atom: direction {} location {:e} mass {:e}", a.direction_index, a.location, a.mass);
    }
    match out {
        Some(p) => {
            let path = ctx.path(Some(p), "");
            ctx.write(&path, &table.to_csv())?;
            if !table.atoms.is_empty() {
                ctx.write(&path.with_extension("atoms.csv"), &table.atoms_csv())?;
            }
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Context, suite: &str, out: Option<&PathBuf>, samples: usize) -> CliResult<ExitCode> {
    let suite: Suite = suite.parse()?;
    let cfg = VerifyConfig {
        seed: ctx.seed,
        budget: ctx.budget,
        mc_samples: samples,
    };
    let report = run_suite(suite, &cfg);
    let path = ctx.path(out, &format!("verify-{}.json", suite.name()));
    ctx.write(&path, &report.to_json())?;
    print!("{}", report.human_summary());
    println!("report: {}", path.display());
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_classify(ctx: &Context, spec: &Path, transform: Option<&str>, out: Option<&PathBuf>) -> CliResult<ExitCode> {
    let nu = read_spec(spec)?.to_measure()?;
    let target = match transform {
        Some(name) => apply_transform(name, &nu)?,
        None => TransformedDensity::new(nu, "spec"),
    };
    let verdict = classify(&target, &ctx.budget);
    for (name, flag) in verdict.flags() {
        let value = match flag.value {
            Some(true) => "true",
            Some(false) => "false",
            None => "inconclusive",
        };
        println!(
            "{name:<12} {value:<12} worst {:.3e} at {:.4e} on {} points; {}",
            flag.certificate.worst_violation, flag.certificate.at, flag.certificate.grid_points, flag.certificate.note
        );
    }
    let json = serde_json::to_string_pretty(&verdict).expect("verdict serializes") + "\n";
    ctx.write(&ctx.path(out, "classify.json"), &json)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    schema: u32,
    map: &'a str,
    source: &'a str,
    seed: u64,
    sampler: SamplerConfig,
    comparison: CfComparison,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ctx: &Context,
    triplet: Option<&str>,
    spec: Option<&Path>,
    sigma2: f64,
    gamma: Option<Vec<f64>>,
    map: MapName,
    samples: usize,
    sampler: SamplerConfig,
    out: Option<&PathBuf>,
    summary: Option<&PathBuf>,
) -> CliResult<ExitCode> {
    let (mu, source) = match (triplet, spec) {
        (Some(name), _) => (named_triplet(name, &ctx.budget)?, name.to_string()),
        (None, Some(path)) => {
            let nu = read_spec(path)?.to_measure()?;
            let d = nu.dim();
            let gamma = gamma.unwrap_or_else(|| vec![0.0; d]);
            if gamma.len() != d {
                return Err(Failure::Usage(format!("--gamma needs {d} components")));
            }
            let mu = LevyTriplet::new(DMatrix::identity(d, d) * sigma2, nu, DVector::from_vec(gamma))?;
            (mu, path.display().to_string())
        }
        (None, None) => return Err(Failure::Usage("give --triplet or --spec".into())),
    };
    let f = map.integrand();
    let target = map_triplet(&mu, &f, &ctx.budget)?;
    let set = sample_stochastic_integral(&mu, &f, samples, ctx.seed, sampler, &ctx.budget)?;
    let z = line_grid(mu.dim(), -5.0, 5.0, 21);
    let cmp = empirical_cf_compare(&set, &target, &z, &ctx.budget)?;
    let samples_path = ctx.path(out, "samples.csv");
    ctx.write(&samples_path, &set.to_csv())?;
    println!(
        "map {}: N = {}, max |empirical - analytic| CF = {:.4e} (bound {:.4e}) {}",
        f.name,
        cmp.n_samples,
        cmp.max_deviation,
        cmp.bound,
        if cmp.pass { "PASS" } else { "FAIL" }
    );
    let pass = cmp.pass;
    let report = SimulationSummary {
        schema: 1,
        map: &f.name,
        source: &source,
        seed: ctx.seed,
        sampler,
        comparison: cmp,
    };
    let json = serde_json::to_string_pretty(&report).expect("summary serializes") + "\n";
    ctx.write(&ctx.path(summary, "simulate.json"), &json)?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_type_a_laplace(s: &[f64], gamma0: f64) -> CliResult<ExitCode> {
    println!("s,laplace");
    for &x in s {
        println!("{x:e},{:e}", type_a_laplace(x, gamma0)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let budget = QuadratureBudget {
        rel_tol: cli.rel_tol,
        max_evals: cli.max_evals,
        ..QuadratureBudget::default()
    };
    budget
        .validate()
        .map_err(|e| Failure::Usage(format!("invalid quadrature budget: {e}")))?;
    let ctx = Context {
        budget,
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Transform {
            spec,
            transform,
            grid,
            r,
            out,
        } => cmd_transform(&ctx, &spec, &transform, grid.as_deref(), r, out.as_ref()),
        Command::Verify { suite, out, samples } => cmd_verify(&ctx, &suite, out.as_ref(), samples),
        Command::Classify { spec, transform, out } => cmd_classify(&ctx, &spec, transform.as_deref(), out.as_ref()),
        Command::Simulate {
            triplet,
            spec,
            sigma2,
            gamma,
            map,
            samples,
            eps,
            steps,
            out,
            summary,
        } => {
            let sampler = SamplerConfig {
                eps,
                n_steps: steps,
                ..SamplerConfig::default()
            };
            cmd_simulate(
                &ctx,
                triplet.as_deref(),
                spec.as_deref(),
                sigma2,
                gamma,
                map,
                samples,
                sampler,
                out.as_ref(),
                summary.as_ref(),
            )
        }
        Command::TypeALaplace { s, gamma0 } => cmd_type_a_laplace(&s, gamma0),
        Command::Fmt { spec } => {
            println!("{}", read_spec(&spec)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

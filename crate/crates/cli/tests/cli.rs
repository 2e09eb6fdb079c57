use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const DELTA1: &str = "{ d: 1, dirs: [[1]], radial: [ { atoms: [(1, 1)] } ] }\n";
const DELTA2: &str = "{ d: 1, dirs: [[1]], radial: [ { atoms: [(2, 1)] } ] }\n";
const EX41: &str = r#"{
  d: 1,
  dirs: [[1]],
  # (pi/4) x^(-1/2) e^(-sqrt x) on the half-line
  radial: [ { density: { expr: "pi/4 * x^(-0.5) * exp(-sqrt(x))", support: (0, inf) } } ]
}
"#;
const EXP: &str = r#"{ d: 1, dirs: [[1]], radial: [ { density: { expr: "exp(-x)", support: (0, inf) } } ] }"#;

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn levyarc(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levyarc"))
        .current_dir(dir)
        .env_remove("LEVYARC_SEED")
        .env_remove("LEVYARC_REL_TOL")
        .env_remove("LEVYARC_MAX_EVALS")
        .env_remove("LEVYARC_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Density column of a single-row transform table.
fn single_density(csv: &str) -> f64 {
    let row = csv.lines().nth(1).expect("one data row");
    row.split(',').nth(2).unwrap().parse().unwrap()
}

fn k0_trapezoid(x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.5 * (-x).exp();
    for k in 1.. {
        let term = (-x * (k as f64 * h).cosh()).exp();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum * h
}

#[test]
fn a1_of_unit_atom() {
    let dir = workdir("a1_atom");
    fs::write(dir.join("d1.spec"), DELTA1).unwrap();
    let o = levyarc(&dir, &["transform", "d1.spec", "-t", "A1", "--r", "0.5"]);
    assert!(o.status.success());
    let want = 2.0 / std::f64::consts::PI / 0.75f64.sqrt();
    let got = single_density(&stdout(&o));
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
}

#[test]
fn p_transform_moves_atom() {
    let dir = workdir("p_atom");
    fs::write(dir.join("d2.spec"), DELTA2).unwrap();
    let o = levyarc(&dir, &["transform", "d2.spec", "-t", "p:2", "--r", "1", "-o", "t.csv"]);
    assert!(o.status.success());
    let atoms = fs::read_to_string(dir.join("t.atoms.csv")).unwrap();
    let row: Vec<f64> = atoms.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 4.0, 1.0]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("location 4e0"));
}

#[test]
fn a1_of_example_is_k0() {
    let dir = workdir("k0");
    fs::write(dir.join("ex41.spec"), EX41).unwrap();
    for r in ["0.2", "1", "3.5"] {
        let o = levyarc(&dir, &["transform", "ex41.spec", "-t", "A1", "--r", r]);
        assert!(o.status.success());
        let got = single_density(&stdout(&o));
        let want = k0_trapezoid(r.parse().unwrap());
        assert!((got - want).abs() <= 1e-6 * want, "r = {r}: {got} vs {want}");
    }
}

#[test]
fn spec_from_stdin() {
    use std::io::Write;
    let dir = workdir("stdin");
    let mut child = Command::new(env!("CARGO_BIN_EXE_levyarc"))
        .current_dir(&dir)
        .args(["transform", "-", "-t", "A1", "--grid", "0.1:0.9:5"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(DELTA1.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn verify_examples_passes() {
    let dir = workdir("verify");
    let o = levyarc(&dir, &["verify", "examples"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("verify-examples.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
    assert_eq!(report["environment"]["seed"], 7);
}

#[test]
fn verify_montecarlo_is_reproducible() {
    let dir = workdir("mc");
    let run = |name: &str| {
        let o = levyarc(&dir, &["verify", "montecarlo", "--samples", "20000", "-o", name]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        fs::read(dir.join(name)).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn seed_from_environment() {
    let dir = workdir("env_seed");
    let o = Command::new(env!("CARGO_BIN_EXE_levyarc"))
        .current_dir(&dir)
        .env("LEVYARC_SEED", "11")
        .args(["verify", "examples"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("verify-examples.json")).unwrap()).unwrap();
    assert_eq!(report["environment"]["seed"], 11);
}

fn flag(dir: &PathBuf, spec: &str, transform: Option<&str>, name: &str) -> serde_json::Value {
    fs::write(dir.join("m.spec"), spec).unwrap();
    let mut args = vec!["classify", "m.spec"];
    if let Some(t) = transform {
        args.extend(["-t", t]);
    }
    let o = levyarc(dir, &args);
    assert!(o.status.success());
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("classify.json")).unwrap()).unwrap();
    verdict[name]["value"].clone()
}

#[test]
fn classify_flags() {
    let dir = workdir("classify");
    let k0 = r#"{ d: 1, dirs: [[1]], radial: [ { density: { expr: "K0(x)", support: (0, inf) } } ] }"#;
    assert_eq!(flag(&dir, k0, None, "type_g"), true);
    assert_eq!(flag(&dir, DELTA1, Some("A1"), "jurek_u"), false);
    assert_eq!(flag(&dir, EXP, None, "jurek_u"), true);
    assert_eq!(flag(&dir, EXP, None, "bondesson_b"), true);
    assert_eq!(flag(&dir, EXP, None, "type_g"), true);
}

#[test]
fn simulate_matches_characteristic_function() {
    let dir = workdir("simulate");
    let o = levyarc(&dir, &["simulate", "--triplet", "poisson", "--map", "phi-cos", "-n", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let samples = fs::read_to_string(dir.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 20001);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(summary["comparison"]["pass"], true);
}

#[test]
fn parse_error_reports_position() {
    let dir = workdir("parse_error");
    fs::write(dir.join("bad.spec"), "{ d: 1, dirs: [[1]]\n  radial: [] }").unwrap();
    let o = levyarc(&dir, &["fmt", "bad.spec"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, column 3"));
}

#[test]
fn invalid_measure_exits_2() {
    let dir = workdir("invalid");
    fs::write(dir.join("neg.spec"), r#"{ d: 1, dirs: [[1]], radial: [ { density: { expr: "-exp(-x)", support: (0, inf) } } ] }"#)
        .unwrap();
    assert_eq!(levyarc(&dir, &["transform", "neg.spec", "-t", "A1"]).status.code(), Some(2));
    fs::write(dir.join("d1.spec"), DELTA1).unwrap();
    assert_eq!(levyarc(&dir, &["transform", "d1.spec", "-t", "B7"]).status.code(), Some(2));
}

#[test]
fn fmt_round_trips() {
    let dir = workdir("fmt");
    fs::write(dir.join("ex41.spec"), EX41).unwrap();
    let first = stdout(&levyarc(&dir, &["fmt", "ex41.spec"]));
    fs::write(dir.join("canon.spec"), &first).unwrap();
    let second = stdout(&levyarc(&dir, &["fmt", "canon.spec"]));
    assert_eq!(first, second);
}

#[test]
fn type_a_laplace_at_zero_is_one() {
    let dir = workdir("laplace");
    let o = levyarc(&dir, &["type-a-laplace", "--s", "0,1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let first: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn heatcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatcert")).args(args).output().expect("failed to launch heatcert")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn result<'a>(report: &'a Value, id: &str) -> &'a Value {
    report["results"].as_array().unwrap().iter().find(|r| r["estimate_id"] == id).unwrap()
}

/// Coarse plan so debug-profile runs stay quick.
const SMALL_PLAN: [&str; 8] = ["--plan.t_max", "1", "--plan.per_decade", "5", "--plan.radius", "4", "--plan.step", "0.25"];

#[test]
fn verify_plane_laplacian_passes_with_margin_near_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let mut args = vec!["verify", "--geometry", "euclidean:n=2", "--estimates", "eq1.4,eq1.1", "--out"];
    args.push(out.to_str().unwrap());
    args.extend(SMALL_PLAN);
    let run = heatcert(&args);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    let report = read_json(&out);
    assert_eq!(report["geometry"], "euclidean:n=2");
    let lap = result(&report, "eq1.4");
    assert_eq!(lap["pass"], true);
    let margin = lap["worst_margin"].as_f64().unwrap();
    assert!((margin - 2.0).abs() < 0.1, "margin {margin}");
    assert_eq!(result(&report, "eq1.1")["pass"], true);
}

#[test]
fn hyperbolic_laplacian_estimate_is_a_hypothesis_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let run = heatcert(&["verify", "--geometry", "hyperbolic:n=3", "--estimates", "eq1.4", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("requires nonnegative Ricci curvature"), "stderr: {}", stderr(&run));
    let report = read_json(&out);
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["kind"], "hypothesis");
    assert!(report["results"].as_array().unwrap().is_empty());
}

#[test]
fn torus_bochner_identities_hold() {
    let run = heatcert(&[
        "verify",
        "--geometry",
        "torus:n=1,L=6.283185307179586",
        "--estimates",
        "bochner",
        "--set",
        "bochner.samples=200",
    ]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    let report: Value = serde_json::from_str(&stdout(&run)).unwrap();
    assert_eq!(result(&report, "bochner")["pass"], true);
}

#[test]
fn fit_table_reports_known_constants() {
    let run = heatcert(&["fit", "--geometry", "euclidean:n=2", "--estimates", "liyau-fit,doubling"]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    let text = stdout(&run);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "estimate_id,constant,geometry,fitted,binding_coords,binding_t,plan_hash,value_1x,value_2x"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..4], &["liyau-fit", "C1", "euclidean:n=2", "4.000000"]);
    assert_eq!(&rows[1][..4], &["doubling", "C2", "euclidean:n=2", "2.000000"]);

    let run = heatcert(&["fit", "--geometry", "euclidean:n=1", "--estimates", "thm2.4-fit"]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    assert!(stdout(&run).lines().nth(1).unwrap().starts_with("thm2.4-fit,C(n)[laplacian],euclidean:n=1,0.192450,"));
}

#[test]
fn sharpness_scan_is_monotone_towards_the_limit() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sharp.csv");
    let run = heatcert(&["sharpness", "--geometry", "euclidean:n=1", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    assert!(stderr(&run).contains("monotone = true"));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,lhs,rhs,ratio");
    let ratios: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(ratios.len() >= 10);
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]));
    // delta = 0.5 by default: limit (4 - delta)/32
    assert!((ratios.last().unwrap() - 3.5 / 32.0).abs() < 1e-3);
}

#[test]
fn command_line_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# coarse run\ngeometry = euclidean:n=1\nestimates = eq1.4\nplan.t_max = 1\nplan.step = 0.1\n").unwrap();
    let run = heatcert(&["verify", "--config", cfg.to_str().unwrap(), "--estimates", "eq1.1"]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    let report: Value = serde_json::from_str(&stdout(&run)).unwrap();
    assert_eq!(report["geometry"], "euclidean:n=1");
    let ids: Vec<&str> = report["results"].as_array().unwrap().iter().map(|r| r["estimate_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["eq1.1"]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let run = heatcert(&["verify", "--geometry", "klein-bottle", "--estimates", "eq1.1"]);
    assert_eq!(run.status.code(), Some(2));
    let run = heatcert(&["verify", "--geometry", "euclidean:n=2", "--estimates", "eq9.9"]);
    assert_eq!(run.status.code(), Some(2));
    let run = heatcert(&["verify", "--geometry", "euclidean:n=2", "--estimates", "eq1.1", "--set", "no.such.key=1"]);
    assert_eq!(run.status.code(), Some(2));
    let run = heatcert(&["verify", "--estimates", "eq1.1"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("no geometry"));
}

#[test]
fn single_thread_matches_default_pool() {
    let mut base = vec!["verify", "--geometry", "sphere:n=2", "--estimates", "eq1.1,eq1.4"];
    base.extend(SMALL_PLAN);
    let default = heatcert(&base);
    base.extend(["--threads", "1"]);
    let single = heatcert(&base);
    assert_eq!(default.status.code(), Some(0), "stderr: {}", stderr(&default));
    assert_eq!(stdout(&default), stdout(&single));
}

#[test]
fn solve_exports_field_snapshots() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("field.csv");
    let run = heatcert(&[
        "solve",
        "--geometry",
        "warped:f=cigar,Rmax=10",
        "--set",
        "solver.n_r=201",
        "--set",
        "solver.n_t=400",
        "--every",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    assert!(!stderr(&run).contains("positivity violations"), "stderr: {}", stderr(&run));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r,t,u,grad_sq,lap");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 5 && r[2] >= 0.0));
    assert_eq!(rows.len() % 201, 0);
}

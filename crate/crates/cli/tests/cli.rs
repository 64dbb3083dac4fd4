use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use tempfile::TempDir;

const DESK: &str = "problem.type = fused_lasso
problem.r = 50
problem.n = 200
problem.mu1 = 20
problem.mu2 = 2
problem.seed = 7
";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    out: PathBuf,
    _dir: TempDir,
}

fn run(sub: &str, config: &str) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_pdfp"))
        .arg(sub)
        .arg(&cfg)
        .env("PDFP_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
        out,
        _dir: dir,
    }
}

/// Rows of a CSV file as header-keyed string maps.
fn read_csv(path: &Path) -> Vec<Vec<(String, String)>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no column {key}")).1
}

fn num(row: &[(String, String)], key: &str) -> f64 {
    field(row, key).parse().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn solve_desk_fused_lasso() {
    let r = run("solve", &format!("{DESK}solver.max_iter = 200000\nsolver.fp_tol = 1e-8\n"));
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let hist = read_csv(&r.out.join("history.csv"));
    let last = hist.last().unwrap();
    assert!(num(last, "fp_residual_lambda") <= 1e-8);
    assert_eq!(
        fs::read_to_string(r.out.join("history.csv")).unwrap().lines().next().unwrap(),
        "iter,objective,fp_residual_lambda,kkt_residual,feasibility_violation,elapsed_ms"
    );
    let sol = read_csv(&r.out.join("solution.csv"));
    assert_eq!(sol.len(), 200);
    assert!(r.stdout.contains("converged"));
    assert!(r.stdout.contains("F1"));
    let effective = fs::read_to_string(r.out.join("effective.cfg")).unwrap();
    assert!(!effective.contains("auto"), "{effective}");
}

#[test]
fn solve_rejects_large_lambda_with_the_bound() {
    let r = run("solve", &format!("{DESK}solver.lambda = 0.5\n"));
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("1/lambda_max(BB^T)"), "{}", r.stderr);
    assert!(!r.out.join("history.csv").exists());
}

#[test]
fn solve_budget_exhaustion_is_a_runtime_failure() {
    let r = run("solve", &format!("{DESK}solver.max_iter = 1\n"));
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("budget"));
}

#[test]
fn unknown_key_is_a_configuration_error() {
    let r = run("solve", &format!("{DESK}solver.gama = 0.1\n"));
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("run.cfg:7"), "{}", r.stderr);
    assert!(r.stderr.contains("gama"));
}

#[test]
fn missing_config_is_a_configuration_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_pdfp")).args(["solve", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.cfg"));
}

#[test]
fn compare_pdfp_and_condat_reach_the_same_objective() {
    let r = run(
        "compare",
        &format!(
            "{DESK}solver.max_iter = 1000000\nsolver.fp_tol = 1e-10\nsolver.record_every = 1000\n\
             solver.p.algorithm = pdfp\nsolver.c.algorithm = condat\n"
        ),
    );
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let rows = read_csv(&r.out.join("compare.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(field(&rows[0], "label"), "p");
    assert_eq!(field(&rows[1], "algorithm"), "condat");
    let (a, b) = (num(&rows[0], "final_objective"), num(&rows[1], "final_objective"));
    assert!(rel(a, b) <= 1e-6, "{a} vs {b}");
    assert!(r.out.join("history_p.csv").exists() && r.out.join("history_c.csv").exists());
}

#[test]
fn compare_without_f3_pdfp_and_pdfp2o_coincide() {
    let r = run(
        "compare",
        "problem.type = fused_lasso\nproblem.r = 30\nproblem.n = 60\nproblem.mu1 = 5\nproblem.mu2 = 0\n\
         solver.lambda = 0.2\nsolver.max_iter = 300\nsolver.fp_tol = 0\n\
         solver.a.algorithm = pdfp\nsolver.b.algorithm = pdfp2o\n",
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
    let a = read_csv(&r.out.join("history_a.csv"));
    let b = read_csv(&r.out.join("history_b.csv"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        for key in ["objective", "fp_residual_lambda", "kkt_residual"] {
            let (u, v) = (num(x, key), num(y, key));
            assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{key}: {u} vs {v}");
        }
    }
}

#[test]
fn compare_pdfp_and_pdfp2oc_on_tv_restoration() {
    let r = run(
        "compare",
        "problem.type = tv_restoration\nsolver.max_iter = 500000\nsolver.fp_tol = 1e-10\n\
         solver.record_every = 1000\nsolver.a.algorithm = pdfp\nsolver.b.algorithm = pdfp2oc\n",
    );
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let rows = read_csv(&r.out.join("compare.csv"));
    let (a, b) = (num(&rows[0], "final_objective"), num(&rows[1], "final_objective"));
    assert!(rel(a, b) <= 1e-6, "{a} vs {b}");
}

#[test]
fn compare_needs_two_solvers_and_valid_steps() {
    assert_eq!(run("compare", DESK).code, 1);
    let r = run("compare", &format!("{DESK}solver.a.algorithm = pdfp\nsolver.b.lambda = 9\n"));
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("`b`"), "{}", r.stderr);
}

#[test]
fn single_point_sweep_matches_solve() {
    let base = format!("{DESK}solver.gamma = 0.004\nsolver.lambda = 0.2\nsolver.max_iter = 200000\nsolver.fp_tol = 1e-8\n");
    let s = run("solve", &base);
    assert_eq!(s.code, 0, "{}", s.stderr);
    let hist = read_csv(&s.out.join("history.csv"));
    let last = hist.last().unwrap();

    let w = run("sweep", &format!("{base}sweep.gamma = 0.004\nsweep.lambda = 0.2\n"));
    assert_eq!(w.code, 0, "{}", w.stderr);
    let rows = read_csv(&w.out.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(field(&rows[0], "status"), "converged");
    assert_eq!(num(&rows[0], "iters_to_tol"), num(last, "iter"));
    assert!(rel(num(&rows[0], "final_objective"), num(last, "objective")) <= 1e-12);
}

#[test]
fn sweep_marks_invalid_cells_and_keeps_order() {
    let start = Instant::now();
    let r = run(
        "sweep",
        &format!(
            "{DESK}solver.max_iter = 20000\nsolver.fp_tol = 1e-6\n\
             sweep.gamma = 0.001, 0.004, auto\nsweep.lambda = 0.1, 0.2, 0.9\n"
        ),
    );
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = read_csv(&r.out.join("sweep.csv"));
    assert_eq!(rows.len(), 9);
    for (i, row) in rows.iter().enumerate() {
        let lambda = num(row, "lambda");
        assert_eq!(lambda, [0.1, 0.2, 0.9][i % 3]);
        if lambda == 0.9 {
            assert!(field(row, "status").starts_with("invalid"), "{row:?}");
        } else {
            assert_eq!(field(row, "status"), "converged", "{row:?}");
        }
    }
    assert_eq!(num(&rows[0], "gamma"), 0.001);
    assert!(num(&rows[8], "gamma") > 0.004);
}

#[test]
fn validate_reports_ranges_and_condat_translation() {
    let r = run("validate", &format!("{DESK}solver.gamma = 0.004\nsolver.lambda = 0.2\n"));
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("sigma = lambda/gamma = 5e1"), "{}", r.stdout);
    assert!(r.stdout.contains("tau = gamma = 4e-3"));
    let pdfp = r.stdout.lines().find(|l| l.trim_start().starts_with("pdfp ")).unwrap();
    // strict bound below 1/L
    assert!(pdfp.contains("lambda in (0, 0.25") && pdfp.trim_end().ends_with(')'), "{pdfp}");
    let pdfp2o = r.stdout.lines().find(|l| l.trim_start().starts_with("pdfp2o ")).unwrap();
    assert!(pdfp2o.contains("not applicable"), "{pdfp2o}");
    assert!(r.stdout.trim_end().ends_with("admissible"));

    let bad = run("validate", &format!("{DESK}solver.lambda = 0.5\n"));
    assert_eq!(bad.code, 1);
    assert!(bad.stdout.contains("not admissible"));
}

#[test]
fn validate_tv_closed_bound_for_pdfp2oc() {
    let r = run("validate", "problem.type = tv_restoration\nsolver.algorithm = pdfp2oc\n");
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let line = r.stdout.lines().find(|l| l.trim_start().starts_with("pdfp2oc ")).unwrap();
    assert!(line.trim_end().ends_with(']'), "{line}");
    let line = r.stdout.lines().find(|l| l.trim_start().starts_with("pdfp2o ")).unwrap();
    assert!(line.contains("not applicable"), "{line}");
}

#[test]
fn validate_without_smooth_term_has_unbounded_gamma() {
    let r = run("validate", &format!("{DESK}problem.smooth = none\n"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("beta = inf (no smooth term)"));
    let pdfp = r.stdout.lines().find(|l| l.trim_start().starts_with("pdfp ")).unwrap();
    assert!(pdfp.contains("gamma in (0, ∞)"), "{pdfp}");
}

#[test]
fn runs_are_reproducible_without_timing() {
    let config = format!("{DESK}solver.max_iter = 500\nsolver.fp_tol = 0\noutput.record_time = false\n");
    let a = run("solve", &config);
    let b = run("solve", &config);
    assert_eq!(a.code, 2);
    for name in ["history.csv", "solution.csv", "effective.cfg"] {
        assert_eq!(fs::read(a.out.join(name)).unwrap(), fs::read(b.out.join(name)).unwrap(), "{name}");
    }
    let hist = read_csv(&a.out.join("history.csv"));
    assert!(hist.iter().all(|r| field(r, "elapsed_ms") == "0.0"));

    // the effective configuration runs again to the same history
    let effective = fs::read_to_string(a.out.join("effective.cfg")).unwrap();
    let c = run("solve", &effective);
    assert_eq!(fs::read(a.out.join("history.csv")).unwrap(), fs::read(c.out.join("history.csv")).unwrap());
}

#[test]
fn tv_solve_writes_images() {
    let r = run("solve", "problem.type = tv_restoration\nproblem.height = 8\nproblem.width = 8\nsolver.max_iter = 100000\n");
    assert_eq!(r.code, 0, "{}", r.stderr);
    let pgm = fs::read_to_string(r.out.join("solution.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n8 8\n255\n"), "{pgm}");
    assert!(r.out.join("observed.pgm").exists());
}

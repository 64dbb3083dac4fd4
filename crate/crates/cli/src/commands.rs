use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use pdfp_core::diagnostics::{support_metrics, write_history_csv, IterationRecord};
use pdfp_core::io::{read_pgm, write_columns_csv, write_pgm};
use pdfp_core::problems::{
    build_fused_lasso, build_tv_restoration, projected_objective, relative_error, synthesize_fused_lasso,
    synthesize_tv_from_image, synthesize_tv_restoration,
};
use pdfp_core::solver::admissible_ranges;
use pdfp_core::{solve, validate_config, Algorithm, Problem, SmoothFn, SolveOutcome, SolverConfig};

use crate::config::{self, ProblemConfig, RunConfig, SolverSection, Step};
use crate::failure::Failure;

pub struct Built {
    pub problem: Problem,
    pub target: Vec<f64>,
    pub x_true: Vec<f64>,
    pub image_dims: Option<(usize, usize)>,
}

pub fn build_problem(cfg: &ProblemConfig) -> Result<Built, Failure> {
    let (problem, target, x_true, dims, smooth) = match cfg {
        ProblemConfig::FusedLasso { spec, smooth } => {
            let data = synthesize_fused_lasso(spec)?;
            let p = build_fused_lasso(data.a, data.target.clone(), spec.mu1, spec.mu2)?;
            (p, data.target, data.x_true, None, *smooth)
        }
        ProblemConfig::TvRestoration { spec, image, smooth, .. } => {
            let data = match image {
                Some(path) => {
                    let img = read_pgm(path)?;
                    if (img.height, img.width) != (spec.height, spec.width) {
                        return Err(Failure::config(format!(
                            "problem.height x problem.width = {}x{} does not match {} ({}x{})",
                            spec.height,
                            spec.width,
                            path.display(),
                            img.height,
                            img.width
                        )));
                    }
                    synthesize_tv_from_image(spec, img.data)?
                }
                None => synthesize_tv_restoration(spec)?,
            };
            let p = build_tv_restoration(
                data.a,
                data.target.clone(),
                spec.height,
                spec.width,
                spec.mu,
                spec.nonneg,
            )?;
            (p, data.target, data.x_true, Some((spec.height, spec.width)), *smooth)
        }
    };
    let problem = if smooth {
        problem
    } else {
        Problem::new(
            SmoothFn::Zero,
            problem.f2().clone(),
            problem.b().clone(),
            problem.f3().clone(),
        )?
    };
    Ok(Built { problem, target, x_true, image_dims: dims })
}

fn inv(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        1.0
    }
}

/// `γ = 1.99β` (1.9β for Condat) and the largest "safe" λ of each scheme:
/// `0.99/L` for PDFP, `1/L` for PDFP²O, `1/(L+1)` for PDFP²O_C and
/// `0.95(1 − γ/(2β))/L` for Condat, where `L = λmax(BBᵀ)`.
pub fn resolve_steps(problem: &Problem, algorithm: Algorithm, gamma: Step, lambda: Step) -> (f64, f64) {
    let beta = problem.f1().beta();
    let gamma = match gamma {
        Step::Value(g) => g,
        Step::Auto if beta.is_infinite() => 1.0,
        Step::Auto if algorithm == Algorithm::Condat => 1.9 * beta,
        Step::Auto => 1.99 * beta,
    };
    let l = problem.b_norm_sq().value;
    let lambda = match lambda {
        Step::Value(v) => v,
        Step::Auto => match algorithm {
            Algorithm::Pdfp => 0.99 * inv(l),
            Algorithm::Pdfp2o => inv(l),
            Algorithm::Pdfp2oc => 1.0 / (l + 1.0),
            Algorithm::Condat => {
                let slack = if beta.is_infinite() { 1.0 } else { 1.0 - gamma / (2.0 * beta) };
                0.95 * slack * inv(l)
            }
        },
    };
    (gamma, lambda)
}

fn solver_config(problem: &Problem, sv: &SolverSection, gamma: Step, lambda: Step) -> SolverConfig {
    let (g, l) = resolve_steps(problem, sv.algorithm, gamma, lambda);
    SolverConfig::new(sv.algorithm, g, l)
        .with_max_iter(sv.max_iter)
        .with_fp_tol(sv.fp_tol)
        .with_record_every(sv.record_every)
}

fn run_one(problem: &Problem, cfg: &SolverConfig, record_time: bool) -> Result<(SolveOutcome, f64), Failure> {
    let validated = validate_config(problem, cfg, &problem.b_norm_sq())?;
    let start = Instant::now();
    let mut out = solve(problem, &validated, None).map_err(|e| Failure::runtime(e.to_string()))?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    if !record_time {
        out.history.iter_mut().for_each(|r| r.elapsed_ms = 0.0);
    }
    Ok((out, if record_time { wall } else { 0.0 }))
}

fn prepare_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_history(path: &Path, history: &[IterationRecord]) -> Result<(), Failure> {
    write_history_csv(history, path).map_err(|e| Failure::runtime(e.to_string()))
}

/// The effective configuration with every `auto` step replaced by its value.
fn resolved(cfg: &RunConfig, steps: &[(f64, f64)]) -> RunConfig {
    let mut echo = cfg.clone();
    for (sv, &(g, l)) in echo.solvers.iter_mut().zip(steps) {
        sv.gamma = Step::Value(g);
        sv.lambda = Step::Value(l);
    }
    echo
}

fn csv_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn run_solve(path: &Path) -> Result<u8, Failure> {
    let cfg = config::load(path)?;
    if cfg.solvers.len() != 1 {
        return Err(Failure::config("solve expects a single unlabelled solver section"));
    }
    let built = build_problem(&cfg.problem)?;
    let sv = &cfg.solvers[0];
    let scfg = solver_config(&built.problem, sv, sv.gamma, sv.lambda);
    let (out, _) = run_one(&built.problem, &scfg, cfg.output.record_time)?;

    let dir = prepare_dir(&cfg)?;
    write_text(&dir.join("effective.cfg"), &resolved(&cfg, &[(scfg.gamma, scfg.lambda)]).render())?;
    if cfg.output.emit_history {
        write_history(&dir.join("history.csv"), &out.history)?;
    }
    if cfg.output.emit_solution {
        let idx: Vec<f64> = (0..out.state.x.len()).map(|i| i as f64).collect();
        write_columns_csv(
            &dir.join("solution.csv"),
            &["index", "x", "x_true"],
            &[&idx, &out.state.x, &built.x_true],
        )?;
        if let Some((h, w)) = built.image_dims {
            write_pgm(&dir.join("solution.pgm"), h, w, &out.state.x)?;
            write_pgm(&dir.join("observed.pgm"), h, w, &built.target)?;
        }
    }

    let obj = projected_objective(&built.problem, &out.state.x);
    println!(
        "{}: {} after {} iterations, objective {obj:.10e}, fixed-point residual {:.3e}",
        scfg.algorithm,
        if out.converged { "converged" } else { "stopped" },
        out.iterations,
        out.final_residual
    );
    println!("relative error to ground truth: {:.4e}", relative_error(&out.state.x, &built.x_true));
    if let ProblemConfig::FusedLasso { .. } = cfg.problem {
        let m = support_metrics(&out.state.x, &built.x_true, 1e-3)?;
        println!(
            "support (|x| > 1e-3): precision {:.4}, recall {:.4}, F1 {:.4}",
            m.precision, m.recall, m.f1
        );
    }
    if out.converged {
        Ok(0)
    } else {
        Err(Failure::runtime(format!(
            "iteration budget of {} exhausted with fixed-point residual {:e} > fp_tol {:e}",
            scfg.max_iter, out.final_residual, scfg.fp_tol
        )))
    }
}

pub fn run_compare(path: &Path) -> Result<u8, Failure> {
    let cfg = config::load(path)?;
    if cfg.solvers.len() < 2 {
        return Err(Failure::config(
            "compare expects at least two labelled solver sections (solver.<label>.<key>)",
        ));
    }
    let built = build_problem(&cfg.problem)?;
    let configs: Vec<SolverConfig> = cfg
        .solvers
        .iter()
        .map(|sv| solver_config(&built.problem, sv, sv.gamma, sv.lambda))
        .collect();
    for (sv, c) in cfg.solvers.iter().zip(&configs) {
        validate_config(&built.problem, c, &built.problem.b_norm_sq())
            .map_err(|e| Failure::config(format!("solver `{}`: {e}", sv.label)))?;
    }

    let dir = prepare_dir(&cfg)?;
    let steps: Vec<(f64, f64)> = configs.iter().map(|c| (c.gamma, c.lambda)).collect();
    write_text(&dir.join("effective.cfg"), &resolved(&cfg, &steps).render())?;

    let mut table =
        String::from("label,algorithm,gamma,lambda,iterations,converged,final_objective,wall_ms\n");
    let mut all_converged = true;
    for (sv, c) in cfg.solvers.iter().zip(&configs) {
        let (out, wall) = run_one(&built.problem, c, cfg.output.record_time)?;
        all_converged &= out.converged;
        if cfg.output.emit_history {
            write_history(&dir.join(format!("history_{}.csv", sv.label)), &out.history)?;
        }
        let obj = projected_objective(&built.problem, &out.state.x);
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            sv.label,
            c.algorithm,
            csv_real(c.gamma),
            csv_real(c.lambda),
            out.iterations,
            out.converged,
            csv_real(obj),
            csv_real(wall)
        ));
        println!(
            "{:>12} {:>8}: {:>7} iterations, objective {obj:.12e}{}",
            sv.label,
            c.algorithm.name(),
            out.iterations,
            if out.converged { "" } else { " (not converged)" }
        );
    }
    write_text(&dir.join("compare.csv"), &table)?;
    if all_converged {
        Ok(0)
    } else {
        Err(Failure::runtime("at least one solver exhausted its iteration budget"))
    }
}

struct SweepRow {
    gamma: f64,
    lambda: f64,
    iters_to_tol: Option<usize>,
    final_objective: Option<f64>,
    status: String,
}

pub fn run_sweep(path: &Path) -> Result<u8, Failure> {
    let cfg = config::load(path)?;
    if cfg.solvers.len() != 1 {
        return Err(Failure::config("sweep expects a single unlabelled solver section"));
    }
    let built = build_problem(&cfg.problem)?;
    let sv = &cfg.solvers[0];
    let gammas = if cfg.sweep.gamma.is_empty() { vec![sv.gamma] } else { cfg.sweep.gamma.clone() };
    let lambdas = if cfg.sweep.lambda.is_empty() { vec![sv.lambda] } else { cfg.sweep.lambda.clone() };
    let cells: Vec<(Step, Step)> = gammas
        .iter()
        .flat_map(|&g| lambdas.iter().map(move |&l| (g, l)))
        .collect();
    // the operator norm is computed once, before the threads share the problem
    let _ = built.problem.b_norm_sq();

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(g, l)| {
            let c = solver_config(&built.problem, sv, g, l);
            let mut row = SweepRow {
                gamma: c.gamma,
                lambda: c.lambda,
                iters_to_tol: None,
                final_objective: None,
                status: String::new(),
            };
            match validate_config(&built.problem, &c, &built.problem.b_norm_sq()) {
                Err(e) => row.status = format!("invalid: {e}").replace(',', ";"),
                Ok(v) => match solve(&built.problem, &v, None) {
                    Err(e) => row.status = format!("error: {e}").replace(',', ";"),
                    Ok(out) => {
                        row.final_objective = Some(projected_objective(&built.problem, &out.state.x));
                        if out.converged {
                            row.iters_to_tol = Some(out.iterations);
                            row.status = "converged".into();
                        } else {
                            row.status = "budget_exhausted".into();
                        }
                    }
                },
            }
            row
        })
        .collect();

    let dir = prepare_dir(&cfg)?;
    write_text(&dir.join("effective.cfg"), &cfg.render())?;
    let mut table = String::from("gamma,lambda,iters_to_tol,final_objective,status\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_real(r.gamma),
            csv_real(r.lambda),
            r.iters_to_tol.map(|k| k.to_string()).unwrap_or_default(),
            r.final_objective.map(csv_real).unwrap_or_default(),
            r.status
        ));
    }
    write_text(&dir.join("sweep.csv"), &table)?;
    let ok = rows.iter().filter(|r| r.status == "converged").count();
    println!("sweep: {ok} of {} cells converged", rows.len());
    Ok(0)
}

pub fn run_validate(path: &Path) -> Result<u8, Failure> {
    let cfg = config::load(path)?;
    let built = build_problem(&cfg.problem)?;
    let p = &built.problem;
    let opnorm = p.b_norm_sq();
    let beta = p.f1().beta();
    println!("primal dimension {}, dual dimension {}", p.primal_dim(), p.dual_dim());
    if beta.is_infinite() {
        println!("beta = inf (no smooth term)");
    } else {
        println!("beta = {beta:e} (1/beta = {:e})", 1.0 / beta);
    }
    println!(
        "lambda_max(BB^T) = {:e} ({} power iterations, converged: {})",
        opnorm.value, opnorm.iterations_used, opnorm.converged
    );

    let mut failure = None;
    for sv in &cfg.solvers {
        let c = solver_config(p, sv, sv.gamma, sv.lambda);
        if cfg.solvers.len() > 1 {
            println!("[{}]", sv.label);
        }
        println!("admissible ranges at gamma = {:e}:", c.gamma);
        for alg in Algorithm::ALL {
            let probe = SolverConfig::new(alg, c.gamma, f64::MIN_POSITIVE);
            let r = admissible_ranges(p, &opnorm, alg, c.gamma);
            match validate_config(p, &probe, &opnorm) {
                Err(pdfp_core::Error::Unsupported { reason, .. }) => {
                    println!("  {:<8} not applicable: {reason}", alg.name())
                }
                _ => println!("  {:<8} gamma in {}, lambda in {}", alg.name(), r.gamma, r.lambda),
            }
        }
        let cp = c.condat_params();
        println!(
            "configured: {} gamma = {:e}, lambda = {:e} (condat form: sigma = lambda/gamma = {:e}, tau = gamma = {:e})",
            c.algorithm, c.gamma, c.lambda, cp.sigma, cp.tau
        );
        match validate_config(p, &c, &opnorm) {
            Ok(_) => println!("admissible"),
            Err(e) => {
                println!("not admissible: {e}");
                failure.get_or_insert(Failure::config(match cfg.solvers.len() {
                    1 => e.to_string(),
                    _ => format!("solver `{}`: {e}", sv.label),
                }));
            }
        }
    }
    match failure {
        None => Ok(0),
        Some(f) => Err(f),
    }
}

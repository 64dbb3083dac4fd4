//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pdfp_core::problems::{FusedLassoSpec, Kernel, TvRestorationSpec};
use pdfp_core::Algorithm;

use crate::failure::Failure;

/// A step size given either explicitly or as `auto`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Auto,
    Value(f64),
}

impl Step {
    fn parse(s: &str) -> Option<Step> {
        if s.eq_ignore_ascii_case("auto") {
            Some(Step::Auto)
        } else {
            s.parse().ok().map(Step::Value)
        }
    }

    fn render(self) -> String {
        match self {
            Step::Auto => "auto".into(),
            Step::Value(v) => format!("{v:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemConfig {
    FusedLasso {
        spec: FusedLassoSpec,
        smooth: bool,
    },
    TvRestoration {
        spec: TvRestorationSpec,
        kernel_text: String,
        image: Option<PathBuf>,
        smooth: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSection {
    pub label: String,
    pub algorithm: Algorithm,
    pub gamma: Step,
    pub lambda: Step,
    pub max_iter: usize,
    pub fp_tol: f64,
    pub record_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub emit_history: bool,
    pub emit_solution: bool,
    /// When false, `elapsed_ms` and wall times are written as 0 so repeated
    /// runs produce byte-identical files.
    pub record_time: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepSection {
    pub gamma: Vec<Step>,
    pub lambda: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// One entry for `solve`/`sweep`/`validate`; one per label for `compare`.
    pub solvers: Vec<SolverSection>,
    pub output: OutputSection,
    pub sweep: SweepSection,
}

pub const OUTPUT_DIR_ENV: &str = "PDFP_OUTPUT_DIR";

struct Entry {
    value: String,
    line: usize,
}

struct Fields<'a> {
    path: &'a Path,
    map: BTreeMap<String, Entry>,
}

impl<'a> Fields<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Failure {
        Failure::config(format!("{}:{}: {}", self.path.display(), line, msg.into()))
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn take<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, Failure> {
        match self.take_raw(key) {
            None => Ok(default),
            Some(e) => parse(&e.value)
                .ok_or_else(|| self.err(e.line, format!("invalid value `{}` for {key}", e.value))),
        }
    }

    fn take_num<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, Failure> {
        self.take(key, default, |s| s.parse().ok())
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool, Failure> {
        self.take(key, default, |s| match s {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }
}

fn parse_kernel(s: &str) -> Option<Kernel> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        ["gaussian", size, sigma] => Kernel::gaussian(size.parse().ok()?, sigma.parse().ok()?).ok(),
        ["box", size] => Kernel::box_blur(size.parse().ok()?).ok(),
        _ => None,
    }
}

fn parse_smooth(s: &str) -> Option<bool> {
    match s {
        "least_squares" => Some(true),
        "none" => Some(false),
        _ => None,
    }
}

fn parse_steps(s: &str) -> Option<Vec<Step>> {
    s.split(',').map(|t| Step::parse(t.trim())).collect()
}

fn read_fields(path: &Path, text: &str) -> Result<BTreeMap<String, Entry>, Failure> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Failure::config(format!("{}:{}: {msg}", path.display(), i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `section.key = value`, got `{line}`")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if !key.contains('.') || value.is_empty() {
            return Err(err(format!("expected `section.key = value`, got `{line}`")));
        }
        if map.contains_key(&key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        map.insert(key, Entry { value, line: i + 1 });
    }
    Ok(map)
}

pub fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    parse(path, &text)
}

pub fn parse(path: &Path, text: &str) -> Result<RunConfig, Failure> {
    let mut f = Fields { path, map: read_fields(path, text)? };

    let problem = parse_problem(&mut f)?;
    let base = parse_solver(&mut f, "solver", "main".into(), None)?;

    // labelled sections in order of first appearance
    let mut first_line: BTreeMap<String, usize> = BTreeMap::new();
    for (key, e) in &f.map {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() == 3 && parts[0] == "solver" {
            let l = first_line.entry(parts[1].to_string()).or_insert(e.line);
            *l = (*l).min(e.line);
        }
    }
    let mut labels: Vec<(usize, String)> = first_line.into_iter().map(|(l, n)| (n, l)).collect();
    labels.sort();
    let mut solvers = Vec::new();
    for (_, label) in labels {
        let prefix = format!("solver.{label}");
        solvers.push(parse_solver(&mut f, &prefix, label, Some(&base))?);
    }
    if solvers.is_empty() {
        solvers.push(base);
    }

    let output = OutputSection {
        directory: f.take("output.directory", PathBuf::from("pdfp-out"), |s| Some(PathBuf::from(s)))?,
        emit_history: f.take_bool("output.emit_history", true)?,
        emit_solution: f.take_bool("output.emit_solution", true)?,
        record_time: f.take_bool("output.record_time", true)?,
    };
    let sweep = SweepSection {
        gamma: f.take("sweep.gamma", Vec::new(), parse_steps)?,
        lambda: f.take("sweep.lambda", Vec::new(), parse_steps)?,
    };

    if let Some((key, e)) = f.map.iter().min_by_key(|(_, e)| e.line) {
        return Err(f.err(e.line, format!("unknown key `{key}`")));
    }
    Ok(RunConfig { problem, solvers, output, sweep })
}

fn parse_problem(f: &mut Fields) -> Result<ProblemConfig, Failure> {
    let kind = f
        .take_raw("problem.type")
        .ok_or_else(|| Failure::config(format!("{}: missing problem.type", f.path.display())))?;
    let smooth = f.take("problem.smooth", true, parse_smooth)?;
    let seed = f.take_num("problem.seed", 0u64)?;
    let noise_sigma = f.take_num("problem.noise_sigma", 0.01)?;
    match kind.value.as_str() {
        "fused_lasso" => Ok(ProblemConfig::FusedLasso {
            spec: FusedLassoSpec {
                r: f.take_num("problem.r", 50)?,
                n: f.take_num("problem.n", 200)?,
                mu1: f.take_num("problem.mu1", 20.0)?,
                mu2: f.take_num("problem.mu2", 2.0)?,
                noise_sigma,
                sparsity: f.take_num("problem.sparsity", 4)?,
                seed,
            },
            smooth,
        }),
        "tv_restoration" => {
            let kernel_text = f.take("problem.kernel", "gaussian:5:1.0".to_string(), |s| {
                parse_kernel(s).map(|_| s.to_string())
            })?;
            Ok(ProblemConfig::TvRestoration {
                spec: TvRestorationSpec {
                    height: f.take_num("problem.height", 16)?,
                    width: f.take_num("problem.width", 16)?,
                    kernel: parse_kernel(&kernel_text).expect("validated above"),
                    mu: f.take_num("problem.mu", 0.05)?,
                    noise_sigma,
                    nonneg: f.take_bool("problem.nonneg", true)?,
                    seed,
                },
                kernel_text,
                image: f.take("problem.image", None, |s| Some(Some(PathBuf::from(s))))?,
                smooth,
            })
        }
        other => Err(f.err(
            kind.line,
            format!("unknown problem.type `{other}` (expected fused_lasso or tv_restoration)"),
        )),
    }
}

fn parse_solver(
    f: &mut Fields,
    prefix: &str,
    label: String,
    base: Option<&SolverSection>,
) -> Result<SolverSection, Failure> {
    let d = base.cloned().unwrap_or(SolverSection {
        label: String::new(),
        algorithm: Algorithm::Pdfp,
        gamma: Step::Auto,
        lambda: Step::Auto,
        max_iter: 1000,
        fp_tol: 1e-8,
        record_every: 1,
    });
    Ok(SolverSection {
        algorithm: f.take(&format!("{prefix}.algorithm"), d.algorithm, |s| s.parse().ok())?,
        gamma: f.take(&format!("{prefix}.gamma"), d.gamma, Step::parse)?,
        lambda: f.take(&format!("{prefix}.lambda"), d.lambda, Step::parse)?,
        max_iter: f.take_num(&format!("{prefix}.max_iter"), d.max_iter)?,
        fp_tol: f.take_num(&format!("{prefix}.fp_tol"), d.fp_tol)?,
        record_every: f.take_num(&format!("{prefix}.record_every"), d.record_every)?,
        label,
    })
}

impl RunConfig {
    /// Output directory, honouring the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.directory.clone(),
        }
    }

    /// Canonical text of this configuration; [`parse`] reads it back to an
    /// equal value.
    pub fn render(&self) -> String {
        let mut s = String::new();
        match &self.problem {
            ProblemConfig::FusedLasso { spec, smooth } => {
                let _ = writeln!(s, "problem.type = fused_lasso");
                let _ = writeln!(s, "problem.r = {}", spec.r);
                let _ = writeln!(s, "problem.n = {}", spec.n);
                let _ = writeln!(s, "problem.mu1 = {:?}", spec.mu1);
                let _ = writeln!(s, "problem.mu2 = {:?}", spec.mu2);
                let _ = writeln!(s, "problem.noise_sigma = {:?}", spec.noise_sigma);
                let _ = writeln!(s, "problem.sparsity = {}", spec.sparsity);
                let _ = writeln!(s, "problem.seed = {}", spec.seed);
                let _ = writeln!(s, "problem.smooth = {}", smooth_name(*smooth));
            }
            ProblemConfig::TvRestoration { spec, kernel_text, image, smooth } => {
                let _ = writeln!(s, "problem.type = tv_restoration");
                let _ = writeln!(s, "problem.height = {}", spec.height);
                let _ = writeln!(s, "problem.width = {}", spec.width);
                let _ = writeln!(s, "problem.kernel = {kernel_text}");
                let _ = writeln!(s, "problem.mu = {:?}", spec.mu);
                let _ = writeln!(s, "problem.noise_sigma = {:?}", spec.noise_sigma);
                let _ = writeln!(s, "problem.nonneg = {}", spec.nonneg);
                let _ = writeln!(s, "problem.seed = {}", spec.seed);
                if let Some(p) = image {
                    let _ = writeln!(s, "problem.image = {}", p.display());
                }
                let _ = writeln!(s, "problem.smooth = {}", smooth_name(*smooth));
            }
        }
        let labelled = self.solvers.len() > 1 || self.solvers[0].label != "main";
        for sv in &self.solvers {
            let prefix = if labelled { format!("solver.{}", sv.label) } else { "solver".into() };
            let _ = writeln!(s, "{prefix}.algorithm = {}", sv.algorithm);
            let _ = writeln!(s, "{prefix}.gamma = {}", sv.gamma.render());
            let _ = writeln!(s, "{prefix}.lambda = {}", sv.lambda.render());
            let _ = writeln!(s, "{prefix}.max_iter = {}", sv.max_iter);
            let _ = writeln!(s, "{prefix}.fp_tol = {:?}", sv.fp_tol);
            let _ = writeln!(s, "{prefix}.record_every = {}", sv.record_every);
        }
        let _ = writeln!(s, "output.directory = {}", self.output.directory.display());
        let _ = writeln!(s, "output.emit_history = {}", self.output.emit_history);
        let _ = writeln!(s, "output.emit_solution = {}", self.output.emit_solution);
        let _ = writeln!(s, "output.record_time = {}", self.output.record_time);
        let list = |v: &[Step]| v.iter().map(|x| x.render()).collect::<Vec<_>>().join(", ");
        if !self.sweep.gamma.is_empty() {
            let _ = writeln!(s, "sweep.gamma = {}", list(&self.sweep.gamma));
        }
        if !self.sweep.lambda.is_empty() {
            let _ = writeln!(s, "sweep.lambda = {}", list(&self.sweep.lambda));
        }
        s
    }
}

fn smooth_name(smooth: bool) -> &'static str {
    if smooth {
        "least_squares"
    } else {
        "none"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Result<RunConfig, Failure> {
        parse(Path::new("t.cfg"), text)
    }

    #[test]
    fn defaults_and_overrides() {
        let c = p("problem.type = fused_lasso\nproblem.n = 30 # trailing comment\nsolver.gamma = 0.5\n").unwrap();
        match &c.problem {
            ProblemConfig::FusedLasso { spec, smooth } => {
                assert_eq!(spec.n, 30);
                assert!(smooth);
            }
            _ => panic!(),
        }
        assert_eq!(c.solvers.len(), 1);
        assert_eq!(c.solvers[0].gamma, Step::Value(0.5));
        assert_eq!(c.solvers[0].lambda, Step::Auto);
    }

    #[test]
    fn unknown_and_malformed_keys_rejected() {
        let e = p("problem.type = fused_lasso\nproblem.colour = red\n").unwrap_err();
        assert!(e.message.contains("unknown key `problem.colour`"), "{}", e.message);
        assert!(e.message.contains("t.cfg:2"), "{}", e.message);
        assert!(p("problem.type = fused_lasso\nnonsense\n").is_err());
        assert!(p("problem.type = fused_lasso\nsolver.gamma = fast\n").is_err());
        assert!(p("problem.type = fused_lasso\nproblem.n = 3\nproblem.n = 4\n").is_err());
        assert!(p("problem.n = 4\n").is_err());
        assert!(p("problem.type = tv_restoration\nproblem.kernel = disk:3\n").is_err());
    }

    #[test]
    fn labelled_solvers_inherit_shared_keys() {
        let c = p("problem.type = fused_lasso\nsolver.max_iter = 77\n\
                   solver.a.algorithm = pdfp\nsolver.b.algorithm = condat\nsolver.b.max_iter = 5\n")
        .unwrap();
        let s: Vec<_> = c.solvers.iter().map(|s| (s.label.as_str(), s.algorithm, s.max_iter)).collect();
        assert_eq!(s, vec![("a", Algorithm::Pdfp, 77), ("b", Algorithm::Condat, 5)]);
    }

    #[test]
    fn render_round_trips() {
        let texts = [
            "problem.type = fused_lasso\nproblem.mu1 = 0.1\nsolver.lambda = 0.2\nsweep.gamma = 0.1, auto\n",
            "problem.type = tv_restoration\nproblem.kernel = box:3\nsolver.a.algorithm = pdfp\nsolver.b.algorithm = pdfp2oc\n",
        ];
        for t in texts {
            let c = p(t).unwrap();
            assert_eq!(p(&c.render()).unwrap(), c);
        }
    }
}

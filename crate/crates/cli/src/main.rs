//! `fracvi` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 non-convergence,
//! 3 hypothesis failure or non-monotone operator.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracvi::frac::to_csv;
use fracvi::{
    load_with_overrides, picard_solve, solve_band, solve_vi, verify, AffineOperator, ConfigError, Expression, FeasibleSet, GridFunction,
    HypothesisError, MildError, Problem, ProblemConfig, SelectionPolicy, SolutionBundle, ViError, ViInstance, ViOptions, EXAMPLE_CONFIG,
};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    HypothesesFail(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::HypothesesFail(_) => 3,
        }
    }
}

impl From<MildError> for CliError {
    fn from(e: MildError) -> Self {
        match e {
            MildError::MaxPicardExceeded { .. }
            | MildError::NonfiniteValue { .. }
            | MildError::Control {
                source: ViError::NotConverged { .. },
                ..
            } => CliError::NotConverged(e.to_string()),
            MildError::Control {
                source: ViError::NonMonotone { .. },
                ..
            } => CliError::HypothesesFail(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<HypothesisError> for CliError {
    fn from(e: HypothesisError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ViError> for CliError {
    fn from(e: ViError) -> Self {
        match e {
            ViError::NonMonotone { .. } => CliError::HypothesesFail(e.to_string()),
            ViError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "fracvi", version, about = "Solver and hypothesis verifier for fuzzy fractional differential variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for one selection and write the trajectory CSV and diagnostics JSON.
    Solve(SolveArgs),
    /// Solve over a grid of (alpha, lambda) pairs and write the envelope.
    Band(BandArgs),
    /// Estimate the existence-hypothesis constants and write the report.
    Verify(VerifyArgs),
    /// Solve a single affine variational inequality.
    Vi(ViArgs),
    /// Write the built-in example config and run verify, solve and band on it.
    Example(ExampleArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem config JSON; the built-in example when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key.path=value` override, applied in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Sampling seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Level α; the config value when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Selection parameter, colon-separated per coordinate.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
}

#[derive(Args)]
struct BandArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated α levels.
    #[arg(long, default_value = "0,0.5,1")]
    alpha: String,
    /// Comma-separated selection parameters; coordinates separated by `:`.
    #[arg(long, default_value = "-1,0,1", allow_hyphen_values = true)]
    lambda: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ViArgs {
    /// Constant part `w`, comma-separated (expressions such as `2*pi` allowed).
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    /// Matrix rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    matrix: String,
    /// Offset `b`; zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<String>,
    /// `orthant` or `box`.
    #[arg(long, default_value = "orthant")]
    set: String,
    /// Box lower bounds (`-inf` allowed).
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<String>,
    /// Box upper bounds (`inf` allowed).
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<String>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Band(a) => cmd_band(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Vi(a) => cmd_vi(a),
        Command::Example(a) => cmd_example(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Writes through a sibling temp file and renames into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents.as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

fn load_config(args: &ProblemArgs) -> Result<ProblemConfig, CliError> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => EXAMPLE_CONFIG.to_string(),
    };
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("sampling.seed={seed}"));
    }
    Ok(load_with_overrides(&text, &overrides)?)
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if raw.trim().is_empty() {
        return Err(CliError::Usage(format!("empty {what} list")));
    }
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            match s {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Expression::parse(s, 0)
                    .and_then(|e| e.eval(0.0, &[]))
                    .map_err(|e| CliError::Usage(format!("{what} entry `{s}`: {e}"))),
            }
        })
        .collect()
}

/// One selection parameter: a scalar broadcasts over `n` coordinates.
fn parse_lambda(raw: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let parts = raw
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("lambda `{raw}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    match parts.len() {
        1 => Ok(vec![parts[0]; n]),
        k if k == n => Ok(parts),
        k => Err(CliError::Usage(format!("lambda `{raw}` has {k} components, state dimension is {n}"))),
    }
}

fn lambda_tag(lambda: &[f64]) -> String {
    lambda.iter().map(|l| format!("{l}")).collect::<Vec<_>>().join("_")
}

fn trajectory_csv(b: &SolutionBundle) -> Result<String, CliError> {
    to_csv(&[("y", &b.y), ("u", &b.u), ("f", &b.f)]).map_err(|e| CliError::Io(e.to_string()))
}

fn diagnostics_json(problem: &Problem, b: &SolutionBundle) -> serde_json::Value {
    json!({
        "alpha": b.alpha,
        "lambda": b.lambda,
        "solver": problem.solver,
        "picard_iterations": b.diagnostics.picard_residuals.len(),
        "diagnostics": b.diagnostics,
    })
}

fn run_solve(problem: &Problem, out: &Path) -> Result<SolutionBundle, CliError> {
    let bundle = picard_solve(&problem.spec, &problem.solver, &problem.policy)?;
    write_atomic(&out.join("solution.csv"), &trajectory_csv(&bundle)?)?;
    write_atomic(&out.join("diagnostics.json"), &pretty(&diagnostics_json(problem, &bundle)))?;
    Ok(bundle)
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let mut problem = load_config(&args.problem)?.build()?;
    if let Some(alpha) = args.alpha {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CliError::Usage(format!("alpha = {alpha} must lie in [0,1]")));
        }
        problem.spec.alpha = alpha;
    }
    if let Some(raw) = &args.lambda {
        let lambda = parse_lambda(raw, problem.spec.state_dim())?;
        problem.policy = SelectionPolicy::new(lambda)?;
    }
    let bundle = run_solve(&problem, &args.out)?;
    eprintln!(
        "converged in {} sweeps; wrote {}",
        bundle.diagnostics.picard_residuals.len(),
        args.out.join("solution.csv").display()
    );
    Ok(())
}

fn run_band(problem: &Problem, alphas: &[f64], lambdas: &[Vec<f64>], out: &Path) -> Result<(), CliError> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CliError::Usage(format!("alpha = {a} must lie in [0,1]")));
    }
    let runs = solve_band(&problem.spec, &problem.solver, alphas, lambdas);
    let mut failures = Vec::new();
    let mut lo: Option<GridFunction> = None;
    let mut hi: Option<GridFunction> = None;
    let mut summary = Vec::new();
    for run in &runs {
        let name = format!("band_a{}_l{}.csv", run.alpha, lambda_tag(&run.lambda));
        match &run.result {
            Ok(b) => {
                write_atomic(&out.join(&name), &trajectory_csv(b)?)?;
                let (l, h) = (lo.get_or_insert_with(|| b.y.clone()), hi.get_or_insert_with(|| b.y.clone()));
                for i in 0..b.y.grid().len() {
                    for (k, &v) in b.y.at(i).iter().enumerate() {
                        l.at_mut(i)[k] = l.at(i)[k].min(v);
                        h.at_mut(i)[k] = h.at(i)[k].max(v);
                    }
                }
                summary.push(json!({ "alpha": run.alpha, "lambda": run.lambda, "file": name, "status": "converged" }));
            }
            Err(e) => {
                failures.push(format!("alpha {} lambda {:?}: {e}", run.alpha, run.lambda));
                summary.push(json!({ "alpha": run.alpha, "lambda": run.lambda, "status": "failed", "error": e.to_string() }));
            }
        }
    }
    if let (Some(l), Some(h)) = (&lo, &hi) {
        let csv = to_csv(&[("lo", l), ("hi", h)]).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&out.join("envelope.csv"), &csv)?;
    }
    write_atomic(&out.join("band_summary.json"), &pretty(&json!({ "runs": summary })))?;
    if failures.is_empty() {
        eprintln!("{} runs converged; wrote {}", runs.len(), out.join("envelope.csv").display());
        Ok(())
    } else {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        Err(CliError::NotConverged(format!("{} of {} band runs failed", failures.len(), runs.len())))
    }
}

fn cmd_band(args: BandArgs) -> Result<(), CliError> {
    let problem = load_config(&args.problem)?.build()?;
    let alphas = parse_list(&args.alpha, "alpha")?;
    if args.lambda.trim().is_empty() {
        return Err(CliError::Usage("empty lambda list".into()));
    }
    let lambdas = args
        .lambda
        .split(',')
        .map(|raw| parse_lambda(raw, problem.spec.state_dim()))
        .collect::<Result<Vec<_>, _>>()?;
    run_band(&problem, &alphas, &lambdas, &args.out)
}

fn run_verify(problem: &Problem, out: Option<&Path>) -> Result<(), CliError> {
    let report = verify(&problem.spec, &problem.sampling, &problem.claimed)?;
    let text = pretty(&serde_json::to_value(&report).expect("report serializes"));
    match out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!("rho = {:.6}; hypotheses {}", report.rho, if report.passed { "pass" } else { "fail" });
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
        Err(CliError::HypothesesFail(format!("hypotheses fail: {}", failed.join(", "))))
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let problem = load_config(&args.problem)?.build()?;
    run_verify(&problem, args.out.as_deref())
}

fn cmd_vi(args: ViArgs) -> Result<(), CliError> {
    let w = parse_list(&args.w, "w")?;
    let matrix = args.matrix.split(';').map(|row| parse_list(row, "matrix row")).collect::<Result<Vec<_>, _>>()?;
    let offset = match &args.offset {
        Some(raw) => parse_list(raw, "offset")?,
        None => vec![0.0; matrix.len()],
    };
    let op = AffineOperator::new(matrix, offset)?;
    let set = match args.set.as_str() {
        "orthant" => FeasibleSet::orthant(op.dim()),
        "box" => {
            let lo = match &args.lo {
                Some(raw) => parse_list(raw, "lo")?,
                None => vec![f64::NEG_INFINITY; op.dim()],
            };
            let hi = match &args.hi {
                Some(raw) => parse_list(raw, "hi")?,
                None => vec![f64::INFINITY; op.dim()],
            };
            FeasibleSet::new_box(lo, hi)?
        }
        other => return Err(CliError::Usage(format!("unknown set `{other}`; expected orthant or box"))),
    };
    let inst = ViInstance::new(&set, &w, &op)?;
    let opts = ViOptions {
        tol: args.tol,
        ..ViOptions::default()
    };
    let sol = solve_vi(&inst, &opts)?;
    println!("{}", json!({ "u": sol.u, "residual": sol.residual, "iterations": sol.iterations }));
    Ok(())
}

fn cmd_example(args: ExampleArgs) -> Result<(), CliError> {
    let mut overrides = Vec::new();
    if let Some(seed) = args.seed {
        overrides.push(format!("sampling.seed={seed}"));
    }
    let config = load_with_overrides(EXAMPLE_CONFIG, &overrides)?;
    write_atomic(&args.out.join("example_config.json"), &format!("{}\n", config.to_json_pretty()))?;
    let mut problem = config.build()?;
    let verdict = run_verify(&problem, Some(&args.out.join("report.json")));

    problem.spec.alpha = 1.0;
    problem.policy = SelectionPolicy::midpoint(problem.spec.state_dim());
    run_solve(&problem, &args.out)?;

    let n = problem.spec.state_dim();
    let lambdas = [-1.0, 0.0, 1.0].map(|l| vec![l; n]);
    run_band(&problem, &[0.0, 0.5, 1.0], &lambdas, &args.out)?;
    verdict
}

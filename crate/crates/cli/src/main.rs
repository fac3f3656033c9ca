mod config;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gte_core::bench::{self, ExperimentSpec, Scenario, Shape};
use gte_core::classifiers::{self, CheckOptions, ClassReport, Witness};
use gte_core::generators::{self, GenKind, GenSpec};
use gte_core::io;
use gte_core::solvers::{lm_solve, newton_solve, write_trace_csv, SolverConfig, SolverReport};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ntarget: ",
    env!("GTE_BUILD_TARGET"),
    "\nprofile: ",
    env!("GTE_BUILD_PROFILE"),
    "\nrustc: ",
    env!("GTE_BUILD_RUSTC"),
);

/// Generalized tensor equations: generate, solve, classify, benchmark.
#[derive(Parser, Debug)]
#[command(name = "gte", version, long_version = LONG_VERSION)]
struct Cli {
    /// TOML file whose [<subcommand>] table supplies flag defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded random problem and write its manifest and data files.
    Generate(GenerateArgs),
    /// Solve a problem from its manifest.
    Solve(SolveArgs),
    /// Check a tensor against a class definition.
    Classify(ClassifyArgs),
    /// Run a batch experiment and write table.csv, table.txt, trials.json and traces.
    Bench(BenchArgs),
    /// Write LM and Newton residual traces for one instance.
    Trace(TraceArgs),
}

#[derive(clap::Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "m-tensor")]
    kind: GenKind,
    /// Coefficient orders, strictly decreasing, e.g. `3` or `4,3,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    orders: Vec<usize>,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = generators::DEFAULT_SIGMA)]
    sigma: f64,
    /// Entry range `LO,HI` for general kinds.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for problem.toml and its data files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Lm,
    Newton,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    /// Problem manifest (problem.toml).
    #[arg(long)]
    problem: PathBuf,
    /// `ones`, `planted-offset` (x* + 1, needs x_star in the manifest) or a vector file.
    #[arg(long, default_value = "ones")]
    x0: String,
    #[arg(long, value_enum, default_value = "lm")]
    method: Method,
    /// Damping exponent in [1, 2]; defaults to 2 for m-tensor problems, 1 otherwise.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Per-iteration CSV trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the final iterate as a vector file.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Exit with status 1 unless the solver converges.
    #[arg(long)]
    require_converged: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassName {
    P,
    StrongP,
    Pd,
    StrictPd,
    Singular,
    Zplus2d,
}

#[derive(clap::Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long = "class", value_enum)]
    class: ClassName,
    /// Random samples (pairs for pairwise classes, restarts for `singular`).
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// A strict inequality counts as violated at values `<= tol`.
    #[arg(long, default_value_t = classifiers::DEFAULT_FALSIFY_TOL)]
    tol: f64,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Shapes such as `(3,20)` or `(4,3,2,5)`; repeat the flag or separate with `;`.
    #[arg(long, value_delimiter = ';')]
    shapes: Vec<Shape>,
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<GenKind>,
    #[arg(long, default_value_t = bench::DEFAULT_TRIALS)]
    trials: usize,
    /// Epsilon grid, comma-separated.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 1e-12 for tensor equations and 1e-6 for table5.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = bench::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Include the large shapes when --shapes is not given.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
struct TraceArgs {
    #[arg(long, required_unless_present = "singular_example", conflicts_with = "singular_example")]
    shape: Option<Shape>,
    /// Trace the rank-deficient fixture instead of a generated instance.
    #[arg(long)]
    singular_example: bool,
    #[arg(long, default_value = "m-tensor")]
    kind: GenKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = bench::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// An error that maps onto exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let args = match config::apply(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Classify(a) => classify(a),
        Command::Bench(a) => run_bench(a),
        Command::Trace(a) => trace(a),
    };
    outcome.unwrap_or_else(|Failure(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let bad = || format!("expected LO,HI, got `{s}`");
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn generate(a: GenerateArgs) -> CliResult {
    let mut spec = GenSpec::new(a.kind, a.orders, a.dim, a.seed);
    spec.sigma = a.sigma;
    if let Some(r) = a.range {
        spec.entry_range = r;
    }
    let inst = generators::generate(&spec)?;
    let manifest = io::save_problem(
        &a.out,
        &inst.problem,
        inst.x_star.as_deref(),
        Some(inst.omega),
        Some(a.kind.as_str()),
        Some(a.seed),
    )?;
    out!("{}", manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn starting_point(spec: &str, loaded: &io::LoadedProblem) -> Result<Vec<f64>, Failure> {
    let n = loaded.problem.dim();
    match spec {
        "ones" => Ok(vec![1.0; n]),
        "planted-offset" => loaded
            .x_star
            .as_ref()
            .map(|xs| xs.iter().map(|v| v + 1.0).collect())
            .ok_or_else(|| Failure("--x0 planted-offset needs x_star in the problem manifest".into())),
        path => {
            let v = io::read_vector(path)?;
            if v.len() != n {
                return Err(Failure(format!("{path}: expected {n} entries for x0, found {}", v.len())));
            }
            Ok(v)
        }
    }
}

fn print_report(report: &SolverReport) {
    out!("status: {}", report.status.as_str());
    out!("iterations: {}", report.iterations);
    out!("residual: {:e}", report.final_residual());
    let xs: Vec<String> = report.final_x.iter().map(|v| format!("{v:.17e}")).collect();
    out!("x: {}", xs.join(" "));
}

fn solve(a: SolveArgs) -> CliResult {
    let loaded = io::load_problem(&a.problem)?;
    let x0 = starting_point(&a.x0, &loaded)?;
    let m_kind = loaded.manifest.kind.as_deref().map(str::parse::<GenKind>).transpose()? == Some(GenKind::MTensor);
    let cfg = SolverConfig::for_m_tensor(m_kind)
        .with_tol(a.tol)
        .with_max_iter(a.max_iter);
    let cfg = match a.epsilon {
        Some(e) => cfg.with_epsilon(e),
        None => cfg,
    };
    cfg.validate()?;
    let report = match a.method {
        Method::Lm => lm_solve(&loaded.problem, &x0, &cfg)?,
        Method::Newton => newton_solve(&loaded.problem, &x0, cfg.tol, cfg.max_iter)?,
    };
    if let Some(path) = &a.trace {
        let file = fs::File::create(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        write_trace_csv(&report, file)?;
    }
    if let Some(path) = &a.solution_out {
        io::write_vector(path, &report.final_x)?;
    }
    print_report(&report);
    if a.require_converged && !report.converged() {
        eprintln!("solver did not converge: {}", report.status.as_str());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn print_class_report(r: &ClassReport) {
    out!("verdict: {}", r.verdict);
    out!("method: {:?}", r.method);
    out!("samples: {}", r.samples_used);
    if let Some(v) = r.value {
        out!("value: {v:e}");
    }
    match &r.witness {
        Some(Witness::Vector(x)) => out!("witness: x = {}", fmt_vec(x)),
        Some(Witness::Pair(x, y)) => out!("witness: x = {}, y = {}", fmt_vec(x), fmt_vec(y)),
        Some(Witness::VectorScalar(x, t)) => out!("witness: x = {}, t = {t:e}", fmt_vec(x)),
        None => {}
    }
}

fn classify(a: ClassifyArgs) -> CliResult {
    let tensor = io::read_tensor(&a.tensor)?;
    let opts = CheckOptions {
        budget: a.budget,
        seed: a.seed,
        tol: a.tol,
    };
    let report = match a.class {
        ClassName::P => classifiers::check_p_tensor(&tensor, &opts)?,
        ClassName::StrongP => classifiers::check_strong_p(&tensor, &opts)?,
        ClassName::Pd => classifiers::check_pd(&tensor, &opts)?,
        ClassName::StrictPd => classifiers::check_strict_pd(&tensor, &opts)?,
        ClassName::Singular => classifiers::check_singular(&tensor, a.budget, a.seed)?,
        ClassName::Zplus2d => classifiers::check_z_plus_2d_tol(&tensor, a.tol)?,
    };
    print_class_report(&report);
    Ok(ExitCode::SUCCESS)
}

fn run_bench(a: BenchArgs) -> CliResult {
    let mut spec = ExperimentSpec::new(a.scenario)
        .with_trials(a.trials)
        .with_seed(a.seed);
    spec.shapes = if a.shapes.is_empty() {
        a.scenario.default_shapes(a.full)
    } else {
        a.shapes
    };
    if !a.kinds.is_empty() {
        spec.kinds = a.kinds;
    }
    if !a.epsilon.is_empty() {
        spec = spec.with_epsilons(a.epsilon);
    }
    if let Some(tol) = a.tol {
        spec.tol = tol;
    }
    spec.max_iter = a.max_iter;
    spec.validate()?;

    let result = bench::run_experiment(&spec)?;
    let text = bench::summarize(&result, &a.out_dir)?;
    let shape = &spec.shapes[0];
    let kind = spec.kinds[0];
    let eps = spec.epsilons_for(kind)[0];
    let traces = bench::trace_figure(shape, kind, spec.seed0, eps, spec.tol, spec.max_iter)?;
    traces.write(&a.out_dir)?;
    out!("{}", text.trim_end());
    eprintln!("wrote results to {}", a.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn trace(a: TraceArgs) -> CliResult {
    let traces = match &a.shape {
        Some(shape) if !a.singular_example => {
            let tol = a.tol.unwrap_or(if shape.is_tensor_equation() { bench::TE_TOL } else { bench::GTE_TOL });
            let eps = a
                .epsilon
                .unwrap_or(SolverConfig::for_m_tensor(a.kind == GenKind::MTensor).epsilon);
            SolverConfig::default().with_epsilon(eps).with_tol(tol).with_max_iter(a.max_iter).validate()?;
            bench::trace_figure(shape, a.kind, a.seed, eps, tol, a.max_iter)?
        }
        _ => bench::trace_singular_example(a.tol.unwrap_or(bench::TE_TOL), a.max_iter)?,
    };
    let paths = traces.write(&a.out_dir)?;
    for (name, report, path) in [("lm", &traces.lm, &paths[0]), ("newton", &traces.newton, &paths[1])] {
        out!(
            "{name}: {} after {} iterations, residual {:e} -> {}",
            report.status.as_str(),
            report.iterations,
            report.final_residual(),
            display(path)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

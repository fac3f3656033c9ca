//! Batch experiments over seeded random instances.
//!
//! Trial `t` of every shape uses seed `seed0 + t`, so one instance is shared
//! by every epsilon on the grid. Timing covers the solve only. Means of
//! iterations, time and residual are taken over successful trials; a trial
//! succeeds when the solver reports convergence with final residual `<= tol`.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::error_bound_example_problem;
use crate::error::{Error, Result};
use crate::generators::{gen_general_planted, gen_gte_instance, gen_te_instance, GenKind, Instance, GENERAL_RANGE};
use crate::solvers::{lm_solve, newton_solve, write_trace_csv, SolverConfig, SolverReport};

pub const TE_TOL: f64 = 1e-12;
pub const GTE_TOL: f64 = 1e-6;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const EPSILON_GRID: [f64; 4] = [1.0, 1.25, 1.75, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// M-tensor equations, epsilon sensitivity.
    Table1,
    /// Planted general-tensor equations, epsilon sensitivity.
    Table2,
    /// M-tensor equations at `epsilon = 2`.
    Table3LMAOnly,
    /// Planted general-tensor equations at `epsilon = 1`.
    Table4LMAOnly,
    /// Generalized equations with orders `(4, 3, 2)`, both coefficient kinds.
    Table5,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Table1,
        Scenario::Table2,
        Scenario::Table3LMAOnly,
        Scenario::Table4LMAOnly,
        Scenario::Table5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Table1 => "table1",
            Scenario::Table2 => "table2",
            Scenario::Table3LMAOnly => "table3",
            Scenario::Table4LMAOnly => "table4",
            Scenario::Table5 => "table5",
        }
    }

    pub fn kinds(self) -> Vec<GenKind> {
        match self {
            Scenario::Table1 | Scenario::Table3LMAOnly => vec![GenKind::MTensor],
            Scenario::Table2 | Scenario::Table4LMAOnly => vec![GenKind::PlantedGeneral],
            Scenario::Table5 => vec![GenKind::MTensor, GenKind::GeneralRandom],
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Scenario::Table5 => GTE_TOL,
            _ => TE_TOL,
        }
    }

    /// `None` means the per-kind default (2 for M-tensors, 1 otherwise).
    pub fn default_epsilons(self) -> Option<Vec<f64>> {
        match self {
            Scenario::Table1 | Scenario::Table2 => Some(EPSILON_GRID.to_vec()),
            Scenario::Table3LMAOnly => Some(vec![2.0]),
            Scenario::Table4LMAOnly => Some(vec![1.0]),
            Scenario::Table5 => None,
        }
    }

    /// Shapes that finish in seconds to a few minutes; `full` adds the
    /// large shapes whose dense storage runs to gigabytes.
    pub fn default_shapes(self, full: bool) -> Vec<Shape> {
        let te = |m, n| Shape::new(vec![m], n);
        match self {
            Scenario::Table5 => {
                let mut dims = vec![5, 10, 20];
                if full {
                    dims.extend([50, 100]);
                }
                dims.into_iter().map(|n| Shape::new(vec![4, 3, 2], n)).collect()
            }
            _ => {
                let mut shapes = vec![te(3, 20), te(3, 50), te(3, 100), te(4, 50), te(5, 20)];
                if full {
                    shapes.insert(4, te(4, 100));
                    shapes.push(te(5, 50));
                }
                shapes
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" | "1" => Ok(Scenario::Table1),
            "table2" | "2" => Ok(Scenario::Table2),
            "table3" | "3" | "table3-lma-only" => Ok(Scenario::Table3LMAOnly),
            "table4" | "4" | "table4-lma-only" => Ok(Scenario::Table4LMAOnly),
            "table5" | "5" => Ok(Scenario::Table5),
            other => Err(Error::InvalidConfig(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Coefficient orders plus dimension: `(m, n)` for a tensor equation,
/// `(m1, m2, m3, n)` for a generalized one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub orders: Vec<usize>,
    pub dim: usize,
}

impl Shape {
    pub fn new(orders: Vec<usize>, dim: usize) -> Self {
        Self { orders, dim }
    }

    pub fn is_tensor_equation(&self) -> bool {
        self.orders.len() == 1
    }

    pub fn instance(&self, kind: GenKind, seed: u64) -> Result<Instance> {
        match (self.is_tensor_equation(), kind) {
            (true, GenKind::MTensor) => gen_te_instance(self.orders[0], self.dim, seed),
            (true, _) => gen_general_planted(&self.orders, self.dim, GENERAL_RANGE, seed),
            (false, _) => gen_gte_instance(&self.orders, self.dim, kind, seed),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('(')?;
        for o in &self.orders {
            write!(f, "{o},")?;
        }
        write!(f, "{})", self.dim)
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// Accepts `(3,20)`, `3,20` or `4,3,2,5`; the last number is the dimension.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let nums = inner
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidConfig(format!("bad shape `{s}`")))?;
        match nums.split_last() {
            Some((&dim, orders)) if !orders.is_empty() && dim > 0 => Ok(Shape::new(orders.to_vec(), dim)),
            _ => Err(Error::InvalidConfig(format!("bad shape `{s}` (expected orders then dimension)"))),
        }
    }
}

/// Start point: all ones, except planted tensor equations which start at `x* + 1`.
pub fn starting_point(shape: &Shape, kind: GenKind, instance: &Instance) -> Vec<f64> {
    match (&instance.x_star, shape.is_tensor_equation() && kind != GenKind::MTensor) {
        (Some(xs), true) => xs.iter().map(|v| v + 1.0).collect(),
        _ => vec![1.0; shape.dim],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub shapes: Vec<Shape>,
    pub kinds: Vec<GenKind>,
    pub trials: usize,
    /// `None` selects the per-kind default.
    pub epsilons: Option<Vec<f64>>,
    pub seed0: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            shapes: scenario.default_shapes(false),
            kinds: scenario.kinds(),
            trials: DEFAULT_TRIALS,
            epsilons: scenario.default_epsilons(),
            seed0: 0,
            tol: scenario.default_tol(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_shapes(mut self, shapes: Vec<Shape>) -> Self {
        self.shapes = shapes;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_epsilons(mut self, epsilons: Vec<f64>) -> Self {
        self.epsilons = Some(epsilons);
        self
    }

    pub fn with_seed(mut self, seed0: u64) -> Self {
        self.seed0 = seed0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.shapes.is_empty() || self.kinds.is_empty() {
            return Err(Error::InvalidConfig("need at least one shape and one kind".into()));
        }
        for kind in &self.kinds {
            for eps in self.epsilons_for(*kind) {
                self.solver_config(eps).validate()?;
            }
        }
        Ok(())
    }

    pub fn epsilons_for(&self, kind: GenKind) -> Vec<f64> {
        self.epsilons
            .clone()
            .unwrap_or_else(|| vec![SolverConfig::for_m_tensor(kind == GenKind::MTensor).epsilon])
    }

    pub fn solver_config(&self, epsilon: f64) -> SolverConfig {
        SolverConfig::default()
            .with_epsilon(epsilon)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub shape: String,
    pub kind: GenKind,
    pub epsilon: f64,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub residual: f64,
    pub success: bool,
    pub wall_time_s: f64,
    pub omega: f64,
}

/// One line of the rendered table. Statistics are `None` when undefined
/// (no trials, or no successes for the means).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub shape: String,
    pub epsilon: f64,
    pub itr_mean: Option<f64>,
    pub time_mean_s: Option<f64>,
    pub resi_mean: Option<f64>,
    pub sr: Option<f64>,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<SummaryRow>,
    pub trials: Vec<TrialRecord>,
}

impl BatchResult {
    /// The result with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.trials {
            t.wall_time_s = 0.0;
        }
        for r in &mut out.rows {
            r.time_mean_s = r.time_mean_s.map(|_| 0.0);
        }
        out
    }
}

fn run_trial(spec: &ExperimentSpec, shape: &Shape, kind: GenKind, epsilons: &[f64], seed: u64) -> Result<Vec<TrialRecord>> {
    let inst = shape.instance(kind, seed)?;
    let x0 = starting_point(shape, kind, &inst);
    epsilons
        .iter()
        .map(|&eps| {
            let report = lm_solve(&inst.problem, &x0, &spec.solver_config(eps))?;
            let residual = report.final_residual();
            Ok(TrialRecord {
                shape: shape.to_string(),
                kind,
                epsilon: eps,
                seed,
                status: report.status.as_str().to_string(),
                iterations: report.iterations,
                residual,
                success: report.converged() && residual <= spec.tol,
                wall_time_s: report.wall_time,
                omega: inst.omega,
            })
        })
        .collect()
}

/// Runs every (shape, kind, trial) and aggregates one row per
/// (shape, kind, epsilon), in spec order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<BatchResult> {
    spec.validate()?;
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    for shape in &spec.shapes {
        for &kind in &spec.kinds {
            let epsilons = spec.epsilons_for(kind);
            let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| run_trial(spec, shape, kind, &epsilons, spec.seed0 + t))
                .collect::<Result<_>>()?;
            for &eps in &epsilons {
                let subset: Vec<TrialRecord> = per_trial
                    .iter()
                    .flatten()
                    .filter(|r| r.epsilon == eps)
                    .cloned()
                    .collect();
                rows.push(summarize_trials(&shape.to_string(), kind, eps, &subset));
            }
            trials.extend(per_trial.into_iter().flatten());
        }
    }
    Ok(BatchResult {
        spec: spec.clone(),
        rows,
        trials,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Aggregates one group of trials; an empty group gives the "no trials" row.
pub fn summarize_trials(shape: &str, kind: GenKind, epsilon: f64, trials: &[TrialRecord]) -> SummaryRow {
    let ok = || trials.iter().filter(|t| t.success);
    let successes = ok().count();
    SummaryRow {
        shape: shape.to_string(),
        epsilon,
        itr_mean: mean(ok().map(|t| t.iterations as f64)),
        time_mean_s: mean(ok().map(|t| t.wall_time_s)),
        resi_mean: mean(ok().map(|t| t.residual)),
        sr: (!trials.is_empty()).then(|| successes as f64 / trials.len() as f64),
        kind: kind.to_string(),
    }
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "--".into())
}

/// Text table in `itr / time / resi / sr` layout.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<14} {:<16} {:>6}   {}\n",
        "shape", "kind", "eps", "itr / time / resi / sr"
    );
    for r in rows {
        let body = if r.sr.is_none() {
            "no trials".to_string()
        } else {
            format!(
                "{} / {} / {} / {}",
                opt(r.itr_mean, |v| format!("{v:.2}")),
                opt(r.time_mean_s, |v| format!("{v:.2}")),
                opt(r.resi_mean, |v| format!("{v:.2e}")),
                opt(r.sr, |v| format!("{v:.2}")),
            )
        };
        let _ = writeln!(out, "{:<14} {:<16} {:>6}   {}", r.shape, r.kind, r.epsilon, body);
    }
    out
}

/// CSV columns: `shape,epsilon,itr_mean,time_mean_s,resi_mean,sr,kind`;
/// undefined statistics are empty fields.
pub fn write_table_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_table_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Writes `table.csv`, `table.txt` and `trials.json` into `dir`.
pub fn summarize(result: &BatchResult, dir: &Path) -> Result<String> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let text = format_table(&result.rows);
    let csv_path = dir.join("table.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_table_csv(&result.rows, file)?;
    let txt_path = dir.join("table.txt");
    fs::write(&txt_path, &text).map_err(|e| Error::io(&txt_path, e))?;
    let json_path = dir.join("trials.json");
    let json = serde_json::to_string_pretty(result).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok(text)
}

/// LM and Newton runs on a single instance.
#[derive(Clone, Debug)]
pub struct FigureTraces {
    pub label: String,
    pub lm: SolverReport,
    pub newton: SolverReport,
}

impl FigureTraces {
    /// Writes `trace_lm_<label>.csv` and `trace_newton_<label>.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for (name, report) in [("lm", &self.lm), ("newton", &self.newton)] {
            let path = dir.join(format!("trace_{name}_{}.csv", self.label));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_trace_csv(report, file)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn file_label(shape: &Shape, kind: GenKind, seed: u64) -> String {
    let dims: Vec<String> = shape
        .orders
        .iter()
        .chain(std::iter::once(&shape.dim))
        .map(|v| v.to_string())
        .collect();
    format!("{}_{}_s{seed}", kind.as_str(), dims.join("-"))
}

/// Residual histories of LM and Newton on one generated instance.
pub fn trace_figure(shape: &Shape, kind: GenKind, seed: u64, epsilon: f64, tol: f64, max_iter: usize) -> Result<FigureTraces> {
    let inst = shape.instance(kind, seed)?;
    let x0 = starting_point(shape, kind, &inst);
    let cfg = SolverConfig::default()
        .with_epsilon(epsilon)
        .with_tol(tol)
        .with_max_iter(max_iter);
    Ok(FigureTraces {
        label: file_label(shape, kind, seed),
        lm: lm_solve(&inst.problem, &x0, &cfg)?,
        newton: newton_solve(&inst.problem, &x0, tol, max_iter)?,
    })
}

/// The rank-deficient example whose Jacobian is singular everywhere, from `(2, 1)`.
pub fn trace_singular_example(tol: f64, max_iter: usize) -> Result<FigureTraces> {
    let problem = error_bound_example_problem();
    let x0 = [2.0, 1.0];
    let cfg = SolverConfig::default().with_tol(tol).with_max_iter(max_iter);
    Ok(FigureTraces {
        label: "singular-example".into(),
        lm: lm_solve(&problem, &x0, &cfg)?,
        newton: newton_solve(&problem, &x0, tol, max_iter)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(success: bool, iterations: usize, residual: f64) -> TrialRecord {
        TrialRecord {
            shape: "(3,2)".into(),
            kind: GenKind::MTensor,
            epsilon: 2.0,
            seed: 0,
            status: if success { "converged" } else { "max-iterations" }.into(),
            iterations,
            residual,
            success,
            wall_time_s: 0.5,
            omega: 1.0,
        }
    }

    #[test]
    fn shape_parse_and_display() {
        let s: Shape = "(4,3,2,5)".parse().unwrap();
        assert_eq!(s.orders, vec![4, 3, 2]);
        assert_eq!(s.dim, 5);
        assert_eq!(s.to_string(), "(4,3,2,5)");
        assert_eq!("3,20".parse::<Shape>().unwrap().to_string(), "(3,20)");
        assert!("20".parse::<Shape>().is_err());
        assert!("(3,x)".parse::<Shape>().is_err());
    }

    #[test]
    fn empty_trial_set_renders_no_trials() {
        let row = summarize_trials("(3,20)", GenKind::MTensor, 2.0, &[]);
        assert_eq!(row.sr, None);
        assert!(format_table(&[row]).contains("no trials"));
    }

    #[test]
    fn one_success_one_failure() {
        let row = summarize_trials("(3,2)", GenKind::MTensor, 2.0, &[record(true, 8, 1e-14), record(false, 1000, 1.0)]);
        assert_eq!(row.sr, Some(0.5));
        assert_eq!(row.itr_mean, Some(8.0));
        assert_eq!(row.resi_mean, Some(1e-14));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            summarize_trials("(3,2)", GenKind::MTensor, 2.0, &[record(true, 8, 1.234_567_890_123_456_7e-14)]),
            summarize_trials("(3,2)", GenKind::MTensor, 1.0, &[record(false, 3, 0.1)]),
            summarize_trials("(3,2)", GenKind::MTensor, 1.5, &[]),
        ];
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("shape,epsilon,itr_mean,time_mean_s,resi_mean,sr,kind\n"));
        assert_eq!(read_table_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn spec_validation() {
        assert!(ExperimentSpec::new(Scenario::Table1).with_trials(0).validate().is_err());
        assert!(ExperimentSpec::new(Scenario::Table1).with_epsilons(vec![3.0]).validate().is_err());
        ExperimentSpec::new(Scenario::Table5).validate().unwrap();
    }

    #[test]
    fn scenario_names() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
    }
}

//! Desk-scale checkers for tensor classes.
//!
//! The class definitions quantify over all of `R^n`, so the sampling checkers
//! can only ever falsify: they report `Falsified` with a witness or
//! `Inconclusive`. The exact two-dimensional Z+ check is the one path that can
//! return `Holds`.
//!
//! Sampling covers the sign-pattern grid `{-1, 0, 1}^n \ {0}` (for `n <= 10`)
//! followed by `budget` normalized standard-normal draws. A strict inequality
//! `v > 0` counts as violated when `v <= tol` (default `1e-12`), so exact
//! zeros computed with rounding still falsify.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::rng_from_seed;
use crate::poly;
use crate::problem::GteProblem;
use crate::tensor::DenseTensor;

pub const DEFAULT_FALSIFY_TOL: f64 = 1e-12;
/// `||A x^{m-1}||^2` on the unit sphere at or below this counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;
const GRID_MAX_DIM: usize = 10;
const PAIR_GRID_MAX_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Falsified,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "Holds",
            Verdict::Falsified => "Falsified",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact2D,
    Sampling,
    Optimization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Vector(Vec<f64>),
    Pair(Vec<f64>, Vec<f64>),
    /// `(x, t)` with `A x^{m-1} + t x = 0`.
    VectorScalar(Vec<f64>, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// The defining quantity at the witness (or the best value seen).
    pub value: Option<f64>,
    pub samples_used: usize,
    pub method: Method,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    pub budget: usize,
    pub seed: u64,
    pub tol: f64,
}

impl CheckOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            tol: DEFAULT_FALSIFY_TOL,
        }
    }
}

// ---- defining quantities -------------------------------------------------

/// `max_i x_i (A x^{m-1})_i`.
pub fn p_value(a: &DenseTensor, x: &[f64]) -> Result<f64> {
    let v = a.contract_to_vector(x)?;
    Ok(x.iter().zip(&v).map(|(xi, vi)| xi * vi).fold(f64::NEG_INFINITY, f64::max))
}

fn pair_diffs(a: &DenseTensor, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ax = a.contract_to_vector(x)?;
    let ay = a.contract_to_vector(y)?;
    Ok((
        x.iter().zip(y).map(|(p, q)| p - q).collect(),
        ax.iter().zip(&ay).map(|(p, q)| p - q).collect(),
    ))
}

/// `max_i (x_i - y_i)(A x^{m-1} - A y^{m-1})_i`.
pub fn strong_p_value(a: &DenseTensor, x: &[f64], y: &[f64]) -> Result<f64> {
    let (dx, dv) = pair_diffs(a, x, y)?;
    Ok(dx.iter().zip(&dv).map(|(p, q)| p * q).fold(f64::NEG_INFINITY, f64::max))
}

/// `(x - y)^T (A x^{m-1} - A y^{m-1})`.
pub fn strict_pd_value(a: &DenseTensor, x: &[f64], y: &[f64]) -> Result<f64> {
    let (dx, dv) = pair_diffs(a, x, y)?;
    Ok(dx.iter().zip(&dv).map(|(p, q)| p * q).sum())
}

/// `A x^m`.
pub fn pd_value(a: &DenseTensor, x: &[f64]) -> Result<f64> {
    a.contract_to_scalar(x)
}

/// `||A u^{m-1}||^2` with `u = x / ||x||`.
pub fn singular_value(a: &DenseTensor, x: &[f64]) -> Result<f64> {
    let u = normalized(x).ok_or_else(|| Error::Degenerate("zero vector".into()))?;
    Ok(norm_sq(&a.contract_to_vector(&u)?))
}

/// `||A x^{m-1} + t x||`.
pub fn z_plus_residual(a: &DenseTensor, x: &[f64], t: f64) -> Result<f64> {
    let v = a.contract_to_vector(x)?;
    Ok(v.iter().zip(x).map(|(vi, xi)| (vi + t * xi).powi(2)).sum::<f64>().sqrt())
}

// ---- sampling ---------------------------------------------------------------

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn normalized(x: &[f64]) -> Option<Vec<f64>> {
    let n = norm_sq(x).sqrt();
    (n > 0.0).then(|| x.iter().map(|v| v / n).collect())
}

/// All of `{-1, 0, 1}^n` in lexicographic order, zero included.
fn sign_grid(n: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0.0; n];
            for slot in v.iter_mut().rev() {
                *slot = (code % 3) as f64 - 1.0;
                code /= 3;
            }
            v
        })
        .collect()
}

fn sphere_points(n: usize, budget: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = if n <= GRID_MAX_DIM {
        sign_grid(n).iter().filter_map(|g| normalized(g)).collect()
    } else {
        Vec::new()
    };
    let target = pts.len() + budget;
    let mut rng = rng_from_seed(seed);
    while pts.len() < target {
        let draw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&draw) {
            pts.push(u);
        }
    }
    pts
}

fn pair_points(n: usize, budget: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut pairs = Vec::new();
    if n <= PAIR_GRID_MAX_DIM {
        let grid = sign_grid(n);
        for x in &grid {
            for y in &grid {
                if x != y {
                    pairs.push((x.clone(), y.clone()));
                }
            }
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut drawn = 0;
    while drawn < budget {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if x != y {
            pairs.push((x, y));
            drawn += 1;
        }
    }
    pairs
}

/// Scans candidates, keeping the smallest value; falsified if it is `<= tol`.
fn falsify_scan<T>(
    candidates: impl IntoIterator<Item = T>,
    tol: f64,
    mut value: impl FnMut(&T) -> Result<f64>,
    witness: impl Fn(T) -> Witness,
) -> Result<ClassReport> {
    let mut best: Option<(f64, T)> = None;
    let mut count = 0;
    for c in candidates {
        count += 1;
        let v = value(&c)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    let (verdict, witness, value) = match best {
        Some((v, c)) if v <= tol => (Verdict::Falsified, Some(witness(c)), Some(v)),
        Some((v, _)) => (Verdict::Inconclusive, None, Some(v)),
        None => (Verdict::Inconclusive, None, None),
    };
    Ok(ClassReport {
        verdict,
        witness,
        value,
        samples_used: count,
        method: Method::Sampling,
    })
}

/// P-tensor: `max_i x_i (A x^{m-1})_i > 0` for every `x != 0`.
pub fn check_p_tensor(a: &DenseTensor, opts: &CheckOptions) -> Result<ClassReport> {
    check_budget(opts)?;
    let pts = sphere_points(a.dim(), opts.budget, opts.seed);
    falsify_scan(pts, opts.tol, |x| p_value(a, x), Witness::Vector)
}

/// Strong P-tensor: `max_i (x_i - y_i)(A x^{m-1} - A y^{m-1})_i > 0` for `x != y`.
pub fn check_strong_p(a: &DenseTensor, opts: &CheckOptions) -> Result<ClassReport> {
    check_budget(opts)?;
    let pairs = pair_points(a.dim(), opts.budget, opts.seed);
    falsify_scan(pairs, opts.tol, |(x, y)| strong_p_value(a, x, y), |(x, y)| Witness::Pair(x, y))
}

/// Strictly positive definite: `(x - y)^T (A x^{m-1} - A y^{m-1}) > 0` for `x != y`.
pub fn check_strict_pd(a: &DenseTensor, opts: &CheckOptions) -> Result<ClassReport> {
    check_budget(opts)?;
    let pairs = pair_points(a.dim(), opts.budget, opts.seed);
    falsify_scan(pairs, opts.tol, |(x, y)| strict_pd_value(a, x, y), |(x, y)| Witness::Pair(x, y))
}

/// Positive definite: `A x^m > 0` for every `x != 0`.
pub fn check_pd(a: &DenseTensor, opts: &CheckOptions) -> Result<ClassReport> {
    check_budget(opts)?;
    let pts = sphere_points(a.dim(), opts.budget, opts.seed);
    falsify_scan(pts, opts.tol, |x| pd_value(a, x), Witness::Vector)
}

/// Checks pairs supplied by the caller (for example, two known solutions of
/// one equation) against the strong P inequality.
pub fn check_strong_p_pairs(a: &DenseTensor, pairs: &[(Vec<f64>, Vec<f64>)], tol: f64) -> Result<ClassReport> {
    falsify_scan(
        pairs.iter().cloned(),
        tol,
        |(x, y)| strong_p_value(a, x, y),
        |(x, y)| Witness::Pair(x, y),
    )
}

/// Caller-supplied points against the P inequality.
pub fn check_p_points(a: &DenseTensor, points: &[Vec<f64>], tol: f64) -> Result<ClassReport> {
    falsify_scan(points.iter().cloned(), tol, |x| p_value(a, x), Witness::Vector)
}

/// Caller-supplied pairs against the strict positive definiteness inequality.
pub fn check_strict_pd_pairs(a: &DenseTensor, pairs: &[(Vec<f64>, Vec<f64>)], tol: f64) -> Result<ClassReport> {
    falsify_scan(
        pairs.iter().cloned(),
        tol,
        |(x, y)| strict_pd_value(a, x, y),
        |(x, y)| Witness::Pair(x, y),
    )
}

fn check_budget(opts: &CheckOptions) -> Result<()> {
    if opts.budget == 0 {
        return Err(Error::InvalidConfig("sampling budget must be at least 1".into()));
    }
    Ok(())
}

// ---- singularity --------------------------------------------------------------

const DESCENT_ITERS: usize = 500;

/// Minimizes `||A x^{m-1}||^2` over the unit sphere from the sign grid and
/// `restarts` random starts using projected gradient descent with Armijo
/// backtracking. `Falsified` here means "singular", with the kernel direction
/// as witness.
pub fn check_singular(a: &DenseTensor, restarts: usize, seed: u64) -> Result<ClassReport> {
    let n = a.dim();
    let sym = a.semi_symmetrize();
    let objective = |x: &[f64]| -> Result<f64> { Ok(norm_sq(&a.contract_to_vector(x)?)) };
    let mut evals = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |v: f64, x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            *best = Some((v, x));
        }
    };

    let starts = sphere_points(n, restarts.max(1), seed);
    let grid_len = starts.len() - restarts.max(1).min(starts.len());
    for (i, start) in starts.into_iter().enumerate() {
        let v = objective(&start)?;
        evals += 1;
        if i < grid_len {
            consider(v, start, &mut best);
            continue;
        }
        let (v, x, used) = descend(a, &sym, start, v)?;
        evals += used;
        consider(v, x, &mut best);
    }
    // polish the best grid or descent point
    if let Some((v, x)) = best.clone() {
        if v > SINGULAR_TOL {
            let (v2, x2, used) = descend(a, &sym, x, v)?;
            evals += used;
            consider(v2, x2, &mut best);
        }
    }

    let (v, x) = best.expect("at least one start");
    let singular = v <= SINGULAR_TOL;
    Ok(ClassReport {
        verdict: if singular { Verdict::Falsified } else { Verdict::Inconclusive },
        witness: singular.then_some(Witness::Vector(x)),
        value: Some(v),
        samples_used: evals,
        method: Method::Optimization,
    })
}

fn descend(a: &DenseTensor, sym: &DenseTensor, mut x: Vec<f64>, mut val: f64) -> Result<(f64, Vec<f64>, usize)> {
    let order = a.order();
    let mut evals = 0;
    let mut step = 1.0;
    for _ in 0..DESCENT_ITERS {
        if val <= 1e-30 {
            break;
        }
        let v = a.contract_to_vector(&x)?;
        let jac = sym.contract_to_matrix(&x)? * (order - 1) as f64;
        let g = jac.tr_mul(&nalgebra::DVector::from_column_slice(&v)) * 2.0;
        let radial: f64 = g.iter().zip(&x).map(|(gi, xi)| gi * xi).sum();
        let tangent: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi - radial * xi).collect();
        let gn2 = norm_sq(&tangent);
        if gn2 <= 1e-300 {
            break;
        }
        step *= 2.0;
        let mut moved = false;
        while step > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&tangent).map(|(xi, ti)| xi - step * ti).collect();
            let Some(trial) = normalized(&trial) else {
                step *= 0.5;
                continue;
            };
            let tv = norm_sq(&a.contract_to_vector(&trial)?);
            evals += 1;
            if tv <= val - 1e-4 * step * gn2 {
                x = trial;
                val = tv;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((val, x, evals))
}

// ---- exact Z+ check for n = 2 ----------------------------------------------

/// Coefficients (ascending in `s`) of `(A x^{m-1})_i` at `x = (1, s)`.
fn component_polys(a: &DenseTensor) -> [Vec<f64>; 2] {
    let m = a.order();
    let tail_len = a.len() / 2;
    let mut out = [vec![0.0; m], vec![0.0; m]];
    for (i, poly) in out.iter_mut().enumerate() {
        for (t, &v) in a.entries()[i * tail_len..(i + 1) * tail_len].iter().enumerate() {
            poly[t.count_ones() as usize] += v;
        }
    }
    out
}

/// Exact Z+ check for `n = 2`: no `x != 0`, `t >= 0` with `A x^{m-1} + t x = 0`.
///
/// For `x_1 != 0` write `x = x_1 (1, s)`; eliminating `t` between the two
/// components leaves `p(s) = f_2(1, s) - s f_1(1, s) = 0`, so the candidate
/// directions are the real roots of `p`. The boundary `x_1 = 0` is a candidate
/// when `f_1(0, 1) = 0`. Each candidate direction `u` is tested with both signs
/// and `t = -u^T A u^{m-1}`; `Holds` iff every candidate gives `t < 0`.
pub fn check_z_plus_2d(a: &DenseTensor) -> Result<ClassReport> {
    check_z_plus_2d_tol(a, DEFAULT_FALSIFY_TOL)
}

pub fn check_z_plus_2d_tol(a: &DenseTensor, tol: f64) -> Result<ClassReport> {
    if a.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "the exact Z+ check needs dimension 2, got {}",
            a.dim()
        )));
    }
    let [f1, f2] = component_polys(a);
    let m = a.order();
    let mut p = vec![0.0; m + 1];
    for k in 0..m {
        p[k] += f2[k];
        p[k + 1] -= f1[k];
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    let mut directions: Vec<Vec<f64>> = Vec::new();
    let p_zero = p.iter().all(|c| c.abs() <= tol * scale);
    if p_zero {
        // every direction with x_1 != 0 satisfies the elimination; the
        // extremes of t are at the roots of f_1(1, s) and at s = 0
        directions.push(vec![1.0, 0.0]);
        for s in poly::real_roots(&f1) {
            directions.push(vec![1.0, s]);
        }
    } else {
        for s in poly::real_roots(&p) {
            directions.push(vec![1.0, s]);
        }
    }
    // boundary x_1 = 0: f_1(0, 1) is the coefficient of s^{m-1} in f_1
    if f1[m - 1].abs() <= tol * scale {
        directions.push(vec![0.0, 1.0]);
    }

    let mut samples = 0;
    let mut worst: Option<(f64, Vec<f64>)> = None;
    for d in directions {
        let u = normalized(&d).expect("nonzero direction");
        for sign in [1.0, -1.0] {
            let x: Vec<f64> = u.iter().map(|v| sign * v).collect();
            let t = -a.contract_to_scalar(&x)?;
            samples += 1;
            if worst.as_ref().is_none_or(|(w, _)| t > *w) {
                worst = Some((t, x));
            }
        }
    }

    let report = match worst {
        Some((t, x)) if t >= -tol * scale => ClassReport {
            verdict: Verdict::Falsified,
            value: Some(t),
            witness: Some(Witness::VectorScalar(x, t)),
            samples_used: samples,
            method: Method::Exact2D,
        },
        other => ClassReport {
            verdict: Verdict::Holds,
            value: other.map(|(t, _)| t),
            witness: None,
            samples_used: samples,
            method: Method::Exact2D,
        },
    };
    Ok(report)
}

// ---- local error bound example ----------------------------------------------

/// Order-4, dimension-2 tensor with `A x^3 = ((x_1 + x_2)^3, 2 (x_1 + x_2)^3)`.
pub fn error_bound_example_tensor() -> DenseTensor {
    DenseTensor::from_sparse(
        4,
        2,
        &[
            (&[0, 0, 0, 0], 1.0),
            (&[0, 1, 1, 1], 1.0),
            (&[0, 0, 0, 1], 3.0),
            (&[0, 0, 1, 1], 3.0),
            (&[1, 0, 0, 0], 2.0),
            (&[1, 1, 1, 1], 2.0),
            (&[1, 0, 0, 1], 6.0),
            (&[1, 0, 1, 1], 6.0),
        ],
    )
    .expect("static tensor")
}

/// `W(x) = A x^3 - (1, 2)` for [`error_bound_example_tensor`].
pub fn error_bound_example_problem() -> GteProblem {
    GteProblem::new(vec![error_bound_example_tensor()], vec![1.0, 2.0]).expect("static problem")
}

/// The claimed error-bound constant `c = 5 sqrt(10) / 4`.
pub fn error_bound_constant() -> f64 {
    5.0 * 10f64.sqrt() / 4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundReport {
    pub samples: usize,
    pub violations: usize,
    /// `max (c dist(x, X) - ||W(x)||)`; non-positive when the bound holds everywhere sampled.
    pub max_violation: f64,
    /// `min ||W(x)|| / dist(x, X)` over samples off the solution set.
    pub min_ratio: f64,
}

/// Samples `x` uniformly in `N = {|x_1 + x_2 - 1| <= 1/2}` (along-strip
/// coordinate uniform on `[-10, 10]`) and tests `||W(x)|| >= c dist(x, X)`
/// with `X = {x_1 + x_2 = 1}` and `dist = |x_1 + x_2 - 1| / sqrt 2`.
pub fn verify_error_bound_example(samples: usize, seed: u64) -> Result<ErrorBoundReport> {
    let problem = error_bound_example_problem();
    let c = error_bound_constant();
    let mut rng = rng_from_seed(seed);
    let mut report = ErrorBoundReport {
        samples,
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        min_ratio: f64::INFINITY,
    };
    for _ in 0..samples {
        let offset = rng.random::<f64>() - 0.5;
        let along = 20.0 * rng.random::<f64>() - 10.0;
        // x_1 + x_2 = 1 + offset, x_1 - x_2 = along
        let x = [0.5 * (1.0 + offset + along), 0.5 * (1.0 + offset - along)];
        let (w, dist) = error_bound_at(&problem, &x)?;
        let gap = c * dist - w;
        report.max_violation = report.max_violation.max(gap);
        if gap > 1e-12 {
            report.violations += 1;
        }
        if dist > 0.0 {
            report.min_ratio = report.min_ratio.min(w / dist);
        }
    }
    Ok(report)
}

/// `(||W(x)||, dist(x, X))` for the error-bound example.
pub fn error_bound_at(problem: &GteProblem, x: &[f64]) -> Result<(f64, f64)> {
    let w = problem.residual_norm(x)?;
    let dist = (x[0] + x[1] - 1.0).abs() / std::f64::consts::SQRT_2;
    Ok((w, dist))
}

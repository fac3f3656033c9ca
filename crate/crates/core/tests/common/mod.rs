//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use gte_core::{DenseTensor, GteProblem};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_tensor(rng: &mut impl Rng, order: usize, dim: usize) -> DenseTensor {
    let len = dim.pow(order as u32);
    DenseTensor::new(order, dim, uniform(rng, len, -1.0, 1.0)).unwrap()
}

/// Decodes flat offset `off` into a multi-index, first index slowest.
fn multi_index(mut off: usize, order: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = off % dim;
        off /= dim;
    }
    idx
}

/// Sums `a[i, j, rest] * prod x[rest]` term by term, visiting every entry.
fn naive_terms(a: &DenseTensor, x: &[f64], free: usize) -> Vec<f64> {
    let n = a.dim();
    let mut out = vec![0.0; n.pow(free as u32)];
    for (off, &v) in a.entries().iter().enumerate() {
        let idx = multi_index(off, a.order(), n);
        let mut term = v;
        for &k in &idx[free..] {
            term *= x[k];
        }
        let slot = idx[..free].iter().fold(0, |acc, &i| acc * n + i);
        out[slot] += term;
    }
    out
}

pub fn naive_vector(a: &DenseTensor, x: &[f64]) -> Vec<f64> {
    naive_terms(a, x, 1)
}

pub fn naive_matrix(a: &DenseTensor, x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.dim(), a.dim(), &naive_terms(a, x, 2))
}

pub fn naive_scalar(a: &DenseTensor, x: &[f64]) -> f64 {
    naive_terms(a, x, 0)[0]
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(want).max(f64::MIN_POSITIVE)
}

/// Central differences of `F`, column by column.
pub fn fd_jacobian(p: &GteProblem, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = p.dim();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let col = (p.residual(&xp).unwrap() - p.residual(&xm).unwrap()) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

pub fn random_gte(rng: &mut impl Rng, orders: &[usize], dim: usize) -> GteProblem {
    let coeffs = orders.iter().map(|&o| random_tensor(rng, o, dim)).collect();
    let b = uniform(rng, dim, -1.0, 1.0);
    GteProblem::new(coeffs, b).unwrap()
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_tensor(name: &str) -> DenseTensor {
    gte_core::io::read_tensor(fixtures_dir().join(format!("{name}.tensor"))).unwrap()
}

/// Checks the per-iteration state of an LM run recorded with
/// `record_iterates`; returns the first violated invariant.
pub fn lm_invariant_violation(
    report: &gte_core::SolverReport,
    cfg: &gte_core::SolverConfig,
) -> Option<String> {
    let xs = report.iterates.as_ref().expect("iterates recorded");
    if let Some(k) = report.mu_history.iter().position(|&mu| !(mu >= cfg.mu_bar)) {
        return Some(format!("mu_{k} = {} below mu_bar", report.mu_history[k]));
    }
    let mut last_ref = f64::INFINITY;
    for (k, step) in report.steps.iter().enumerate() {
        if !(step.directional_derivative < 0.0) {
            return Some(format!("step {k}: directional derivative {}", step.directional_derivative));
        }
        let reference = step.reference.expect("LM records the reference");
        if reference > last_ref {
            return Some(format!("step {k}: reference rose {last_ref} -> {reference}"));
        }
        last_ref = reference;
        let moved = xs[k + 1].iter().zip(&xs[k]).any(|(a, b)| a.to_bits() != b.to_bits());
        if step.accepted {
            if !(step.trial_residual < reference) {
                return Some(format!("step {k}: accepted without reduction"));
            }
            if report.residual_history[k + 1] != step.trial_residual {
                return Some(format!("step {k}: accepted residual not recorded"));
            }
        } else {
            if moved {
                return Some(format!("step {k}: rejected step moved x"));
            }
            if report.residual_history[k + 1].to_bits() != report.residual_history[k].to_bits() {
                return Some(format!("step {k}: rejected step changed the residual"));
            }
        }
        if step.accepted != (step.tau.unwrap() >= cfg.p0) {
            return Some(format!("step {k}: acceptance disagrees with tau"));
        }
    }
    None
}

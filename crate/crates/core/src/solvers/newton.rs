use std::time::Instant;

use nalgebra::DVector;

use super::{SolverReport, Status, StepRecord};
use crate::error::{Error, Result};
use crate::problem::GteProblem;

/// Jacobians with a 2-norm condition number above this are treated as singular.
pub const NEWTON_COND_LIMIT: f64 = 1e14;

/// Undamped Newton: `F'(x) d = -F(x)`, `x <- x + d`, every step taken.
pub fn newton_solve(problem: &GteProblem, x0: &[f64], tol: f64, max_iter: usize) -> Result<SolverReport> {
    Error::check_dim(problem.dim(), x0.len())?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("tol must be non-negative, got {tol}")));
    }
    let start = Instant::now();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, mut jac) = problem.residual_and_jacobian(x0)?;
    let mut residual_history = vec![f.norm()];
    let mut steps = Vec::new();

    let status = loop {
        let norm = *residual_history.last().unwrap();
        if norm <= tol {
            break Status::Converged;
        }
        if !norm.is_finite() || steps.len() >= max_iter {
            break if norm.is_finite() {
                Status::MaxIterations
            } else {
                Status::LinearSolveFailure
            };
        }
        let sv = jac.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 0.0) || smax / smin > NEWTON_COND_LIMIT {
            break Status::LinearSolveFailure;
        }
        let Some(d) = jac.clone().lu().solve(&(-&f)) else {
            break Status::LinearSolveFailure;
        };
        let grad = jac.tr_mul(&f);
        x += &d;
        (f, jac) = problem.residual_and_jacobian(x.as_slice())?;
        let new_norm = f.norm();
        steps.push(StepRecord {
            lambda: None,
            tau: None,
            reference: None,
            accepted: true,
            trial_residual: new_norm,
            directional_derivative: grad.dot(&d),
            step_norm: d.norm(),
        });
        residual_history.push(new_norm);
    };

    Ok(SolverReport {
        status,
        iterations: steps.len(),
        final_x: x.as_slice().to_vec(),
        residual_history,
        accepted_flags: vec![true; steps.len()],
        mu_history: Vec::new(),
        steps,
        iterates: None,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

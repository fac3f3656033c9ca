use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{SolverConfig, SolverReport, Status, StepRecord, StopRule, WindowRule};
use crate::error::{Error, Result};
use crate::problem::GteProblem;

/// Nonmonotone Levenberg-Marquardt.
///
/// Iteration `k` at `x_k` with `F_k = F(x_k)` and `J_k = F'(x_k)`:
///
/// 1. `lambda_k = mu_k ||F_k||^eps / (1 + ||F_k||)`
/// 2. `d_k` solves `(J_k^T J_k + lambda_k I) d = -J_k^T F_k` (Cholesky)
/// 3. `tau_k = (F_l^2 - ||F(x_k + d_k)||^2) / (||F_k||^2 - ||F_k + J_k d_k||^2)`
///    with `F_l = max_{0 <= j <= min(k, N0)} ||F(x_{k-j})||`
/// 4. accept `x_{k+1} = x_k + d_k` iff `tau_k >= p0`, else `x_{k+1} = x_k`
/// 5. `mu_{k+1} = 4 mu_k` if `tau_k < p1`, `mu_k` if `p1 <= tau_k <= p2`,
///    `max(mu_k / 4, mu_bar)` otherwise.
///
/// A non-positive predicted reduction (only possible through rounding) is
/// treated as `tau_k = 0`, as is a non-finite trial residual.
pub fn lm_solve(problem: &GteProblem, x0: &[f64], cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    Error::check_dim(problem.dim(), x0.len())?;
    let start = Instant::now();
    let n = problem.dim();

    let mut x = DVector::from_column_slice(x0);
    let (mut f, mut jac) = problem.residual_and_jacobian(x.as_slice())?;
    let mut norm = f.norm();
    let mut mu = cfg.mu0;

    let mut residual_history = vec![norm];
    let mut mu_history = vec![mu];
    let mut accepted_flags = Vec::new();
    let mut steps = Vec::new();
    let mut iterates = cfg.record_iterates.then(|| vec![x0.to_vec()]);
    let mut accepted_window: VecDeque<f64> = VecDeque::from([norm]);

    let status = loop {
        let k = accepted_flags.len();
        let grad = jac.tr_mul(&f);
        let grad_norm = grad.norm();
        let done = match cfg.stop_rule {
            StopRule::ResidualNorm => norm <= cfg.tol,
            StopRule::GradientNorm => grad_norm <= cfg.tol,
        };
        if done {
            break Status::Converged;
        }
        if !norm.is_finite() {
            break Status::LinearSolveFailure;
        }
        if grad_norm == 0.0 {
            // stationary point of ||F||^2 that is not a solution
            break Status::Stalled;
        }
        if k >= cfg.max_iter {
            break Status::MaxIterations;
        }

        let lambda = mu * norm.powf(cfg.epsilon) / (1.0 + norm);
        let Some(d) = damped_step(&jac, &grad, lambda, n) else {
            break Status::LinearSolveFailure;
        };

        let predicted = norm * norm - (&f + &jac * &d).norm_squared();
        let trial_x = &x + &d;
        let (trial_f, trial_jac) = problem.residual_and_jacobian(trial_x.as_slice())?;
        let trial_norm = trial_f.norm();

        let reference = match cfg.window {
            WindowRule::AllIterates => {
                let chi = k.min(cfg.n0);
                residual_history[k - chi..=k]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            WindowRule::AcceptedOnly => accepted_window
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        };
        let tau = if predicted > 0.0 && trial_norm.is_finite() {
            (reference * reference - trial_norm * trial_norm) / predicted
        } else {
            0.0
        };
        let accepted = tau >= cfg.p0;

        steps.push(StepRecord {
            lambda: Some(lambda),
            tau: Some(tau),
            reference: Some(reference),
            accepted,
            trial_residual: trial_norm,
            directional_derivative: grad.dot(&d),
            step_norm: d.norm(),
        });

        if accepted {
            x = trial_x;
            f = trial_f;
            jac = trial_jac;
            norm = trial_norm;
            accepted_window.push_back(norm);
            if accepted_window.len() > cfg.n0 + 1 {
                accepted_window.pop_front();
            }
        }

        mu = if tau < cfg.p1 {
            4.0 * mu
        } else if tau <= cfg.p2 {
            mu
        } else {
            (mu / 4.0).max(cfg.mu_bar)
        };

        accepted_flags.push(accepted);
        residual_history.push(norm);
        mu_history.push(mu);
        if let Some(it) = iterates.as_mut() {
            it.push(x.as_slice().to_vec());
        }

        if !accepted && mu > cfg.mu_max {
            break Status::Stalled;
        }
    };

    Ok(SolverReport {
        status,
        iterations: accepted_flags.len(),
        final_x: x.as_slice().to_vec(),
        residual_history,
        accepted_flags,
        mu_history,
        steps,
        iterates,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Solves `(J^T J + lambda I) d = -g`. `None` if the matrix is not
/// numerically positive definite or the step is not finite.
fn damped_step(jac: &DMatrix<f64>, grad: &DVector<f64>, lambda: f64, n: usize) -> Option<DVector<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return None;
    }
    let mut normal = jac.tr_mul(jac);
    for i in 0..n {
        normal[(i, i)] += lambda;
    }
    let chol = normal.cholesky()?;
    let d = chol.solve(&(-grad));
    d.iter().all(|v| v.is_finite()).then_some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;

    fn linear_problem() -> GteProblem {
        let a = DenseTensor::new(2, 3, vec![4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        GteProblem::new(vec![a], vec![1.0, -2.0, 0.5]).unwrap()
    }

    #[test]
    fn linear_problem_converges_quickly() {
        let p = linear_problem();
        for x0 in [[0.0, 0.0, 0.0], [10.0, -3.0, 7.0], [1e3, 1e3, -1e3]] {
            let r = lm_solve(&p, &x0, &SolverConfig::default()).unwrap();
            assert_eq!(r.status, Status::Converged, "{r:?}");
            assert!(r.iterations <= 25, "{} iterations", r.iterations);
            assert!(r.final_residual() <= 1e-12);
            assert_eq!(r.residual_history.len(), r.iterations + 1);
            assert_eq!(r.mu_history.len(), r.iterations + 1);
        }
    }

    #[test]
    fn starting_at_solution_takes_zero_iterations() {
        let a = DenseTensor::unit(3, 2).unwrap();
        let p = GteProblem::new(vec![a], vec![4.0, 9.0]).unwrap();
        let r = lm_solve(&p, &[2.0, 3.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_x, vec![2.0, 3.0]);
    }

    #[test]
    fn stationary_non_solution_stalls() {
        // x^2 = -1 has no real root; x = 0 is a stationary point of |F|^2
        let a = DenseTensor::unit(3, 1).unwrap();
        let p = GteProblem::new(vec![a], vec![-1.0]).unwrap();
        let r = lm_solve(&p, &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Stalled);
        assert!(!r.converged());
    }

    #[test]
    fn unsolvable_problem_hits_iteration_cap_or_stalls() {
        let a = DenseTensor::unit(3, 1).unwrap();
        let p = GteProblem::new(vec![a], vec![-1.0]).unwrap();
        let r = lm_solve(&p, &[1.0], &SolverConfig::default().with_max_iter(50)).unwrap();
        assert!(matches!(r.status, Status::MaxIterations | Status::Stalled));
        assert!(r.mu_history.iter().all(|&m| m >= 1e-8));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = linear_problem();
        assert!(lm_solve(&p, &[0.0; 2], &SolverConfig::default()).is_err());
        let bad = SolverConfig {
            epsilon: 3.0,
            ..SolverConfig::default()
        };
        assert!(lm_solve(&p, &[0.0; 3], &bad).is_err());
    }

    #[test]
    fn gradient_rule_stops_on_gradient() {
        let p = linear_problem();
        let cfg = SolverConfig {
            stop_rule: StopRule::GradientNorm,
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let r = lm_solve(&p, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(r.status, Status::Converged);
        let x = &r.final_x;
        let (f, j) = p.residual_and_jacobian(x).unwrap();
        assert!(j.tr_mul(&f).norm() <= 1e-10);
    }

    #[test]
    fn accepted_only_window_also_converges() {
        let p = linear_problem();
        let cfg = SolverConfig {
            window: WindowRule::AcceptedOnly,
            ..SolverConfig::default()
        };
        let r = lm_solve(&p, &[5.0, 5.0, 5.0], &cfg).unwrap();
        assert!(r.converged());
    }
}

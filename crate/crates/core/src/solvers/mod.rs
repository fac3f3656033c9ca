//! Nonmonotone Levenberg-Marquardt and a plain Newton baseline.

mod lm;
mod newton;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lm::lm_solve;
pub use newton::{newton_solve, NEWTON_COND_LIMIT};
pub use trace::{read_trace_csv, write_trace_csv, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once `||F(x)|| <= tol`.
    ResidualNorm,
    /// Stop once `||F'(x)^T F(x)|| <= tol`.
    GradientNorm,
}

/// Which past residuals feed the nonmonotone reference value `F_l(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowRule {
    /// The last `min(k, N0) + 1` iterates, rejected-step repeats included.
    AllIterates,
    /// The last `N0 + 1` distinct accepted iterates.
    AcceptedOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mu0: f64,
    pub mu_bar: f64,
    /// Exponent on `||F||` in the damping parameter, within `[1, 2]`.
    pub epsilon: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub n0: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    pub window: WindowRule,
    /// `mu` above this after a rejected step ends the run as `Stalled`.
    pub mu_max: f64,
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            mu_bar: 1e-8,
            epsilon: 2.0,
            p0: 1e-4,
            p1: 0.25,
            p2: 0.75,
            n0: 5,
            tol: 1e-12,
            max_iter: 1000,
            stop_rule: StopRule::ResidualNorm,
            window: WindowRule::AllIterates,
            mu_max: 1e40,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    /// Defaults with `epsilon = 2` for M-tensor problems and `1` otherwise.
    pub fn for_m_tensor(m_tensor: bool) -> Self {
        Self {
            epsilon: if m_tensor { 2.0 } else { 1.0 },
            ..Self::default()
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.mu_bar > 0.0 && self.mu_bar.is_finite()) {
            return bad(format!("mu_bar must be positive, got {}", self.mu_bar));
        }
        if !(self.mu0 > self.mu_bar && self.mu0.is_finite()) {
            return bad(format!("mu0 ({}) must exceed mu_bar ({})", self.mu0, self.mu_bar));
        }
        if !(1.0..=2.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [1, 2], got {}", self.epsilon));
        }
        if !(0.0 < self.p0 && self.p0 <= self.p1 && self.p1 <= self.p2 && self.p2 < 1.0) {
            return bad(format!(
                "need 0 < p0 <= p1 <= p2 < 1, got {}, {}, {}",
                self.p0, self.p1, self.p2
            ));
        }
        if self.n0 == 0 {
            return bad("N0 must be a positive integer".into());
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be a finite non-negative number, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.mu_max > self.mu0) {
            return bad(format!("mu_max ({}) must exceed mu0 ({})", self.mu_max, self.mu0));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIterations,
    Stalled,
    LinearSolveFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max-iterations",
            Status::Stalled => "stalled",
            Status::LinearSolveFailure => "linear-solve-failure",
        }
    }
}

/// What happened during iteration `k` (the step from `x_k`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Damping parameter; `None` for undamped Newton.
    pub lambda: Option<f64>,
    /// Nonmonotone gain ratio; `None` for Newton.
    pub tau: Option<f64>,
    /// `F_l(k)`, the max residual over the reference window.
    pub reference: Option<f64>,
    pub accepted: bool,
    /// `||F(x_k + d_k)||`.
    pub trial_residual: f64,
    /// `(F'(x_k)^T F(x_k))^T d_k`.
    pub directional_derivative: f64,
    pub step_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: Status,
    pub iterations: usize,
    pub final_x: Vec<f64>,
    /// `||F(x_k)||` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub accepted_flags: Vec<bool>,
    /// `mu_k` for `k = 0..=iterations` (empty for Newton).
    pub mu_history: Vec<f64>,
    pub steps: Vec<StepRecord>,
    /// Every iterate `x_0..=x_iterations`, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
    /// Seconds.
    pub wall_time: f64,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds x_0")
    }

    /// Residuals at `x_0` and after each accepted step.
    pub fn accepted_residuals(&self) -> Vec<f64> {
        std::iter::once(self.residual_history[0])
            .chain(
                self.accepted_flags
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a)
                    .map(|(k, _)| self.residual_history[k + 1]),
            )
            .collect()
    }

    /// Log-log slope `(ln r_c - ln r_b) / (ln r_b - ln r_a)` over the last
    /// three accepted residuals `r_a, r_b, r_c`; about 2 for a quadratic rate.
    pub fn local_rate_slope(&self) -> Option<f64> {
        slope_of_last_three(&self.accepted_residuals())
    }

    /// As [`local_rate_slope`](Self::local_rate_slope), over the accepted
    /// residuals strictly above `floor` (the rounding level of the residual
    /// evaluation, below which values carry no information about the rate).
    pub fn local_rate_slope_above(&self, floor: f64) -> Option<f64> {
        let acc: Vec<f64> = self.accepted_residuals().into_iter().filter(|&r| r > floor).collect();
        slope_of_last_three(&acc)
    }
}

fn slope_of_last_three(acc: &[f64]) -> Option<f64> {
    if acc.len() < 3 {
        return None;
    }
    let [a, b, c] = [acc[acc.len() - 3], acc[acc.len() - 2], acc[acc.len() - 1]];
    if !(a > 0.0 && b > 0.0 && c > 0.0) || a == b {
        return None;
    }
    Some((c.ln() - b.ln()) / (b.ln() - a.ln()))
}

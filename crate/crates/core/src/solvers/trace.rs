use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SolverReport;
use crate::error::{Error, Result};

/// One row of the per-iteration trace. Row `k` describes `x_k`; the step
/// columns are empty on the final row and for undamped Newton.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub accepted: Option<bool>,
}

pub fn trace_rows(report: &SolverReport) -> Vec<TraceRow> {
    (0..=report.iterations)
        .map(|k| {
            let step = report.steps.get(k);
            TraceRow {
                iter: k,
                residual: report.residual_history[k],
                lambda: step.and_then(|s| s.lambda),
                mu: report.mu_history.get(k).copied(),
                tau: step.and_then(|s| s.tau),
                accepted: step.map(|s| s.accepted),
            }
        })
        .collect()
}

/// Columns: `iter,residual,lambda,mu,tau,accepted`; `iterations + 1` rows.
pub fn write_trace_csv<W: Write>(report: &SolverReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace_rows(report) {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::GteProblem;
    use crate::solvers::{lm_solve, SolverConfig};
    use crate::tensor::DenseTensor;

    #[test]
    fn trace_has_one_row_per_iterate_and_reloads() {
        let a = DenseTensor::unit(3, 2).unwrap();
        let p = GteProblem::new(vec![a], vec![4.0, 9.0]).unwrap();
        let r = lm_solve(&p, &[1.0, 1.0], &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,residual,lambda,mu,tau,accepted\n"));
        let rows = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), r.iterations + 1);
        assert_eq!(rows, trace_rows(&r));
        assert!(rows.last().unwrap().tau.is_none());
    }
}

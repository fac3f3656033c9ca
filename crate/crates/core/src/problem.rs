//! The generalized tensor equation `A_1 x^{m-1} + A_2 x^{m-2} + ... + A_{m-1} x = b`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Coefficient tensors of strictly decreasing order plus a right-hand side.
///
/// Orders need not be contiguous: a plain tensor equation `A x^{m-1} = b` is a
/// single coefficient of order `m`, and any absent order is an implicit zero
/// tensor. Coefficients are semi-symmetrized on construction, which is what
/// makes the closed-form Jacobian valid.
#[derive(Clone, Debug, PartialEq)]
pub struct GteProblem {
    coeffs: Vec<DenseTensor>,
    rhs: Vec<f64>,
}

impl GteProblem {
    pub fn new(coeffs: Vec<DenseTensor>, rhs: Vec<f64>) -> Result<Self> {
        validate(&coeffs, &rhs)?;
        let coeffs = coeffs.iter().map(DenseTensor::semi_symmetrize).collect();
        Ok(Self { coeffs, rhs })
    }

    /// Skips semi-symmetrization; callers guarantee the coefficients already are.
    fn from_semi_symmetric(coeffs: Vec<DenseTensor>, rhs: Vec<f64>) -> Result<Self> {
        validate(&coeffs, &rhs)?;
        debug_assert!(coeffs.iter().all(DenseTensor::is_semi_symmetric));
        Ok(Self { coeffs, rhs })
    }

    pub fn coeffs(&self) -> &[DenseTensor] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn leading_order(&self) -> usize {
        self.coeffs[0].order()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.coeffs.iter().map(DenseTensor::order).collect()
    }

    /// Same coefficients, new right-hand side.
    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        Self::from_semi_symmetric(self.coeffs.clone(), rhs)
    }

    /// `sum_k A_k x^{m_k - 1}` without the right-hand side.
    pub fn image(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim(), x.len())?;
        let mut acc = vec![0.0; self.dim()];
        for a in &self.coeffs {
            for (s, v) in acc.iter_mut().zip(a.contract_to_vector(x)?) {
                *s += v;
            }
        }
        Ok(acc)
    }

    /// `F(x) = sum_k A_k x^{m_k - 1} - b`.
    pub fn residual(&self, x: &[f64]) -> Result<DVector<f64>> {
        let image = self.image(x)?;
        Ok(DVector::from_iterator(
            self.dim(),
            image.iter().zip(&self.rhs).map(|(a, b)| a - b),
        ))
    }

    pub fn residual_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.residual(x)?.norm())
    }

    /// `F'(x) = sum_k (m_k - 1) A_k x^{m_k - 2}`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.residual_and_jacobian(x)?.1)
    }

    /// Residual and Jacobian from one pass: each `A_k x^{m_k - 2}` is formed
    /// once and reused for `A_k x^{m_k - 1} = (A_k x^{m_k - 2}) x`.
    pub fn residual_and_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Error::check_dim(self.dim(), x.len())?;
        let n = self.dim();
        let xv = DVector::from_column_slice(x);
        let mut f = -DVector::from_column_slice(&self.rhs);
        let mut jac = DMatrix::zeros(n, n);
        for a in &self.coeffs {
            let m = a.contract_to_matrix(x)?;
            f += &m * &xv;
            jac += m * (a.order() - 1) as f64;
        }
        Ok((f, jac))
    }

    /// A-priori bound on the rounding error of `||F(x)||` as evaluated here:
    /// `gamma_N || sum_k |A_k| |x|^{m_k - 1} + |b| ||` with `N` the longest
    /// chain of floating-point operations behind one component. Residuals
    /// below this are indistinguishable from zero.
    pub fn residual_error_bound(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim(), x.len())?;
        let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let mut acc: Vec<f64> = self.rhs.iter().map(|v| v.abs()).collect();
        let mut ops = 1usize;
        for a in &self.coeffs {
            let abs = DenseTensor::new(a.order(), a.dim(), a.entries().iter().map(|v| v.abs()).collect())?;
            for (s, v) in acc.iter_mut().zip(abs.contract_to_vector(&ax)?) {
                *s += v;
            }
            ops += a.len() / a.dim() + a.order();
        }
        let u = f64::EPSILON / 2.0;
        let gamma = ops as f64 * u / (1.0 - ops as f64 * u);
        Ok(gamma * acc.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Largest absolute entry over every coefficient and the right-hand side.
    pub fn max_abs_entry(&self) -> f64 {
        self.coeffs
            .iter()
            .fold(crate::tensor::max_abs_entry(&self.coeffs[0], &self.rhs), |m, a| {
                m.max(a.max_abs())
            })
    }

    /// Divides every coefficient and `b` by the single scalar `omega`
    /// (the largest absolute entry). The solution set is unchanged.
    pub fn scale(&self) -> Result<(Self, f64)> {
        let omega = self.max_abs_entry();
        if omega == 0.0 {
            return Err(Error::Degenerate(
                "every coefficient entry and right-hand side component is zero".into(),
            ));
        }
        let inv = |v: f64| v / omega;
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| {
                DenseTensor::new(a.order(), a.dim(), a.entries().iter().map(|&v| inv(v)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let rhs = self.rhs.iter().map(|&v| inv(v)).collect();
        Ok((Self::from_semi_symmetric(coeffs, rhs)?, omega))
    }
}

fn validate(coeffs: &[DenseTensor], rhs: &[f64]) -> Result<()> {
    let first = coeffs
        .first()
        .ok_or_else(|| Error::InvalidProblem("at least one coefficient tensor is required".into()))?;
    let n = first.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if let Some(pos) = rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem(format!("rhs component {pos} is not finite")));
    }
    for (k, pair) in coeffs.windows(2).enumerate() {
        if pair[1].dim() != n {
            return Err(Error::InvalidProblem(format!(
                "coefficient {} has dimension {}, expected {n}",
                k + 1,
                pair[1].dim()
            )));
        }
        if pair[1].order() >= pair[0].order() {
            return Err(Error::InvalidProblem(format!(
                "coefficient orders must strictly decrease, got {} then {}",
                pair[0].order(),
                pair[1].order()
            )));
        }
    }
    Ok(())
}

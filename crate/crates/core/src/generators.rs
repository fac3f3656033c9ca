//! Seeded random problem instances.
//!
//! Every generator is a pure function of its arguments. Randomness comes from
//! `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.9) and uniform reals are
//! rand 0.9's standard `f64` draw: 53 random bits scaled into `[0, 1)`.
//! Draw order is fixed: coefficient tensors in list order, each in
//! lexicographic entry order, then `x*` (planted kinds) or `b`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::GteProblem;
use crate::tensor::DenseTensor;

pub const DEFAULT_SIGMA: f64 = 0.1;
pub const GENERAL_RANGE: (f64, f64) = (-5.0, 5.0);

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    /// `s I - B` coefficients, positive uniform `b`.
    MTensor,
    /// Uniform coefficients on the entry range with a planted solution; the
    /// right-hand side protocol used for general-tensor equations.
    GeneralRandom,
    /// Uniform coefficients on the entry range, `b` planted from a uniform `x*`.
    PlantedGeneral,
}

impl GenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::MTensor => "m-tensor",
            GenKind::GeneralRandom => "general-random",
            GenKind::PlantedGeneral => "planted-general",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m-tensor" | "m" | "mtensor" => Ok(GenKind::MTensor),
            "general-random" | "general" => Ok(GenKind::GeneralRandom),
            "planted-general" | "planted" => Ok(GenKind::PlantedGeneral),
            other => Err(Error::InvalidConfig(format!(
                "unknown kind `{other}` (expected m-tensor, general-random or planted-general)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub orders: Vec<usize>,
    pub dim: usize,
    pub sigma: f64,
    pub entry_range: (f64, f64),
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GenKind, orders: Vec<usize>, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            orders,
            dim,
            sigma: DEFAULT_SIGMA,
            entry_range: GENERAL_RANGE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == GenKind::MTensor && !(self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        let (lo, hi) = self.entry_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("empty entry range ({lo}, {hi})")));
        }
        check_orders(&self.orders)?;
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(())
    }
}

/// A generated, scaled problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub problem: GteProblem,
    /// The scaling factor the problem was divided by.
    pub omega: f64,
    /// The planted solution, for planted kinds.
    pub x_star: Option<Vec<f64>>,
}

fn check_orders(orders: &[usize]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidConfig("at least one order is required".into()));
    }
    if orders.iter().any(|&o| o < 2) || orders.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "orders must be strictly decreasing and at least 2, got {orders:?}"
        )));
    }
    Ok(())
}

fn uniform_vec<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

/// `s I - B` with `B` uniform on `[0, 1)` and `s = (1 + sigma) * max_i (row sum of B)_i`.
pub fn m_tensor<R: Rng>(order: usize, dim: usize, sigma: f64, rng: &mut R) -> Result<DenseTensor> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let len = DenseTensor::zeros(order, dim)?.len();
    let b = uniform_vec(rng, len, 0.0, 1.0);
    let row_len = len / dim;
    let max_row = b
        .chunks_exact(row_len)
        .map(|row| row.iter().sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let s = (1.0 + sigma) * max_row;
    let mut entries: Vec<f64> = b.iter().map(|v| -v).collect();
    let diag_stride = (0..order).fold(0, |acc, _| acc * dim + 1);
    for i in 0..dim {
        entries[i * diag_stride] += s;
    }
    DenseTensor::new(order, dim, entries)
}

pub fn gen_m_tensor(order: usize, dim: usize, sigma: f64, seed: u64) -> Result<DenseTensor> {
    m_tensor(order, dim, sigma, &mut rng_from_seed(seed))
}

fn uniform_tensor<R: Rng>(order: usize, dim: usize, range: (f64, f64), rng: &mut R) -> Result<DenseTensor> {
    let len = DenseTensor::zeros(order, dim)?.len();
    DenseTensor::new(order, dim, uniform_vec(rng, len, range.0, range.1))
}

fn m_instance(orders: &[usize], dim: usize, sigma: f64, seed: u64) -> Result<Instance> {
    check_orders(orders)?;
    let mut rng = rng_from_seed(seed);
    let coeffs = orders
        .iter()
        .map(|&o| m_tensor(o, dim, sigma, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let b = uniform_vec(&mut rng, dim, 0.0, 1.0);
    let (problem, omega) = GteProblem::new(coeffs, b)?.scale()?;
    Ok(Instance {
        problem,
        omega,
        x_star: None,
    })
}

/// Tensor equation `A x^{m-1} = b` with an M-tensor `A` and positive `b`, scaled.
pub fn gen_te_instance(order: usize, dim: usize, seed: u64) -> Result<Instance> {
    if order < 3 {
        return Err(Error::InvalidConfig(format!("tensor equation order must be at least 3, got {order}")));
    }
    m_instance(&[order], dim, DEFAULT_SIGMA, seed)
}

/// Uniform coefficients on `entry_range`, `x*` uniform on `[0, 1)` and
/// `b := sum_k A_k (x*)^{m_k - 1}` computed from the semi-symmetrized
/// coefficients. The returned problem is scaled.
pub fn gen_general_planted(
    orders: &[usize],
    dim: usize,
    entry_range: (f64, f64),
    seed: u64,
) -> Result<Instance> {
    check_orders(orders)?;
    let mut rng = rng_from_seed(seed);
    let coeffs = orders
        .iter()
        .map(|&o| uniform_tensor(o, dim, entry_range, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let x_star = uniform_vec(&mut rng, dim, 0.0, 1.0);
    let unplanted = GteProblem::new(coeffs, vec![0.0; dim])?;
    let b = unplanted.image(&x_star)?;
    let (problem, omega) = unplanted.with_rhs(b)?.scale()?;
    Ok(Instance {
        problem,
        omega,
        x_star: Some(x_star),
    })
}

/// Generalized equation with coefficient orders `orders` (typically `(4, 3, 2)`).
/// M-tensor kind: every coefficient an M-tensor and `b` uniform on `[0, 1)`.
/// General kind: uniform coefficients on `(-5, 5)` with a planted solution.
pub fn gen_gte_instance(orders: &[usize], dim: usize, kind: GenKind, seed: u64) -> Result<Instance> {
    match kind {
        GenKind::MTensor => m_instance(orders, dim, DEFAULT_SIGMA, seed),
        GenKind::GeneralRandom | GenKind::PlantedGeneral => {
            gen_general_planted(orders, dim, GENERAL_RANGE, seed)
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    match spec.kind {
        GenKind::MTensor => m_instance(&spec.orders, spec.dim, spec.sigma, spec.seed),
        GenKind::GeneralRandom | GenKind::PlantedGeneral => {
            gen_general_planted(&spec.orders, spec.dim, spec.entry_range, spec.seed)
        }
    }
}

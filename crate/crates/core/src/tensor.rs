//! Dense square tensors and their contractions with a vector.
//!
//! Entries are stored flat in lexicographic index order: the first index
//! varies slowest and the last index fastest, so the innermost loop of every
//! contraction walks contiguous memory.
//!
//! All contractions fold the trailing index against `x` one mode at a time.
//! Folding an order-`l` tensor once costs `n^l` multiply-adds and yields an
//! order-`l-1` tensor, so `A x^{l-1}` costs `O(n^l)` in total.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An order-`l`, dimension-`n` real tensor with `n^l` finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order < 2 {
        return Err(Error::InvalidTensor(format!("order must be at least 2, got {order}")));
    }
    if dim == 0 {
        return Err(Error::InvalidTensor("dimension must be positive".into()));
    }
    let exp = u32::try_from(order)
        .map_err(|_| Error::InvalidTensor(format!("order {order} too large")))?;
    dim.checked_pow(exp)
        .ok_or_else(|| Error::InvalidTensor(format!("{dim}^{order} entries overflow")))
}

impl DenseTensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if entries.len() != len {
            return Err(Error::InvalidTensor(format!(
                "order {order} dimension {dim} needs {len} entries, got {}",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor(format!(
                "entry {pos} is not finite ({})",
                entries[pos]
            )));
        }
        Ok(Self { order, dim, entries })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            entries: vec![0.0; len],
        })
    }

    /// The unit tensor: one where all indices coincide, zero elsewhere.
    pub fn unit(order: usize, dim: usize) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        let stride = diagonal_stride(order, dim);
        for i in 0..dim {
            t.entries[i * stride] = 1.0;
        }
        Ok(t)
    }

    /// Builds a tensor by evaluating `f` at every multi-index (0-based).
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(order, dim)?;
        let mut idx = vec![0usize; order];
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            entries.push(f(&idx));
            increment(&mut idx, dim);
        }
        Self::new(order, dim, entries)
    }

    /// Builds a tensor from `(multi-index, value)` pairs; unlisted entries are zero.
    /// Indices are 0-based. Repeated indices overwrite.
    pub fn from_sparse(order: usize, dim: usize, items: &[(&[usize], f64)]) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        for (idx, v) in items {
            let off = t.offset(idx)?;
            t.entries[off] = *v;
        }
        Self::new(order, dim, t.entries)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: idx.len(),
            });
        }
        let mut off = 0;
        for &i in idx {
            if i >= self.dim {
                return Err(Error::InvalidTensor(format!(
                    "index {i} out of range for dimension {}",
                    self.dim
                )));
            }
            off = off * self.dim + i;
        }
        Ok(off)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.entries[self.offset(idx)?])
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.order,
            self.dim,
            self.entries.iter().map(|v| v * factor).collect(),
        )
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        Error::check_dim(self.dim, other.dim)?;
        Self::new(
            self.order,
            self.dim,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Largest absolute entry; zero for an all-zero tensor.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Contracts the trailing `count` modes against `x`, returning the flat
    /// entries of the resulting order-`(l - count)` tensor.
    fn fold_trailing(&self, x: &[f64], count: usize) -> Result<Vec<f64>> {
        Error::check_dim(self.dim, x.len())?;
        debug_assert!(count < self.order);
        if count == 0 {
            return Ok(self.entries.clone());
        }
        let n = self.dim;
        let mut buf = fold_once(&self.entries, x, n);
        for _ in 1..count {
            buf = fold_once(&buf, x, n);
        }
        Ok(buf)
    }

    /// `A x^{l-1}`: the vector with `(A x^{l-1})_i = sum a_{i i2..il} x_{i2}..x_{il}`.
    pub fn contract_to_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.fold_trailing(x, self.order - 1)
    }

    /// `A x^{l-2}`: the `n x n` matrix obtained by folding all but the first
    /// two modes. For order 2 this is the tensor itself.
    pub fn contract_to_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let flat = self.fold_trailing(x, self.order - 2)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &flat))
    }

    /// `A x^l = x^T (A x^{l-1})`.
    pub fn contract_to_scalar(&self, x: &[f64]) -> Result<f64> {
        let v = self.contract_to_vector(x)?;
        Ok(v.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// Averages every entry over all permutations of its trailing `l-1`
    /// indices, leaving the first index fixed.
    ///
    /// The result has the same `A x^{l-1}` for every `x` and each slice
    /// `A_i` is symmetric. Orbits whose entries are already bitwise equal
    /// keep their value untouched, so the operation is exactly idempotent.
    pub fn semi_symmetrize(&self) -> Self {
        if self.order == 2 {
            return self.clone();
        }
        let n = self.dim;
        let tail_len = self.entries.len() / n;
        let canon = canonical_tails(self.order - 1, n);
        let mut counts = vec![0u32; tail_len];
        for &c in &canon {
            counts[c] += 1;
        }

        let mut out = vec![0.0; self.entries.len()];
        let mut sums = vec![0.0f64; tail_len];
        let mut first = vec![0.0f64; tail_len];
        let mut uniform = vec![true; tail_len];
        let mut seen = vec![false; tail_len];
        for (slice_in, slice_out) in self
            .entries
            .chunks_exact(tail_len)
            .zip(out.chunks_exact_mut(tail_len))
        {
            sums.fill(0.0);
            uniform.fill(true);
            seen.fill(false);
            for (&c, &v) in canon.iter().zip(slice_in) {
                sums[c] += v;
                if !seen[c] {
                    seen[c] = true;
                    first[c] = v;
                } else if v.to_bits() != first[c].to_bits() {
                    uniform[c] = false;
                }
            }
            for (o, &c) in slice_out.iter_mut().zip(&canon) {
                *o = if uniform[c] {
                    first[c]
                } else {
                    sums[c] / f64::from(counts[c])
                };
            }
        }
        Self {
            order: self.order,
            dim: n,
            entries: out,
        }
    }

    /// True if every slice `A_i` is symmetric (bitwise).
    pub fn is_semi_symmetric(&self) -> bool {
        if self.order == 2 {
            return true;
        }
        let n = self.dim;
        let tail_len = self.entries.len() / n;
        let canon = canonical_tails(self.order - 1, n);
        self.entries.chunks_exact(tail_len).all(|slice| {
            canon
                .iter()
                .enumerate()
                .all(|(t, &c)| slice[t].to_bits() == slice[c].to_bits())
        })
    }
}

/// `omega = max(max |a|, max |b|)`.
pub fn max_abs_entry(tensor: &DenseTensor, b: &[f64]) -> f64 {
    b.iter().fold(tensor.max_abs(), |m, v| m.max(v.abs()))
}

fn fold_once(buf: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    buf.chunks_exact(n)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn diagonal_stride(order: usize, dim: usize) -> usize {
    // offset of (i, i, ..., i) is i * (1 + n + ... + n^{l-1})
    (0..order).fold(0, |acc, _| acc * dim + 1)
}

fn increment(idx: &mut [usize], dim: usize) {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < dim {
            return;
        }
        *d = 0;
    }
}

/// For every multi-index of length `len` over `0..n` (in flat order),
/// the flat offset of its sorted rearrangement.
fn canonical_tails(len: usize, n: usize) -> Vec<usize> {
    let total = n.pow(len as u32);
    let mut idx = vec![0usize; len];
    let mut sorted = vec![0usize; len];
    let mut canon = Vec::with_capacity(total);
    for _ in 0..total {
        sorted.copy_from_slice(&idx);
        sorted.sort_unstable();
        canon.push(sorted.iter().fold(0, |acc, &i| acc * n + i));
        increment(&mut idx, n);
    }
    canon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        assert!(DenseTensor::new(3, 2, vec![0.0; 7]).is_err());
        let mut e = vec![0.0; 8];
        e[3] = f64::NAN;
        assert!(DenseTensor::new(3, 2, e).is_err());
        assert!(DenseTensor::new(3, 2, vec![f64::INFINITY; 8]).is_err());
        assert!(DenseTensor::new(1, 2, vec![0.0; 2]).is_err());
        assert!(DenseTensor::new(2, 0, vec![]).is_err());
    }

    #[test]
    fn unit_tensor_structure() {
        let i2 = DenseTensor::unit(2, 3).unwrap();
        assert_eq!(
            i2.entries(),
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
        );
        for (order, dim) in [(3, 4), (4, 3), (5, 2)] {
            let u = DenseTensor::unit(order, dim).unwrap();
            assert_eq!(u.entries().iter().filter(|v| **v != 0.0).count(), dim);
            for i in 0..dim {
                assert_eq!(u.get(&vec![i; order]).unwrap(), 1.0);
            }
        }
        let i3 = DenseTensor::unit(3, 2).unwrap();
        assert_eq!(i3.contract_to_vector(&[2.0, 3.0]).unwrap(), vec![4.0, 9.0]);
        assert_eq!(i3.contract_to_vector(&[-1.5, 0.5]).unwrap(), vec![2.25, 0.25]);
    }

    #[test]
    fn unit_contract_to_matrix_is_diag() {
        let i3 = DenseTensor::unit(3, 2).unwrap();
        let m = i3.contract_to_matrix(&[2.0, 3.0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn order_two_reduces_to_matrix_vector() {
        let a = DenseTensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.contract_to_vector(&[1.0, -1.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(
            a.contract_to_matrix(&[5.0, 7.0]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = DenseTensor::unit(3, 3).unwrap();
        assert!(matches!(
            a.contract_to_vector(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(a.contract_to_matrix(&[1.0]).is_err());
        assert!(a.contract_to_scalar(&[1.0; 4]).is_err());
    }

    #[test]
    fn scalar_of_zero_vector_is_zero() {
        let a = DenseTensor::from_fn(4, 3, |idx| idx.iter().sum::<usize>() as f64 - 2.5).unwrap();
        assert_eq!(a.contract_to_scalar(&[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn semi_symmetrize_two_permutation_average() {
        let a = DenseTensor::from_sparse(3, 2, &[(&[0, 0, 1], 2.0)]).unwrap();
        let s = a.semi_symmetrize();
        assert_eq!(s.get(&[0, 0, 1]).unwrap(), 1.0);
        assert_eq!(s.get(&[0, 1, 0]).unwrap(), 1.0);
        assert_eq!(s.get(&[1, 0, 1]).unwrap(), 0.0);
        assert!(s.is_semi_symmetric());
        assert!(!a.is_semi_symmetric());
    }

    #[test]
    fn semi_symmetric_input_is_unchanged() {
        let a = DenseTensor::from_fn(4, 3, |idx| {
            let mut t = idx[1..].to_vec();
            t.sort();
            (idx[0] * 100 + t[0] * 10 + t[1] * 3 + t[2]) as f64 / 7.0
        })
        .unwrap();
        assert!(a.is_semi_symmetric());
        assert_eq!(a.semi_symmetrize(), a);
    }

    #[test]
    fn max_abs_entry_covers_rhs() {
        let z = DenseTensor::zeros(3, 2).unwrap();
        assert_eq!(max_abs_entry(&z, &[0.0, -3.0]), 3.0);
        let a = DenseTensor::from_sparse(2, 2, &[(&[1, 0], -4.0)]).unwrap();
        assert_eq!(max_abs_entry(&a, &[1.0, 2.0]), 4.0);
    }

    #[test]
    fn from_sparse_rejects_bad_index() {
        assert!(DenseTensor::from_sparse(3, 2, &[(&[0, 2, 0], 1.0)]).is_err());
        assert!(DenseTensor::from_sparse(3, 2, &[(&[0, 1], 1.0)]).is_err());
    }
}

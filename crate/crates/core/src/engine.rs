//! Bit-exact functional model of the compressed layer
//! `b_i = ReLU(sum over j in X_i ∩ Y of S[I_ij] * a_j)`.
//!
//! Every product is an exact Q(2f) value accumulated in an `i64`; the only
//! rounding happens once per output in [`FixedPointFormat::narrow`]. Integer
//! addition is associative, so the compressed walk, the dense oracle and the
//! cycle simulator agree bit for bit regardless of summation order.

use serde::{Deserialize, Serialize};

use crate::compress::{Codebook, DenseMatrix};
use crate::csc::{BlockedCsc, InterleavedCsc};
use crate::error::{Error, Result};
use crate::fixed::{mul_wide, FixedPointFormat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationVector {
    format: FixedPointFormat,
    values: Vec<i16>,
}

impl ActivationVector {
    pub fn new(format: FixedPointFormat, values: Vec<i16>) -> Self {
        ActivationVector { format, values }
    }

    pub fn zeros(format: FixedPointFormat, len: usize) -> Self {
        ActivationVector {
            format,
            values: vec![0; len],
        }
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn values(&self) -> &[i16] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&v| self.format.to_real(v))
            .collect()
    }

    /// `(j, a_j)` for every non-zero element, in index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, i16)> + '_ {
        self.values
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn density(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.nonzero_count() as f64 / self.values.len() as f64
        }
    }
}

/// Converts reals with round-to-nearest-even and saturation; also returns
/// how many elements saturated.
pub fn quantize_activations(
    x: &[f64],
    format: FixedPointFormat,
) -> Result<(ActivationVector, usize)> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite activation at index {pos}"
        )));
    }
    let mut saturated = 0;
    let values = x
        .iter()
        .map(|&v| {
            let (raw, sat) = format.quantize(v);
            saturated += sat as usize;
            raw
        })
        .collect();
    Ok((ActivationVector { format, values }, saturated))
}

/// Final write-back of one accumulator: optional ReLU, then narrowing.
#[inline]
pub fn write_back(acc: i64, relu: bool, format: FixedPointFormat) -> i16 {
    let acc = if relu { acc.max(0) } else { acc };
    format.narrow(acc)
}

fn check_operands(rows_cols: (usize, usize), cb: &Codebook, a: &ActivationVector) -> Result<()> {
    if a.len() != rows_cols.1 {
        return Err(Error::shape(format!(
            "matrix has {} columns, activation vector has {} elements",
            rows_cols.1,
            a.len()
        )));
    }
    if cb.format() != a.format() {
        return Err(Error::shape(format!(
            "codebook uses Q.{} but activations use Q.{}",
            cb.format().fraction_bits(),
            a.format().fraction_bits()
        )));
    }
    Ok(())
}

/// Pre-narrowing Q(2f) accumulators of the compressed product.
pub fn accumulate(e: &BlockedCsc, cb: &Codebook, a: &ActivationVector) -> Result<Vec<i64>> {
    check_operands((e.rows(), e.cols()), cb, a)?;
    let n_pe = e.n_pe();
    let mut acc = vec![0i64; e.rows()];
    for (j, aj) in a.nonzeros() {
        let (b, col) = e.locate(j);
        for (pe, slice) in e.blocks()[b].slices().iter().enumerate() {
            let mut local = 0usize;
            for entry in slice.column(col) {
                local += entry.z() as usize;
                acc[local * n_pe + pe] += mul_wide(cb.raw(entry.v()), aj);
                local += 1;
            }
        }
    }
    Ok(acc)
}

pub fn spmv_blocked(
    e: &BlockedCsc,
    cb: &Codebook,
    a: &ActivationVector,
    relu: bool,
) -> Result<ActivationVector> {
    let acc = accumulate(e, cb, a)?;
    let format = a.format();
    Ok(ActivationVector {
        format,
        values: acc
            .into_iter()
            .map(|s| write_back(s, relu, format))
            .collect(),
    })
}

/// Compressed sparse-matrix × sparse-vector product; zero activations skip
/// their column entirely.
pub fn spmv_compressed(
    e: &InterleavedCsc,
    cb: &Codebook,
    a: &ActivationVector,
    relu: bool,
) -> Result<ActivationVector> {
    spmv_blocked(&BlockedCsc::from(e.clone()), cb, a, relu)
}

/// Dense reference over every `(i, j)`. `w` must hold values on the
/// format's grid, as produced by dequantizing.
pub fn spmv_dense_oracle(
    w: &DenseMatrix,
    a: &ActivationVector,
    relu: bool,
    format: FixedPointFormat,
) -> Result<ActivationVector> {
    if a.format() != format {
        return Err(Error::shape("activation format differs from oracle format"));
    }
    if a.len() != w.cols() {
        return Err(Error::shape(format!(
            "matrix has {} columns, activation vector has {} elements",
            w.cols(),
            a.len()
        )));
    }
    let raw: Vec<i16> = w
        .values()
        .iter()
        .map(|&v| {
            format.exact_raw(v).ok_or_else(|| {
                Error::invalid(format!(
                    "weight {v} is not representable in Q.{}",
                    format.fraction_bits()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(w.rows());
    for i in 0..w.rows() {
        let row = &raw[i * w.cols()..(i + 1) * w.cols()];
        let mut acc = 0i64;
        for (&wij, &aj) in row.iter().zip(a.values()) {
            acc = acc
                .checked_add(mul_wide(wij, aj))
                .ok_or(Error::Overflow { row: i })?;
        }
        out.push(write_back(acc, relu, format));
    }
    Ok(ActivationVector {
        format,
        values: out,
    })
}

/// Multiply-accumulates the compressed walk performs: stored entries
/// (padding included) of every column whose activation is non-zero.
pub fn mac_count(e: &BlockedCsc, a: &ActivationVector) -> usize {
    a.nonzeros().map(|(j, _)| e.column_work(j)).sum()
}

/// One encoded layer and its shared weights.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: BlockedCsc,
    pub codebook: Codebook,
}

/// Feeds `a0` through `layers`, with ReLU between layers and optionally
/// after the last one.
pub fn run_network(
    layers: &[Layer],
    a0: &ActivationVector,
    final_relu: bool,
) -> Result<ActivationVector> {
    if layers.is_empty() {
        return Err(Error::invalid("network has no layers"));
    }
    for (k, pair) in layers.windows(2).enumerate() {
        if pair[0].weights.rows() != pair[1].weights.cols() {
            return Err(Error::shape(format!(
                "layer {k} produces {} outputs but layer {} expects {} inputs",
                pair[0].weights.rows(),
                k + 1,
                pair[1].weights.cols()
            )));
        }
    }
    let last = layers.len() - 1;
    let mut a = a0.clone();
    for (k, layer) in layers.iter().enumerate() {
        let relu = k < last || final_relu;
        a = spmv_blocked(&layer.weights, &layer.codebook, &a, relu)?;
    }
    Ok(a)
}

//! Pruning and weight sharing: dense weights in, codebook-indexed sparse
//! weights out.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;

/// Number of shared weight values addressable by a 4-bit index.
pub const CODEBOOK_SIZE: usize = 16;

/// Codebook slot pinned to exact zero. Padding entries point here and kept
/// weights never do.
pub const ZERO_SLOT: u8 = 0;

const KMEANS_MAX_ITERS: usize = 50;

/// Row-major dense real matrix, `rows` outputs by `cols` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        DenseMatrix::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }
}

/// Which weights survive pruning. Row-major like [`DenseMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityMask {
    rows: usize,
    cols: usize,
    kept: Vec<bool>,
}

impl SparsityMask {
    pub fn new(rows: usize, cols: usize, kept: Vec<bool>) -> Result<Self> {
        if kept.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} mask needs {} flags, got {}",
                rows * cols,
                kept.len()
            )));
        }
        Ok(SparsityMask { rows, cols, kept })
    }

    pub fn all(rows: usize, cols: usize) -> Self {
        SparsityMask {
            rows,
            cols,
            kept: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        self.kept[row * self.cols + col]
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn density(&self) -> f64 {
        if self.kept.is_empty() {
            return 0.0;
        }
        self.kept_count() as f64 / self.kept.len() as f64
    }

    fn check_shape(&self, w: &DenseMatrix) -> Result<()> {
        if self.rows != w.rows || self.cols != w.cols {
            return Err(Error::shape(format!(
                "mask is {}x{}, matrix is {}x{}",
                self.rows, self.cols, w.rows, w.cols
            )));
        }
        Ok(())
    }
}

/// Sixteen shared fixed-point weights. Slot [`ZERO_SLOT`] is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    format: FixedPointFormat,
    entries: [i16; CODEBOOK_SIZE],
}

impl Codebook {
    pub fn new(format: FixedPointFormat, entries: [i16; CODEBOOK_SIZE]) -> Result<Self> {
        if entries[ZERO_SLOT as usize] != 0 {
            return Err(Error::invalid(format!(
                "codebook slot {ZERO_SLOT} is reserved for padding and must be zero, got {}",
                entries[ZERO_SLOT as usize]
            )));
        }
        Ok(Codebook { format, entries })
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn entries(&self) -> &[i16; CODEBOOK_SIZE] {
        &self.entries
    }

    #[inline]
    pub fn raw(&self, index: u8) -> i16 {
        self.entries[index as usize]
    }

    pub fn real(&self, index: u8) -> f64 {
        self.format.to_real(self.raw(index))
    }

    /// Nearest non-zero slot to `w`; ties go to the lower index.
    pub fn nearest(&self, w: f64) -> u8 {
        let mut best = 1u8;
        let mut best_dist = (w - self.real(1)).abs();
        for idx in 2..CODEBOOK_SIZE as u8 {
            let d = (w - self.real(idx)).abs();
            if d < best_dist {
                best = idx;
                best_dist = d;
            }
        }
        best
    }
}

/// Pruned, codebook-quantized weight matrix stored column by column.
///
/// Column `j` owns `row_idx[col_ptr[j]..col_ptr[j+1]]` (strictly increasing)
/// and the matching codebook indices, each in `1..16`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedSparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    index: Vec<u8>,
    codebook: Codebook,
}

impl QuantizedSparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<u32>,
        index: Vec<u8>,
        codebook: Codebook,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if rows > u32::MAX as usize {
            return Err(Error::shape(format!(
                "{rows} rows exceed 32-bit row indices"
            )));
        }
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 {
            return Err(Error::invalid(
                "column pointers must have cols+1 entries starting at 0",
            ));
        }
        if row_idx.len() != index.len() || *col_ptr.last().unwrap() != row_idx.len() {
            return Err(Error::invalid("column pointers disagree with entry arrays"));
        }
        for j in 0..cols {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if lo > hi {
                return Err(Error::invalid(format!(
                    "column pointers decrease at column {j}"
                )));
            }
            let rows_j = &row_idx[lo..hi];
            if rows_j.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "rows of column {j} are not strictly increasing"
                )));
            }
            if rows_j.last().is_some_and(|&r| r as usize >= rows) {
                return Err(Error::invalid(format!(
                    "row index out of range in column {j}"
                )));
            }
        }
        if let Some(pos) = index
            .iter()
            .position(|&v| v == ZERO_SLOT || v as usize >= CODEBOOK_SIZE)
        {
            return Err(Error::invalid(format!(
                "entry {pos} has codebook index {}, kept weights must use slots 1..15",
                index[pos]
            )));
        }
        Ok(QuantizedSparseMatrix {
            rows,
            cols,
            col_ptr,
            row_idx,
            index,
            codebook,
        })
    }

    /// Builds from per-column `(row, index)` lists, rows ascending.
    pub fn from_columns(
        rows: usize,
        codebook: Codebook,
        columns: &[Vec<(u32, u8)>],
    ) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let nnz = columns.iter().map(Vec::len).sum();
        let mut row_idx = Vec::with_capacity(nnz);
        let mut index = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for col in columns {
            for &(r, v) in col {
                row_idx.push(r);
                index.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        QuantizedSparseMatrix::new(rows, columns.len(), col_ptr, row_idx, index, codebook)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.rows * self.cols) as f64
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn column_len(&self, col: usize) -> usize {
        self.col_ptr[col + 1] - self.col_ptr[col]
    }

    /// `(row, codebook index)` pairs of one column, rows ascending.
    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, u8)> + '_ {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .iter()
            .zip(&self.index[range])
            .map(|(&r, &v)| (r as usize, v))
    }

    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        let rows = &self.row_idx[range.clone()];
        rows.binary_search(&(row as u32))
            .ok()
            .map(|k| self.index[range.start + k])
    }

    pub fn mask(&self) -> SparsityMask {
        let mut kept = vec![false; self.rows * self.cols];
        for j in 0..self.cols {
            for (i, _) in self.column(j) {
                kept[i * self.cols + j] = true;
            }
        }
        SparsityMask {
            rows: self.rows,
            cols: self.cols,
            kept,
        }
    }
}

/// Keeps the `round(density * rows * cols)` largest-magnitude weights
/// (at least one). Equal magnitudes are resolved in favour of the lower
/// row-major position.
pub fn prune_magnitude(w: &DenseMatrix, target_density: f64) -> Result<SparsityMask> {
    if !(target_density > 0.0 && target_density <= 1.0) {
        return Err(Error::invalid(format!(
            "target density must be in (0, 1], got {target_density}"
        )));
    }
    if let Some(pos) = w.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite weight at ({}, {})",
            pos / w.cols,
            pos % w.cols
        )));
    }
    let n = w.values.len();
    if n > u32::MAX as usize {
        return Err(Error::shape("matrix too large to prune"));
    }
    let keep = ((target_density * n as f64).round() as usize).clamp(1, n);
    if keep == n {
        return Ok(SparsityMask::all(w.rows, w.cols));
    }

    // Strict total order: larger magnitude first, then lower position.
    let order = |a: &u32, b: &u32| -> Ordering {
        let (ma, mb) = (w.values[*a as usize].abs(), w.values[*b as usize].abs());
        mb.total_cmp(&ma).then(a.cmp(b))
    };
    let mut idx: Vec<u32> = (0..n as u32).collect();
    idx.select_nth_unstable_by(keep - 1, order);

    let mut kept = vec![false; n];
    for &i in &idx[..keep] {
        kept[i as usize] = true;
    }
    Ok(SparsityMask {
        rows: w.rows,
        cols: w.cols,
        kept,
    })
}

/// Deterministic 1-D k-means over the kept weights, producing slots 1..15;
/// slot 0 stays zero.
///
/// Centers start linearly spaced over `[min, max]` of the kept weights. At
/// most 50 Lloyd iterations run; an empty cluster is re-seeded at the point
/// farthest from its current center.
pub fn build_codebook(
    w: &DenseMatrix,
    mask: &SparsityMask,
    format: FixedPointFormat,
) -> Result<Codebook> {
    mask.check_shape(w)?;
    let points: Vec<f64> = w
        .values
        .iter()
        .zip(&mask.kept)
        .filter_map(|(&v, &k)| k.then_some(v))
        .collect();
    if points.is_empty() {
        return Err(Error::invalid("cannot build a codebook from an empty mask"));
    }
    if let Some(v) = points.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite kept weight {v}")));
    }
    let centers = kmeans_1d(&points, CODEBOOK_SIZE - 1);

    let mut entries = [0i16; CODEBOOK_SIZE];
    for (slot, c) in entries[1..].iter_mut().zip(&centers) {
        *slot = format.quantize(*c).0;
    }
    Codebook::new(format, entries)
}

fn nearest_center(x: f64, centers: &[f64]) -> usize {
    let mut best = 0;
    let mut best_dist = (x - centers[0]).abs();
    for (k, &c) in centers.iter().enumerate().skip(1) {
        let d = (x - c).abs();
        if d < best_dist {
            best = k;
            best_dist = d;
        }
    }
    best
}

fn kmeans_1d(points: &[f64], k: usize) -> Vec<f64> {
    let (min, max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if min == max {
        // Single distinct value: one live slot, the rest zero.
        let mut centers = vec![0.0; k];
        centers[0] = min;
        return centers;
    }
    let mut centers: Vec<f64> = (0..k)
        .map(|i| min + (max - min) * i as f64 / (k - 1) as f64)
        .collect();
    let mut assign = vec![usize::MAX; points.len()];

    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (a, &x) in assign.iter_mut().zip(points) {
            let c = nearest_center(x, &centers);
            if *a != c {
                *a = c;
                changed = true;
            }
        }

        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (&a, &x) in assign.iter().zip(points) {
            sum[a] += x;
            count[a] += 1;
        }

        let mut reseeded = false;
        let mut dist: Vec<f64> = assign
            .iter()
            .zip(points)
            .map(|(&a, &x)| (x - centers[a]).abs())
            .collect();
        for c in 0..k {
            if count[c] > 0 {
                centers[c] = sum[c] / count[c] as f64;
                continue;
            }
            // First maximum wins, keeping re-seeding deterministic.
            let (far, far_dist) =
                dist.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    });
            if far_dist > 0.0 {
                centers[c] = points[far];
                dist[far] = 0.0;
                reseeded = true;
            }
        }

        if !changed && !reseeded {
            break;
        }
    }
    centers
}

/// Assigns each kept weight to its nearest non-zero codebook slot.
pub fn quantize(
    w: &DenseMatrix,
    mask: &SparsityMask,
    codebook: &Codebook,
) -> Result<QuantizedSparseMatrix> {
    mask.check_shape(w)?;
    let mut col_ptr = Vec::with_capacity(w.cols + 1);
    let mut row_idx = Vec::new();
    let mut index = Vec::new();
    col_ptr.push(0);
    for j in 0..w.cols {
        for i in 0..w.rows {
            if mask.is_kept(i, j) {
                row_idx.push(i as u32);
                index.push(codebook.nearest(w.get(i, j)));
            }
        }
        col_ptr.push(row_idx.len());
    }
    QuantizedSparseMatrix::new(w.rows, w.cols, col_ptr, row_idx, index, *codebook)
}

/// Dense real matrix holding `S[I_ij]` at kept positions and zero elsewhere.
pub fn dequantize(q: &QuantizedSparseMatrix) -> DenseMatrix {
    let mut values = vec![0.0; q.rows * q.cols];
    for j in 0..q.cols {
        for (i, v) in q.column(j) {
            values[i * q.cols + j] = q.codebook.real(v);
        }
    }
    DenseMatrix {
        rows: q.rows,
        cols: q.cols,
        values,
    }
}

//! Row-interleaved, relative-indexed CSC encoding.
//!
//! With `N` PEs, PE `k` owns global rows `i` with `i mod N == k`; its local
//! row is `i / N`. Each PE stores its part of every column as a run of
//! one-byte entries (low nibble: codebook index `v`, high nibble: count `z`
//! of local zero rows since the previous entry of the same column) plus a
//! pointer array `p` with `cols + 1` 16-bit offsets. A gap longer than 15
//! local rows is bridged with padding entries `(v = 0, z = 15)`.

use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::compress::{Codebook, QuantizedSparseMatrix, ZERO_SLOT};
use crate::error::{Error, Result};

/// Longest zero run a 4-bit count can express.
pub const MAX_ZERO_RUN: usize = 15;

/// Largest entry count addressable by a 16-bit pointer.
pub const POINTER_LIMIT: usize = u16::MAX as usize;

/// One stored `(v, z)` pair packed in a byte, `v` in the low nibble.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Entry(u8);

impl Entry {
    pub fn new(v: u8, z: u8) -> Self {
        debug_assert!(v < 16 && z < 16);
        Entry((z << 4) | (v & 0x0f))
    }

    pub fn from_byte(b: u8) -> Self {
        Entry(b)
    }

    #[inline]
    pub fn v(self) -> u8 {
        self.0 & 0x0f
    }

    #[inline]
    pub fn z(self) -> u8 {
        self.0 >> 4
    }

    pub fn byte(self) -> u8 {
        self.0
    }

    pub fn is_padding(self) -> bool {
        self.v() == ZERO_SLOT
    }
}

impl fmt::Debug for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(v={}, z={})", self.v(), self.z())
    }
}

/// One PE's share of the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeSlice {
    ptr: Vec<u16>,
    entries: Vec<Entry>,
}

impl PeSlice {
    /// Unchecked constructor; run [`validate`] on the enclosing matrix.
    pub fn from_parts(ptr: Vec<u16>, entries: Vec<Entry>) -> Self {
        PeSlice { ptr, entries }
    }

    pub fn ptr(&self) -> &[u16] {
        &self.ptr
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn v(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.v()).collect()
    }

    pub fn z(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.z()).collect()
    }

    /// Entry range `p[j]..p[j+1]` of column `j`.
    pub fn column_range(&self, col: usize) -> Range<usize> {
        self.ptr[col] as usize..self.ptr[col + 1] as usize
    }

    pub fn column(&self, col: usize) -> &[Entry] {
        &self.entries[self.column_range(col)]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn padding_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_padding()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterleavedCsc {
    rows: usize,
    cols: usize,
    n_pe: usize,
    slices: Vec<PeSlice>,
}

/// Number of global rows owned by `pe` out of `rows` interleaved over `n_pe`.
pub fn local_rows(rows: usize, n_pe: usize, pe: usize) -> usize {
    if pe >= rows {
        0
    } else {
        (rows - pe).div_ceil(n_pe)
    }
}

impl InterleavedCsc {
    /// Unchecked constructor; run [`validate`] before trusting the result.
    pub fn from_parts(rows: usize, cols: usize, n_pe: usize, slices: Vec<PeSlice>) -> Self {
        InterleavedCsc {
            rows,
            cols,
            n_pe,
            slices,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_pe(&self) -> usize {
        self.n_pe
    }

    pub fn slices(&self) -> &[PeSlice] {
        &self.slices
    }

    pub fn slice(&self, pe: usize) -> &PeSlice {
        &self.slices[pe]
    }

    pub fn local_rows(&self, pe: usize) -> usize {
        local_rows(self.rows, self.n_pe, pe)
    }

    /// Stored entries (kept + padding) over all PEs.
    pub fn stored_entries(&self) -> usize {
        self.slices.iter().map(PeSlice::len).sum()
    }

    /// Stored entries of column `col` summed over PEs.
    pub fn column_work(&self, col: usize) -> usize {
        self.slices.iter().map(|s| s.column_range(col).len()).sum()
    }
}

/// Encodes `q` over `n_pe` PEs.
pub fn encode_interleaved(q: &QuantizedSparseMatrix, n_pe: usize) -> Result<InterleavedCsc> {
    encode_columns(q, n_pe, 0..q.cols())
}

fn encode_columns(
    q: &QuantizedSparseMatrix,
    n_pe: usize,
    cols: Range<usize>,
) -> Result<InterleavedCsc> {
    if n_pe == 0 {
        return Err(Error::invalid("need at least one PE"));
    }
    let ncols = cols.len();
    let mut slices: Vec<PeSlice> = (0..n_pe)
        .map(|_| PeSlice {
            ptr: Vec::with_capacity(ncols + 1),
            entries: Vec::new(),
        })
        .collect();
    for s in &mut slices {
        s.ptr.push(0);
    }
    // Local row of the previous entry of this column in each PE, plus one.
    let mut next_local = vec![0usize; n_pe];

    for j in cols {
        next_local.iter_mut().for_each(|n| *n = 0);
        for (row, v) in q.column(j) {
            let pe = row % n_pe;
            let local = row / n_pe;
            let slice = &mut slices[pe];
            let mut run = local - next_local[pe];
            while run > MAX_ZERO_RUN {
                slice
                    .entries
                    .push(Entry::new(ZERO_SLOT, MAX_ZERO_RUN as u8));
                run -= MAX_ZERO_RUN + 1;
            }
            slice.entries.push(Entry::new(v, run as u8));
            next_local[pe] = local + 1;
        }
        for (pe, s) in slices.iter_mut().enumerate() {
            if s.entries.len() > POINTER_LIMIT {
                return Err(Error::Capacity {
                    pe,
                    entries: s.entries.len(),
                    limit: POINTER_LIMIT,
                });
            }
            s.ptr.push(s.entries.len() as u16);
        }
    }
    Ok(InterleavedCsc {
        rows: q.rows(),
        cols: ncols,
        n_pe,
        slices,
    })
}

/// Rebuilds the quantized matrix; padding entries vanish.
pub fn decode_interleaved(
    e: &InterleavedCsc,
    codebook: &Codebook,
) -> Result<QuantizedSparseMatrix> {
    if let Some(v) = validate(e).into_iter().next() {
        return Err(Error::format(v.to_string()));
    }
    let columns = decode_columns(e);
    QuantizedSparseMatrix::from_columns(e.rows, *codebook, &columns)
}

fn decode_columns(e: &InterleavedCsc) -> Vec<Vec<(u32, u8)>> {
    let mut columns = Vec::with_capacity(e.cols);
    for j in 0..e.cols {
        let mut col = Vec::new();
        for (pe, slice) in e.slices.iter().enumerate() {
            let mut local = 0usize;
            for entry in slice.column(j) {
                local += entry.z() as usize;
                if !entry.is_padding() {
                    col.push(((local * e.n_pe + pe) as u32, entry.v()));
                }
                local += 1;
            }
        }
        col.sort_unstable_by_key(|&(r, _)| r);
        columns.push(col);
    }
    columns
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaddingStats {
    pub per_pe: Vec<usize>,
    pub total: usize,
}

pub fn padding_stats(e: &InterleavedCsc) -> PaddingStats {
    let per_pe: Vec<usize> = e.slices.iter().map(PeSlice::padding_count).collect();
    let total = per_pe.iter().sum();
    PaddingStats { per_pe, total }
}

/// One broken invariant, located as precisely as possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pe: Option<usize>,
    pub column: Option<usize>,
    pub offset: Option<usize>,
    pub message: String,
}

impl Violation {
    fn at(
        pe: usize,
        column: Option<usize>,
        offset: Option<usize>,
        message: impl Into<String>,
    ) -> Self {
        Violation {
            pe: Some(pe),
            column,
            offset,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(pe) = self.pe {
            write!(f, "PE {pe}")?;
        }
        if let Some(c) = self.column {
            write!(f, ", column {c}")?;
        }
        if let Some(o) = self.offset {
            write!(f, ", offset {o}")?;
        }
        if self.pe.is_some() {
            write!(f, ": ")?;
        }
        write!(f, "{}", self.message)
    }
}

/// Lists every structural problem; empty means the encoding is sound.
pub fn validate(e: &InterleavedCsc) -> Vec<Violation> {
    let mut out = Vec::new();
    if e.n_pe == 0 {
        out.push(Violation {
            pe: None,
            column: None,
            offset: None,
            message: "zero PEs".into(),
        });
        return out;
    }
    if e.slices.len() != e.n_pe {
        out.push(Violation {
            pe: None,
            column: None,
            offset: None,
            message: format!("{} slices for {} PEs", e.slices.len(), e.n_pe),
        });
        return out;
    }
    for (pe, s) in e.slices.iter().enumerate() {
        if s.ptr.len() != e.cols + 1 {
            out.push(Violation::at(
                pe,
                None,
                None,
                format!(
                    "pointer array has {} entries, expected {}",
                    s.ptr.len(),
                    e.cols + 1
                ),
            ));
            continue;
        }
        if s.ptr[0] != 0 {
            out.push(Violation::at(
                pe,
                Some(0),
                None,
                format!("p[0] = {}, expected 0", s.ptr[0]),
            ));
        }
        if *s.ptr.last().unwrap() as usize != s.entries.len() {
            out.push(Violation::at(
                pe,
                Some(e.cols),
                None,
                format!(
                    "p[cols] = {} but {} entries stored",
                    s.ptr[e.cols],
                    s.entries.len()
                ),
            ));
        }
        let mut monotone = true;
        for j in 0..e.cols {
            if s.ptr[j] > s.ptr[j + 1] {
                out.push(Violation::at(
                    pe,
                    Some(j),
                    None,
                    format!(
                        "pointer decreases: p[{j}] = {} > p[{}] = {}",
                        s.ptr[j],
                        j + 1,
                        s.ptr[j + 1]
                    ),
                ));
                monotone = false;
            }
        }
        if !monotone || s.ptr.iter().any(|&p| p as usize > s.entries.len()) {
            continue;
        }
        let limit = e.local_rows(pe);
        for j in 0..e.cols {
            let range = s.column_range(j);
            let mut local = 0usize;
            for (k, entry) in s.entries[range.clone()].iter().enumerate() {
                let offset = range.start + k;
                local += entry.z() as usize;
                if local >= limit {
                    out.push(Violation::at(
                        pe,
                        Some(j),
                        Some(offset),
                        format!("zero run reaches local row {local}, PE holds {limit} rows"),
                    ));
                    break;
                }
                if entry.is_padding() {
                    if entry.z() as usize != MAX_ZERO_RUN {
                        out.push(Violation::at(
                            pe,
                            Some(j),
                            Some(offset),
                            "padding entry with z != 15",
                        ));
                    }
                    if offset + 1 == range.end {
                        out.push(Violation::at(
                            pe,
                            Some(j),
                            Some(offset),
                            "padding entry ends the column",
                        ));
                    }
                }
                local += 1;
            }
        }
    }
    out
}

/// A matrix split into column blocks, each encoded with its own pointer
/// array. Long input vectors are processed block by block so that every
/// block's per-PE entry count fits the 16-bit pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockedCsc {
    rows: usize,
    cols: usize,
    n_pe: usize,
    block_cols: usize,
    blocks: Vec<InterleavedCsc>,
}

impl BlockedCsc {
    /// Blocks must tile `cols` in order, each `block_cols` wide except the last.
    pub fn from_blocks(block_cols: usize, blocks: Vec<InterleavedCsc>) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::invalid("no blocks"))?;
        let (rows, n_pe) = (first.rows, first.n_pe);
        if block_cols == 0 {
            return Err(Error::invalid("block width must be positive"));
        }
        let last = blocks.len() - 1;
        for (b, blk) in blocks.iter().enumerate() {
            if blk.rows != rows || blk.n_pe != n_pe {
                return Err(Error::format(format!(
                    "block {b} disagrees on rows or PE count"
                )));
            }
            let ok = if b == last {
                blk.cols >= 1 && blk.cols <= block_cols
            } else {
                blk.cols == block_cols
            };
            if !ok {
                return Err(Error::format(format!("block {b} has {} columns", blk.cols)));
            }
        }
        let cols = block_cols * last + blocks[last].cols;
        Ok(BlockedCsc {
            rows,
            cols,
            n_pe,
            block_cols,
            blocks,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_pe(&self) -> usize {
        self.n_pe
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn blocks(&self) -> &[InterleavedCsc] {
        &self.blocks
    }

    /// Block holding global column `col` and the column's index within it.
    #[inline]
    pub fn locate(&self, col: usize) -> (usize, usize) {
        (col / self.block_cols, col % self.block_cols)
    }

    pub fn column_work(&self, col: usize) -> usize {
        let (b, c) = self.locate(col);
        self.blocks[b].column_work(c)
    }

    pub fn stored_entries(&self) -> usize {
        self.blocks.iter().map(InterleavedCsc::stored_entries).sum()
    }
}

impl From<InterleavedCsc> for BlockedCsc {
    fn from(e: InterleavedCsc) -> Self {
        BlockedCsc {
            rows: e.rows,
            cols: e.cols,
            n_pe: e.n_pe,
            block_cols: e.cols.max(1),
            blocks: vec![e],
        }
    }
}

/// Encodes `q` in column blocks of at most `block_cols` columns.
pub fn encode_blocked(
    q: &QuantizedSparseMatrix,
    n_pe: usize,
    block_cols: usize,
) -> Result<BlockedCsc> {
    if block_cols == 0 {
        return Err(Error::invalid("block width must be positive"));
    }
    if q.cols() == 0 {
        return encode_interleaved(q, n_pe).map(BlockedCsc::from);
    }
    let blocks = (0..q.cols())
        .step_by(block_cols)
        .map(|start| encode_columns(q, n_pe, start..(start + block_cols).min(q.cols())))
        .collect::<Result<Vec<_>>>()?;
    BlockedCsc::from_blocks(block_cols, blocks)
}

/// Encodes with the widest block, up to `max_block_cols`, whose slices fit
/// the 16-bit pointers. Halves the width after each capacity failure.
pub fn encode_fitting(
    q: &QuantizedSparseMatrix,
    n_pe: usize,
    max_block_cols: usize,
) -> Result<BlockedCsc> {
    let mut width = max_block_cols.clamp(1, q.cols().max(1));
    loop {
        match encode_blocked(q, n_pe, width) {
            Err(Error::Capacity { .. }) if width > 1 => width /= 2,
            other => return other,
        }
    }
}

pub fn decode_blocked(e: &BlockedCsc, codebook: &Codebook) -> Result<QuantizedSparseMatrix> {
    if let Some(v) = validate_blocked(e).into_iter().next() {
        return Err(Error::format(v));
    }
    let columns: Vec<_> = e.blocks.iter().flat_map(decode_columns).collect();
    QuantizedSparseMatrix::from_columns(e.rows, *codebook, &columns)
}

pub fn padding_stats_blocked(e: &BlockedCsc) -> PaddingStats {
    let mut per_pe = vec![0; e.n_pe];
    for blk in &e.blocks {
        for (acc, s) in per_pe.iter_mut().zip(&blk.slices) {
            *acc += s.padding_count();
        }
    }
    let total = per_pe.iter().sum();
    PaddingStats { per_pe, total }
}

/// Violations of every block, prefixed with the block number.
pub fn validate_blocked(e: &BlockedCsc) -> Vec<String> {
    e.blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| {
            validate(blk)
                .into_iter()
                .map(move |v| format!("block {b}: {v}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::FixedPointFormat;

    fn codebook() -> Codebook {
        let mut entries = [0i16; 16];
        for (i, e) in entries.iter_mut().enumerate().skip(1) {
            *e = i as i16 * 10;
        }
        Codebook::new(FixedPointFormat::default(), entries).unwrap()
    }

    fn single_column(values: &[u8]) -> QuantizedSparseMatrix {
        let col: Vec<(u32, u8)> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        QuantizedSparseMatrix::from_columns(values.len(), codebook(), &[col]).unwrap()
    }

    fn reference_column() -> Vec<u8> {
        let mut col = vec![0u8; 23];
        col[2] = 1;
        col[3] = 2;
        col[22] = 3;
        col
    }

    #[test]
    fn reference_column_encoding() {
        let q = single_column(&reference_column());
        let e = encode_interleaved(&q, 1).unwrap();
        assert_eq!(e.slice(0).v(), vec![1, 2, 0, 3]);
        assert_eq!(e.slice(0).z(), vec![2, 0, 15, 2]);
        assert_eq!(e.slice(0).ptr(), &[0, 4]);
        assert_eq!(padding_stats(&e).total, 1);
        assert!(validate(&e).is_empty());
        assert_eq!(decode_interleaved(&e, &codebook()).unwrap(), q);
    }

    #[test]
    fn run_of_exactly_sixteen_needs_one_pad() {
        let mut col = vec![0u8; 17];
        col[16] = 4;
        let e = encode_interleaved(&single_column(&col), 1).unwrap();
        assert_eq!(e.slice(0).v(), vec![0, 4]);
        assert_eq!(e.slice(0).z(), vec![15, 0]);
        let mut col = vec![0u8; 16];
        col[15] = 4;
        let e = encode_interleaved(&single_column(&col), 1).unwrap();
        assert_eq!(e.slice(0).z(), vec![15]);
        assert_eq!(padding_stats(&e).total, 0);
    }

    #[test]
    fn empty_column_adds_no_entries() {
        let cb = codebook();
        let q = QuantizedSparseMatrix::from_columns(8, cb, &[vec![(1, 1)], vec![], vec![(7, 2)]])
            .unwrap();
        let e = encode_interleaved(&q, 2).unwrap();
        for s in e.slices() {
            assert_eq!(s.ptr()[1], s.ptr()[2]);
        }
    }

    #[test]
    fn figure_two_pe0_column_two() {
        // 16x8 over 4 PEs; column 2 has rows 0, 2, 12, 14 non-zero.
        let mut columns = vec![Vec::new(); 8];
        columns[2] = vec![(0, 1), (2, 2), (12, 3), (14, 4)];
        let q = QuantizedSparseMatrix::from_columns(16, codebook(), &columns).unwrap();
        let e = encode_interleaved(&q, 4).unwrap();
        let pe0 = e.slice(0);
        let col2 = pe0.column(2);
        assert_eq!(col2.iter().map(|x| x.z()).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(col2.iter().map(|x| x.v()).collect::<Vec<_>>(), vec![1, 3]);
        assert!(e.slice(1).column(2).is_empty());
        let pe2: Vec<u8> = e.slice(2).column(2).iter().map(|x| x.z()).collect();
        assert_eq!(pe2, vec![0, 2]);
    }

    #[test]
    fn zero_count_resets_per_column() {
        let cb = codebook();
        let q =
            QuantizedSparseMatrix::from_columns(40, cb, &[vec![(0, 1)], vec![(20, 2)]]).unwrap();
        let e = encode_interleaved(&q, 1).unwrap();
        // Column 1 counts its own 20 leading zeros: one pad, then z = 4.
        assert_eq!(
            e.slice(0)
                .column(1)
                .iter()
                .map(|x| x.z())
                .collect::<Vec<_>>(),
            vec![15, 4]
        );
    }

    #[test]
    fn capacity_error_names_pe() {
        let cb = codebook();
        let rows = 300;
        let columns: Vec<Vec<(u32, u8)>> = (0..300)
            .map(|_| (0..rows as u32).map(|r| (r, 1)).collect())
            .collect();
        let q = QuantizedSparseMatrix::from_columns(rows, cb, &columns).unwrap();
        match encode_interleaved(&q, 1) {
            Err(Error::Capacity { pe, .. }) => assert_eq!(pe, 0),
            other => panic!("expected capacity error, got {other:?}"),
        }
        // Two PEs halve the per-PE load and fit.
        assert!(encode_interleaved(&q, 2).is_ok());
        // Column blocking also fits on one PE.
        let b = encode_blocked(&q, 1, 128).unwrap();
        assert_eq!(b.blocks().len(), 3);
        assert_eq!(decode_blocked(&b, &cb).unwrap(), q);
    }

    #[test]
    fn non_monotone_pointer_reported() {
        let cb = codebook();
        let q =
            QuantizedSparseMatrix::from_columns(4, cb, &[vec![(0, 1)], vec![(1, 1)], vec![(2, 1)]])
                .unwrap();
        let e = encode_interleaved(&q, 1).unwrap();
        let s = e.slice(0);
        let mut ptr = s.ptr().to_vec();
        ptr[1] = 3;
        let bad = InterleavedCsc::from_parts(
            4,
            3,
            1,
            vec![PeSlice::from_parts(ptr, s.entries().to_vec())],
        );
        let v = validate(&bad);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].column, Some(1));
        assert_eq!(v[0].pe, Some(0));
        assert!(decode_interleaved(&bad, &cb).is_err());
    }

    #[test]
    fn run_past_local_rows_reported() {
        let bad = InterleavedCsc::from_parts(
            4,
            1,
            1,
            vec![PeSlice::from_parts(vec![0, 1], vec![Entry::new(1, 9)])],
        );
        let v = validate(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].offset, Some(0));
    }

    #[test]
    fn non_canonical_padding_reported() {
        let bad = InterleavedCsc::from_parts(
            40,
            1,
            1,
            vec![PeSlice::from_parts(
                vec![0, 2],
                vec![Entry::new(0, 3), Entry::new(0, 15)],
            )],
        );
        let msgs: Vec<String> = validate(&bad).iter().map(|v| v.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("z != 15")));
        assert!(msgs.iter().any(|m| m.contains("ends the column")));
    }

    #[test]
    fn small_slices_need_no_padding() {
        // 64 rows on 4 PEs: 16 local rows, so the longest gap is 15.
        let cb = codebook();
        let columns: Vec<Vec<(u32, u8)>> = (0..8).map(|j| vec![(60 + (j % 4) as u32, 1)]).collect();
        let q = QuantizedSparseMatrix::from_columns(64, cb, &columns).unwrap();
        assert_eq!(padding_stats(&encode_interleaved(&q, 4).unwrap()).total, 0);
        assert!(padding_stats(&encode_interleaved(&q, 1).unwrap()).total > 0);
    }

    #[test]
    fn entry_packing() {
        let e = Entry::new(0xa, 0x3);
        assert_eq!(e.byte(), 0x3a);
        assert_eq!(Entry::from_byte(0x3a).v(), 0xa);
        assert_eq!(Entry::from_byte(0x3a).z(), 0x3);
    }

    #[test]
    fn local_row_counts() {
        assert_eq!(local_rows(16, 4, 0), 4);
        assert_eq!(local_rows(10, 4, 1), 3);
        assert_eq!(local_rows(10, 4, 2), 2);
        assert_eq!(local_rows(3, 8, 5), 0);
    }
}

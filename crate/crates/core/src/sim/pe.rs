//! One processing element: activation FIFO, pointer read, sparse-matrix
//! read and a four-stage multiply-accumulate pipeline.

use std::collections::VecDeque;
use std::ops::Range;

use crate::csc::BlockedCsc;
use crate::fixed::mul_wide;

use super::SimStats;

/// Codebook lookup, multiply, add, write.
pub(super) const PIPELINE_STAGES: usize = 4;

#[derive(Debug, Clone, Copy)]
struct StoredEntry {
    local_row: u32,
    weight: i16,
    padding: bool,
}

/// A PE's static share of the layer, flattened over column blocks.
pub(super) struct PeProgram {
    pe: usize,
    entries: Vec<StoredEntry>,
    block_base: Vec<usize>,
}

impl PeProgram {
    pub(super) fn new(e: &BlockedCsc, weights: &[i16; 16], pe: usize) -> Self {
        let mut entries = Vec::new();
        let mut block_base = Vec::with_capacity(e.blocks().len());
        for blk in e.blocks() {
            block_base.push(entries.len());
            let slice = blk.slice(pe);
            for j in 0..blk.cols() {
                let mut local = 0u32;
                for entry in slice.column(j) {
                    local += entry.z() as u32;
                    entries.push(StoredEntry {
                        local_row: local,
                        weight: weights[entry.v() as usize],
                        padding: entry.is_padding(),
                    });
                    local += 1;
                }
            }
        }
        PeProgram {
            pe,
            entries,
            block_base,
        }
    }

    /// Entry addresses of global column `col` restricted to local rows in `window`.
    fn span(
        &self,
        e: &BlockedCsc,
        col: usize,
        window: &Range<u32>,
        windowed: bool,
    ) -> Range<usize> {
        let (b, c) = e.locate(col);
        let r = e.blocks()[b].slice(self.pe).column_range(c);
        let base = self.block_base[b];
        let (start, end) = (base + r.start, base + r.end);
        if !windowed {
            return start..end;
        }
        let col_entries = &self.entries[start..end];
        let lo = col_entries.partition_point(|x| x.local_row < window.start);
        let hi = col_entries.partition_point(|x| x.local_row < window.end);
        start + lo..start + hi
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    arrive: u64,
    col: u32,
    value: i16,
}

#[derive(Debug, Clone)]
struct Span {
    next: usize,
    end: usize,
    value: i16,
}

#[derive(Debug, Clone, Copy)]
struct Mac {
    slot: u32,
    product: i64,
}

/// Per-cycle architectural state of one PE during one output pass.
pub(super) struct PeState {
    fifo: VecDeque<Queued>,
    /// Column whose pointers have been read, waiting for the issue stage.
    staged: Option<Span>,
    /// Column currently feeding one entry per cycle to the arithmetic unit.
    issuing: Option<Span>,
    pipe: [Option<Mac>; PIPELINE_STAGES],
    last_issue: Option<(u64, u32)>,
    /// Destination register file for the current window, Q(2f).
    pub(super) acc: Vec<i64>,
}

pub(super) struct PassContext<'a> {
    pub layer: &'a BlockedCsc,
    pub window: Range<u32>,
    pub windowed: bool,
    pub entries_per_row: usize,
}

impl PeState {
    pub(super) fn new(window_rows: usize) -> Self {
        PeState {
            fifo: VecDeque::new(),
            staged: None,
            issuing: None,
            pipe: [None; PIPELINE_STAGES],
            last_issue: None,
            acc: vec![0; window_rows],
        }
    }

    /// FIFO slots in use, counting in-flight broadcasts and the columns in
    /// the pointer and issue stages.
    pub(super) fn occupancy(&self) -> usize {
        self.fifo.len() + self.staged.is_some() as usize + self.issuing.is_some() as usize
    }

    pub(super) fn push(&mut self, arrive: u64, col: usize, value: i16) {
        self.fifo.push_back(Queued {
            arrive,
            col: col as u32,
            value,
        });
    }

    pub(super) fn is_idle(&self) -> bool {
        self.fifo.is_empty()
            && self.staged.is_none()
            && self.issuing.is_none()
            && self.pipe.iter().all(Option::is_none)
    }

    /// Advances one clock. Returns true when the arithmetic unit accepted an entry.
    pub(super) fn step(
        &mut self,
        cycle: u64,
        program: &PeProgram,
        ctx: &PassContext<'_>,
        stats: &mut SimStats,
    ) -> bool {
        // Advance the pipeline; whatever reaches the write stage retires
        // into the destination register this cycle.
        self.pipe.rotate_right(1);
        if let Some(done) = self.pipe[PIPELINE_STAGES - 1].take() {
            self.acc[done.slot as usize] += done.product;
            stats.act_regfile_writes += 1;
        }

        // Sparse-matrix read feeds one (v, x) entry per cycle.
        if self.issuing.is_none() {
            self.issuing = self.staged.take();
        }
        let mut issued = false;
        if let Some(span) = self.issuing.as_mut() {
            let entry = program.entries[span.next];
            let slot = entry.local_row - ctx.window.start;
            self.pipe[0] = Some(Mac {
                slot,
                product: mul_wide(entry.weight, span.value),
            });
            stats.mac_count += 1;
            if entry.padding {
                stats.padding_mac_count += 1;
            }
            if self.last_issue == Some((cycle.wrapping_sub(1), slot)) {
                stats.bypass_count += 1;
            } else {
                stats.act_regfile_reads += 1;
            }
            self.last_issue = Some((cycle, slot));
            span.next += 1;
            if span.next == span.end {
                self.issuing = None;
            }
            issued = true;
        }

        // Pointer read: both banks in one cycle, for the oldest waiting column.
        if self.staged.is_none() {
            if let Some(head) = self.fifo.front().copied().filter(|q| q.arrive <= cycle) {
                self.fifo.pop_front();
                stats.ptr_sram_reads += 1;
                let range = program.span(ctx.layer, head.col as usize, &ctx.window, ctx.windowed);
                if !range.is_empty() {
                    let epr = ctx.entries_per_row;
                    stats.spmat_sram_row_reads +=
                        ((range.end - 1) / epr - range.start / epr + 1) as u64;
                    self.staged = Some(Span {
                        next: range.start,
                        end: range.end,
                        value: head.value,
                    });
                }
            }
        }
        issued
    }
}

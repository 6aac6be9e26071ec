//! Cycle-level model of the PE array.
//!
//! Timing model, per clock:
//!
//! * The CCU broadcasts at most one non-zero activation `(j, a_j)` per
//!   cycle. A broadcast lands in every PE's FIFO `broadcast_latency` cycles
//!   later and is only sent when every FIFO has a free slot (in-flight
//!   broadcasts count against the slot budget).
//! * A PE reads `p_j` and `p_{j+1}` in one cycle (two banks), then feeds one
//!   stored entry per cycle to a four-stage arithmetic pipeline. The pointer
//!   read of the next queued column overlaps the current column's entries.
//!   A column with no entries in this PE costs only its pointer read.
//! * The FIFO slot of a column is released once its last entry has been
//!   issued.
//! * Same-row back-to-back accumulates use the bypass path; the pipeline
//!   never stalls.
//!
//! A PE cycle is busy when the arithmetic unit accepts an entry and a bubble
//! otherwise, so busy + bubble = total cycles for every PE.
//!
//! Outputs that do not fit the destination register file
//! (`reg_file_entries` per PE) are computed in several passes over the
//! input, one window of local rows at a time.

mod lnzd;
mod pe;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::compress::Codebook;
use crate::csc::{validate_blocked, BlockedCsc, InterleavedCsc};
use crate::engine::{mac_count, write_back, ActivationVector};
use crate::error::{Error, Result};

pub use lnzd::{lnzd_node_count, lnzd_scan};
use pe::{PassContext, PeProgram, PeState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_pe: usize,
    pub fifo_depth: usize,
    pub sram_width_bits: usize,
    pub broadcast_latency: u64,
    pub clock_mhz: f64,
    pub reg_file_entries: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_pe: 64,
            fifo_depth: 8,
            sram_width_bits: 64,
            broadcast_latency: 2,
            clock_mhz: 800.0,
            reg_file_entries: 64,
        }
    }
}

impl SimConfig {
    pub fn with_pes(n_pe: usize) -> Self {
        SimConfig {
            n_pe,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pe == 0 {
            return Err(Error::Config("n_pe must be at least 1".into()));
        }
        if self.fifo_depth == 0 {
            return Err(Error::Config("fifo_depth must be at least 1".into()));
        }
        if self.sram_width_bits == 0 || !self.sram_width_bits.is_multiple_of(8) {
            return Err(Error::Config(format!(
                "sram_width_bits must be a positive multiple of 8, got {}",
                self.sram_width_bits
            )));
        }
        if self.broadcast_latency == 0 {
            return Err(Error::Config(
                "broadcast_latency must be at least 1 cycle".into(),
            ));
        }
        if !(self.clock_mhz > 0.0 && self.clock_mhz.is_finite()) {
            return Err(Error::Config(format!(
                "clock_mhz must be positive, got {}",
                self.clock_mhz
            )));
        }
        if self.reg_file_entries == 0 {
            return Err(Error::Config("reg_file_entries must be at least 1".into()));
        }
        Ok(())
    }

    /// Entries (one byte each) delivered by one sparse-matrix SRAM read.
    pub fn entries_per_row(&self) -> usize {
        self.sram_width_bits / 8
    }

    /// Input length the source register files hold without batching.
    pub fn native_block_cols(&self) -> usize {
        self.n_pe * self.reg_file_entries
    }

    pub fn cycles_to_seconds(&self, cycles: f64) -> f64 {
        cycles / (self.clock_mhz * 1e6)
    }
}

/// Counters from one simulated layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub config: Option<SimConfig>,
    pub rows: usize,
    pub cols: usize,
    pub total_cycles: u64,
    pub busy_cycles: Vec<u64>,
    pub bubble_cycles: Vec<u64>,
    /// Cycles the CCU held a non-zero activation back because some FIFO was full.
    pub broadcast_stall_cycles: u64,
    pub ptr_sram_reads: u64,
    pub spmat_sram_row_reads: u64,
    pub act_regfile_reads: u64,
    pub act_regfile_writes: u64,
    pub act_sram_reads: u64,
    pub act_sram_writes: u64,
    pub mac_count: u64,
    pub padding_mac_count: u64,
    pub bypass_count: u64,
    pub input_nonzeros_broadcast: u64,
    pub output_passes: usize,
}

impl SimStats {
    pub fn seconds(&self) -> f64 {
        self.config
            .map(|c| c.cycles_to_seconds(self.total_cycles as f64))
            .unwrap_or(0.0)
    }

    pub fn act_accesses(&self) -> u64 {
        self.act_regfile_reads
            + self.act_regfile_writes
            + self.act_sram_reads
            + self.act_sram_writes
    }

    pub fn total_bubble_cycles(&self) -> u64 {
        self.bubble_cycles.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadEfficiency {
    pub per_pe: Vec<f64>,
    pub aggregate: f64,
}

/// `1 - bubble / total`, per PE and over the whole array. A run without
/// multiply-accumulate work reports 1.0.
pub fn load_efficiency(s: &SimStats) -> LoadEfficiency {
    if s.total_cycles == 0 || s.mac_count == 0 {
        return LoadEfficiency {
            per_pe: vec![1.0; s.bubble_cycles.len()],
            aggregate: 1.0,
        };
    }
    let total = s.total_cycles as f64;
    let per_pe = s
        .bubble_cycles
        .iter()
        .map(|&b| 1.0 - b as f64 / total)
        .collect();
    let aggregate = 1.0 - s.total_bubble_cycles() as f64 / (total * s.bubble_cycles.len() as f64);
    LoadEfficiency { per_pe, aggregate }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalTime {
    pub cycles: f64,
    pub seconds: f64,
}

/// Perfectly balanced lower bound: all multiply-accumulates of non-zero
/// columns spread evenly over the PEs at one per PE per cycle.
pub fn theoretical_cycles(
    e: &BlockedCsc,
    a: &ActivationVector,
    cfg: &SimConfig,
) -> Result<TheoreticalTime> {
    if a.len() != e.cols() {
        return Err(Error::shape(format!(
            "matrix has {} columns, activation vector has {} elements",
            e.cols(),
            a.len()
        )));
    }
    let cycles = mac_count(e, a) as f64 / e.n_pe() as f64;
    Ok(TheoreticalTime {
        cycles,
        seconds: cfg.cycles_to_seconds(cycles),
    })
}

/// Simulates one layer held in a single pointer block.
pub fn simulate(
    e: &InterleavedCsc,
    cb: &Codebook,
    a: &ActivationVector,
    cfg: &SimConfig,
    relu: bool,
) -> Result<(ActivationVector, SimStats)> {
    simulate_blocked(&BlockedCsc::from(e.clone()), cb, a, cfg, relu)
}

pub fn simulate_blocked(
    e: &BlockedCsc,
    cb: &Codebook,
    a: &ActivationVector,
    cfg: &SimConfig,
    relu: bool,
) -> Result<(ActivationVector, SimStats)> {
    cfg.validate()?;
    if e.n_pe() != cfg.n_pe {
        return Err(Error::Config(format!(
            "layer is encoded for {} PEs, configuration has {}",
            e.n_pe(),
            cfg.n_pe
        )));
    }
    if a.len() != e.cols() {
        return Err(Error::shape(format!(
            "matrix has {} columns, activation vector has {} elements",
            e.cols(),
            a.len()
        )));
    }
    if cb.format() != a.format() {
        return Err(Error::shape("codebook and activation formats differ"));
    }
    if let Some(v) = validate_blocked(e).into_iter().next() {
        return Err(Error::format(v));
    }

    let n = cfg.n_pe;
    let programs: Vec<PeProgram> = (0..n)
        .map(|pe| PeProgram::new(e, cb.entries(), pe))
        .collect();
    let max_local = e.rows().div_ceil(n);
    let window = cfg.reg_file_entries;
    let passes = max_local.div_ceil(window).max(1);
    let inputs_in_regfile = e.cols() <= cfg.native_block_cols();

    let mut stats = SimStats {
        config: Some(*cfg),
        rows: e.rows(),
        cols: e.cols(),
        busy_cycles: vec![0; n],
        bubble_cycles: vec![0; n],
        output_passes: passes,
        ..SimStats::default()
    };
    let mut out = vec![0i16; e.rows()];

    for pass in 0..passes {
        let lo = pass * window;
        let hi = ((pass + 1) * window).min(max_local);
        let ctx = PassContext {
            layer: e,
            window: lo as u32..hi as u32,
            windowed: passes > 1,
            entries_per_row: cfg.entries_per_row(),
        };
        let pes = run_pass(&programs, a, cfg, &ctx, inputs_in_regfile, &mut stats);
        let mut written = 0u64;
        for (pe, st) in pes.iter().enumerate() {
            for (slot, &acc) in st.acc.iter().enumerate() {
                let row = (lo + slot) * n + pe;
                if row < e.rows() {
                    out[row] = write_back(acc, relu, a.format());
                    written += 1;
                }
            }
        }
        if passes > 1 {
            stats.act_sram_writes += written;
        }
    }
    Ok((ActivationVector::new(a.format(), out), stats))
}

fn run_pass(
    programs: &[PeProgram],
    a: &ActivationVector,
    cfg: &SimConfig,
    ctx: &PassContext<'_>,
    inputs_in_regfile: bool,
    stats: &mut SimStats,
) -> Vec<PeState> {
    let window_rows = ctx.window.len();
    let mut pes: Vec<PeState> = programs.iter().map(|_| PeState::new(window_rows)).collect();
    let mut next = lnzd_scan(a, 0);
    let mut cycle = 0u64;

    loop {
        if next.is_none() && pes.iter().all(PeState::is_idle) {
            break;
        }
        for (pe, (state, program)) in pes.iter_mut().zip(programs).enumerate() {
            if state.step(cycle, program, ctx, stats) {
                stats.busy_cycles[pe] += 1;
            } else {
                stats.bubble_cycles[pe] += 1;
            }
        }
        if let Some((j, value)) = next {
            if pes.iter().all(|p| p.occupancy() < cfg.fifo_depth) {
                let arrive = cycle + cfg.broadcast_latency;
                for p in &mut pes {
                    p.push(arrive, j, value);
                }
                stats.input_nonzeros_broadcast += 1;
                if inputs_in_regfile {
                    stats.act_regfile_reads += 1;
                } else {
                    stats.act_sram_reads += 1;
                }
                next = lnzd_scan(a, j + 1);
            } else {
                stats.broadcast_stall_cycles += 1;
            }
        }
        cycle += 1;
    }
    stats.total_cycles += cycle;
    pes
}

/// Row window `[lo, hi)` of local rows processed in `pass`.
pub fn pass_window(rows: usize, cfg: &SimConfig, pass: usize) -> Range<usize> {
    let max_local = rows.div_ceil(cfg.n_pe);
    let lo = pass * cfg.reg_file_entries;
    lo..((pass + 1) * cfg.reg_file_entries).min(max_local)
}

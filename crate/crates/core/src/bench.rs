//! Benchmark layers shaped like published pruned models, synthetic data
//! with matching sparsity, and design-space sweeps.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::compress::{Codebook, QuantizedSparseMatrix, CODEBOOK_SIZE};
use crate::csc::{encode_fitting, padding_stats_blocked, BlockedCsc};
use crate::energy::{estimate_energy, EnergyTable};
use crate::engine::ActivationVector;
use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::sim::{load_efficiency, simulate_blocked, theoretical_cycles, SimConfig};

/// Largest synthetic activation, in units of the format's resolution.
/// With weights below 1.0 in magnitude, a 25088-term dot product stays far
/// inside the 64-bit accumulator.
pub const MAX_ACTIVATION_RAW: i16 = 256;

/// Largest synthetic shared weight magnitude, raw.
pub const MAX_WEIGHT_RAW: i16 = 128;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight_density: f64,
    pub activation_density: f64,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(
        name: impl Into<String>,
        in_dim: usize,
        out_dim: usize,
        weight_density: f64,
        activation_density: f64,
        seed: u64,
    ) -> Result<Self> {
        let spec = BenchmarkSpec {
            name: name.into(),
            in_dim,
            out_dim,
            weight_density,
            activation_density,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::invalid(format!(
                "{}: dimensions must be at least 1",
                self.name
            )));
        }
        for (what, d) in [
            ("weight", self.weight_density),
            ("activation", self.activation_density),
        ] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::invalid(format!(
                    "{}: {what} density {d} outside (0, 1]",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same densities on a smaller `out_dim x in_dim` layer.
    pub fn scaled(mut self, in_dim: usize, out_dim: usize) -> Self {
        self.in_dim = in_dim;
        self.out_dim = out_dim;
        self
    }
}

/// (name, in, out, weight density, activation density)
const PRESETS: [(&str, usize, usize, f64, f64); 9] = [
    ("Alex-6", 9216, 4096, 0.09, 0.351),
    ("Alex-7", 4096, 4096, 0.09, 0.353),
    ("Alex-8", 4096, 1000, 0.25, 0.375),
    ("VGG-6", 25088, 4096, 0.04, 0.183),
    ("VGG-7", 4096, 4096, 0.04, 0.375),
    ("VGG-8", 4096, 1000, 0.23, 0.411),
    ("NT-We", 4096, 600, 0.10, 1.0),
    ("NT-Wd", 600, 8791, 0.11, 1.0),
    ("NT-LSTM", 1201, 2400, 0.10, 1.0),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

/// Looks a preset up by name, ignoring case; `NTLSTM` is accepted for `NT-LSTM`.
pub fn preset(name: &str) -> Result<BenchmarkSpec> {
    let wanted = name.to_ascii_lowercase().replace('-', "");
    PRESETS
        .iter()
        .enumerate()
        .find(|(_, p)| p.0.to_ascii_lowercase().replace('-', "") == wanted)
        .map(|(k, &(n, i, o, wd, ad))| BenchmarkSpec {
            name: n.to_string(),
            in_dim: i,
            out_dim: o,
            weight_density: wd,
            activation_density: ad,
            seed: 0x00E1_E000 + k as u64,
        })
        .ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            Error::invalid(format!(
                "unknown benchmark {name:?}; known: {}",
                known.join(", ")
            ))
        })
}

pub fn all_presets() -> Vec<BenchmarkSpec> {
    preset_names().map(|n| preset(n).unwrap()).collect()
}

/// Positions `0..n` kept by independent Bernoulli(`p`) trials, drawn by
/// sampling the gaps between successes.
fn bernoulli_positions(rng: &mut ChaCha8Rng, n: usize, p: f64, out: &mut Vec<u32>) {
    out.clear();
    if p >= 1.0 {
        out.extend(0..n as u32);
        return;
    }
    let gap = Geometric::new(p).expect("density checked by caller");
    let mut pos = gap.sample(rng);
    while pos < n as u64 {
        out.push(pos as u32);
        pos += 1 + gap.sample(rng);
    }
}

/// Random layer and input vector with the spec's densities, Q8.8 values.
pub fn generate_synthetic(
    spec: &BenchmarkSpec,
) -> Result<(QuantizedSparseMatrix, ActivationVector)> {
    spec.validate()?;
    let format = FixedPointFormat::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut entries = [0i16; CODEBOOK_SIZE];
    for e in entries.iter_mut().skip(1) {
        let mag = rng.random_range(1..=MAX_WEIGHT_RAW);
        *e = if rng.random_bool(0.5) { mag } else { -mag };
    }
    let codebook = Codebook::new(format, entries)?;

    let mut rows = Vec::new();
    let mut columns = Vec::with_capacity(spec.in_dim);
    for _ in 0..spec.in_dim {
        bernoulli_positions(&mut rng, spec.out_dim, spec.weight_density, &mut rows);
        columns.push(
            rows.iter()
                .map(|&r| (r, rng.random_range(1..CODEBOOK_SIZE as u8)))
                .collect::<Vec<_>>(),
        );
    }
    let q = QuantizedSparseMatrix::from_columns(spec.out_dim, codebook, &columns)?;

    let mut values = vec![0i16; spec.in_dim];
    bernoulli_positions(&mut rng, spec.in_dim, spec.activation_density, &mut rows);
    for &j in &rows {
        values[j as usize] = rng.random_range(1..=MAX_ACTIVATION_RAW);
    }
    Ok((q, ActivationVector::new(format, values)))
}

/// Encodes `q` for `cfg`, batching the input in blocks of at most
/// `n_pe * reg_file_entries` columns (narrower if a block overflows a
/// 16-bit pointer).
pub fn encode_for(q: &QuantizedSparseMatrix, cfg: &SimConfig) -> Result<BlockedCsc> {
    cfg.validate()?;
    encode_fitting(q, cfg.n_pe, cfg.native_block_cols())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    FifoDepth,
    NPe,
    SramWidth,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::FifoDepth => "fifo_depth",
            SweepAxis::NPe => "n_pe",
            SweepAxis::SramWidth => "sram_width",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fifo" | "fifo_depth" | "fifo-depth" => Ok(SweepAxis::FifoDepth),
            "pe" | "pes" | "n_pe" | "n-pe" => Ok(SweepAxis::NPe),
            "sram" | "sram_width" | "sram-width" => Ok(SweepAxis::SramWidth),
            other => Err(Error::invalid(format!("unknown sweep axis {other:?}"))),
        }
    }

    fn apply(self, base: &SimConfig, value: usize) -> SimConfig {
        let mut cfg = *base;
        match self {
            SweepAxis::FifoDepth => cfg.fifo_depth = value,
            SweepAxis::NPe => cfg.n_pe = value,
            SweepAxis::SramWidth => cfg.sram_width_bits = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub efficiency: f64,
    pub total_cycles: u64,
    pub theoretical_cycles: f64,
    pub seconds: f64,
    pub padding: usize,
    pub macs: u64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub benchmark: String,
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    /// One record per axis value, in axis order.
    pub points: Vec<std::result::Result<SweepPoint, String>>,
}

impl SweepResult {
    pub fn ok_points(&self) -> impl Iterator<Item = (usize, &SweepPoint)> {
        self.values
            .iter()
            .zip(&self.points)
            .filter_map(|(&v, p)| p.as_ref().ok().map(|p| (v, p)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "benchmark,axis,value,efficiency,total_cycles,theoretical_cycles,seconds,padding,macs,energy_j,error\n",
        );
        for (v, p) in self.values.iter().zip(&self.points) {
            match p {
                Ok(p) => writeln!(
                    s,
                    "{},{},{},{},{},{},{:e},{},{},{:e},",
                    self.benchmark,
                    self.axis.name(),
                    v,
                    p.efficiency,
                    p.total_cycles,
                    p.theoretical_cycles,
                    p.seconds,
                    p.padding,
                    p.macs,
                    p.energy_j
                ),
                Err(e) => writeln!(
                    s,
                    "{},{},{},,,,,,,,\"{}\"",
                    self.benchmark,
                    self.axis.name(),
                    v,
                    e.replace('"', "'")
                ),
            }
            .unwrap();
        }
        s
    }
}

/// Worker pool for sweeps, capped by `EIE_THREADS` when set.
fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EIE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            Error::Config(format!("EIE_THREADS must be a positive integer, got {v:?}"))
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Simulates the layer at every axis value. A failing point records its
/// error and the sweep continues; differing outputs between points are an
/// error.
pub fn sweep_layer(
    name: &str,
    q: &QuantizedSparseMatrix,
    a: &ActivationVector,
    base: &SimConfig,
    axis: SweepAxis,
    values: &[usize],
    relu: bool,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis value"));
    }
    let table = EnergyTable::default();
    let run = |&v: &usize| -> std::result::Result<(SweepPoint, ActivationVector), String> {
        let cfg = axis.apply(base, v);
        let inner = || -> Result<(SweepPoint, ActivationVector)> {
            let e = encode_for(q, &cfg)?;
            let (out, stats) = simulate_blocked(&e, q.codebook(), a, &cfg, relu)?;
            let energy = estimate_energy(&stats, &cfg, &table)?;
            let point = SweepPoint {
                efficiency: load_efficiency(&stats).aggregate,
                total_cycles: stats.total_cycles,
                theoretical_cycles: theoretical_cycles(&e, a, &cfg)?.cycles,
                seconds: stats.seconds(),
                padding: padding_stats_blocked(&e).total,
                macs: stats.mac_count,
                energy_j: energy.total,
            };
            Ok((point, out))
        };
        inner().map_err(|e| e.to_string())
    };
    let outcomes: Vec<_> = sweep_pool()?.install(|| values.par_iter().map(run).collect());

    let mut reference: Option<&ActivationVector> = None;
    for (v, o) in values.iter().zip(&outcomes) {
        if let Ok((_, out)) = o {
            match reference {
                None => reference = Some(out),
                Some(r) if r != out => {
                    return Err(Error::invalid(format!(
                        "output at {}={v} differs from earlier sweep points",
                        axis.name()
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(SweepResult {
        benchmark: name.to_string(),
        axis,
        values: values.to_vec(),
        points: outcomes.into_iter().map(|o| o.map(|(p, _)| p)).collect(),
    })
}

pub fn sweep(
    spec: &BenchmarkSpec,
    base: &SimConfig,
    axis: SweepAxis,
    values: &[usize],
) -> Result<SweepResult> {
    let (q, a) = generate_synthetic(spec)?;
    sweep_layer(&spec.name, &q, &a, base, axis, values, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub benchmark: String,
    pub value: usize,
    pub total_cycles: u64,
    pub efficiency: f64,
    /// Cycles of the series' first successful point over this point's cycles.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub axis: SweepAxis,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "benchmark,{},total_cycles,efficiency,speedup\n",
            self.axis.name()
        );
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{}",
                r.benchmark, r.value, r.total_cycles, r.efficiency, r.speedup
            )
            .unwrap();
        }
        s
    }

    pub fn speedup(&self, benchmark: &str, value: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.benchmark == benchmark && r.value == value)
            .map(|r| r.speedup)
    }
}

/// Joins sweeps over the same axis, normalizing each series' cycles to its
/// first point.
pub fn compare_runs(results: &[SweepResult]) -> Result<Comparison> {
    let first = results
        .first()
        .ok_or_else(|| Error::invalid("nothing to compare"))?;
    let mut rows = Vec::new();
    for r in results {
        if r.axis != first.axis {
            return Err(Error::invalid(format!(
                "cannot compare a {} sweep with a {} sweep",
                r.axis.name(),
                first.axis.name()
            )));
        }
        let mut base = None;
        for (v, p) in r.ok_points() {
            let base_cycles = *base.get_or_insert(p.total_cycles);
            let speedup = if p.total_cycles == 0 {
                1.0
            } else {
                base_cycles as f64 / p.total_cycles as f64
            };
            rows.push(ComparisonRow {
                benchmark: r.benchmark.clone(),
                value: v,
                total_cycles: p.total_cycles,
                efficiency: p.efficiency,
                speedup,
            });
        }
    }
    Ok(Comparison {
        axis: first.axis,
        rows,
    })
}

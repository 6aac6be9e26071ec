//! Event-count energy estimate.
//!
//! Every counter in [`SimStats`] is multiplied by a per-event energy. Register
//! file accesses are priced as 32-bit SRAM reads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{SimConfig, SimStats};

const PJ: f64 = 1e-12;

/// System-level SRAM-over-DRAM saving used in the savings breakdown. It is
/// smaller than the 128x per-access device ratio of the default table.
pub const SRAM_VS_DRAM_FACTOR: f64 = 120.0;

/// Per-event energies in picojoules (45 nm figures).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub int_add: f64,
    pub float_add: f64,
    pub int_mult: f64,
    pub float_mult: f64,
    pub sram_read_32b: f64,
    pub dram_read_32b: f64,
    /// Energy of one SRAM read of the given width in bits.
    pub sram_read: BTreeMap<usize, f64>,
}

impl Default for EnergyTable {
    fn default() -> Self {
        let sram_read_32b = 5.0;
        // Placeholder: linear in width.
        let sram_read = (3..=10)
            .map(|k| 1usize << k)
            .map(|w| (w, sram_read_32b * w as f64 / 32.0))
            .collect();
        EnergyTable {
            int_add: 0.1,
            float_add: 0.9,
            int_mult: 3.1,
            float_mult: 3.7,
            sram_read_32b,
            dram_read_32b: 640.0,
            sram_read,
        }
    }
}

impl EnergyTable {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("int_add", self.int_add),
            ("float_add", self.float_add),
            ("int_mult", self.int_mult),
            ("float_mult", self.float_mult),
            ("sram_read_32b", self.sram_read_32b),
            ("dram_read_32b", self.dram_read_32b),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a positive energy, got {v}"
                )));
            }
        }
        for (&w, &v) in &self.sram_read {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "sram_read_{w}b must be a positive energy, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// pJ for one SRAM read `width_bits` wide.
    pub fn sram_read_pj(&self, width_bits: usize) -> Result<f64> {
        if width_bits == 32 {
            return Ok(self
                .sram_read
                .get(&32)
                .copied()
                .unwrap_or(self.sram_read_32b));
        }
        self.sram_read.get(&width_bits).copied().ok_or_else(|| {
            Error::Config(format!(
                "energy table has no entry for {width_bits}-bit SRAM reads"
            ))
        })
    }

    pub fn dram_to_sram_ratio(&self) -> f64 {
        self.dram_read_32b / self.sram_read_32b
    }

    /// Applies overrides from a JSON object of `event name -> pJ`. Width
    /// entries are named `sram_read_<bits>b`.
    pub fn with_overrides(mut self, json: &str) -> Result<Self> {
        let map: BTreeMap<String, f64> =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("energy table: {e}")))?;
        for (key, v) in map {
            match key.as_str() {
                "int_add" => self.int_add = v,
                "float_add" => self.float_add = v,
                "int_mult" => self.int_mult = v,
                "float_mult" => self.float_mult = v,
                "sram_read_32b" => {
                    self.sram_read_32b = v;
                    self.sram_read.insert(32, v);
                }
                "dram_read_32b" => self.dram_read_32b = v,
                other => {
                    let width = other
                        .strip_prefix("sram_read_")
                        .and_then(|s| s.strip_suffix('b'))
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| {
                            Error::Config(format!("unknown energy table key {other:?}"))
                        })?;
                    self.sram_read.insert(width, v);
                }
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Energy of one simulated layer, in joules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub weight_fetch: f64,
    pub pointer_fetch: f64,
    pub activation: f64,
    pub arithmetic: f64,
    pub total: f64,
    /// Same weight bits fetched from DRAM instead of SRAM.
    pub dram_weight_fetch: f64,
    /// `total` with the weight term replaced by `dram_weight_fetch`.
    pub dram_counterfactual_total: f64,
}

impl EnergyReport {
    pub fn csv_header() -> &'static str {
        "weight_fetch_j,pointer_fetch_j,activation_j,arithmetic_j,total_j,dram_weight_fetch_j,dram_counterfactual_total_j"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.weight_fetch,
            self.pointer_fetch,
            self.activation,
            self.arithmetic,
            self.total,
            self.dram_weight_fetch,
            self.dram_counterfactual_total
        )
    }
}

pub fn estimate_energy(s: &SimStats, cfg: &SimConfig, t: &EnergyTable) -> Result<EnergyReport> {
    let row_pj = t.sram_read_pj(cfg.sram_width_bits)?;
    let word_pj = t.sram_read_pj(32)?;
    let weight_fetch = s.spmat_sram_row_reads as f64 * row_pj * PJ;
    let pointer_fetch = s.ptr_sram_reads as f64 * word_pj * PJ;
    let activation = s.act_accesses() as f64 * word_pj * PJ;
    let arithmetic = s.mac_count as f64 * (t.int_mult + t.int_add) * PJ;
    let total = weight_fetch + pointer_fetch + activation + arithmetic;
    let dram_weight_fetch = weight_fetch * t.dram_read_32b / word_pj;
    Ok(EnergyReport {
        weight_fetch,
        pointer_fetch,
        activation,
        arithmetic,
        total,
        dram_weight_fetch,
        dram_counterfactual_total: total - weight_fetch + dram_weight_fetch,
    })
}

/// Multiplicative breakdown of the theoretical saving over a dense,
/// 32-bit, DRAM-resident baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SavingsDecomposition {
    pub sram_vs_dram: f64,
    pub pruning: f64,
    pub weight_width: f64,
    pub act_sparsity: f64,
    pub product: f64,
}

pub fn savings_decomposition(
    weight_density: f64,
    act_density: f64,
    bits_per_weight: u32,
) -> Result<SavingsDecomposition> {
    for (name, d) in [
        ("weight_density", weight_density),
        ("act_density", act_density),
    ] {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::invalid(format!("{name} must be in (0, 1], got {d}")));
        }
    }
    if !(1..=32).contains(&bits_per_weight) {
        return Err(Error::invalid(format!(
            "bits_per_weight must be in 1..=32, got {bits_per_weight}"
        )));
    }
    let sram_vs_dram = SRAM_VS_DRAM_FACTOR;
    let pruning = 1.0 / weight_density;
    let weight_width = 32.0 / bits_per_weight as f64;
    let act_sparsity = 1.0 / act_density;
    Ok(SavingsDecomposition {
        sram_vs_dram,
        pruning,
        weight_width,
        act_sparsity,
        product: sram_vs_dram * pruning * weight_width * act_sparsity,
    })
}

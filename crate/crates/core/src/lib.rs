//! Compressed sparse fully-connected layers: magnitude pruning, 4-bit
//! weight sharing, an interleaved relative-indexed CSC encoding, a bit-exact
//! fixed-point engine, and a cycle-level model of a PE-array accelerator
//! with an event-count energy estimate.

pub mod bench;
pub mod compress;
pub mod container;
pub mod csc;
pub mod energy;
pub mod engine;
pub mod error;
pub mod fixed;
pub mod io;
pub mod sim;

pub use compress::{
    build_codebook, dequantize, prune_magnitude, quantize, Codebook, DenseMatrix,
    QuantizedSparseMatrix, SparsityMask,
};
pub use csc::{
    decode_blocked, decode_interleaved, encode_blocked, encode_fitting, encode_interleaved,
    padding_stats, padding_stats_blocked, validate, validate_blocked, BlockedCsc, Entry,
    InterleavedCsc, PeSlice,
};
pub use energy::{estimate_energy, savings_decomposition, EnergyReport, EnergyTable};
pub use engine::{
    quantize_activations, spmv_blocked, spmv_compressed, spmv_dense_oracle, ActivationVector,
};
pub use error::{Error, Result};
pub use fixed::FixedPointFormat;
pub use sim::{
    load_efficiency, simulate, simulate_blocked, theoretical_cycles, SimConfig, SimStats,
};

//! Leading non-zero detection.
//!
//! The hardware finds the next non-zero activation with a quadtree of
//! 4-input LNZD nodes rooted at the CCU. Only the result matters here; the
//! tree's latency is part of `SimConfig::broadcast_latency`.

use crate::engine::ActivationVector;

/// Smallest `j >= from` with `a_j != 0`, or `None` once the vector is exhausted.
pub fn lnzd_scan(a: &ActivationVector, from: usize) -> Option<(usize, i16)> {
    a.values()
        .get(from..)?
        .iter()
        .position(|&v| v != 0)
        .map(|k| (from + k, a.values()[from + k]))
}

/// LNZD nodes in a quadtree over `n_pe` leaves (one node per group of four).
pub fn lnzd_node_count(n_pe: usize) -> usize {
    let mut nodes = 0;
    let mut level = n_pe;
    while level > 1 {
        level = level.div_ceil(4);
        nodes += level;
    }
    nodes.max(1)
}

//! File formats: Matrix Market matrices, activation vectors and
//! simulation statistics.
//!
//! Activation files come in two flavours:
//!
//! * text: one real number per line (blank lines and `#` comments ignored);
//! * raw: the ASCII header `EIEA <len> <fraction_bits>\n` followed by
//!   `len` little-endian `i16` values.

use std::fmt::Write as _;

use crate::compress::DenseMatrix;
use crate::engine::{quantize_activations, ActivationVector};
use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::sim::{load_efficiency, SimStats};

/// Parses a real Matrix Market file (`array` or `coordinate`, `general` or
/// `symmetric`) into a dense matrix.
pub fn read_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines();
    let banner = lines
        .next()
        .ok_or_else(|| Error::format("empty Matrix Market file"))?;
    let fields: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::format(format!(
            "bad Matrix Market banner: {banner:?}"
        )));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::format(format!("unsupported storage {other:?}"))),
    };
    if !matches!(fields[3].as_str(), "real" | "integer" | "double") {
        return Err(Error::format(format!(
            "unsupported field type {:?}",
            fields[3]
        )));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::format(format!("unsupported symmetry {other:?}"))),
    };

    let mut data = lines
        .enumerate()
        .map(|(k, l)| (k + 2, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = data
        .next()
        .ok_or_else(|| Error::format("missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::format(format!("line {size_line}: bad size {t:?}")))
        })
        .collect::<Result<_>>()?;
    let (rows, cols) = match (coordinate, dims.as_slice()) {
        (true, &[r, c, _]) | (false, &[r, c]) => (r, c),
        _ => {
            return Err(Error::format(format!(
                "line {size_line}: malformed size line"
            )))
        }
    };
    if symmetric && rows != cols {
        return Err(Error::format("symmetric matrix must be square"));
    }
    let mut m = DenseMatrix::zeros(rows, cols)?;
    let number = |line: usize, t: &str| -> Result<f64> {
        let v: f64 = t
            .parse()
            .map_err(|_| Error::format(format!("line {line}: bad number {t:?}")))?;
        if !v.is_finite() {
            return Err(Error::format(format!("line {line}: non-finite value")));
        }
        Ok(v)
    };

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in data {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(Error::format(format!(
                    "line {line}: expected `row col value`"
                )));
            }
            let index = |s: &str, bound: usize| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&i| (1..=bound).contains(&i))
                    .map(|i| i - 1)
                    .ok_or_else(|| Error::format(format!("line {line}: index {s:?} out of range")))
            };
            let (i, j) = (index(t[0], rows)?, index(t[1], cols)?);
            let v = number(line, t[2])?;
            m.set(i, j, v);
            if symmetric {
                m.set(j, i, v);
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::format(format!(
                "expected {nnz} entries, found {seen}"
            )));
        }
    } else {
        // Column-major; a symmetric array lists only the lower triangle.
        let mut positions = (0..cols).flat_map(|j| {
            let start = if symmetric { j } else { 0 };
            (start..rows).map(move |i| (i, j))
        });
        let mut count = 0;
        for (line, l) in data {
            for t in l.split_whitespace() {
                let (i, j) = positions
                    .next()
                    .ok_or_else(|| Error::format(format!("line {line}: too many values")))?;
                let v = number(line, t)?;
                m.set(i, j, v);
                if symmetric {
                    m.set(j, i, v);
                }
                count += 1;
            }
        }
        if positions.next().is_some() {
            return Err(Error::format(format!("array ends after {count} values")));
        }
    }
    Ok(m)
}

/// Writes the non-zeros of `m` in coordinate format.
pub fn write_matrix_market(m: &DenseMatrix) -> String {
    let nnz = m.values().iter().filter(|&&v| v != 0.0).count();
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(s, "{} {} {}", m.rows(), m.cols(), nnz).unwrap();
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let v = m.get(i, j);
            if v != 0.0 {
                writeln!(s, "{} {} {}", i + 1, j + 1, v).unwrap();
            }
        }
    }
    s
}

const RAW_MAGIC: &str = "EIEA";

/// Reads a raw or text activation file. Text values are quantized to
/// `format`; the count of saturated values is returned alongside.
pub fn read_activations(
    bytes: &[u8],
    format: FixedPointFormat,
) -> Result<(ActivationVector, usize)> {
    if bytes.starts_with(RAW_MAGIC.as_bytes()) {
        return read_raw_activations(bytes).map(|a| (a, 0));
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::format("activation file is neither raw nor UTF-8 text"))?;
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::format(format!("line {}: bad activation {line:?}", k + 1)))?;
        values.push(v);
    }
    quantize_activations(&values, format)
}

fn read_raw_activations(bytes: &[u8]) -> Result<ActivationVector> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format("raw activation header has no newline"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::format("raw activation header is not ASCII"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (len, bits) = match parts.as_slice() {
        [RAW_MAGIC, len, bits] => (
            len.parse::<usize>()
                .map_err(|_| Error::format("bad length in raw activation header"))?,
            bits.parse::<u8>()
                .map_err(|_| Error::format("bad fraction bits in raw activation header"))?,
        ),
        _ => {
            return Err(Error::format(format!(
                "bad raw activation header {header:?}"
            )))
        }
    };
    let format = FixedPointFormat::new(bits).map_err(|e| Error::format(e.to_string()))?;
    let body = &bytes[nl + 1..];
    if body.len() != 2 * len {
        return Err(Error::format(format!(
            "raw activation body has {} bytes, header declares {len} values",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok(ActivationVector::new(format, values))
}

pub fn write_raw_activations(a: &ActivationVector) -> Vec<u8> {
    let mut out = format!("{RAW_MAGIC} {} {}\n", a.len(), a.format().fraction_bits()).into_bytes();
    for v in a.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// One real value per line, exact for the format's grid.
pub fn write_text_activations(a: &ActivationVector) -> String {
    let mut s = String::with_capacity(a.len() * 8);
    for v in a.to_real() {
        writeln!(s, "{v}").unwrap();
    }
    s
}

/// Statistics as a commented config line, a header row and one data row.
pub fn stats_csv(s: &SimStats) -> String {
    let mut out = String::new();
    if let Some(c) = &s.config {
        writeln!(
            out,
            "# n_pe={},fifo_depth={},sram_width_bits={},broadcast_latency={},clock_mhz={},reg_file_entries={}",
            c.n_pe, c.fifo_depth, c.sram_width_bits, c.broadcast_latency, c.clock_mhz, c.reg_file_entries
        )
        .unwrap();
    }
    let mut header = vec!["total_cycles".to_string()];
    header.extend((0..s.bubble_cycles.len()).map(|k| format!("bubble_cycles_pe_{k}")));
    header.extend(
        [
            "ptr_reads",
            "spmat_row_reads",
            "act_accesses",
            "macs",
            "padding_macs",
            "efficiency",
            "seconds",
        ]
        .map(String::from),
    );
    writeln!(out, "{}", header.join(",")).unwrap();
    let mut row = vec![s.total_cycles.to_string()];
    row.extend(s.bubble_cycles.iter().map(u64::to_string));
    row.extend([
        s.ptr_sram_reads.to_string(),
        s.spmat_sram_row_reads.to_string(),
        s.act_accesses().to_string(),
        s.mac_count.to_string(),
        s.padding_mac_count.to_string(),
        load_efficiency(s).aggregate.to_string(),
        format!("{:e}", s.seconds()),
    ]);
    writeln!(out, "{}", row.join(",")).unwrap();
    out
}

/// Full statistics plus derived efficiency and seconds, as pretty JSON.
pub fn stats_json(s: &SimStats) -> String {
    let eff = load_efficiency(s);
    let summary = serde_json::json!({
        "stats": s,
        "efficiency": eff.aggregate,
        "efficiency_per_pe": eff.per_pe,
        "seconds": s.seconds(),
    });
    serde_json::to_string_pretty(&summary).expect("stats serialize")
}

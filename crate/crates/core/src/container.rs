//! EIEC binary container.
//!
//! All integers are little-endian.
//!
//! ```text
//! "EIEC"            4 bytes
//! version           u16 (= 1)
//! rows, cols, n_pe  u32 each
//! fraction_bits     u8
//! codebook          16 x i16
//! block_cols        u32
//! for each column block, for each PE:
//!     p             (block width + 1) x u16
//!     entries       p[last] bytes, low nibble v, high nibble z
//! crc32             u32 over every preceding byte
//! ```

use crate::compress::{Codebook, CODEBOOK_SIZE};
use crate::csc::{validate_blocked, BlockedCsc, Entry, InterleavedCsc, PeSlice};
use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;

pub const MAGIC: &[u8; 4] = b"EIEC";
pub const VERSION: u16 = 1;

/// An encoded layer together with its codebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EiecContainer {
    pub layer: BlockedCsc,
    pub codebook: Codebook,
}

impl EiecContainer {
    pub fn new(layer: BlockedCsc, codebook: Codebook) -> Self {
        EiecContainer { layer, codebook }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let l = &self.layer;
        let mut out = Vec::with_capacity(64 + l.stored_entries() + 2 * l.cols() * l.n_pe());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for dim in [l.rows(), l.cols(), l.n_pe()] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.push(self.codebook.format().fraction_bits());
        for &w in self.codebook.entries() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&(l.block_cols() as u32).to_le_bytes());
        for blk in l.blocks() {
            for slice in blk.slices() {
                for &p in slice.ptr() {
                    out.extend_from_slice(&p.to_le_bytes());
                }
                out.extend(slice.entries().iter().map(|e| e.byte()));
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses and validates a container. Fails on a bad CRC, truncation,
    /// trailing bytes or any encoding violation.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::format("container is truncated"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if body.len() < 4 || &body[..4] != MAGIC {
            return Err(Error::format("bad magic, not an EIEC container"));
        }
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::format(format!(
                "CRC mismatch: stored {stored:08x}, computed {actual:08x}"
            )));
        }

        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported container version {version}"
            )));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let n_pe = r.u32()? as usize;
        if n_pe == 0 {
            return Err(Error::format("container declares zero PEs"));
        }
        let format = FixedPointFormat::new(r.u8()?).map_err(|e| Error::format(e.to_string()))?;
        let mut entries = [0i16; CODEBOOK_SIZE];
        for e in &mut entries {
            *e = r.u16()? as i16;
        }
        let codebook = Codebook::new(format, entries).map_err(|e| Error::format(e.to_string()))?;
        let block_cols = r.u32()? as usize;
        if block_cols == 0 {
            return Err(Error::format("block width is zero"));
        }

        let widths: Vec<usize> = if cols == 0 {
            vec![0]
        } else {
            (0..cols)
                .step_by(block_cols)
                .map(|s| block_cols.min(cols - s))
                .collect()
        };
        let mut blocks = Vec::with_capacity(widths.len());
        for &w in &widths {
            let mut slices = Vec::with_capacity(n_pe);
            for _ in 0..n_pe {
                let ptr = (0..=w).map(|_| r.u16()).collect::<Result<Vec<_>>>()?;
                let len = *ptr.last().unwrap() as usize;
                let entries = r.bytes(len)?.iter().map(|&b| Entry::from_byte(b)).collect();
                slices.push(PeSlice::from_parts(ptr, entries));
            }
            blocks.push(InterleavedCsc::from_parts(rows, w, n_pe, slices));
        }
        if r.pos != body.len() {
            return Err(Error::format(format!(
                "{} trailing bytes",
                body.len() - r.pos
            )));
        }
        let layer = if cols == 0 {
            BlockedCsc::from(blocks.pop().unwrap())
        } else {
            BlockedCsc::from_blocks(block_cols, blocks)?
        };
        if let Some(v) = validate_blocked(&layer).into_iter().next() {
            return Err(Error::format(v));
        }
        Ok(EiecContainer { layer, codebook })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| Error::format(format!("container truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::QuantizedSparseMatrix;
    use crate::csc::encode_blocked;

    fn sample() -> EiecContainer {
        let mut entries = [0i16; 16];
        for (i, e) in entries.iter_mut().enumerate() {
            *e = i as i16 * 3 - 20;
        }
        entries[0] = 0;
        let cb = Codebook::new(FixedPointFormat::default(), entries).unwrap();
        let columns: Vec<Vec<(u32, u8)>> = (0..7)
            .map(|j| {
                (0..40u32)
                    .filter(|i| (i * 7 + j) % 5 == 0)
                    .map(|i| (i, (i % 15 + 1) as u8))
                    .collect()
            })
            .collect();
        let q = QuantizedSparseMatrix::from_columns(40, cb, &columns).unwrap();
        EiecContainer::new(encode_blocked(&q, 3, 3).unwrap(), cb)
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..4], b"EIEC");
        assert_eq!(EiecContainer::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn corruption_is_rejected() {
        let bytes = sample().to_bytes();
        for i in [0, 5, 20, bytes.len() / 2, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[i] ^= 0x40;
            assert!(
                EiecContainer::from_bytes(&bad).is_err(),
                "flip at {i} accepted"
            );
        }
        assert!(EiecContainer::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn invalid_layout_with_good_crc_is_rejected() {
        let c = sample();
        let mut body = c.to_bytes();
        body.truncate(body.len() - 4);
        // First pointer of the first slice must be zero.
        let first_ptr = 4 + 2 + 12 + 1 + 32 + 4;
        body[first_ptr] = 1;
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            EiecContainer::from_bytes(&body),
            Err(Error::Format(_))
        ));
    }
}

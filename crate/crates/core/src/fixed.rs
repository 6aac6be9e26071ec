//! 16-bit signed fixed-point arithmetic.
//!
//! Weights and activations share one [`FixedPointFormat`] (Q(15-f).f, two's
//! complement). Products are formed in Q(2f) and summed in 64-bit
//! accumulators; [`FixedPointFormat::narrow`] is the single place where a
//! wide accumulator is brought back to 16 bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOTAL_BITS: u32 = 16;
pub const DEFAULT_FRACTION_BITS: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    fraction_bits: u8,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        FixedPointFormat {
            fraction_bits: DEFAULT_FRACTION_BITS,
        }
    }
}

impl FixedPointFormat {
    pub fn new(fraction_bits: u8) -> Result<Self> {
        if fraction_bits > 15 {
            return Err(Error::Config(format!(
                "fraction bits must be in 0..=15, got {fraction_bits}"
            )));
        }
        Ok(FixedPointFormat { fraction_bits })
    }

    pub fn fraction_bits(self) -> u8 {
        self.fraction_bits
    }

    /// Scale of one unit in the last place, i.e. 2^f.
    pub fn scale(self) -> f64 {
        (1u32 << self.fraction_bits) as f64
    }

    /// Raw representation of 1.0, saturated when f = 15.
    pub fn one(self) -> i16 {
        (1i32 << self.fraction_bits).min(i16::MAX as i32) as i16
    }

    /// Converts a real number with round-to-nearest-even and saturation.
    /// The flag reports whether saturation happened. NaN maps to zero.
    pub fn quantize(self, x: f64) -> (i16, bool) {
        if x.is_nan() {
            return (0, false);
        }
        let scaled = (x * self.scale()).round_ties_even();
        if scaled > i16::MAX as f64 {
            (i16::MAX, true)
        } else if scaled < i16::MIN as f64 {
            (i16::MIN, true)
        } else {
            (scaled as i16, false)
        }
    }

    pub fn to_real(self, raw: i16) -> f64 {
        raw as f64 / self.scale()
    }

    /// Real value of a Q(2f) accumulator.
    pub fn wide_to_real(self, acc: i64) -> f64 {
        acc as f64 / (self.scale() * self.scale())
    }

    /// Q(2f) accumulator -> Q(f) 16-bit: shift right by f with
    /// round-to-nearest-even, then saturate.
    pub fn narrow(self, acc: i64) -> i16 {
        let shifted = round_shift_even(acc, self.fraction_bits as u32);
        shifted.clamp(i16::MIN as i64, i16::MAX as i64) as i16
    }

    /// Exact raw value of `x` if it lies on this format's grid and in range.
    pub fn exact_raw(self, x: f64) -> Option<i16> {
        let scaled = x * self.scale();
        if scaled.fract() != 0.0 || scaled < i16::MIN as f64 || scaled > i16::MAX as f64 {
            return None;
        }
        Some(scaled as i16)
    }
}

/// `value / 2^shift` rounded to nearest, ties to even.
pub fn round_shift_even(value: i64, shift: u32) -> i64 {
    if shift == 0 {
        return value;
    }
    let floor = value >> shift;
    let rem = value - (floor << shift);
    let half = 1i64 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Q(2f) product of two Q(f) values.
#[inline]
pub fn mul_wide(a: i16, b: i16) -> i64 {
    a as i64 * b as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q8() -> FixedPointFormat {
        FixedPointFormat::default()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(q8().quantize(0.0), (0, false));
        assert_eq!(q8().quantize(1.0), (256, false));
        assert_eq!(q8().quantize(200.0), (32767, true));
        assert_eq!(q8().quantize(-200.0), (-32768, true));
        // 0.5 ulp ties go to even.
        assert_eq!(q8().quantize(0.5 / 256.0), (0, false));
        assert_eq!(q8().quantize(1.5 / 256.0), (2, false));
        assert_eq!(q8().quantize(-1.5 / 256.0), (-2, false));
    }

    #[test]
    fn rejects_wide_fraction() {
        assert!(FixedPointFormat::new(16).is_err());
        assert!(FixedPointFormat::new(15).is_ok());
    }

    #[test]
    fn round_shift_matches_real_rounding() {
        for v in -5000i64..5000 {
            for s in 0..6u32 {
                let exact = v as f64 / (1u64 << s) as f64;
                assert_eq!(
                    round_shift_even(v, s),
                    exact.round_ties_even() as i64,
                    "{v} >> {s}"
                );
            }
        }
    }

    #[test]
    fn narrow_quarter() {
        // 0.5 * 0.5 at Q8.8: 128 * 128 = 16384 in Q16 = 0.25 -> raw 64.
        let f = q8();
        assert_eq!(f.narrow(mul_wide(128, 128)), 64);
        assert_eq!(f.narrow(i64::MAX), i16::MAX);
        assert_eq!(f.narrow(i64::MIN), i16::MIN);
    }

    #[test]
    fn exact_raw_grid() {
        assert_eq!(q8().exact_raw(0.25), Some(64));
        assert_eq!(q8().exact_raw(0.3), None);
        assert_eq!(q8().exact_raw(1000.0), None);
    }
}

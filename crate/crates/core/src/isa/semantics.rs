//! Value-level semantics of the ternary instructions.

use crate::codec::{self, CodecError};

use super::IsaError;

/// 20-lane ternary dot product. Result lies in `[-20, 20]`.
#[inline]
pub fn exec_dotsp_t(a: u32, b: u32) -> Result<i32, CodecError> {
    let ta = codec::unpack_word_values(a)?;
    let tb = codec::unpack_word_values(b)?;
    Ok(ta.iter().zip(&tb).map(|(&x, &y)| (x * y) as i32).sum())
}

/// `acc + dotsp(a, b)` with 32-bit wrap-around.
#[inline]
pub fn exec_sdotsp_t(acc: i32, a: u32, b: u32) -> Result<i32, CodecError> {
    Ok(acc.wrapping_add(exec_dotsp_t(a, b)?))
}

fn lanewise(a: u32, b: u32, f: fn(i8, i8) -> i8) -> Result<u32, CodecError> {
    let ta = codec::unpack_word_values(a)?;
    let tb = codec::unpack_word_values(b)?;
    let mut out = [0i8; 20];
    for (o, (&x, &y)) in out.iter_mut().zip(ta.iter().zip(&tb)) {
        *o = f(x, y);
    }
    let bytes: [u8; 4] = std::array::from_fn(|k| codec::compress_values(&out[5 * k..5 * k + 5]));
    Ok(u32::from_le_bytes(bytes))
}

pub fn exec_min_t(a: u32, b: u32) -> Result<u32, CodecError> {
    lanewise(a, b, std::cmp::min)
}

pub fn exec_max_t(a: u32, b: u32) -> Result<u32, CodecError> {
    lanewise(a, b, std::cmp::max)
}

/// Threshold register: `t_lo` in bits 31:16, `t_hi` in bits 15:0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ThresholdPair {
    pub lo: i16,
    pub hi: i16,
}

impl ThresholdPair {
    pub fn new(lo: i16, hi: i16) -> Self {
        Self { lo, hi }
    }

    pub fn from_reg(r: u32) -> Self {
        Self {
            lo: (r >> 16) as u16 as i16,
            hi: r as u16 as i16,
        }
    }

    pub fn to_reg(self) -> u32 {
        (self.lo as u16 as u32) << 16 | self.hi as u16 as u32
    }

    /// Activation cascade: `-1` below `lo`, `+1` at or above `hi`, else `0`.
    /// Applied literally, so `lo > hi` leaves an empty zero band.
    #[inline]
    pub fn apply(self, z: i32) -> i8 {
        if z < self.lo as i32 {
            -1
        } else if z < self.hi as i32 {
            0
        } else {
            1
        }
    }
}

/// Status register of `thrc`.
///
/// ```text
///  31  29 28  26 25          16 15    8 7        0
/// | c    | 0    | uncompressed | 0      | compressed |
/// ```
///
/// `uncompressed` holds up to five 2-bit two's-complement trits, trit `i`
/// at bits `2i+1:2i` of the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ThrcStatus(u32);

const RESERVED_MASK: u32 = 0b111 << 26 | 0xff << 8;

impl ThrcStatus {
    pub const RESET: ThrcStatus = ThrcStatus(0);

    /// Validate a raw register value.
    pub fn from_reg(r: u32) -> Result<Self, IsaError> {
        let s = ThrcStatus(r);
        let lanes_ok = (0..5).all(|i| (s.uncompressed() >> (2 * i)) & 0b11 != 0b10);
        if s.counter() > 4 || r & RESERVED_MASK != 0 || !lanes_ok {
            return Err(IsaError::MalformedStatus(r));
        }
        Ok(s)
    }

    pub fn to_reg(self) -> u32 {
        self.0
    }

    pub fn counter(self) -> u32 {
        self.0 >> 29
    }

    pub fn uncompressed(self) -> u32 {
        (self.0 >> 16) & 0x3ff
    }

    pub fn compressed(self) -> u8 {
        self.0 as u8
    }

    /// Trit values currently held in `uncompressed`.
    pub fn trits(self) -> [i8; 5] {
        let u = self.uncompressed();
        std::array::from_fn(|i| match (u >> (2 * i)) & 0b11 {
            0b01 => 1,
            0b11 => -1,
            _ => 0,
        })
    }
}

/// One `thrc` step: threshold `z`, merge the trit at position `counter`,
/// recompress, advance the counter (wrapping after five).
pub fn exec_thrc(status: ThrcStatus, z: i32, th: ThresholdPair) -> Result<ThrcStatus, IsaError> {
    let status = ThrcStatus::from_reg(status.0)?;
    let c = status.counter();
    let trit = th.apply(z);
    // extend to the 10-bit field, two's complement per lane
    let lane = (trit as i32 as u32) & 0b11;
    // a counter of zero starts a fresh block
    let base = if c == 0 { 0 } else { status.uncompressed() };
    let merged = base | lane << (2 * c);
    let merged_status = ThrcStatus(merged << 16);
    let compressed = codec::compress_values(&merged_status.trits());
    let next = (c + 1) % 5;
    Ok(ThrcStatus(next << 29 | merged << 16 | compressed as u32))
}

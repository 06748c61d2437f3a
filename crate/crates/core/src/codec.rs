//! Ternary compression: five trits per byte, twenty trits per 32-bit word.
//!
//! A block of five trits `(t0, .., t4)` (index 0 lowest order) maps to the
//! byte `sum((t_i + 1) * 3^i)`, an offset base-3 positional code covering the
//! 243 code points `0..=242`. Bytes `243..=255` are not valid encodings.
//!
//! ```text
//! (-1,-1,-1,-1,-1) -> 0
//! ( 0, 0, 0, 0, 0) -> 121
//! ( 1, 1, 1, 1, 1) -> 242
//! ```
//!
//! A packed word holds four compressed bytes in little-endian order, so byte
//! `k` carries trits `5k..5k+4`.

use std::fmt;

use thiserror::Error;

/// Number of valid code points (3^5).
pub const CODE_POINTS: usize = 243;
/// Largest valid compressed byte.
pub const MAX_CODE: u8 = 242;
/// Compressed byte for five zero trits.
pub const ZERO_BYTE: u8 = 121;
/// Packed word for twenty zero trits.
pub const ZERO_WORD: u32 = 0x7979_7979;

pub const TRITS_PER_BYTE: usize = 5;
pub const TRITS_PER_WORD: usize = 20;

const BLOB_MAGIC: &[u8; 4] = b"TRIT";
pub const BLOB_HEADER_LEN: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid compressed byte {byte:#04x} at byte index {index}")]
    InvalidCodePoint { byte: u8, index: usize },
    #[error("channel count {0} is not a multiple of 5")]
    ChannelCountNotMultipleOf5(usize),
    #[error("value {value} at index {index} is not in {{-1, 0, 1}}")]
    ValueOutOfTernaryRange { value: i32, index: usize },
    #[error("expected {expected} values for shape, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("malformed tensor blob: {0}")]
    Blob(String),
}

/// A single ternary digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(i8)]
pub enum Trit {
    Neg = -1,
    #[default]
    Zero = 0,
    Pos = 1,
}

impl Trit {
    pub const ALL: [Trit; 3] = [Trit::Neg, Trit::Zero, Trit::Pos];

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn from_i8(v: i8) -> Option<Trit> {
        match v {
            -1 => Some(Trit::Neg),
            0 => Some(Trit::Zero),
            1 => Some(Trit::Pos),
            _ => None,
        }
    }

    /// Offset digit `t + 1` in `0..=2`.
    #[inline]
    fn digit(self) -> u8 {
        (self as i8 + 1) as u8
    }
}

impl TryFrom<i32> for Trit {
    type Error = CodecError;

    fn try_from(v: i32) -> Result<Self, Self::Error> {
        i8::try_from(v)
            .ok()
            .and_then(Trit::from_i8)
            .ok_or(CodecError::ValueOutOfTernaryRange { value: v, index: 0 })
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trit::Neg => f.write_str("-"),
            Trit::Zero => f.write_str("0"),
            Trit::Pos => f.write_str("+"),
        }
    }
}

/// Five trits, index 0 lowest order.
pub type TritBlock5 = [Trit; 5];

/// Decoded trit values for every valid byte, built once.
static DECODE_LUT: [[i8; 5]; CODE_POINTS] = build_decode_lut();

const fn build_decode_lut() -> [[i8; 5]; CODE_POINTS] {
    let mut lut = [[0i8; 5]; CODE_POINTS];
    let mut b = 0;
    while b < CODE_POINTS {
        let mut v = b;
        let mut i = 0;
        while i < 5 {
            lut[b][i] = (v % 3) as i8 - 1;
            v /= 3;
            i += 1;
        }
        b += 1;
    }
    lut
}

#[inline]
pub fn compress_block5(block: &TritBlock5) -> u8 {
    block.iter().rev().fold(0u8, |acc, t| acc * 3 + t.digit())
}

pub fn decompress_byte(b: u8) -> Result<TritBlock5, CodecError> {
    let v = decode_values(b, 0)?;
    Ok(v.map(|x| Trit::from_i8(x).unwrap_or_default()))
}

/// Decode a byte straight to `i8` trit values. `index` only labels errors.
#[inline]
pub fn decode_values(b: u8, index: usize) -> Result<[i8; 5], CodecError> {
    DECODE_LUT
        .get(b as usize)
        .copied()
        .ok_or(CodecError::InvalidCodePoint { byte: b, index })
}

/// Compress five trit values given as integers. Values must already be ternary.
#[inline]
pub(crate) fn compress_values(v: &[i8]) -> u8 {
    debug_assert_eq!(v.len(), 5);
    v.iter().rev().fold(0u8, |acc, &t| acc * 3 + (t + 1) as u8)
}

pub fn pack_word(trits: &[Trit; TRITS_PER_WORD]) -> u32 {
    let mut bytes = [0u8; 4];
    for (k, chunk) in trits.chunks_exact(5).enumerate() {
        let block: TritBlock5 = chunk.try_into().expect("chunk of 5");
        bytes[k] = compress_block5(&block);
    }
    u32::from_le_bytes(bytes)
}

pub fn unpack_word(w: u32) -> Result<[Trit; TRITS_PER_WORD], CodecError> {
    let v = unpack_word_values(w)?;
    Ok(v.map(|x| Trit::from_i8(x).unwrap_or_default()))
}

/// Unpack a word to integer trit values; errors name the offending byte index.
#[inline]
pub fn unpack_word_values(w: u32) -> Result<[i8; TRITS_PER_WORD], CodecError> {
    let mut out = [0i8; TRITS_PER_WORD];
    for (k, b) in w.to_le_bytes().into_iter().enumerate() {
        out[5 * k..5 * k + 5].copy_from_slice(&decode_values(b, k)?);
    }
    Ok(out)
}

/// Compressed feature map or weight set, channel-minor: all channels of one
/// pixel are contiguous. One-dimensional data uses `height == 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl TernaryTensor {
    /// Wrap already-compressed bytes, checking shape and code points.
    pub fn from_bytes(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<u8>,
    ) -> Result<Self, CodecError> {
        if channels % 5 != 0 {
            return Err(CodecError::ChannelCountNotMultipleOf5(channels));
        }
        let expected = channels / 5 * height * width;
        if data.len() != expected {
            return Err(CodecError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some((index, &byte)) = data.iter().enumerate().find(|(_, &b)| b > MAX_CODE) {
            return Err(CodecError::InvalidCodePoint { byte, index });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// All-zero tensor.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self, CodecError> {
        if channels % 5 != 0 {
            return Err(CodecError::ChannelCountNotMultipleOf5(channels));
        }
        Ok(Self {
            channels,
            height,
            width,
            data: vec![ZERO_BYTE; channels / 5 * height * width],
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Compressed bytes per pixel (`channels / 5`).
    pub fn bytes_per_pixel(&self) -> usize {
        self.channels / 5
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> &[u8] {
        let n = self.bytes_per_pixel();
        let off = (y * self.width + x) * n;
        &self.data[off..off + n]
    }

    /// Serialize as a `TRIT` blob: 12-byte little-endian header then data.
    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BLOB_HEADER_LEN + self.data.len());
        out.extend_from_slice(BLOB_MAGIC);
        for v in [self.channels, self.height, self.width, 0] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    /// Parse a `TRIT` blob from the front of `buf`, returning the tensor and
    /// the number of bytes consumed.
    pub fn from_blob(buf: &[u8]) -> Result<(Self, usize), CodecError> {
        if buf.len() < BLOB_HEADER_LEN {
            return Err(CodecError::Blob(format!(
                "header needs {BLOB_HEADER_LEN} bytes, have {}",
                buf.len()
            )));
        }
        if &buf[..4] != BLOB_MAGIC {
            return Err(CodecError::Blob("bad magic, expected \"TRIT\"".into()));
        }
        let field = |i: usize| u16::from_le_bytes([buf[4 + 2 * i], buf[5 + 2 * i]]) as usize;
        let (c, h, w) = (field(0), field(1), field(2));
        if field(3) != 0 {
            return Err(CodecError::Blob("reserved header field is nonzero".into()));
        }
        if c % 5 != 0 {
            return Err(CodecError::ChannelCountNotMultipleOf5(c));
        }
        let len = c / 5 * h * w;
        let body = buf
            .get(BLOB_HEADER_LEN..BLOB_HEADER_LEN + len)
            .ok_or_else(|| {
                CodecError::Blob(format!(
                    "truncated: need {len} data bytes, have {}",
                    buf.len() - BLOB_HEADER_LEN
                ))
            })?;
        let t = Self::from_bytes(c, h, w, body.to_vec())?;
        Ok((t, BLOB_HEADER_LEN + len))
    }
}

/// Compress a channel-minor (HWC) tensor of values in `{-1, 0, 1}`.
pub fn compress_tensor(
    channels: usize,
    height: usize,
    width: usize,
    values: &[i8],
) -> Result<TernaryTensor, CodecError> {
    if channels % 5 != 0 {
        return Err(CodecError::ChannelCountNotMultipleOf5(channels));
    }
    let expected = channels * height * width;
    if values.len() != expected {
        return Err(CodecError::LengthMismatch {
            expected,
            actual: values.len(),
        });
    }
    if let Some((index, &v)) = values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(-1..=1).contains(&v))
    {
        return Err(CodecError::ValueOutOfTernaryRange {
            value: v as i32,
            index,
        });
    }
    let data = values.chunks_exact(5).map(compress_values).collect();
    Ok(TernaryTensor {
        channels,
        height,
        width,
        data,
    })
}

/// Decompress to channel-minor (HWC) trit values.
pub fn decompress_tensor(t: &TernaryTensor) -> Vec<i8> {
    let mut out = Vec::with_capacity(t.data.len() * 5);
    for &b in &t.data {
        // Construction validated every byte.
        out.extend_from_slice(&DECODE_LUT[b as usize]);
    }
    out
}

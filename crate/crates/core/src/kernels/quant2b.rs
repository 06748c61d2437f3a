//! Packed 2-bit tensors and their requantization parameters.

use crate::isa::xpulpnn::{byte_lanes, pack_byte, LANES_PER_BYTE};

use super::{KernelError, Result};

const BLOB_MAGIC: &[u8; 4] = b"CRMB";
pub const BLOB_HEADER_LEN: usize = 12;

/// Channel-minor tensor of signed 2-bit values in `[-2, 1]`, four per byte,
/// so sixteen per 32-bit word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTensor2b {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl QuantTensor2b {
    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: &[i8],
    ) -> Result<Self> {
        Self::check_channels(channels)?;
        if values.len() != channels * height * width {
            return Err(KernelError::Dimension(format!(
                "{} values for {channels}x{height}x{width}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(-2..=1).contains(*v)) {
            return Err(KernelError::Params(format!(
                "2-bit value {v} outside [-2, 1]"
            )));
        }
        let data = values.chunks_exact(LANES_PER_BYTE).map(pack_byte).collect();
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_bytes(channels: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        Self::check_channels(channels)?;
        if data.len() != channels / LANES_PER_BYTE * height * width {
            return Err(KernelError::Dimension(format!(
                "{} bytes for {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    fn check_channels(channels: usize) -> Result<()> {
        if channels % LANES_PER_BYTE != 0 {
            return Err(KernelError::Params(format!(
                "2-bit channels {channels} not a multiple of {LANES_PER_BYTE}"
            )));
        }
        Ok(())
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

    pub fn bytes_per_pixel(&self) -> usize {
        self.channels / LANES_PER_BYTE
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// HWC values.
    pub fn values(&self) -> Vec<i8> {
        self.data.iter().flat_map(|&b| byte_lanes(b)).collect()
    }

    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BLOB_HEADER_LEN + self.data.len());
        out.extend_from_slice(BLOB_MAGIC);
        for v in [self.channels, self.height, self.width, 0] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_blob(buf: &[u8]) -> Result<(Self, usize)> {
        let bad = |m: String| KernelError::Params(format!("2-bit blob: {m}"));
        if buf.len() < BLOB_HEADER_LEN {
            return Err(bad("truncated header".into()));
        }
        if &buf[..4] != BLOB_MAGIC {
            return Err(bad("bad magic, expected \"CRMB\"".into()));
        }
        let field = |i: usize| u16::from_le_bytes([buf[4 + 2 * i], buf[5 + 2 * i]]) as usize;
        let (c, h, w) = (field(0), field(1), field(2));
        if field(3) != 0 {
            return Err(bad("reserved header field is nonzero".into()));
        }
        Self::check_channels(c)?;
        let len = c / LANES_PER_BYTE * h * w;
        let body = buf
            .get(BLOB_HEADER_LEN..BLOB_HEADER_LEN + len)
            .ok_or_else(|| bad(format!("truncated: need {len} data bytes")))?;
        Ok((
            Self::from_bytes(c, h, w, body.to_vec())?,
            BLOB_HEADER_LEN + len,
        ))
    }
}

/// Per-channel `clip((s*z + b) >> d, -2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequantParams2b {
    pub s: i32,
    pub b: i32,
    pub d: u8,
}

impl RequantParams2b {
    pub fn new(s: i32, b: i32, d: u8) -> Result<Self> {
        if d >= 32 {
            return Err(KernelError::Params(format!("shift {d} must be below 32")));
        }
        Ok(Self { s, b, d })
    }

    /// Wrapping 32-bit multiply and add, arithmetic shift.
    #[inline]
    pub fn apply(self, z: i32) -> i8 {
        (self.s.wrapping_mul(z).wrapping_add(self.b) >> self.d).clamp(-2, 1) as i8
    }
}

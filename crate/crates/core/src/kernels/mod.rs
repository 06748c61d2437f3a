//! Layer kernels executed on the emulated cluster.
//!
//! Ternary kernels run `smlsdotsp.t`, `max.t` and `thrc`; the 2-bit baseline
//! runs the equivalent 16-lane instructions with an affine-shift-clip
//! requantization. Every kernel returns its output together with the trace of
//! issued instructions.

mod conv;
mod engine;
mod layout;
mod pool;
mod quant2b;
pub mod schedule;

use thiserror::Error;

use crate::codec::{CodecError, TernaryTensor};
use crate::isa::IsaError;
use crate::perf::KernelTrace;

pub use conv::{
    conv1d_dilated_ternary, conv2d_2bit, conv2d_ternary, fully_connected_2bit,
    fully_connected_ternary, im2col_2bit, im2col_ternary, matmul_ternary,
};
pub use layout::{copy_trace, pad_channels_2bit, pad_channels_ternary};
pub use pool::{maxpool2d_2bit, maxpool2d_ternary};
pub use quant2b::{QuantTensor2b, RequantParams2b};

pub use crate::isa::ThresholdPair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Isa(#[from] IsaError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    Same,
    Valid,
    /// All padding before the first sample, `(k-1)*dilation` positions.
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
}

impl ConvParams {
    pub fn new(in_ch: usize, out_ch: usize, k: usize, padding: Padding) -> Self {
        Self {
            in_ch,
            out_ch,
            kh: k,
            kw: k,
            stride: 1,
            dilation: 1,
            padding,
        }
    }

    /// 1-D kernel of width `k` along the width axis.
    pub fn conv1d(in_ch: usize, out_ch: usize, k: usize, dilation: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kh: 1,
            kw: k,
            stride: 1,
            dilation,
            padding: Padding::Causal,
        }
    }

    pub fn check(&self, channel_multiple: usize) -> Result<()> {
        if self.kh == 0 || self.kw == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(KernelError::Params(format!("degenerate kernel {self:?}")));
        }
        for (what, c) in [("input", self.in_ch), ("output", self.out_ch)] {
            if c == 0 || c % channel_multiple != 0 {
                return Err(KernelError::Params(format!(
                    "{what} channels {c} not a positive multiple of {channel_multiple}"
                )));
            }
        }
        Ok(())
    }

    /// `(out_h, out_w, pad_top, pad_left)` for an `h x w` input.
    pub fn output_geometry(&self, h: usize, w: usize) -> Result<(usize, usize, usize, usize)> {
        let (oh, pt) = out_and_pad(h, self.kh, self.stride, self.dilation, self.padding);
        let (ow, pl) = out_and_pad(w, self.kw, self.stride, self.dilation, self.padding);
        if oh == 0 || ow == 0 {
            return Err(KernelError::Dimension(format!(
                "{}x{} kernel does not fit {h}x{w} input",
                self.kh, self.kw
            )));
        }
        Ok((oh, ow, pt, pl))
    }

    pub fn macs(&self, out_pixels: usize) -> u64 {
        (out_pixels * self.out_ch * self.kh * self.kw * self.in_ch) as u64
    }
}

fn out_and_pad(n: usize, k: usize, s: usize, d: usize, pad: Padding) -> (usize, usize) {
    let span = (k - 1) * d + 1;
    match pad {
        Padding::Same => {
            let out = n.div_ceil(s);
            let total = ((out - 1) * s + span).saturating_sub(n);
            (out, total / 2)
        }
        Padding::Valid => (if n >= span { (n - span) / s + 1 } else { 0 }, 0),
        Padding::Causal => ((n - 1) / s + 1, span - 1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput<T> {
    pub output: T,
    pub trace: KernelTrace,
    /// Nominal multiply-accumulates, padding positions included.
    pub macs: u64,
}

/// Pack ternary weights given as `(out, kh*kw, in)` values into the layout the
/// kernels read: channels = in, height = out, width = kh*kw.
pub fn ternary_weights(
    out_ch: usize,
    kpos: usize,
    in_ch: usize,
    vals: &[i8],
) -> Result<TernaryTensor> {
    Ok(crate::codec::compress_tensor(in_ch, out_ch, kpos, vals)?)
}

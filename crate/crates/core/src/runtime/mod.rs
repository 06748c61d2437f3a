//! Layer graphs: container format, validation and end-to-end inference.

mod exec;
mod format;
mod validate;
pub mod zoo;

use thiserror::Error;

use crate::codec::TernaryTensor;
use crate::isa::ThresholdPair;
use crate::kernels::{ConvParams, KernelError, Padding, QuantTensor2b, RequantParams2b};

pub use exec::{run_inference, Inference, LayerRun, Session};
pub use format::{load_model, save_model, MAGIC, VERSION};
pub use validate::validate;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("invalid model:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("input shape mismatch: {0}")]
    Shape(String),
    #[error("layer {layer}: {source}")]
    Kernel { layer: usize, source: KernelError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d,
    Conv1dDilated,
    MaxPool,
    Fc,
    PadChannels,
    /// FIFO of the last `aux` input vectors, emitted as a `1 x aux` sequence,
    /// oldest first. State persists across runs of a [`Session`].
    History,
}

impl LayerKind {
    pub fn code(self) -> u8 {
        match self {
            LayerKind::Conv2d => 0,
            LayerKind::Conv1dDilated => 1,
            LayerKind::MaxPool => 2,
            LayerKind::Fc => 3,
            LayerKind::PadChannels => 4,
            LayerKind::History => 5,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => LayerKind::Conv2d,
            1 => LayerKind::Conv1dDilated,
            2 => LayerKind::MaxPool,
            3 => LayerKind::Fc,
            4 => LayerKind::PadChannels,
            5 => LayerKind::History,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::Conv1dDilated => "conv1d",
            LayerKind::MaxPool => "maxpool",
            LayerKind::Fc => "fc",
            LayerKind::PadChannels => "pad",
            LayerKind::History => "history",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Ternary,
    TwoBit,
    /// Raw 32-bit accumulators.
    IntOut,
}

impl Precision {
    pub fn code(self) -> u8 {
        match self {
            Precision::Ternary => 0,
            Precision::TwoBit => 1,
            Precision::IntOut => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => Precision::Ternary,
            1 => Precision::TwoBit,
            2 => Precision::IntOut,
            _ => return None,
        })
    }

    /// Channel granularity of packed tensors.
    pub fn channel_multiple(self) -> usize {
        match self {
            Precision::Ternary => 5,
            Precision::TwoBit => 4,
            Precision::IntOut => 1,
        }
    }
}

pub(crate) fn padding_code(p: Padding) -> u8 {
    match p {
        Padding::Same => 0,
        Padding::Valid => 1,
        Padding::Causal => 2,
    }
}

pub(crate) fn padding_from_code(c: u8) -> Option<Padding> {
    Some(match c {
        0 => Padding::Same,
        1 => Padding::Valid,
        2 => Padding::Causal,
        _ => return None,
    })
}

/// Weight tensor with channels = input channels, height = output channels,
/// width = kernel taps (or input pixels for FC).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Weights {
    None,
    Ternary(TernaryTensor),
    TwoBit(QuantTensor2b),
}

impl Weights {
    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        match self {
            Weights::None => None,
            Weights::Ternary(t) => Some(t.shape()),
            Weights::TwoBit(t) => Some(t.shape()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerParams {
    None,
    Thresholds(Vec<ThresholdPair>),
    Requant(Vec<RequantParams2b>),
}

impl LayerParams {
    pub fn len(&self) -> usize {
        match self {
            LayerParams::None => 0,
            LayerParams::Thresholds(v) => v.len(),
            LayerParams::Requant(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    pub precision: Precision,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
    /// History length for [`LayerKind::History`].
    pub aux: usize,
    pub weights: Weights,
    pub params: LayerParams,
}

impl Layer {
    fn bare(kind: LayerKind, precision: Precision, out_ch: usize) -> Self {
        Self {
            kind,
            precision,
            out_ch,
            kh: 1,
            kw: 1,
            stride: 1,
            dilation: 1,
            padding: Padding::Valid,
            aux: 0,
            weights: Weights::None,
            params: LayerParams::None,
        }
    }

    pub fn conv2d_ternary(
        w: TernaryTensor,
        k: usize,
        padding: Padding,
        th: Vec<ThresholdPair>,
    ) -> Self {
        let out_ch = w.height();
        Self {
            kh: k,
            kw: k,
            padding,
            weights: Weights::Ternary(w),
            params: LayerParams::Thresholds(th),
            ..Self::bare(LayerKind::Conv2d, Precision::Ternary, out_ch)
        }
    }

    pub fn conv2d_2bit(
        w: QuantTensor2b,
        k: usize,
        padding: Padding,
        rq: Vec<RequantParams2b>,
    ) -> Self {
        let out_ch = w.height();
        Self {
            kh: k,
            kw: k,
            padding,
            weights: Weights::TwoBit(w),
            params: LayerParams::Requant(rq),
            ..Self::bare(LayerKind::Conv2d, Precision::TwoBit, out_ch)
        }
    }

    pub fn conv1d_ternary(
        w: TernaryTensor,
        k: usize,
        dilation: usize,
        th: Vec<ThresholdPair>,
    ) -> Self {
        let out_ch = w.height();
        Self {
            kw: k,
            dilation,
            padding: Padding::Causal,
            weights: Weights::Ternary(w),
            params: LayerParams::Thresholds(th),
            ..Self::bare(LayerKind::Conv1dDilated, Precision::Ternary, out_ch)
        }
    }

    pub fn maxpool(precision: Precision, channels: usize, k: usize, stride: usize) -> Self {
        Self {
            kh: k,
            kw: k,
            stride,
            ..Self::bare(LayerKind::MaxPool, precision, channels)
        }
    }

    pub fn pad_channels(precision: Precision, target: usize) -> Self {
        Self::bare(LayerKind::PadChannels, precision, target)
    }

    pub fn history(precision: Precision, channels: usize, frames: usize) -> Self {
        Self {
            aux: frames,
            ..Self::bare(LayerKind::History, precision, channels)
        }
    }

    pub fn fc(weights: Weights) -> Self {
        let out_ch = match &weights {
            Weights::Ternary(t) => t.height(),
            Weights::TwoBit(t) => t.height(),
            Weights::None => 0,
        };
        Self {
            weights,
            ..Self::bare(LayerKind::Fc, Precision::IntOut, out_ch)
        }
    }

    pub fn conv_params(&self, in_ch: usize) -> ConvParams {
        ConvParams {
            in_ch,
            out_ch: self.out_ch,
            kh: self.kh,
            kw: self.kw,
            stride: self.stride,
            dilation: self.dilation,
            padding: self.padding,
        }
    }
}

/// Input description plus ordered layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelGraph {
    pub input_precision: Precision,
    /// `(channels, height, width)`
    pub input: (usize, usize, usize),
    pub layers: Vec<Layer>,
}

/// A packed feature map of either precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tensor {
    Ternary(TernaryTensor),
    TwoBit(QuantTensor2b),
}

impl Tensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        match self {
            Tensor::Ternary(t) => t.shape(),
            Tensor::TwoBit(t) => t.shape(),
        }
    }

    pub fn precision(&self) -> Precision {
        match self {
            Tensor::Ternary(_) => Precision::Ternary,
            Tensor::TwoBit(_) => Precision::TwoBit,
        }
    }

    /// Parse exactly one `TRIT` or `CRMB` blob.
    pub fn from_blob(buf: &[u8]) -> Result<Self, ModelError> {
        let mut v = Self::from_blobs(buf)?;
        if v.len() != 1 {
            return Err(ModelError::Parse {
                offset: 0,
                msg: format!("expected one tensor, found {}", v.len()),
            });
        }
        Ok(v.remove(0))
    }

    /// Parse one or more concatenated blobs.
    pub fn from_blobs(buf: &[u8]) -> Result<Vec<Self>, ModelError> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < buf.len() {
            let rest = &buf[pos..];
            let at = |e: String| ModelError::Parse {
                offset: pos,
                msg: e,
            };
            let (t, used) = match rest.get(..4) {
                Some(b"TRIT") => TernaryTensor::from_blob(rest)
                    .map(|(t, n)| (Tensor::Ternary(t), n))
                    .map_err(|e| at(e.to_string()))?,
                Some(b"CRMB") => QuantTensor2b::from_blob(rest)
                    .map(|(t, n)| (Tensor::TwoBit(t), n))
                    .map_err(|e| at(e.to_string()))?,
                _ => return Err(at("expected a TRIT or CRMB tensor blob".into())),
            };
            out.push(t);
            pos += used;
        }
        if out.is_empty() {
            return Err(ModelError::Parse {
                offset: 0,
                msg: "no tensor blobs".into(),
            });
        }
        Ok(out)
    }

    pub fn to_blob(&self) -> Vec<u8> {
        match self {
            Tensor::Ternary(t) => t.to_blob(),
            Tensor::TwoBit(t) => t.to_blob(),
        }
    }
}

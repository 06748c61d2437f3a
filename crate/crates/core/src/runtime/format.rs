//! `XTNM` binary container, little-endian.
//!
//! ```text
//! header  magic "XTNM" | u16 version | u16 layers | u8 input precision | u8 0
//!         | u16 channels | u16 height | u16 width
//! layer   u8 kind | u8 precision | u16 out_ch | u8 kh | u8 kw | u8 stride
//!         | u8 dilation | u8 padding | u16 aux
//!         | u32 blob length | weight blob (TRIT or CRMB, may be empty)
//!         | u32 param count | params
//! params  thresholds: i16 lo | i16 hi
//!         requant:    i32 s | i32 b | u8 d | 3 zero bytes
//! ```

use std::path::Path;

use crate::codec::TernaryTensor;
use crate::isa::ThresholdPair;
use crate::kernels::{QuantTensor2b, RequantParams2b};

use super::{
    padding_code, padding_from_code, validate, Layer, LayerKind, LayerParams, ModelError,
    ModelGraph, Precision, Weights,
};

pub const MAGIC: &[u8; 4] = b"XTNM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    None,
    Thresholds,
    Requant,
}

fn param_kind(kind: LayerKind, precision: Precision) -> ParamKind {
    match (kind, precision) {
        (LayerKind::Conv2d | LayerKind::Conv1dDilated, Precision::Ternary) => ParamKind::Thresholds,
        (LayerKind::Conv2d | LayerKind::Conv1dDilated, Precision::TwoBit) => ParamKind::Requant,
        _ => ParamKind::None,
    }
}

fn narrow<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T, ModelError> {
    T::try_from(v).map_err(|_| {
        ModelError::Validation(vec![format!("{what} {v} does not fit the container field")])
    })
}

impl ModelGraph {
    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&narrow::<u16>(self.layers.len(), "layer count")?.to_le_bytes());
        b.push(self.input_precision.code());
        b.push(0);
        let (c, h, w) = self.input;
        for v in [c, h, w] {
            b.extend_from_slice(&narrow::<u16>(v, "input dimension")?.to_le_bytes());
        }
        for l in &self.layers {
            b.push(l.kind.code());
            b.push(l.precision.code());
            b.extend_from_slice(&narrow::<u16>(l.out_ch, "out_ch")?.to_le_bytes());
            for v in [l.kh, l.kw, l.stride, l.dilation] {
                b.push(narrow::<u8>(v, "kernel field")?);
            }
            b.push(padding_code(l.padding));
            b.extend_from_slice(&narrow::<u16>(l.aux, "aux")?.to_le_bytes());
            let blob = match &l.weights {
                Weights::None => Vec::new(),
                Weights::Ternary(t) => t.to_blob(),
                Weights::TwoBit(t) => t.to_blob(),
            };
            b.extend_from_slice(&narrow::<u32>(blob.len(), "blob length")?.to_le_bytes());
            b.extend_from_slice(&blob);
            b.extend_from_slice(&narrow::<u32>(l.params.len(), "param count")?.to_le_bytes());
            match &l.params {
                LayerParams::None => {}
                LayerParams::Thresholds(v) => {
                    for t in v {
                        b.extend_from_slice(&t.lo.to_le_bytes());
                        b.extend_from_slice(&t.hi.to_le_bytes());
                    }
                }
                LayerParams::Requant(v) => {
                    for r in v {
                        b.extend_from_slice(&r.s.to_le_bytes());
                        b.extend_from_slice(&r.b.to_le_bytes());
                        b.extend_from_slice(&[r.d, 0, 0, 0]);
                    }
                }
            }
        }
        Ok(b)
    }

    /// Parse a container. Structure only, see [`validate`] for graph checks.
    pub fn from_bytes(buf: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(r.err_at(0, "bad magic, expected XTNM"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(r.err_at(4, format!("unsupported version {version}")));
        }
        let count = r.u16()? as usize;
        let at = r.pos;
        let input_precision = match Precision::from_code(r.u8()?) {
            Some(p @ (Precision::Ternary | Precision::TwoBit)) => p,
            _ => return Err(r.err_at(at, "input precision must be ternary or 2bit")),
        };
        r.u8()?;
        let input = (r.u16()? as usize, r.u16()? as usize, r.u16()? as usize);
        let mut layers = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            layers.push(r.layer()?);
        }
        if r.pos != buf.len() {
            return Err(r.err_at(r.pos, format!("{} trailing bytes", buf.len() - r.pos)));
        }
        Ok(ModelGraph {
            input_precision,
            input,
            layers,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err_at(&self, offset: usize, msg: impl Into<String>) -> ModelError {
        ModelError::Parse {
            offset,
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(e) => {
                let s = &self.buf[self.pos..e];
                self.pos = e;
                Ok(s)
            }
            None => Err(self.err_at(self.pos, format!("truncated, need {n} more bytes"))),
        }
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn i32(&mut self) -> Result<i32, ModelError> {
        Ok(self.u32()? as i32)
    }

    fn layer(&mut self) -> Result<Layer, ModelError> {
        let at = self.pos;
        let kind = LayerKind::from_code(self.u8()?)
            .ok_or_else(|| self.err_at(at, "unknown layer kind"))?;
        let precision = Precision::from_code(self.u8()?)
            .ok_or_else(|| self.err_at(at + 1, "unknown precision"))?;
        let out_ch = self.u16()? as usize;
        let (kh, kw, stride, dilation) = (
            self.u8()? as usize,
            self.u8()? as usize,
            self.u8()? as usize,
            self.u8()? as usize,
        );
        let padding =
            padding_from_code(self.u8()?).ok_or_else(|| self.err_at(at + 8, "unknown padding"))?;
        let aux = self.u16()? as usize;

        let len = self.u32()? as usize;
        let blob_at = self.pos;
        let blob = self.take(len)?;
        let weights = match blob.get(..4) {
            None if blob.is_empty() => Weights::None,
            Some(b"TRIT") => {
                let (t, n) = TernaryTensor::from_blob(blob)
                    .map_err(|e| self.err_at(blob_at, e.to_string()))?;
                if n != len {
                    return Err(self.err_at(blob_at + n, "weight blob length mismatch"));
                }
                Weights::Ternary(t)
            }
            Some(b"CRMB") => {
                let (t, n) = QuantTensor2b::from_blob(blob)
                    .map_err(|e| self.err_at(blob_at, e.to_string()))?;
                if n != len {
                    return Err(self.err_at(blob_at + n, "weight blob length mismatch"));
                }
                Weights::TwoBit(t)
            }
            _ => return Err(self.err_at(blob_at, "weight blob is neither TRIT nor CRMB")),
        };

        let count_at = self.pos;
        let count = self.u32()? as usize;
        let params = match param_kind(kind, precision) {
            ParamKind::None if count == 0 => LayerParams::None,
            ParamKind::None => {
                return Err(self.err_at(
                    count_at,
                    format!("{} layer takes no parameters", kind.name()),
                ))
            }
            ParamKind::Thresholds => {
                let mut v = Vec::with_capacity(count.min(self.buf.len() / 4));
                for _ in 0..count {
                    let lo = self.u16()? as i16;
                    let hi = self.u16()? as i16;
                    v.push(ThresholdPair::new(lo, hi));
                }
                LayerParams::Thresholds(v)
            }
            ParamKind::Requant => {
                let mut v = Vec::with_capacity(count.min(self.buf.len() / 12));
                for _ in 0..count {
                    let at = self.pos;
                    let (s, b) = (self.i32()?, self.i32()?);
                    let d = self.take(4)?[0];
                    v.push(
                        RequantParams2b::new(s, b, d)
                            .map_err(|e| self.err_at(at + 8, e.to_string()))?,
                    );
                }
                LayerParams::Requant(v)
            }
        };
        Ok(Layer {
            kind,
            precision,
            out_ch,
            kh,
            kw,
            stride,
            dilation,
            padding,
            aux,
            weights,
            params,
        })
    }
}

/// Read, parse and validate a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelGraph, ModelError> {
    let g = ModelGraph::from_bytes(&std::fs::read(path)?)?;
    let problems = validate(&g);
    if !problems.is_empty() {
        return Err(ModelError::Validation(problems));
    }
    Ok(g)
}

pub fn save_model(g: &ModelGraph, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, g.to_bytes()?)?;
    Ok(())
}

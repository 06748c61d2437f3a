//! Reference networks with seeded random weights.
//!
//! `vgg_cifar`: 32x32 image classifier, five 3x3 convolutions and a 10-way FC.
//! The first layer (5 -> 35 ternary, 4 -> 32 2-bit) stands in for an 8-bit
//! stem; ternary graphs then zero-pad to 40 channels.
//!
//! `dvs_hybrid`: 64x64 event-frame CNN feeding a 5-frame history, three causal
//! dilated 1-D convolutions and an 11-way FC. Ternary input carries a fifth,
//! all-zero polarity channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::compress_tensor;
use crate::isa::ThresholdPair;
use crate::kernels::{KernelError, Padding, QuantTensor2b, RequantParams2b};

use super::{validate, Layer, ModelError, ModelGraph, Precision, Tensor, Weights};

pub const VGG_CLASSES: usize = 10;
pub const DVS_CLASSES: usize = 11;
pub const DVS_FRAMES: usize = 5;
const DVS_CH: usize = 80;

struct Builder {
    precision: Precision,
    rng: ChaCha8Rng,
    c: usize,
    layers: Vec<Layer>,
}

impl Builder {
    fn new(precision: Precision, c: usize, seed: u64) -> Self {
        Self {
            precision,
            rng: ChaCha8Rng::seed_from_u64(seed),
            c,
            layers: Vec::new(),
        }
    }

    /// Zero-mean random weights: uniform ternary, or 2-bit with
    /// `P(-2, -1, 0, 1) = (0.1, 0.2, 0.3, 0.4)`.
    fn weights(&mut self, out: usize, taps: usize) -> Result<Weights, KernelError> {
        let n = out * taps * self.c;
        Ok(if self.precision == Precision::Ternary {
            let v: Vec<i8> = (0..n).map(|_| self.rng.gen_range(-1..=1)).collect();
            Weights::Ternary(compress_tensor(self.c, out, taps, &v)?)
        } else {
            let v: Vec<i8> = (0..n)
                .map(|_| match self.rng.gen_range(0..10) {
                    0 => -2,
                    1..=2 => -1,
                    3..=5 => 0,
                    _ => 1,
                })
                .collect();
            Weights::TwoBit(QuantTensor2b::from_values(self.c, out, taps, &v)?)
        })
    }

    /// Thresholds near a third of the accumulator spread; requant shifts the
    /// spread into the 2-bit range.
    fn conv(
        &mut self,
        out: usize,
        kh: usize,
        kw: usize,
        dilation: usize,
        padding: Padding,
    ) -> Result<(), KernelError> {
        let weights = self.weights(out, kh * kw)?;
        let fan_in = (self.c * kh * kw) as f64;
        let mut l = match self.precision {
            Precision::Ternary => {
                let t = (fan_in.sqrt() * 2.0 / 9.0).round().max(1.0) as i16;
                let th = (0..out)
                    .map(|_| {
                        ThresholdPair::new(
                            -t - self.rng.gen_range(0..=1),
                            t + self.rng.gen_range(0..=1),
                        )
                    })
                    .collect();
                let Weights::Ternary(w) = weights else {
                    unreachable!()
                };
                Layer::conv2d_ternary(w, kh, padding, th)
            }
            _ => {
                let d = fan_in.sqrt().log2().max(0.0) as u8;
                let rq = (0..out)
                    .map(|_| {
                        RequantParams2b::new(
                            1,
                            self.rng.gen_range(-1..=0) << d.saturating_sub(1),
                            d,
                        )
                    })
                    .collect::<Result<_, _>>()?;
                let Weights::TwoBit(w) = weights else {
                    unreachable!()
                };
                Layer::conv2d_2bit(w, kh, padding, rq)
            }
        };
        l.kw = kw;
        l.dilation = dilation;
        if kh == 1 && padding == Padding::Causal {
            l.kind = super::LayerKind::Conv1dDilated;
        }
        self.layers.push(l);
        self.c = out;
        Ok(())
    }

    fn conv3(&mut self, out: usize, padding: Padding) -> Result<(), KernelError> {
        self.conv(out, 3, 3, 1, padding)
    }

    fn pool(&mut self) {
        self.layers
            .push(Layer::maxpool(self.precision, self.c, 2, 2));
    }

    fn fc(&mut self, out: usize, pixels: usize) -> Result<(), KernelError> {
        let w = self.weights(out, pixels)?;
        self.layers.push(Layer::fc(w));
        Ok(())
    }

    fn finish(self, input: (usize, usize, usize)) -> Result<ModelGraph, ModelError> {
        let g = ModelGraph {
            input_precision: self.precision,
            input,
            layers: self.layers,
        };
        let problems = validate(&g);
        if problems.is_empty() {
            Ok(g)
        } else {
            Err(ModelError::Validation(problems))
        }
    }
}

fn check_precision(p: Precision, nc: usize) -> Result<(), ModelError> {
    let ok = matches!(p, Precision::Ternary | Precision::TwoBit)
        && nc > 0
        && nc % p.channel_multiple() == 0;
    if ok {
        Ok(())
    } else {
        Err(ModelError::Validation(vec![format!(
            "{p:?} network needs a positive channel count divisible by {}, got {nc}",
            p.channel_multiple()
        )]))
    }
}

fn wrap(e: KernelError) -> ModelError {
    ModelError::Kernel {
        layer: 0,
        source: e,
    }
}

/// VGG-style CIFAR network with `nc` channels in the scaled layers.
pub fn vgg_cifar(precision: Precision, nc: usize, seed: u64) -> Result<ModelGraph, ModelError> {
    check_precision(precision, nc)?;
    let ternary = precision == Precision::Ternary;
    let c_in = if ternary { 5 } else { 4 };
    let mut b = Builder::new(precision, c_in, seed);
    let build = |b: &mut Builder| -> Result<(), KernelError> {
        b.conv3(if ternary { 35 } else { 32 }, Padding::Same)?;
        b.pool();
        if ternary {
            b.layers.push(Layer::pad_channels(precision, 40));
            b.c = 40;
        }
        b.conv3(nc, Padding::Same)?;
        b.conv3(nc, Padding::Same)?;
        b.pool();
        b.conv3(nc, Padding::Same)?;
        b.conv3(nc, Padding::Same)?;
        b.pool();
        b.fc(VGG_CLASSES, 16)
    };
    build(&mut b).map_err(wrap)?;
    b.finish((c_in, 32, 32))
}

/// Event-camera gesture network, `nc1` channels in the first layer.
pub fn dvs_hybrid(precision: Precision, nc1: usize, seed: u64) -> Result<ModelGraph, ModelError> {
    check_precision(precision, nc1)?;
    let c_in = if precision == Precision::Ternary {
        5
    } else {
        4
    };
    let mut b = Builder::new(precision, c_in, seed);
    let build = |b: &mut Builder| -> Result<(), KernelError> {
        b.conv3(nc1, Padding::Same)?;
        b.pool();
        for _ in 0..3 {
            b.conv3(DVS_CH, Padding::Same)?;
            b.pool();
        }
        b.conv3(DVS_CH, Padding::Valid)?;
        b.pool();
        b.layers.push(Layer::history(precision, DVS_CH, DVS_FRAMES));
        for d in [1, 2, 4] {
            b.conv(DVS_CH, 1, 2, d, Padding::Causal)?;
        }
        b.fc(DVS_CLASSES, DVS_FRAMES)
    };
    build(&mut b).map_err(wrap)?;
    b.finish((c_in, 64, 64))
}

/// Seeded random input for `g`: half-zero ternary, or uniform 2-bit values.
pub fn random_input(g: &ModelGraph, seed: u64) -> Result<Tensor, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, h, w) = g.input;
    let n = c * h * w;
    let wrap_codec = |e: crate::codec::CodecError| wrap(e.into());
    match g.input_precision {
        Precision::Ternary => {
            let v: Vec<i8> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        0
                    } else {
                        [-1, 1][rng.gen_range(0..2)]
                    }
                })
                .collect();
            Ok(Tensor::Ternary(
                compress_tensor(c, h, w, &v).map_err(wrap_codec)?,
            ))
        }
        _ => {
            let v: Vec<i8> = (0..n).map(|_| rng.gen_range(-2..=1)).collect();
            Ok(Tensor::TwoBit(
                QuantTensor2b::from_values(c, h, w, &v).map_err(wrap)?,
            ))
        }
    }
}

/// Nominal MACs of one run, from layer shapes alone.
pub fn graph_macs(g: &ModelGraph) -> u64 {
    use super::LayerKind::*;
    let (mut c, mut h, mut w) = g.input;
    let mut macs = 0;
    for l in &g.layers {
        match l.kind {
            Conv2d | Conv1dDilated => {
                let p = l.conv_params(c);
                let Ok((oh, ow, _, _)) = p.output_geometry(h, w) else {
                    return macs;
                };
                macs += p.macs(oh * ow);
                (c, h, w) = (l.out_ch, oh, ow);
            }
            MaxPool => (h, w) = ((h - l.kh) / l.stride + 1, (w - l.kh) / l.stride + 1),
            PadChannels => c = l.out_ch,
            History => (h, w) = (1, l.aux),
            Fc => {
                macs += (c * h * w * l.out_ch) as u64;
                c = l.out_ch;
                (h, w) = (1, 1);
            }
        }
    }
    macs
}

//! Reference execution of a model graph on dense tensors.

use std::collections::VecDeque;

use xtern::codec::decompress_tensor;
use xtern::kernels::Padding;
use xtern::oracle::{self, DenseTensor, DenseWeights, Pad};
use xtern::runtime::{LayerKind, LayerParams, ModelGraph, Tensor, Weights};

use super::*;

pub fn tensor_to_dense(t: &Tensor) -> DenseTensor {
    match t {
        Tensor::Ternary(t) => ternary_to_dense(t),
        Tensor::TwoBit(t) => quant_to_dense(t),
    }
}

fn weight_vals(w: &Weights) -> ((usize, usize, usize), Vec<i32>) {
    match w {
        Weights::Ternary(t) => (
            t.shape(),
            decompress_tensor(t).into_iter().map(i32::from).collect(),
        ),
        Weights::TwoBit(t) => (t.shape(), t.values().into_iter().map(i32::from).collect()),
        Weights::None => panic!("layer without weights"),
    }
}

/// Packed `(in, out, taps)` weights to `(out, in, kh, kw)`.
fn dense_weights(w: &Weights, kh: usize, kw: usize) -> DenseWeights {
    let ((cin, out, taps), v) = weight_vals(w);
    assert_eq!(taps, kh * kw);
    let mut data = vec![0; v.len()];
    for o in 0..out {
        for t in 0..taps {
            for i in 0..cin {
                data[(o * cin + i) * taps + t] = v[(o * taps + t) * cin + i];
            }
        }
    }
    DenseWeights {
        out_ch: out,
        in_ch: cin,
        kh,
        kw,
        data,
    }
}

pub struct OracleModel<'g> {
    g: &'g ModelGraph,
    history: Vec<VecDeque<DenseTensor>>,
}

impl<'g> OracleModel<'g> {
    pub fn new(g: &'g ModelGraph) -> Self {
        let mut c = g.input.0;
        let history = g
            .layers
            .iter()
            .map(|l| {
                let q = if l.kind == LayerKind::History {
                    (0..l.aux).map(|_| DenseTensor::zeros(c, 1, 1)).collect()
                } else {
                    VecDeque::new()
                };
                c = l.out_ch;
                q
            })
            .collect();
        Self { g, history }
    }

    pub fn run(&mut self, input: &DenseTensor) -> Vec<i32> {
        let mut x = input.clone();
        for (i, l) in self.g.layers.iter().enumerate() {
            let pad = match l.padding {
                Padding::Same => Pad::Same,
                Padding::Valid => Pad::Valid,
                Padding::Causal => Pad::Causal,
            };
            let z = match l.kind {
                LayerKind::Conv2d | LayerKind::Conv1dDilated => {
                    let w = dense_weights(&l.weights, l.kh, l.kw);
                    let z = if l.kind == LayerKind::Conv1dDilated {
                        oracle::conv1d_ref(&x, &w, l.dilation).unwrap()
                    } else {
                        oracle::conv2d_ref(&x, &w, l.stride, l.dilation, pad).unwrap()
                    };
                    match &l.params {
                        LayerParams::Thresholds(th) => threshold_dense(&z, th),
                        LayerParams::Requant(rq) => requant_dense(&z, rq),
                        LayerParams::None => panic!("conv without parameters"),
                    }
                }
                LayerKind::MaxPool => oracle::maxpool_ref(&x, l.kh, l.stride),
                LayerKind::PadChannels => oracle::pad_channels_ref(&x, l.out_ch),
                LayerKind::History => {
                    let q = &mut self.history[i];
                    q.pop_front();
                    q.push_back(x.clone());
                    DenseTensor::from_fn(x.c, 1, l.aux, |c, _, t| q[t].at(c, 0, 0))
                }
                LayerKind::Fc => {
                    let (_, w) = weight_vals(&l.weights);
                    return oracle::fc_ref(&x.flatten_hwc(), &w, l.out_ch).unwrap();
                }
            };
            x = z;
        }
        panic!("graph without fc")
    }
}

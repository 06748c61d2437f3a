//! Conversions between kernel tensors and oracle tensors, plus random inputs.
#![allow(dead_code)]

pub mod cases;
pub mod graph;

use rand::Rng;
use xtern::codec::{compress_tensor, decompress_tensor, TernaryTensor};
use xtern::isa::ThresholdPair;
use xtern::kernels::{QuantTensor2b, RequantParams2b};
use xtern::oracle::{DenseTensor, DenseWeights};

pub fn hwc_to_dense(c: usize, h: usize, w: usize, v: &[i8]) -> DenseTensor {
    DenseTensor::from_fn(c, h, w, |ch, y, x| v[(y * w + x) * c + ch] as i32)
}

pub fn dense_to_hwc(d: &DenseTensor) -> Vec<i8> {
    d.flatten_hwc().into_iter().map(|v| v as i8).collect()
}

pub fn ternary_to_dense(t: &TernaryTensor) -> DenseTensor {
    let (c, h, w) = t.shape();
    hwc_to_dense(c, h, w, &decompress_tensor(t))
}

pub fn dense_to_ternary(d: &DenseTensor) -> TernaryTensor {
    compress_tensor(d.c, d.h, d.w, &dense_to_hwc(d)).unwrap()
}

pub fn quant_to_dense(t: &QuantTensor2b) -> DenseTensor {
    let (c, h, w) = t.shape();
    hwc_to_dense(c, h, w, &t.values())
}

pub fn dense_to_quant(d: &DenseTensor) -> QuantTensor2b {
    QuantTensor2b::from_values(d.c, d.h, d.w, &dense_to_hwc(d)).unwrap()
}

/// `(out, in, kh, kw)` values in kernel weight order `(out, tap, in)`.
pub fn weight_values(w: &DenseWeights) -> Vec<i8> {
    let mut v = Vec::with_capacity(w.data.len());
    for o in 0..w.out_ch {
        for ky in 0..w.kh {
            for kx in 0..w.kw {
                for i in 0..w.in_ch {
                    v.push(w.at(o, i, ky, kx) as i8);
                }
            }
        }
    }
    v
}

pub fn ternary_weights(w: &DenseWeights) -> TernaryTensor {
    compress_tensor(w.in_ch, w.out_ch, w.kh * w.kw, &weight_values(w)).unwrap()
}

pub fn quant_weights(w: &DenseWeights) -> QuantTensor2b {
    QuantTensor2b::from_values(w.in_ch, w.out_ch, w.kh * w.kw, &weight_values(w)).unwrap()
}

/// FC weights as a dense `out x (h*w*c)` matrix in channel-minor order, and the
/// kernel layout `(c, out, h*w)`.
pub fn fc_weights(
    out: usize,
    c: usize,
    h: usize,
    w: usize,
    rng: &mut impl Rng,
    lo: i32,
    hi: i32,
) -> (Vec<i32>, Vec<i8>) {
    let dense: Vec<i32> = (0..out * c * h * w)
        .map(|_| rng.gen_range(lo..=hi))
        .collect();
    let packed = dense.iter().map(|&v| v as i8).collect();
    (dense, packed)
}

/// Values in `[lo, hi]` with roughly `zero_frac` zeros.
pub fn random_dense(
    c: usize,
    h: usize,
    w: usize,
    lo: i32,
    hi: i32,
    zero_frac: f64,
    rng: &mut impl Rng,
) -> DenseTensor {
    DenseTensor::from_fn(c, h, w, |_, _, _| {
        if rng.gen_bool(zero_frac) {
            0
        } else {
            rng.gen_range(lo..=hi)
        }
    })
}

pub fn random_weights(
    out_ch: usize,
    in_ch: usize,
    kh: usize,
    kw: usize,
    lo: i32,
    hi: i32,
    rng: &mut impl Rng,
) -> DenseWeights {
    let data = (0..out_ch * in_ch * kh * kw)
        .map(|_| rng.gen_range(lo..=hi))
        .collect();
    DenseWeights {
        out_ch,
        in_ch,
        kh,
        kw,
        data,
    }
}

/// Thresholds around the typical accumulator spread of a `fan_in` dot product.
pub fn random_thresholds(n: usize, fan_in: usize, rng: &mut impl Rng) -> Vec<ThresholdPair> {
    let spread = ((fan_in as f64).sqrt() as i16).max(1) + 1;
    (0..n)
        .map(|_| {
            ThresholdPair::new(
                rng.gen_range(-spread..=spread),
                rng.gen_range(-spread..=spread),
            )
        })
        .collect()
}

pub fn random_requant(n: usize, rng: &mut impl Rng) -> Vec<RequantParams2b> {
    (0..n)
        .map(|_| {
            RequantParams2b::new(
                rng.gen_range(-4..=4),
                rng.gen_range(-16..=16),
                rng.gen_range(0..6),
            )
            .unwrap()
        })
        .collect()
}

pub fn threshold_dense(z: &DenseTensor, th: &[ThresholdPair]) -> DenseTensor {
    z.map(|c, v| xtern::oracle::threshold_ref(v, th[c].lo as i32, th[c].hi as i32))
}

pub fn requant_dense(z: &DenseTensor, rq: &[RequantParams2b]) -> DenseTensor {
    z.map(|c, v| xtern::oracle::requant2b_ref(v, rq[c].s, rq[c].b, rq[c].d as u32))
}

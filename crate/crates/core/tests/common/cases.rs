//! Randomized kernel-vs-oracle cases. Each returns `Err` with a description on
//! mismatch.

use rand::seq::SliceRandom;
use rand::Rng;
use xtern::kernels::{self, ConvParams, Padding};
use xtern::oracle::{self, Pad};

use super::*;

pub const TERNARY_CHANNELS: [usize; 4] = [5, 10, 20, 40];
pub const CRUMB_CHANNELS: [usize; 2] = [16, 32];
pub const CORES: [usize; 4] = [1, 2, 4, 8];

fn side(rng: &mut impl Rng, min: usize) -> usize {
    // favour small maps, still reach 16
    if rng.gen_bool(0.2) {
        rng.gen_range(min.max(9)..=16)
    } else {
        rng.gen_range(min..=8)
    }
}

fn pad_pair(rng: &mut impl Rng, h: usize, w: usize, k: usize) -> (Padding, Pad) {
    if h >= k && w >= k && rng.gen_bool(0.5) {
        (Padding::Valid, Pad::Valid)
    } else {
        (Padding::Same, Pad::Same)
    }
}

pub fn conv2d(rng: &mut impl Rng) -> Result<(), String> {
    let cin = *TERNARY_CHANNELS.choose(rng).unwrap();
    let cout = *TERNARY_CHANNELS.choose(rng).unwrap();
    let (h, w) = (side(rng, 1), side(rng, 1));
    let k = *[1, 2, 3].choose(rng).unwrap();
    let stride = *[1, 1, 2].choose(rng).unwrap();
    let (padding, pad) = pad_pair(rng, h, w, k);
    let cores = *CORES.choose(rng).unwrap();
    let zf = rng.gen_range(0.0..0.9);
    let x = random_dense(cin, h, w, -1, 1, zf, rng);
    let wt = random_weights(cout, cin, k, k, -1, 1, rng);
    let th = random_thresholds(cout, cin * k * k, rng);
    let p = ConvParams {
        in_ch: cin,
        out_ch: cout,
        kh: k,
        kw: k,
        stride,
        dilation: 1,
        padding,
    };
    let got = kernels::conv2d_ternary(&dense_to_ternary(&x), &ternary_weights(&wt), &p, &th, cores)
        .map_err(|e| e.to_string())?;
    let want = threshold_dense(&oracle::conv2d_ref(&x, &wt, stride, 1, pad).unwrap(), &th);
    check(ternary_to_dense(&got.output) == want, || {
        format!("conv2d {p:?} {h}x{w} cores={cores}")
    })
}

pub fn conv1d(rng: &mut impl Rng) -> Result<(), String> {
    let cin = *TERNARY_CHANNELS.choose(rng).unwrap();
    let cout = *TERNARY_CHANNELS.choose(rng).unwrap();
    let t = rng.gen_range(1..=16);
    let k = rng.gen_range(2..=3);
    let d = *[1, 2, 4].choose(rng).unwrap();
    let cores = *CORES.choose(rng).unwrap();
    let x = random_dense(cin, 1, t, -1, 1, rng.gen_range(0.0..0.9), rng);
    let wt = random_weights(cout, cin, 1, k, -1, 1, rng);
    let th = random_thresholds(cout, cin * k, rng);
    let p = ConvParams::conv1d(cin, cout, k, d);
    let got = kernels::conv1d_dilated_ternary(
        &dense_to_ternary(&x),
        &ternary_weights(&wt),
        &p,
        &th,
        cores,
    )
    .map_err(|e| e.to_string())?;
    let want = threshold_dense(&oracle::conv1d_ref(&x, &wt, d).unwrap(), &th);
    check(ternary_to_dense(&got.output) == want, || {
        format!("conv1d {p:?} T={t} cores={cores}")
    })
}

pub fn maxpool(rng: &mut impl Rng) -> Result<(), String> {
    let c = *TERNARY_CHANNELS.choose(rng).unwrap();
    let (h, w) = (side(rng, 2), side(rng, 2));
    let cores = *CORES.choose(rng).unwrap();
    let x = random_dense(c, h, w, -1, 1, rng.gen_range(0.0..0.9), rng);
    let got = kernels::maxpool2d_ternary(&dense_to_ternary(&x), 2, 2, cores)
        .map_err(|e| e.to_string())?;
    check(
        ternary_to_dense(&got.output) == oracle::maxpool_ref(&x, 2, 2),
        || format!("maxpool c={c} {h}x{w} cores={cores}"),
    )
}

pub fn fc(rng: &mut impl Rng) -> Result<(), String> {
    let c = *TERNARY_CHANNELS.choose(rng).unwrap();
    let (h, w) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
    let out = rng.gen_range(1..=12);
    let cores = *CORES.choose(rng).unwrap();
    let x = random_dense(c, h, w, -1, 1, rng.gen_range(0.0..0.9), rng);
    let (dense, packed) = fc_weights(out, c, h, w, rng, -1, 1);
    let wt = xtern::codec::compress_tensor(c, out, h * w, &packed).unwrap();
    let got = kernels::fully_connected_ternary(&dense_to_ternary(&x), &wt, cores)
        .map_err(|e| e.to_string())?;
    let want = oracle::fc_ref(&x.flatten_hwc(), &dense, out).unwrap();
    check(got.output == want, || {
        format!("fc c={c} {h}x{w} out={out} cores={cores}")
    })
}

pub fn conv2d_2bit(rng: &mut impl Rng) -> Result<(), String> {
    let cin = *CRUMB_CHANNELS.choose(rng).unwrap();
    let cout = *CRUMB_CHANNELS.choose(rng).unwrap();
    let (h, w) = (side(rng, 1), side(rng, 1));
    let k = *[1, 2, 3].choose(rng).unwrap();
    let stride = *[1, 1, 2].choose(rng).unwrap();
    let (padding, pad) = pad_pair(rng, h, w, k);
    let cores = *CORES.choose(rng).unwrap();
    let x = random_dense(cin, h, w, -2, 1, rng.gen_range(0.0..0.9), rng);
    let wt = random_weights(cout, cin, k, k, -2, 1, rng);
    let rq = random_requant(cout, rng);
    let p = ConvParams {
        in_ch: cin,
        out_ch: cout,
        kh: k,
        kw: k,
        stride,
        dilation: 1,
        padding,
    };
    let got = kernels::conv2d_2bit(&dense_to_quant(&x), &quant_weights(&wt), &p, &rq, cores)
        .map_err(|e| e.to_string())?;
    let want = requant_dense(&oracle::conv2d_ref(&x, &wt, stride, 1, pad).unwrap(), &rq);
    check(quant_to_dense(&got.output) == want, || {
        format!("conv2d_2bit {p:?} {h}x{w} cores={cores}")
    })
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("mismatch: {}", what()))
    }
}

//! Max pooling over packed words.

use rayon::prelude::*;

use crate::codec::TernaryTensor;
use crate::isa::{CoreState, Instruction, LaneFormat, Memory, Reg};
use crate::perf::{KernelTrace, Op, Phase};

use super::engine::Packed;
use super::{KernelError, KernelOutput, QuantTensor2b, Result};

struct PoolOut {
    trace: KernelTrace,
    pixels: Vec<(usize, Vec<u8>)>,
}

fn reg(i: u8) -> Reg {
    Reg::new(i).expect("register")
}

fn pool_pixel(
    x: &Packed,
    k: usize,
    stride: usize,
    oy: usize,
    ox: usize,
    core: &mut CoreState,
    mem: &Memory,
    trace: &mut KernelTrace,
) -> Result<Vec<u8>> {
    let n = x.bytes_per_pixel();
    let id = core.id;
    let taps: Vec<&[u8]> = (0..k * k)
        .map(|t| x.pixel(oy * stride + t / k, ox * stride + t % k))
        .collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n / 4 {
        let word = |t: &[u8]| u32::from_le_bytes(t[4 * j..4 * j + 4].try_into().expect("4 bytes"));
        let mut m = word(taps[0]);
        trace.push(Op::Lw, Phase::HotLoop, id);
        for t in &taps[1..] {
            let v = word(t);
            trace.push(Op::Lw, Phase::HotLoop, id);
            m = match x.fmt {
                LaneFormat::Ternary => {
                    core.set_reg(reg(5), m);
                    core.set_reg(reg(6), v);
                    core.execute(
                        &Instruction::MaxT {
                            rd: reg(5),
                            rs1: reg(5),
                            rs2: reg(6),
                        },
                        mem,
                    )?;
                    trace.push(Op::MaxT, Phase::HotLoop, id);
                    core.reg(reg(5))
                }
                LaneFormat::Crumb => {
                    trace.push(Op::MaxC, Phase::HotLoop, id);
                    x.fmt.max(m, v)?
                }
            };
        }
        out.extend_from_slice(&m.to_le_bytes());
        trace.push(Op::Sw, Phase::HotLoop, id);
    }
    for j in (n / 4) * 4..n {
        let mut m = x.fmt.decode_byte(taps[0][j], j)?;
        for t in &taps[1..] {
            let v = x.fmt.decode_byte(t[j], j)?;
            for (a, b) in m.iter_mut().zip(v) {
                *a = (*a).max(b);
            }
        }
        out.push(x.fmt.encode_byte(&m));
        trace.push_n(Op::TailLoad, Phase::Other, id, k * k);
        if x.fmt == LaneFormat::Ternary {
            trace.push_n(Op::TailDecode, Phase::Other, id, k * k);
        }
        trace.push_n(Op::TailMax, Phase::Other, id, k * k - 1);
        trace.push(Op::TailStore, Phase::Other, id);
    }
    trace.push(Op::LoopIter, Phase::Other, id);
    Ok(out)
}

fn maxpool(
    x: Packed,
    k: usize,
    stride: usize,
    cores: usize,
) -> Result<(Vec<u8>, usize, usize, KernelTrace)> {
    if k == 0 || stride == 0 {
        return Err(KernelError::Params(
            "pool size and stride must be positive".into(),
        ));
    }
    if cores == 0 || cores > 256 {
        return Err(KernelError::Params(format!(
            "core count {cores} outside 1..=256"
        )));
    }
    if x.height < k || x.width < k {
        return Err(KernelError::Dimension(format!(
            "{k}x{k} pool on {}x{} input",
            x.height, x.width
        )));
    }
    let oh = (x.height - k) / stride + 1;
    let ow = (x.width - k) / stride + 1;
    let n = oh * ow;
    let parts: Vec<PoolOut> = (0..cores)
        .into_par_iter()
        .map(|id| -> Result<PoolOut> {
            let mut core = CoreState::new(id as u8);
            let mem = Memory::new(4);
            let mut out = PoolOut {
                trace: KernelTrace::new(),
                pixels: Vec::new(),
            };
            for px in (id..n).step_by(cores) {
                let bytes = pool_pixel(
                    &x,
                    k,
                    stride,
                    px / ow,
                    px % ow,
                    &mut core,
                    &mem,
                    &mut out.trace,
                )?;
                out.pixels.push((px, bytes));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let bpp = x.bytes_per_pixel();
    let mut data = vec![0u8; n * bpp];
    let mut trace = KernelTrace::new();
    for part in parts {
        for (px, bytes) in part.pixels {
            data[px * bpp..(px + 1) * bpp].copy_from_slice(&bytes);
        }
        trace.extend(part.trace);
    }
    Ok((data, oh, ow, trace))
}

/// `k x k` max pooling with the given stride, windows fully inside the input.
pub fn maxpool2d_ternary(
    x: &TernaryTensor,
    k: usize,
    stride: usize,
    cores: usize,
) -> Result<KernelOutput<TernaryTensor>> {
    let p = Packed {
        fmt: LaneFormat::Ternary,
        channels: x.channels(),
        height: x.height(),
        width: x.width(),
        data: x.data(),
    };
    let (data, oh, ow, trace) = maxpool(p, k, stride, cores)?;
    let output = TernaryTensor::from_bytes(x.channels(), oh, ow, data)?;
    Ok(KernelOutput {
        output,
        trace,
        macs: 0,
    })
}

pub fn maxpool2d_2bit(
    x: &QuantTensor2b,
    k: usize,
    stride: usize,
    cores: usize,
) -> Result<KernelOutput<QuantTensor2b>> {
    let p = Packed {
        fmt: LaneFormat::Crumb,
        channels: x.channels(),
        height: x.height(),
        width: x.width(),
        data: x.data(),
    };
    let (data, oh, ow, trace) = maxpool(p, k, stride, cores)?;
    let output = QuantTensor2b::from_bytes(x.channels(), oh, ow, data)?;
    Ok(KernelOutput {
        output,
        trace,
        macs: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{compress_tensor, decompress_tensor};

    #[test]
    fn constant_is_fixed_point() {
        let x = compress_tensor(20, 4, 4, &[-1; 320]).unwrap();
        let out = maxpool2d_ternary(&x, 2, 2, 4).unwrap();
        assert_eq!(out.output.shape(), (20, 2, 2));
        assert!(decompress_tensor(&out.output).iter().all(|&v| v == -1));
        assert_eq!(out.trace.count(|e| e.op == Op::MaxT), 4 * 3);
    }

    #[test]
    fn plus_one_wins() {
        let mut v = vec![0i8; 2 * 2 * 5];
        v[5 + 3] = 1; // pixel (0,1), channel 3
        v[10] = -1;
        let x = compress_tensor(5, 2, 2, &v).unwrap();
        let out = maxpool2d_ternary(&x, 2, 2, 1).unwrap();
        assert_eq!(decompress_tensor(&out.output), vec![0, 0, 0, 1, 0]);
        assert!(out.trace.tail_instructions() > 0);
    }

    #[test]
    fn rejects_bad_windows() {
        let x = TernaryTensor::zeros(5, 1, 3).unwrap();
        assert!(maxpool2d_ternary(&x, 2, 2, 1).is_err());
        assert!(maxpool2d_ternary(&x, 1, 0, 1).is_err());
    }
}

//! Data movement: channel zero-padding and frame copies.

use crate::codec::TernaryTensor;
use crate::isa::LaneFormat;
use crate::perf::{KernelTrace, Op, Phase};

use super::{KernelError, KernelOutput, QuantTensor2b, Result};

fn copy_ops(trace: &mut KernelTrace, read: usize, write: usize, core: u8) {
    trace.push_n(Op::Lw, Phase::Other, core, read / 4);
    trace.push_n(Op::Lbu, Phase::Other, core, read % 4);
    trace.push_n(Op::Sw, Phase::Other, core, write / 4);
    trace.push_n(Op::Sb, Phase::Other, core, write % 4);
    trace.push(Op::Alu, Phase::Other, core);
    trace.push(Op::LoopIter, Phase::Other, core);
}

/// Trace of copying `items` records of `bytes` each, striped over `cores`.
pub fn copy_trace(items: usize, bytes: usize, cores: usize) -> KernelTrace {
    let mut trace = KernelTrace::new();
    for core in 0..cores.min(items.max(1)) {
        for _ in (core..items).step_by(cores) {
            copy_ops(&mut trace, bytes, bytes, core as u8);
        }
    }
    trace
}

fn pad(
    fmt: LaneFormat,
    data: &[u8],
    pixels: usize,
    from: usize,
    to: usize,
    cores: usize,
) -> Result<(Vec<u8>, KernelTrace)> {
    let epb = fmt.elems_per_byte();
    if to < from || to % epb != 0 {
        return Err(KernelError::Params(format!(
            "cannot pad {from} channels to {to}, need a multiple of {epb} >= {from}"
        )));
    }
    if !(1..=256).contains(&cores) {
        return Err(KernelError::Params(format!(
            "core count {cores} outside 1..=256"
        )));
    }
    let (nb_in, nb_out) = (from / epb, to / epb);
    let mut out = Vec::with_capacity(pixels * nb_out);
    for px in data.chunks(nb_in.max(1)).take(pixels) {
        out.extend_from_slice(&px[..nb_in]);
        out.resize(out.len() + nb_out - nb_in, fmt.zero_byte());
    }
    out.resize(pixels * nb_out, fmt.zero_byte());
    let mut trace = KernelTrace::new();
    for core in 0..cores.min(pixels.max(1)) {
        for _ in (core..pixels).step_by(cores) {
            copy_ops(&mut trace, nb_in, nb_out, core as u8);
        }
    }
    Ok((out, trace))
}

/// Append zero channels up to `channels` (a multiple of 5).
pub fn pad_channels_ternary(
    x: &TernaryTensor,
    channels: usize,
    cores: usize,
) -> Result<KernelOutput<TernaryTensor>> {
    let (c, h, w) = x.shape();
    let (data, trace) = pad(LaneFormat::Ternary, x.data(), h * w, c, channels, cores)?;
    Ok(KernelOutput {
        output: TernaryTensor::from_bytes(channels, h, w, data)?,
        trace,
        macs: 0,
    })
}

/// Append zero channels up to `channels` (a multiple of 4).
pub fn pad_channels_2bit(
    x: &QuantTensor2b,
    channels: usize,
    cores: usize,
) -> Result<KernelOutput<QuantTensor2b>> {
    let (c, h, w) = x.shape();
    let (data, trace) = pad(LaneFormat::Crumb, x.data(), h * w, c, channels, cores)?;
    Ok(KernelOutput {
        output: QuantTensor2b::from_bytes(channels, h, w, data)?,
        trace,
        macs: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{compress_tensor, decompress_tensor};

    #[test]
    fn ternary_padding_keeps_values() {
        let v: Vec<i8> = (0..5 * 6).map(|i| (i % 3) as i8 - 1).collect();
        let x = compress_tensor(5, 2, 3, &v).unwrap();
        let out = pad_channels_ternary(&x, 15, 4).unwrap();
        assert_eq!(out.output.shape(), (15, 2, 3));
        let got = decompress_tensor(&out.output);
        for px in 0..6 {
            assert_eq!(&got[px * 15..px * 15 + 5], &v[px * 5..px * 5 + 5]);
            assert!(got[px * 15 + 5..px * 15 + 15].iter().all(|&t| t == 0));
        }
        assert_eq!(out.trace.cores(), 4);
        assert_eq!(out.trace.count(|e| e.op == Op::Sb), 6 * 3);
    }

    #[test]
    fn crumb_padding_and_errors() {
        let x = QuantTensor2b::from_values(4, 1, 2, &[-2, -1, 0, 1, 1, 1, 1, 1]).unwrap();
        let out = pad_channels_2bit(&x, 8, 1).unwrap();
        assert_eq!(
            out.output.values(),
            vec![-2, -1, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0]
        );
        assert!(pad_channels_2bit(&x, 6, 1).is_err());
        assert!(pad_channels_2bit(&x, 0, 1).is_err());
    }

    #[test]
    fn copy_trace_stripes() {
        let t = copy_trace(5, 20, 2);
        assert_eq!(t.count(|e| e.op == Op::Lw), 25);
        assert_eq!(t.count(|e| e.core == 1 && e.op == Op::LoopIter), 2);
    }
}

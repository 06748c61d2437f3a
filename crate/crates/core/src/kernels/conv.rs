//! Convolution and fully-connected layers.

use crate::codec::TernaryTensor;
use crate::isa::LaneFormat;
use crate::perf::KernelTrace;

use super::engine::{self, Columns, ConvGeometry, MatmulOut, Packed, Stage};
use super::{
    ConvParams, KernelError, KernelOutput, QuantTensor2b, RequantParams2b, Result, ThresholdPair,
};

fn ternary(x: &TernaryTensor) -> Packed<'_> {
    Packed {
        fmt: LaneFormat::Ternary,
        channels: x.channels(),
        height: x.height(),
        width: x.width(),
        data: x.data(),
    }
}

fn crumb(x: &QuantTensor2b) -> Packed<'_> {
    Packed {
        fmt: LaneFormat::Crumb,
        channels: x.channels(),
        height: x.height(),
        width: x.width(),
        data: x.data(),
    }
}

fn geometry(x: &Packed, w: &Packed, p: &ConvParams) -> Result<ConvGeometry> {
    p.check(x.fmt.elems_per_byte())?;
    if x.channels != p.in_ch {
        return Err(KernelError::Dimension(format!(
            "input has {} channels, layer expects {}",
            x.channels, p.in_ch
        )));
    }
    if (w.channels, w.height, w.width) != (p.in_ch, p.out_ch, p.kh * p.kw) {
        return Err(KernelError::Dimension(format!(
            "weights {}x{}x{} (in x out x taps), layer expects {}x{}x{}",
            w.channels,
            w.height,
            w.width,
            p.in_ch,
            p.out_ch,
            p.kh * p.kw
        )));
    }
    let (out_h, out_w, pad_top, pad_left) = p.output_geometry(x.height, x.width)?;
    Ok(ConvGeometry {
        kh: p.kh,
        kw: p.kw,
        stride: p.stride,
        dilation: p.dilation,
        pad_top,
        pad_left,
        out_h,
        out_w,
    })
}

fn im2col_packed(x: Packed, p: &ConvParams, oy: usize, ox: usize) -> Result<Vec<u8>> {
    p.check(x.fmt.elems_per_byte())?;
    let (out_h, out_w, pad_top, pad_left) = p.output_geometry(x.height, x.width)?;
    if oy >= out_h || ox >= out_w {
        return Err(KernelError::Dimension(format!(
            "pixel ({oy}, {ox}) outside {out_h}x{out_w} output"
        )));
    }
    let g = ConvGeometry {
        kh: p.kh,
        kw: p.kw,
        stride: p.stride,
        dilation: p.dilation,
        pad_top,
        pad_left,
        out_h,
        out_w,
    };
    let mut buf = Vec::with_capacity(p.kh * p.kw * x.bytes_per_pixel());
    engine::im2col(&x, &g, oy, ox, &mut buf, None);
    Ok(buf)
}

/// Compressed receptive field of output pixel `(oy, ox)`, tap-major and
/// channel-minor, zero trits outside the input.
pub fn im2col_ternary(x: &TernaryTensor, p: &ConvParams, oy: usize, ox: usize) -> Result<Vec<u8>> {
    im2col_packed(ternary(x), p, oy, ox)
}

pub fn im2col_2bit(x: &QuantTensor2b, p: &ConvParams, oy: usize, ox: usize) -> Result<Vec<u8>> {
    im2col_packed(crumb(x), p, oy, ox)
}

fn packed_out(out: MatmulOut) -> Vec<u8> {
    match out {
        MatmulOut::Packed(v) => v,
        MatmulOut::Int(_) => unreachable!("thresholded stage"),
    }
}

fn int_out(out: MatmulOut) -> Vec<i32> {
    match out {
        MatmulOut::Int(v) => v,
        MatmulOut::Packed(_) => unreachable!("integer stage"),
    }
}

/// 2-D convolution followed by per-channel thresholding with `thrc`.
pub fn conv2d_ternary(
    x: &TernaryTensor,
    w: &TernaryTensor,
    p: &ConvParams,
    th: &[ThresholdPair],
    cores: usize,
) -> Result<KernelOutput<TernaryTensor>> {
    let g = geometry(&ternary(x), &ternary(w), p)?;
    let cols = Columns::Conv(ternary(x), g);
    let (out, trace) = engine::matmul(
        LaneFormat::Ternary,
        &cols,
        w.data(),
        p.out_ch,
        Stage::Threshold(th),
        cores,
    )?;
    let output = TernaryTensor::from_bytes(p.out_ch, g.out_h, g.out_w, packed_out(out))?;
    Ok(KernelOutput {
        output,
        trace,
        macs: p.macs(g.out_h * g.out_w),
    })
}

/// Dilated 1-D convolution over a height-1 tensor, time along the width.
pub fn conv1d_dilated_ternary(
    x: &TernaryTensor,
    w: &TernaryTensor,
    p: &ConvParams,
    th: &[ThresholdPair],
    cores: usize,
) -> Result<KernelOutput<TernaryTensor>> {
    if x.height() != 1 || p.kh != 1 {
        return Err(KernelError::Dimension(format!(
            "1-D convolution needs height-1 input and kernel, got {} and {}",
            x.height(),
            p.kh
        )));
    }
    conv2d_ternary(x, w, p, th, cores)
}

/// Columns given directly, e.g. from [`im2col_ternary`]. Weights are
/// `out_ch` rows of one column each (height = out_ch). Output is
/// `out_ch x 1 x cols.len()`.
pub fn matmul_ternary(
    cols: &[Vec<u8>],
    w: &TernaryTensor,
    th: &[ThresholdPair],
    cores: usize,
) -> Result<KernelOutput<TernaryTensor>> {
    let refs: Vec<&[u8]> = cols.iter().map(Vec::as_slice).collect();
    let row = w.bytes_per_pixel() * w.width();
    if refs.iter().any(|c| c.len() != row) {
        return Err(KernelError::Dimension(format!(
            "columns must be {row} bytes, the weight row length"
        )));
    }
    let out_ch = w.height();
    let given = Columns::Given(&refs);
    let (out, trace) = engine::matmul(
        LaneFormat::Ternary,
        &given,
        w.data(),
        out_ch,
        Stage::Threshold(th),
        cores,
    )?;
    let output = TernaryTensor::from_bytes(out_ch, 1, cols.len(), packed_out(out))?;
    let macs = (cols.len() * out_ch * row * 5) as u64;
    Ok(KernelOutput {
        output,
        trace,
        macs,
    })
}

fn fully_connected(x: Packed, w: Packed, cores: usize) -> Result<(Vec<i32>, KernelTrace, u64)> {
    if w.channels != x.channels || w.width != x.height * x.width {
        return Err(KernelError::Dimension(format!(
            "weights {}x{}x{} (in x out x pixels) do not match input {}x{}x{}",
            w.channels, w.height, w.width, x.channels, x.height, x.width
        )));
    }
    let out_ch = w.height;
    if out_ch == 0 {
        return Err(KernelError::Params("no output classes".into()));
    }
    let refs = [x.data];
    let given = Columns::Given(&refs);
    let (out, trace) = engine::matmul(x.fmt, &given, w.data, out_ch, Stage::Int, cores)?;
    let macs = (out_ch * x.channels * x.height * x.width) as u64;
    Ok((int_out(out), trace, macs))
}

/// Integer class scores of a flattened (channel-minor) input. Weights have
/// channels = input channels, height = outputs, width = input pixels.
pub fn fully_connected_ternary(
    x: &TernaryTensor,
    w: &TernaryTensor,
    cores: usize,
) -> Result<KernelOutput<Vec<i32>>> {
    let (output, trace, macs) = fully_connected(ternary(x), ternary(w), cores)?;
    Ok(KernelOutput {
        output,
        trace,
        macs,
    })
}

pub fn fully_connected_2bit(
    x: &QuantTensor2b,
    w: &QuantTensor2b,
    cores: usize,
) -> Result<KernelOutput<Vec<i32>>> {
    let (output, trace, macs) = fully_connected(crumb(x), crumb(w), cores)?;
    Ok(KernelOutput {
        output,
        trace,
        macs,
    })
}

/// 2-bit baseline convolution with per-channel requantization.
pub fn conv2d_2bit(
    x: &QuantTensor2b,
    w: &QuantTensor2b,
    p: &ConvParams,
    rq: &[RequantParams2b],
    cores: usize,
) -> Result<KernelOutput<QuantTensor2b>> {
    let g = geometry(&crumb(x), &crumb(w), p)?;
    let cols = Columns::Conv(crumb(x), g);
    let (out, trace) = engine::matmul(
        LaneFormat::Crumb,
        &cols,
        w.data(),
        p.out_ch,
        Stage::Requant(rq),
        cores,
    )?;
    let output = QuantTensor2b::from_bytes(p.out_ch, g.out_h, g.out_w, packed_out(out))?;
    Ok(KernelOutput {
        output,
        trace,
        macs: p.macs(g.out_h * g.out_w),
    })
}

//! Shared im2col + blocked matmul driver for the ternary and 2-bit paths.

use std::sync::Arc;

use rayon::prelude::*;

use crate::isa::{CoreState, Instruction, LaneFormat, Memory, Reg, ThrcStatus, ThresholdPair};
use crate::perf::{KernelTrace, Op, Phase};

use super::schedule::{self, Schedule};
use super::{KernelError, RequantParams2b, Result};

const BLOCK_PIXELS: usize = 4;
const BLOCK_CHANNELS: usize = 2;

/// Packed channel-minor feature map, either format.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Packed<'a> {
    pub fmt: LaneFormat,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: &'a [u8],
}

impl Packed<'_> {
    pub fn bytes_per_pixel(&self) -> usize {
        self.channels / self.fmt.elems_per_byte()
    }

    pub fn pixel(&self, y: usize, x: usize) -> &[u8] {
        let n = self.bytes_per_pixel();
        let off = (y * self.width + x) * n;
        &self.data[off..off + n]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub dilation: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub out_h: usize,
    pub out_w: usize,
}

/// Where the matmul columns come from.
pub(crate) enum Columns<'a> {
    /// Gathered per output pixel by im2col.
    Conv(Packed<'a>, ConvGeometry),
    /// Already contiguous in memory.
    Given(&'a [&'a [u8]]),
}

impl Columns<'_> {
    pub fn count(&self) -> usize {
        match self {
            Columns::Conv(_, g) => g.out_h * g.out_w,
            Columns::Given(c) => c.len(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Columns::Conv(x, g) => g.kh * g.kw * x.bytes_per_pixel(),
            Columns::Given(c) => c.first().map_or(0, |c| c.len()),
        }
    }

    fn gather(&self, idx: usize, buf: &mut Vec<u8>, trace: &mut KernelTrace, core: u8) {
        buf.clear();
        match self {
            Columns::Given(c) => buf.extend_from_slice(c[idx]),
            Columns::Conv(x, g) => {
                im2col(x, g, idx / g.out_w, idx % g.out_w, buf, Some((trace, core)))
            }
        }
    }
}

/// Gather the receptive field of output pixel `(oy, ox)`, zero-filled outside
/// the input. Charges word copies for whole words and byte copies for the rest
/// of each kernel position.
pub(crate) fn im2col(
    x: &Packed,
    g: &ConvGeometry,
    oy: usize,
    ox: usize,
    buf: &mut Vec<u8>,
    mut trace: Option<(&mut KernelTrace, u8)>,
) {
    let n = x.bytes_per_pixel();
    let (words, bytes) = (n / 4, n % 4);
    for ky in 0..g.kh {
        for kx in 0..g.kw {
            let iy = (oy * g.stride + ky * g.dilation) as isize - g.pad_top as isize;
            let ix = (ox * g.stride + kx * g.dilation) as isize - g.pad_left as isize;
            let inside = iy >= 0 && ix >= 0 && (iy as usize) < x.height && (ix as usize) < x.width;
            if inside {
                buf.extend_from_slice(x.pixel(iy as usize, ix as usize));
            } else {
                buf.extend(std::iter::repeat(x.fmt.zero_byte()).take(n));
            }
            if let Some((t, core)) = trace.as_mut() {
                if inside {
                    t.push_n(Op::Lw, Phase::Im2col, *core, words);
                    t.push_n(Op::Lbu, Phase::Im2col, *core, bytes);
                }
                t.push_n(Op::Sw, Phase::Im2col, *core, words);
                t.push_n(Op::Sb, Phase::Im2col, *core, bytes);
                t.push(Op::Alu, Phase::Im2col, *core);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Stage<'a> {
    /// `thrc` into compressed ternary output.
    Threshold(&'a [ThresholdPair]),
    /// Affine-shift-clip into packed 2-bit output.
    Requant(&'a [RequantParams2b]),
    /// Raw accumulators.
    Int,
}

pub(crate) enum MatmulOut {
    /// Pixel-major packed bytes.
    Packed(Vec<u8>),
    /// Pixel-major accumulators, `out_ch` per pixel.
    Int(Vec<i32>),
}

fn acc_reg(p: usize, c: usize) -> Reg {
    Reg::new((10 + p * BLOCK_CHANNELS + c) as u8).expect("register")
}

fn status_reg(p: usize) -> Reg {
    Reg::new((20 + p) as u8).expect("register")
}

fn th_reg() -> Reg {
    Reg::new(30).expect("register")
}

#[derive(Default)]
struct CoreResult {
    trace: KernelTrace,
    packed: Vec<(usize, Vec<u8>)>,
    ints: Vec<(usize, usize, i32)>,
}

struct Worker<'a> {
    fmt: LaneFormat,
    cols: &'a Columns<'a>,
    weights: &'a [u8],
    col_len: usize,
    words: usize,
    stage: Stage<'a>,
    id: u8,
    core: CoreState,
    mem: Memory,
    schedules: Vec<Option<Arc<Schedule>>>,
    out: CoreResult,
    bufs: Vec<Vec<u8>>,
    /// Per-pixel partial output bytes of the current pixel block.
    partial: Vec<Vec<u8>>,
    /// 2-bit packing state: (byte, lanes filled).
    crumb: Vec<(u8, usize)>,
}

impl<'a> Worker<'a> {
    fn schedule(&mut self, p: usize, c: usize) -> Arc<Schedule> {
        let words = self.words;
        let slot = (p - 1) * BLOCK_CHANNELS + (c - 1);
        self.schedules[slot]
            .get_or_insert_with(|| Arc::new(schedule::build(p, c, words)))
            .clone()
    }

    fn word(bytes: &[u8], k: usize) -> u32 {
        u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes"))
    }

    fn gather(&mut self, pixels: &[usize]) {
        for (i, &px) in pixels.iter().enumerate() {
            let mut buf = std::mem::take(&mut self.bufs[i]);
            self.cols.gather(px, &mut buf, &mut self.out.trace, self.id);
            self.bufs[i] = buf;
        }
    }

    fn start_pixel_block(&mut self, np: usize) {
        for p in 0..np {
            self.core.set_reg(status_reg(p), 0);
            self.partial[p].clear();
            self.crumb[p] = (0, 0);
        }
        if matches!(self.stage, Stage::Threshold(_)) {
            self.out.trace.push_n(Op::Alu, Phase::Other, self.id, np);
        }
    }

    fn run_block(&mut self, pixels: &[usize], ch0: usize, nc: usize) -> Result<()> {
        let np = pixels.len();
        let id = self.id;
        let t = &mut self.out.trace;
        t.push(Op::LoopIter, Phase::Other, id);
        t.push_n(Op::Alu, Phase::Other, id, np * nc + 2);
        for p in 0..np {
            for c in 0..nc {
                self.core.set_reg(acc_reg(p, c), 0);
            }
        }

        if self.words > 0 {
            let s = self.schedule(np, nc);
            let w_base = 4 * s.act_order.len();
            for (i, &(p, k)) in s.act_order.iter().enumerate() {
                self.mem
                    .write_word((4 * i) as u32, Self::word(&self.bufs[p], k))?;
            }
            for (i, &(c, k)) in s.weight_order.iter().enumerate() {
                let row = &self.weights[(ch0 + c) * self.col_len..(ch0 + c + 1) * self.col_len];
                self.mem
                    .write_word((w_base + 4 * i) as u32, Self::word(row, k))?;
            }
            self.core.nnrf.addr = [0, w_base as u32];
            let mal = self.fmt.mal_op();
            for st in &s.steps {
                let rd = st.acc.map_or(Reg::ZERO, |(p, c)| acc_reg(p, c));
                let imm = st.sel.encode();
                match self.fmt {
                    LaneFormat::Ternary => self.core.execute(
                        &Instruction::SmlsdotspT {
                            rd,
                            rs1: Reg::ZERO,
                            imm,
                        },
                        &self.mem,
                    )?,
                    LaneFormat::Crumb => self.core.mac_and_load(self.fmt, rd, imm, &self.mem)?,
                }
                let op = if st.acc.is_some() { mal } else { Op::MalLoad };
                self.out.trace.push(op, Phase::HotLoop, id);
            }
            self.out
                .trace
                .push_n(Op::LoopIter, Phase::HotLoop, id, self.words);
        }

        let tail = self.col_len % 4;
        if tail > 0 {
            let t0 = self.col_len - tail;
            for p in 0..np {
                for c in 0..nc {
                    let row = &self.weights[(ch0 + c) * self.col_len..(ch0 + c + 1) * self.col_len];
                    let mut acc = self.core.reg(acc_reg(p, c)) as i32;
                    for j in t0..self.col_len {
                        let a = self.fmt.decode_byte(self.bufs[p][j], j)?;
                        let w = self.fmt.decode_byte(row[j], j)?;
                        let dot: i32 = a.iter().zip(&w).map(|(&x, &y)| x as i32 * y as i32).sum();
                        acc = acc.wrapping_add(dot);
                        let t = &mut self.out.trace;
                        t.push_n(Op::TailLoad, Phase::Other, id, 2);
                        if self.fmt == LaneFormat::Ternary {
                            t.push_n(Op::TailDecode, Phase::Other, id, 2);
                        }
                        t.push(Op::TailDot, Phase::Other, id);
                    }
                    self.core.set_reg(acc_reg(p, c), acc as u32);
                }
            }
        }

        match self.stage {
            Stage::Threshold(th) => {
                for c in 0..nc {
                    self.out.trace.push(Op::Lw, Phase::Other, id);
                    self.core.set_reg(th_reg(), th[ch0 + c].to_reg());
                    for p in 0..np {
                        let ins = Instruction::Thrc {
                            rd: status_reg(p),
                            rs1: acc_reg(p, c),
                            rs2: th_reg(),
                        };
                        self.core.execute(&ins, &self.mem)?;
                        self.out.trace.push(Op::Thrc, Phase::Requant, id);
                        let st = ThrcStatus::from_reg(self.core.reg(status_reg(p)))?;
                        if st.counter() == 0 {
                            self.partial[p].push(st.compressed());
                            self.out.trace.push(Op::Sb, Phase::Other, id);
                        }
                    }
                }
            }
            Stage::Requant(rq) => {
                for c in 0..nc {
                    self.out.trace.push_n(Op::Lw, Phase::Other, id, 2);
                    for p in 0..np {
                        let v = rq[ch0 + c].apply(self.core.reg(acc_reg(p, c)) as i32);
                        for op in [Op::Mul, Op::AddN, Op::Clip, Op::BitIns] {
                            self.out.trace.push(op, Phase::Requant, id);
                        }
                        let (byte, n) = &mut self.crumb[p];
                        *byte |= ((v as u8) & 0b11) << (2 * *n);
                        *n += 1;
                        if *n == 4 {
                            self.partial[p].push(*byte);
                            self.crumb[p] = (0, 0);
                            self.out.trace.push(Op::Sb, Phase::Other, id);
                        }
                    }
                }
            }
            Stage::Int => {
                for p in 0..np {
                    for c in 0..nc {
                        let v = self.core.reg(acc_reg(p, c)) as i32;
                        self.out.ints.push((pixels[p], ch0 + c, v));
                        self.out.trace.push(Op::Sw, Phase::Other, id);
                    }
                }
            }
        }
        Ok(())
    }

    fn finish_pixel_block(&mut self, pixels: &[usize]) {
        if matches!(self.stage, Stage::Int) {
            return;
        }
        for (p, &px) in pixels.iter().enumerate() {
            self.out
                .packed
                .push((px, std::mem::take(&mut self.partial[p])));
        }
    }
}

/// Blocked matmul over all columns. Pixel blocks are striped across `cores`
/// (for [`Stage::Int`], pixel-block x channel-block pairs are).
pub(crate) fn matmul(
    fmt: LaneFormat,
    cols: &Columns,
    weights: &[u8],
    out_ch: usize,
    stage: Stage,
    cores: usize,
) -> Result<(MatmulOut, KernelTrace)> {
    let n = cols.count();
    let col_len = cols.len();
    if cores == 0 || cores > 256 {
        return Err(KernelError::Params(format!(
            "core count {cores} outside 1..=256"
        )));
    }
    if let Columns::Given(c) = cols {
        if c.iter().any(|c| c.len() != col_len) {
            return Err(KernelError::Dimension("columns differ in length".into()));
        }
    }
    if weights.len() != out_ch * col_len {
        return Err(KernelError::Dimension(format!(
            "{} weight bytes for {out_ch} rows of {col_len}",
            weights.len()
        )));
    }
    match stage {
        Stage::Threshold(th)
            if th.len() != out_ch || fmt != LaneFormat::Ternary || out_ch % 5 != 0 =>
        {
            return Err(KernelError::Dimension(format!(
                "{} thresholds for {out_ch} ternary channels",
                th.len()
            )));
        }
        Stage::Requant(rq) if rq.len() != out_ch || fmt != LaneFormat::Crumb || out_ch % 4 != 0 => {
            return Err(KernelError::Dimension(format!(
                "{} requant params for {out_ch} 2-bit channels",
                rq.len()
            )));
        }
        _ => {}
    }

    let pixel_blocks = n.div_ceil(BLOCK_PIXELS);
    let chan_blocks = out_ch.div_ceil(BLOCK_CHANNELS);
    let words = col_len / 4;
    let int_out = matches!(stage, Stage::Int);

    let results: Vec<CoreResult> = (0..cores)
        .into_par_iter()
        .map(|id| -> Result<CoreResult> {
            let mut w = Worker {
                fmt,
                cols,
                weights,
                col_len,
                words,
                stage,
                id: id as u8,
                core: CoreState::new(id as u8),
                mem: Memory::new((4 * (BLOCK_PIXELS + BLOCK_CHANNELS) * words).max(4)),
                schedules: vec![None; BLOCK_PIXELS * BLOCK_CHANNELS],
                out: CoreResult::default(),
                bufs: (0..BLOCK_PIXELS)
                    .map(|_| Vec::with_capacity(col_len))
                    .collect(),
                partial: vec![Vec::new(); BLOCK_PIXELS],
                crumb: vec![(0, 0); BLOCK_PIXELS],
            };
            let block =
                |b: usize| (b * BLOCK_PIXELS..((b + 1) * BLOCK_PIXELS).min(n)).collect::<Vec<_>>();
            let chans = |cb: usize| {
                (
                    cb * BLOCK_CHANNELS,
                    BLOCK_CHANNELS.min(out_ch - cb * BLOCK_CHANNELS),
                )
            };
            if int_out {
                for u in (id..pixel_blocks * chan_blocks).step_by(cores) {
                    let px = block(u / chan_blocks);
                    let (c0, nc) = chans(u % chan_blocks);
                    w.gather(&px);
                    w.run_block(&px, c0, nc)?;
                }
            } else {
                for b in (id..pixel_blocks).step_by(cores) {
                    let px = block(b);
                    w.gather(&px);
                    w.start_pixel_block(px.len());
                    for cb in 0..chan_blocks {
                        let (c0, nc) = chans(cb);
                        w.run_block(&px, c0, nc)?;
                    }
                    w.finish_pixel_block(&px);
                }
            }
            Ok(w.out)
        })
        .collect::<Result<_>>()?;

    let mut trace = KernelTrace::new();
    let out = if int_out {
        let mut v = vec![0i32; n * out_ch];
        for r in &results {
            for &(px, c, val) in &r.ints {
                v[px * out_ch + c] = val;
            }
        }
        MatmulOut::Int(v)
    } else {
        let bpp = out_ch / fmt.elems_per_byte();
        let mut v = vec![0u8; n * bpp];
        for r in &results {
            for (px, bytes) in &r.packed {
                v[px * bpp..(px + 1) * bpp].copy_from_slice(bytes);
            }
        }
        MatmulOut::Packed(v)
    };
    for r in results {
        trace.extend(r.trace);
    }
    Ok((out, trace))
}

//! Naive integer reference implementations.
//!
//! Self-contained on purpose: nothing here touches the codec, the ISA model or
//! the kernels. Tensors are CHW with plain `i32` elements and weights are
//! `(out, in, kh, kw)`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTensor {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<i32>,
}

impl DenseTensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![0; c * h * w],
        }
    }

    pub fn from_fn(
        c: usize,
        h: usize,
        w: usize,
        mut f: impl FnMut(usize, usize, usize) -> i32,
    ) -> Self {
        let mut t = Self::zeros(c, h, w);
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    t.data[(ch * h + y) * w + x] = f(ch, y, x);
                }
            }
        }
        t
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> i32 {
        self.data[(c * self.h + y) * self.w + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: i32) {
        self.data[(c * self.h + y) * self.w + x] = v;
    }

    /// Channel-minor flattening, the order the FC layers consume.
    pub fn flatten_hwc(&self) -> Vec<i32> {
        let mut out = Vec::with_capacity(self.data.len());
        for y in 0..self.h {
            for x in 0..self.w {
                for c in 0..self.c {
                    out.push(self.at(c, y, x));
                }
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(usize, i32) -> i32) -> Self {
        let plane = self.h * self.w;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i / plane, v))
            .collect();
        Self {
            c: self.c,
            h: self.h,
            w: self.w,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseWeights {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub data: Vec<i32>,
}

impl DenseWeights {
    pub fn at(&self, o: usize, i: usize, ky: usize, kx: usize) -> i32 {
        self.data[((o * self.in_ch + i) * self.kh + ky) * self.kw + kx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pad {
    Same,
    Valid,
    /// Pad only before the window, `(k-1)*d` positions.
    Causal,
}

/// (output size, leading pad) along one axis.
pub fn out_and_pad(n: usize, k: usize, s: usize, d: usize, pad: Pad) -> (usize, usize) {
    let span = (k - 1) * d + 1;
    match pad {
        Pad::Same => {
            let out = n.div_ceil(s);
            let total = ((out - 1) * s + span).saturating_sub(n);
            (out, total / 2)
        }
        Pad::Valid => (if n >= span { (n - span) / s + 1 } else { 0 }, 0),
        Pad::Causal => ((n - 1) / s + 1, span - 1),
    }
}

/// Threshold cascade: `z < lo` gives -1, `z >= hi` gives +1.
pub fn threshold_ref(z: i32, t_lo: i32, t_hi: i32) -> i32 {
    if z < t_lo {
        -1
    } else if z >= t_hi {
        1
    } else {
        0
    }
}

/// `clip((s*z + b) >> d, -2, 1)` in 32-bit wrapping arithmetic. `>>` on a
/// signed value floors.
pub fn requant2b_ref(z: i32, s: i32, b: i32, d: u32) -> i32 {
    (s.wrapping_mul(z).wrapping_add(b) >> d).clamp(-2, 1)
}

/// Raw 2-D convolution accumulators.
pub fn conv2d_ref(
    x: &DenseTensor,
    w: &DenseWeights,
    stride: usize,
    dilation: usize,
    pad: Pad,
) -> Result<DenseTensor, OracleError> {
    if w.in_ch != x.c {
        return Err(OracleError::Shape(format!(
            "weights expect {} channels, input has {}",
            w.in_ch, x.c
        )));
    }
    let (oh, py) = out_and_pad(x.h, w.kh, stride, dilation, pad);
    let (ow, px) = out_and_pad(x.w, w.kw, stride, dilation, pad);
    let mut out = DenseTensor::zeros(w.out_ch, oh, ow);
    for o in 0..w.out_ch {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0i32;
                for i in 0..x.c {
                    for ky in 0..w.kh {
                        for kx in 0..w.kw {
                            let iy = (oy * stride + ky * dilation) as isize - py as isize;
                            let ix = (ox * stride + kx * dilation) as isize - px as isize;
                            if iy < 0 || ix < 0 || iy >= x.h as isize || ix >= x.w as isize {
                                continue;
                            }
                            acc = acc.wrapping_add(
                                x.at(i, iy as usize, ix as usize) * w.at(o, i, ky, kx),
                            );
                        }
                    }
                }
                out.set(o, oy, ox, acc);
            }
        }
    }
    Ok(out)
}

/// Dilated causal 1-D convolution along the width axis of a height-1 tensor:
/// `y[t] = sum_j w[j] * x[t - (k-1-j)*d]`, zero before the sequence start.
pub fn conv1d_ref(
    x: &DenseTensor,
    w: &DenseWeights,
    dilation: usize,
) -> Result<DenseTensor, OracleError> {
    if x.h != 1 || w.kh != 1 {
        return Err(OracleError::Shape("1-D convolution needs height 1".into()));
    }
    if w.in_ch != x.c {
        return Err(OracleError::Shape(format!(
            "weights expect {} channels, input has {}",
            w.in_ch, x.c
        )));
    }
    let k = w.kw;
    let mut out = DenseTensor::zeros(w.out_ch, 1, x.w);
    for o in 0..w.out_ch {
        for t in 0..x.w {
            let mut acc = 0i32;
            for i in 0..x.c {
                for j in 0..k {
                    let back = (k - 1 - j) * dilation;
                    if back <= t {
                        acc = acc.wrapping_add(x.at(i, 0, t - back) * w.at(o, i, 0, j));
                    }
                }
            }
            out.set(o, 0, t, acc);
        }
    }
    Ok(out)
}

pub fn maxpool_ref(x: &DenseTensor, k: usize, stride: usize) -> DenseTensor {
    let oh = if x.h >= k { (x.h - k) / stride + 1 } else { 0 };
    let ow = if x.w >= k { (x.w - k) / stride + 1 } else { 0 };
    DenseTensor::from_fn(x.c, oh, ow, |c, oy, ox| {
        let mut m = i32::MIN;
        for ky in 0..k {
            for kx in 0..k {
                m = m.max(x.at(c, oy * stride + ky, ox * stride + kx));
            }
        }
        m
    })
}

/// `w` is row-major `out x x.len()`.
pub fn fc_ref(x: &[i32], w: &[i32], out: usize) -> Result<Vec<i32>, OracleError> {
    if w.len() != out * x.len() {
        return Err(OracleError::Shape(format!(
            "{} weights for {}x{}",
            w.len(),
            out,
            x.len()
        )));
    }
    Ok(w.chunks(x.len())
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(0i32, |a, (p, q)| a.wrapping_add(p * q))
        })
        .collect())
}

/// Zero channels appended up to `target`.
pub fn pad_channels_ref(x: &DenseTensor, target: usize) -> DenseTensor {
    DenseTensor::from_fn(
        target,
        x.h,
        x.w,
        |c, y, xx| if c < x.c { x.at(c, y, xx) } else { 0 },
    )
}

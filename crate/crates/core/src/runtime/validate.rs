//! Static graph checks: shapes, precisions and parameter tables.

use super::{Layer, LayerKind, LayerParams, ModelGraph, Precision, Weights};

/// Every problem found, in layer order. Empty means the graph can run.
pub fn validate(g: &ModelGraph) -> Vec<String> {
    let mut errs = Vec::new();
    let (c, h, w) = g.input;
    let prec = g.input_precision;
    if !matches!(prec, Precision::Ternary | Precision::TwoBit) {
        errs.push("input precision must be ternary or 2bit".to_string());
    }
    if c == 0 || h == 0 || w == 0 {
        errs.push(format!("input {c}x{h}x{w} has an empty dimension"));
        return errs;
    }
    if c % prec.channel_multiple() != 0 {
        errs.push(format!(
            "input channels {c} not a multiple of {}",
            prec.channel_multiple()
        ));
    }
    if g.layers.is_empty() {
        errs.push("graph has no layers".to_string());
        return errs;
    }
    let mut shape = Some((prec, c, h, w));
    for (i, l) in g.layers.iter().enumerate() {
        let mut e = |m: String| errs.push(format!("layer {i} ({}): {m}", l.kind.name()));
        if l.kind == LayerKind::Fc && i + 1 != g.layers.len() {
            e("fc must be the last layer".into());
        }
        // shapes past the first broken layer are unknown
        if let Some(cur) = shape {
            shape = check_layer(l, cur, &mut e);
        }
    }
    if g.layers.last().map(|l| l.kind) != Some(LayerKind::Fc) {
        errs.push("last layer must be fc".to_string());
    }
    errs
}

type Shape = (Precision, usize, usize, usize);

fn weights_shape(
    l: &Layer,
    prec: Precision,
    want: (usize, usize, usize),
    e: &mut impl FnMut(String),
) {
    let fmt_ok = matches!(
        (&l.weights, prec),
        (Weights::Ternary(_), Precision::Ternary) | (Weights::TwoBit(_), Precision::TwoBit)
    );
    match l.weights.shape() {
        None => e("missing weights".into()),
        Some(_) if !fmt_ok => e(format!("weight format does not match {prec:?} input")),
        Some(s) if s != want => e(format!("weights {s:?} (in, out, taps), expected {want:?}")),
        _ => {}
    }
}

fn no_tensors(l: &Layer, e: &mut impl FnMut(String)) {
    if l.weights != Weights::None {
        e("takes no weights".into());
    }
    if l.params != LayerParams::None {
        e("takes no parameters".into());
    }
}

fn check_layer(l: &Layer, (prec, c, h, w): Shape, e: &mut impl FnMut(String)) -> Option<Shape> {
    if l.kind != LayerKind::Fc && l.precision != prec {
        e(format!(
            "precision {:?} does not match {prec:?} input",
            l.precision
        ));
    }
    let mult = prec.channel_multiple();
    match l.kind {
        LayerKind::Conv2d | LayerKind::Conv1dDilated => {
            if l.kind == LayerKind::Conv1dDilated
                && (h != 1 || l.kh != 1 || l.padding != crate::kernels::Padding::Causal)
            {
                e(format!(
                    "needs height-1 input, kh=1 and causal padding, got h={h} kh={}",
                    l.kh
                ));
            }
            let p = l.conv_params(c);
            if let Err(err) = p.check(mult) {
                e(err.to_string());
                return None;
            }
            weights_shape(l, prec, (c, l.out_ch, l.kh * l.kw), e);
            let kind_ok = matches!(
                (&l.params, prec),
                (LayerParams::Thresholds(_), Precision::Ternary)
                    | (LayerParams::Requant(_), Precision::TwoBit)
            );
            if !kind_ok {
                e(format!(
                    "needs {} parameters",
                    if prec == Precision::Ternary {
                        "threshold"
                    } else {
                        "requant"
                    }
                ));
            } else if l.params.len() != l.out_ch {
                e(format!(
                    "{} parameter entries for {} channels",
                    l.params.len(),
                    l.out_ch
                ));
            }
            match p.output_geometry(h, w) {
                Ok((oh, ow, _, _)) => Some((prec, l.out_ch, oh, ow)),
                Err(err) => {
                    e(err.to_string());
                    None
                }
            }
        }
        LayerKind::MaxPool => {
            no_tensors(l, e);
            if l.out_ch != c {
                e(format!("out_ch {} must equal input channels {c}", l.out_ch));
            }
            if l.kh != l.kw || l.kh == 0 || l.stride == 0 {
                e(format!(
                    "needs a square non-empty window and stride, got {}x{} s={}",
                    l.kh, l.kw, l.stride
                ));
                return None;
            }
            if l.kh > h || l.kh > w {
                e(format!("{0}x{0} window does not fit {h}x{w}", l.kh));
                return None;
            }
            Some((
                prec,
                c,
                (h - l.kh) / l.stride + 1,
                (w - l.kh) / l.stride + 1,
            ))
        }
        LayerKind::PadChannels => {
            no_tensors(l, e);
            if l.out_ch < c || l.out_ch % mult != 0 {
                e(format!("cannot pad {c} channels to {}", l.out_ch));
            }
            Some((prec, l.out_ch.max(c), h, w))
        }
        LayerKind::History => {
            no_tensors(l, e);
            if h != 1 || w != 1 {
                e(format!("needs a 1x1 input, got {h}x{w}"));
            }
            if l.aux == 0 {
                e("history length must be at least 1".into());
            }
            if l.out_ch != c {
                e(format!("out_ch {} must equal input channels {c}", l.out_ch));
            }
            Some((prec, c, 1, l.aux.max(1)))
        }
        LayerKind::Fc => {
            if l.precision != Precision::IntOut {
                e("fc output must be int-out".into());
            }
            if l.params != LayerParams::None {
                e("takes no parameters".into());
            }
            if l.out_ch == 0 {
                e("no output classes".into());
            }
            weights_shape(l, prec, (c, l.out_ch, h * w), e);
            Some((Precision::IntOut, l.out_ch, 1, 1))
        }
    }
}

//! Layer-by-layer execution on the emulated cluster.

use std::collections::VecDeque;

use crate::codec::TernaryTensor;
use crate::isa::LaneFormat;
use crate::kernels::{self, KernelError, QuantTensor2b};
use crate::perf::{cost_report, CostReport, CostTable, KernelTrace};

use super::{validate, LayerKind, LayerParams, ModelError, ModelGraph, Tensor, Weights};

/// Cost and work of one executed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRun {
    pub kind: LayerKind,
    pub output_shape: (usize, usize, usize),
    pub report: CostReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub scores: Vec<i32>,
    pub layers: Vec<LayerRun>,
    /// Layers chained back to back.
    pub report: CostReport,
}

impl Inference {
    pub fn macs(&self) -> u64 {
        self.report.macs
    }

    /// Index of the highest score, first on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        best
    }
}

/// A validated graph plus the state of its history layers.
#[derive(Debug, Clone)]
pub struct Session<'g> {
    graph: &'g ModelGraph,
    costs: CostTable,
    cores: usize,
    history: Vec<Option<VecDeque<Vec<u8>>>>,
}

enum Value {
    Map(Tensor),
    Scores(Vec<i32>),
}

impl<'g> Session<'g> {
    pub fn new(graph: &'g ModelGraph, cores: usize) -> Result<Self, ModelError> {
        let problems = validate(graph);
        if !problems.is_empty() {
            return Err(ModelError::Validation(problems));
        }
        if !(1..=256).contains(&cores) {
            return Err(ModelError::Kernel {
                layer: 0,
                source: KernelError::Params(format!("core count {cores} outside 1..=256")),
            });
        }
        let mut s = Self {
            graph,
            costs: CostTable::default(),
            cores,
            history: Vec::new(),
        };
        s.reset();
        Ok(s)
    }

    pub fn with_costs(mut self, costs: CostTable) -> Self {
        self.costs = costs;
        self
    }

    /// Fill every history buffer with zero frames.
    pub fn reset(&mut self) {
        let mut c = self.graph.input.0;
        let mut fmt = lane_format(self.graph.input_precision == super::Precision::Ternary);
        self.history = self
            .graph
            .layers
            .iter()
            .map(|l| {
                let out = (l.kind == LayerKind::History).then(|| {
                    let bytes = c / fmt.elems_per_byte();
                    (0..l.aux).map(|_| vec![fmt.zero_byte(); bytes]).collect()
                });
                if l.kind != LayerKind::Fc {
                    c = l.out_ch;
                    fmt = lane_format(l.precision == super::Precision::Ternary);
                }
                out
            })
            .collect();
    }

    /// Run one input through every layer. History layers keep the frame for
    /// later runs.
    pub fn run(&mut self, input: &Tensor) -> Result<Inference, ModelError> {
        let want = (self.graph.input_precision, self.graph.input);
        if (input.precision(), input.shape()) != want {
            return Err(ModelError::Shape(format!(
                "model expects {:?} {:?}, got {:?} {:?}",
                want.0,
                want.1,
                input.precision(),
                input.shape()
            )));
        }
        let mut value = Value::Map(input.clone());
        let mut layers = Vec::with_capacity(self.graph.layers.len());
        for i in 0..self.graph.layers.len() {
            let Value::Map(x) = &value else {
                unreachable!("validated: fc is last")
            };
            let (next, trace, macs) = self
                .step(i, x)
                .map_err(|source| ModelError::Kernel { layer: i, source })?;
            let report =
                cost_report(&trace, &self.costs, macs).map_err(|e| ModelError::Kernel {
                    layer: i,
                    source: KernelError::Params(e.to_string()),
                })?;
            let output_shape = match &next {
                Value::Map(t) => t.shape(),
                Value::Scores(s) => (s.len(), 1, 1),
            };
            layers.push(LayerRun {
                kind: self.graph.layers[i].kind,
                output_shape,
                report,
            });
            value = next;
        }
        let Value::Scores(scores) = value else {
            unreachable!("validated: last layer is fc")
        };
        let report =
            CostReport::chain(&layers.iter().map(|l| l.report.clone()).collect::<Vec<_>>());
        Ok(Inference {
            scores,
            layers,
            report,
        })
    }

    fn step(&mut self, i: usize, x: &Tensor) -> kernels::Result<(Value, KernelTrace, u64)> {
        let l = &self.graph.layers[i];
        let cores = self.cores;
        let map_t = |o: kernels::KernelOutput<TernaryTensor>| {
            (Value::Map(Tensor::Ternary(o.output)), o.trace, o.macs)
        };
        let map_q = |o: kernels::KernelOutput<QuantTensor2b>| {
            (Value::Map(Tensor::TwoBit(o.output)), o.trace, o.macs)
        };
        let mismatch = || {
            KernelError::Params(format!(
                "layer {i} weights or parameters do not match its input"
            ))
        };
        Ok(match (l.kind, x) {
            (LayerKind::Conv2d | LayerKind::Conv1dDilated, Tensor::Ternary(x)) => {
                let (Weights::Ternary(w), LayerParams::Thresholds(th)) = (&l.weights, &l.params)
                else {
                    return Err(mismatch());
                };
                let p = l.conv_params(x.channels());
                if l.kind == LayerKind::Conv1dDilated {
                    map_t(kernels::conv1d_dilated_ternary(x, w, &p, th, cores)?)
                } else {
                    map_t(kernels::conv2d_ternary(x, w, &p, th, cores)?)
                }
            }
            (LayerKind::Conv2d | LayerKind::Conv1dDilated, Tensor::TwoBit(x)) => {
                let (Weights::TwoBit(w), LayerParams::Requant(rq)) = (&l.weights, &l.params) else {
                    return Err(mismatch());
                };
                map_q(kernels::conv2d_2bit(
                    x,
                    w,
                    &l.conv_params(x.channels()),
                    rq,
                    cores,
                )?)
            }
            (LayerKind::MaxPool, Tensor::Ternary(x)) => {
                map_t(kernels::maxpool2d_ternary(x, l.kh, l.stride, cores)?)
            }
            (LayerKind::MaxPool, Tensor::TwoBit(x)) => {
                map_q(kernels::maxpool2d_2bit(x, l.kh, l.stride, cores)?)
            }
            (LayerKind::PadChannels, Tensor::Ternary(x)) => {
                map_t(kernels::pad_channels_ternary(x, l.out_ch, cores)?)
            }
            (LayerKind::PadChannels, Tensor::TwoBit(x)) => {
                map_q(kernels::pad_channels_2bit(x, l.out_ch, cores)?)
            }
            (LayerKind::History, x) => {
                let (c, data) = match x {
                    Tensor::Ternary(t) => (t.channels(), t.data()),
                    Tensor::TwoBit(t) => (t.channels(), t.data()),
                };
                let ring = self.history[i].as_mut().expect("history state allocated");
                ring.pop_front();
                ring.push_back(data.to_vec());
                let seq: Vec<u8> = ring.iter().flatten().copied().collect();
                let trace = kernels::copy_trace(1, data.len(), 1);
                let out = match x {
                    Tensor::Ternary(_) => {
                        Tensor::Ternary(TernaryTensor::from_bytes(c, 1, l.aux, seq)?)
                    }
                    Tensor::TwoBit(_) => {
                        Tensor::TwoBit(QuantTensor2b::from_bytes(c, 1, l.aux, seq)?)
                    }
                };
                (Value::Map(out), trace, 0)
            }
            (LayerKind::Fc, Tensor::Ternary(x)) => {
                let Weights::Ternary(w) = &l.weights else {
                    return Err(mismatch());
                };
                let o = kernels::fully_connected_ternary(x, w, cores)?;
                (Value::Scores(o.output), o.trace, o.macs)
            }
            (LayerKind::Fc, Tensor::TwoBit(x)) => {
                let Weights::TwoBit(w) = &l.weights else {
                    return Err(mismatch());
                };
                let o = kernels::fully_connected_2bit(x, w, cores)?;
                (Value::Scores(o.output), o.trace, o.macs)
            }
        })
    }
}

fn lane_format(ternary: bool) -> LaneFormat {
    if ternary {
        LaneFormat::Ternary
    } else {
        LaneFormat::Crumb
    }
}

/// Single run with empty history and unit instruction costs.
pub fn run_inference(
    graph: &ModelGraph,
    input: &Tensor,
    cores: usize,
) -> Result<Inference, ModelError> {
    Session::new(graph, cores)?.run(input)
}

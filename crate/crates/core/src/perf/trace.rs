//! Executed-instruction traces.

use std::fmt;

use crate::isa::Mnemonic;

/// Latency breakdown bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Im2col,
    HotLoop,
    Requant,
    Other,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Im2col, Phase::HotLoop, Phase::Requant, Phase::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::Im2col => "im2col",
            Phase::HotLoop => "hot_loop",
            Phase::Requant => "requant",
            Phase::Other => "other",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cost class an operation is charged under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstrClass {
    Mac,
    Load,
    Store,
    Alu,
    Mul,
    Thrc,
    Compare,
    /// Loop back-edge and counter update, charged once per iteration.
    LoopIter,
}

impl InstrClass {
    pub const ALL: [InstrClass; 8] = [
        InstrClass::Mac,
        InstrClass::Load,
        InstrClass::Store,
        InstrClass::Alu,
        InstrClass::Mul,
        InstrClass::Thrc,
        InstrClass::Compare,
        InstrClass::LoopIter,
    ];
}

/// Operation recorded in a trace. Covers the ternary instructions, the 2-bit
/// baseline instructions and the scalar RV32/XpulpV2 bookkeeping the kernels issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    SmlsdotspT,
    SdotspT,
    DotspT,
    MinT,
    MaxT,
    Thrc,
    /// MAC-and-load whose MAC result is discarded (`rd = x0`), issued only to
    /// fill an NN-RF slot.
    MalLoad,
    /// 2-bit MAC-and-load.
    MlsdotspC,
    SdotspC,
    MaxC,
    Lw,
    Lbu,
    Sw,
    Sb,
    Mul,
    /// Add then arithmetic shift right by an immediate.
    AddN,
    Clip,
    BitIns,
    /// Register moves, address arithmetic.
    Alu,
    LoopIter,
    /// Leftover (sub-word) handling.
    TailLoad,
    TailDecode,
    TailDot,
    TailMax,
    TailStore,
}

impl Op {
    pub const ALL: [Op; 25] = [
        Op::SmlsdotspT,
        Op::MalLoad,
        Op::SdotspT,
        Op::DotspT,
        Op::MinT,
        Op::MaxT,
        Op::Thrc,
        Op::MlsdotspC,
        Op::SdotspC,
        Op::MaxC,
        Op::Lw,
        Op::Lbu,
        Op::Sw,
        Op::Sb,
        Op::Mul,
        Op::AddN,
        Op::Clip,
        Op::BitIns,
        Op::Alu,
        Op::LoopIter,
        Op::TailLoad,
        Op::TailDecode,
        Op::TailDot,
        Op::TailMax,
        Op::TailStore,
    ];

    pub fn class(self) -> InstrClass {
        use Op::*;
        match self {
            SmlsdotspT | SdotspT | DotspT | MlsdotspC | SdotspC | TailDot => InstrClass::Mac,
            MinT | MaxT | MaxC | TailMax => InstrClass::Compare,
            Thrc => InstrClass::Thrc,
            MalLoad | Lw | Lbu | TailLoad | TailDecode => InstrClass::Load,
            Sw | Sb | TailStore => InstrClass::Store,
            Mul => InstrClass::Mul,
            AddN | Clip | BitIns | Alu => InstrClass::Alu,
            LoopIter => InstrClass::LoopIter,
        }
    }

    pub fn is_tail(self) -> bool {
        matches!(
            self,
            Op::TailLoad | Op::TailDecode | Op::TailDot | Op::TailMax | Op::TailStore
        )
    }
}

impl From<Mnemonic> for Op {
    fn from(m: Mnemonic) -> Op {
        match m {
            Mnemonic::SmlsdotspT => Op::SmlsdotspT,
            Mnemonic::SdotspT => Op::SdotspT,
            Mnemonic::DotspT => Op::DotspT,
            Mnemonic::MinT => Op::MinT,
            Mnemonic::MaxT => Op::MaxT,
            Mnemonic::Thrc => Op::Thrc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub op: Op,
    pub phase: Phase,
    pub core: u8,
}

/// Ordered event log of one kernel run, possibly spanning several simulated cores.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KernelTrace {
    events: Vec<TraceEvent>,
}

impl KernelTrace {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, op: Op, phase: Phase, core: u8) {
        self.events.push(TraceEvent { op, phase, core });
    }

    #[inline]
    pub fn push_n(&mut self, op: Op, phase: Phase, core: u8, n: usize) {
        self.events
            .extend(std::iter::repeat(TraceEvent { op, phase, core }).take(n));
    }

    pub fn extend(&mut self, other: KernelTrace) {
        self.events.extend(other.events);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&TraceEvent) -> bool) -> usize {
        self.events.iter().filter(|e| pred(e)).count()
    }

    /// MAC-class instructions issued in the hot loop.
    pub fn hot_loop_macs(&self) -> usize {
        self.count(|e| e.phase == Phase::HotLoop && e.op.class() == InstrClass::Mac)
    }

    pub fn tail_instructions(&self) -> usize {
        self.count(|e| e.op.is_tail())
    }

    pub fn phase_instructions(&self, phase: Phase) -> usize {
        self.count(|e| e.phase == phase)
    }

    pub fn cores(&self) -> usize {
        self.events
            .iter()
            .map(|e| e.core as usize + 1)
            .max()
            .unwrap_or(0)
    }
}

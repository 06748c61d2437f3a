//! Cycle cost model over kernel traces.

pub mod bench;
mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

pub use trace::{InstrClass, KernelTrace, Op, Phase, TraceEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerfError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("cost for {0:?} must be at least 1")]
    InvalidCost(InstrClass),
    #[error("{path} nb={nb} {height}x{width} needs {bytes} B, L1 holds {limit} B")]
    ConfigTooLargeForL1 {
        path: String,
        nb: usize,
        height: usize,
        width: usize,
        bytes: usize,
        limit: usize,
    },
    #[error("kernel failed: {0}")]
    Kernel(String),
}

/// Cycles charged per instruction class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    costs: BTreeMap<InstrClass, u64>,
}

impl Default for CostTable {
    fn default() -> Self {
        let costs = InstrClass::ALL
            .iter()
            .map(|&c| (c, if c == InstrClass::LoopIter { 2 } else { 1 }))
            .collect();
        Self { costs }
    }
}

impl CostTable {
    pub fn with(mut self, class: InstrClass, cycles: u64) -> Result<Self, PerfError> {
        if cycles == 0 {
            return Err(PerfError::InvalidCost(class));
        }
        self.costs.insert(class, cycles);
        Ok(self)
    }

    pub fn cost(&self, class: InstrClass) -> u64 {
        self.costs[&class]
    }
}

/// Aggregated cycles of one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// `per_core[core][phase.index()]`
    pub per_core: Vec<[u64; 4]>,
    pub macs: u64,
}

impl CostReport {
    pub fn core_total(&self, core: usize) -> u64 {
        self.per_core[core].iter().sum()
    }

    /// Slowest core.
    pub fn total(&self) -> u64 {
        (0..self.per_core.len())
            .map(|c| self.core_total(c))
            .max()
            .unwrap_or(0)
    }

    /// Phase cycles of the slowest core.
    pub fn phase(&self, phase: Phase) -> u64 {
        match self.critical_core() {
            Some(c) => self.per_core[c][phase.index()],
            None => 0,
        }
    }

    fn critical_core(&self) -> Option<usize> {
        (0..self.per_core.len()).max_by_key(|&c| (self.core_total(c), std::cmp::Reverse(c)))
    }

    pub fn theta(&self) -> f64 {
        self.macs as f64 / self.total() as f64
    }

    /// Throughput gain over `baseline`, e.g. 0.5 for 50% more MACs/cycle.
    pub fn speedup_vs(&self, baseline: &CostReport) -> f64 {
        self.theta() / baseline.theta() - 1.0
    }

    /// Layers run back to back: totals add up, per-core slots combine phase-wise
    /// with each layer's critical core placed on core 0.
    pub fn chain(reports: &[CostReport]) -> CostReport {
        let mut phases = [0u64; 4];
        let mut macs = 0;
        for r in reports {
            if let Some(c) = r.critical_core() {
                for (acc, v) in phases.iter_mut().zip(r.per_core[c]) {
                    *acc += v;
                }
            }
            macs += r.macs;
        }
        CostReport {
            per_core: vec![phases],
            macs,
        }
    }
}

pub fn cost_report(
    trace: &KernelTrace,
    costs: &CostTable,
    macs: u64,
) -> Result<CostReport, PerfError> {
    if trace.is_empty() {
        return Err(PerfError::EmptyTrace);
    }
    let mut per_core = vec![[0u64; 4]; trace.cores()];
    for e in trace.events() {
        per_core[e.core as usize][e.phase.index()] += costs.cost(e.op.class());
    }
    Ok(CostReport { per_core, macs })
}

/// MAC count weighted by bits per value.
pub fn normalized_load(macs: u64, q: f64) -> f64 {
    macs as f64 * q
}

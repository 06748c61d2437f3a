//! N_b sweeps: the same 3x3 layer run on the ternary and 2-bit paths with
//! `N_b` bytes per pixel (`5*N_b` ternary channels, `4*N_b` 2-bit channels).

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::compress_tensor;
use crate::isa::{ThresholdPair, L1_BYTES};
use crate::kernels::{self, ConvParams, Padding, QuantTensor2b, RequantParams2b};

use super::{cost_report, CostReport, CostTable, PerfError};

pub const CSV_HEADER: &str =
    "path,nb,height,width,aligned,cycles_im2col,cycles_hot,cycles_rq,cycles_other,total,macs,theta,speedup_vs_2bit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    Ternary,
    TwoBit,
}

impl Path {
    pub fn label(self) -> &'static str {
        match self {
            Path::Ternary => "ternary",
            Path::TwoBit => "2bit",
        }
    }

    pub fn channels(self, nb: usize) -> usize {
        match self {
            Path::Ternary => 5 * nb,
            Path::TwoBit => 4 * nb,
        }
    }
}

impl FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ternary" => Ok(Path::Ternary),
            "2bit" => Ok(Path::TwoBit),
            _ => Err(format!("unknown path `{s}`, expected ternary or 2bit")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub nb: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub cores: usize,
}

impl BenchConfig {
    pub fn new(nb: usize, height: usize, width: usize) -> Self {
        Self {
            nb,
            height,
            width,
            kernel: 3,
            cores: 8,
        }
    }

    pub fn aligned(&self) -> bool {
        self.nb % 4 == 0
    }

    /// L1 bytes for input, output, weights, per-channel parameters and one
    /// 4-pixel im2col buffer per core.
    pub fn l1_bytes(&self, path: Path) -> usize {
        let ch = path.channels(self.nb);
        let maps = 2 * self.height * self.width * self.nb;
        let taps = self.kernel * self.kernel;
        let weights = ch * taps * self.nb;
        let params = ch * 8;
        let cols = self.cores * 4 * taps * self.nb;
        maps + weights + params + cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub path: Path,
    pub config: BenchConfig,
    pub report: CostReport,
    pub speedup_vs_2bit: f64,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        use super::Phase::*;
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.4},{:.4}",
            self.path.label(),
            self.config.nb,
            self.config.height,
            self.config.width,
            self.config.aligned(),
            r.phase(Im2col),
            r.phase(HotLoop),
            r.phase(Requant),
            r.phase(Other),
            r.total(),
            r.macs,
            r.theta(),
            self.speedup_vs_2bit
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_line());
    }
    s
}

/// Run one layer on one path and aggregate its trace.
pub fn run_config(
    path: Path,
    cfg: &BenchConfig,
    costs: &CostTable,
    seed: u64,
) -> Result<CostReport, PerfError> {
    let bytes = cfg.l1_bytes(path);
    if bytes > L1_BYTES {
        return Err(PerfError::ConfigTooLargeForL1 {
            path: path.label().into(),
            nb: cfg.nb,
            height: cfg.height,
            width: cfg.width,
            bytes,
            limit: L1_BYTES,
        });
    }
    let ch = path.channels(cfg.nb);
    let taps = cfg.kernel * cfg.kernel;
    let p = ConvParams::new(ch, ch, cfg.kernel, Padding::Same);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kerr = |e: kernels::KernelError| PerfError::Kernel(e.to_string());
    let (trace, macs) = match path {
        Path::Ternary => {
            let mut vals = |n: usize| (0..n).map(|_| rng.gen_range(-1i8..=1)).collect::<Vec<_>>();
            let x = compress_tensor(
                ch,
                cfg.height,
                cfg.width,
                &vals(ch * cfg.height * cfg.width),
            )
            .map_err(|e| PerfError::Kernel(e.to_string()))?;
            let w = compress_tensor(ch, ch, taps, &vals(ch * ch * taps))
                .map_err(|e| PerfError::Kernel(e.to_string()))?;
            let th = vec![ThresholdPair::new(-2, 2); ch];
            let out = kernels::conv2d_ternary(&x, &w, &p, &th, cfg.cores).map_err(kerr)?;
            (out.trace, out.macs)
        }
        Path::TwoBit => {
            let mut vals = |n: usize| (0..n).map(|_| rng.gen_range(-2i8..=1)).collect::<Vec<_>>();
            let x = QuantTensor2b::from_values(
                ch,
                cfg.height,
                cfg.width,
                &vals(ch * cfg.height * cfg.width),
            )
            .map_err(kerr)?;
            let w =
                QuantTensor2b::from_values(ch, ch, taps, &vals(ch * ch * taps)).map_err(kerr)?;
            let rq = vec![RequantParams2b::new(1, 0, 4).map_err(kerr)?; ch];
            let out = kernels::conv2d_2bit(&x, &w, &p, &rq, cfg.cores).map_err(kerr)?;
            (out.trace, out.macs)
        }
    };
    cost_report(&trace, costs, macs)
}

/// One row per (config, path). Ternary rows carry their speedup over the 2-bit
/// row of the same config; 2-bit rows carry 0.
pub fn benchmark_sweep(
    configs: &[BenchConfig],
    paths: &[Path],
    costs: &CostTable,
) -> Result<Vec<BenchRow>, PerfError> {
    let jobs: Vec<(BenchConfig, Path)> = configs
        .iter()
        .flat_map(|c| {
            let mut ps = paths.to_vec();
            if ps.contains(&Path::Ternary) && !ps.contains(&Path::TwoBit) {
                ps.push(Path::TwoBit);
            }
            ps.into_iter().map(move |p| (*c, p))
        })
        .collect();
    let reports: Vec<CostReport> = jobs
        .par_iter()
        .map(|(c, p)| run_config(*p, c, costs, c.nb as u64))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, (cfg, path)) in jobs.iter().enumerate() {
        if !paths.contains(path) {
            continue;
        }
        let speedup = match path {
            Path::Ternary => {
                let base = jobs
                    .iter()
                    .position(|(c, p)| c == cfg && *p == Path::TwoBit)
                    .expect("baseline queued");
                reports[i].speedup_vs(&reports[base])
            }
            Path::TwoBit => 0.0,
        };
        rows.push(BenchRow {
            path: *path,
            config: *cfg,
            report: reports[i].clone(),
            speedup_vs_2bit: speedup,
        });
    }
    Ok(rows)
}

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use xtern::isa::{assemble, disassemble, from_hex, to_hex};
use xtern::perf::bench::{benchmark_sweep, to_csv, BenchConfig, Path};
use xtern::perf::{CostReport, CostTable, Phase};
use xtern::runtime::{self, zoo, ModelGraph, Precision, Session, Tensor};

#[derive(Parser)]
#[command(
    name = "xtern",
    version,
    about = "Ternary RISC-V extension emulator and kernel benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a model on one or more concatenated input tensors.
    Run {
        model: PathBuf,
        input: PathBuf,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16).range(1..=256))]
        cores: u16,
        /// Per-layer cycle report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep a 3x3 layer over bytes per pixel, CSV to stdout.
    Bench {
        /// `nb=LO..HI` (inclusive) or `nb=A,B,C`.
        #[arg(long, default_value = "nb=2..12", value_parser = parse_sweep)]
        sweep: Sweep,
        #[arg(long, value_delimiter = ',', default_value = "ternary,2bit")]
        paths: Vec<Path>,
        /// Feature map `HxW`.
        #[arg(long, default_value = "16x16", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16).range(1..=256))]
        cores: u16,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Assemble text to one hex word per line.
    Asm {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Disassemble hex words.
    Disasm {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive codec and encoding checks.
    Selftest,
    /// Write a reference network with seeded random weights.
    Zoo {
        #[arg(value_enum)]
        net: Net,
        #[arg(long, value_enum, default_value_t = Prec::Ternary)]
        precision: Prec,
        /// Scaled channel count, default 40 (ternary) or 32 (2-bit) for vgg,
        /// 20 or 16 for dvs.
        #[arg(long)]
        channels: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write seeded random inputs for a model.
    Input {
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Net {
    Vgg,
    Dvs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prec {
    Ternary,
    #[value(name = "2bit")]
    TwoBit,
}

#[derive(Clone)]
struct Sweep(Vec<usize>);

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let body = s.strip_prefix("nb=").ok_or("expected nb=...")?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let v: Vec<usize> = if let Some((a, b)) = body.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = body.split_once("..") {
        (num(a)?..=num(b)?).collect()
    } else {
        body.split(',').map(num).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err("sweep needs at least one positive nb".into());
    }
    Ok(Sweep(v))
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once('x').ok_or("expected HxW")?;
    let n = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or(format!("bad size `{s}`"))
    };
    Ok((n(h)?, n(w)?))
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn write_out(out: &Option<PathBuf>, text: &str) -> Res {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report_row(
    s: &mut String,
    frame: usize,
    layer: &str,
    kind: &str,
    shape: (usize, usize, usize),
    r: &CostReport,
) {
    let _ = writeln!(
        s,
        "{frame},{layer},{kind},{},{},{},{},{},{},{},{},{},{:.4}",
        shape.0,
        shape.1,
        shape.2,
        r.phase(Phase::Im2col),
        r.phase(Phase::HotLoop),
        r.phase(Phase::Requant),
        r.phase(Phase::Other),
        r.total(),
        r.macs,
        if r.total() == 0 { 0.0 } else { r.theta() }
    );
}

fn run(model: PathBuf, input: PathBuf, cores: u16, report: Option<PathBuf>) -> Res {
    let g = runtime::load_model(&model)?;
    let frames = Tensor::from_blobs(&fs::read(&input)?)?;
    let mut session = Session::new(&g, cores as usize)?;
    let mut csv = String::from(
        "frame,layer,kind,out_c,out_h,out_w,cycles_im2col,cycles_hot,cycles_rq,cycles_other,total,macs,theta\n",
    );
    for (f, x) in frames.iter().enumerate() {
        let r = session.run(x)?;
        let scores: Vec<String> = r.scores.iter().map(i32::to_string).collect();
        println!(
            "frame {f}: class {} scores [{}] cycles {} macs {} theta {:.3}",
            r.argmax(),
            scores.join(", "),
            r.report.total(),
            r.macs(),
            r.report.theta()
        );
        for (i, l) in r.layers.iter().enumerate() {
            report_row(
                &mut csv,
                f,
                &i.to_string(),
                l.kind.name(),
                l.output_shape,
                &l.report,
            );
        }
        report_row(&mut csv, f, "total", "-", (r.scores.len(), 1, 1), &r.report);
    }
    if let Some(p) = report {
        fs::write(p, csv)?;
    }
    Ok(())
}

fn bench(
    sweep: Sweep,
    paths: Vec<Path>,
    size: (usize, usize),
    cores: u16,
    out: Option<PathBuf>,
) -> Res {
    let configs: Vec<BenchConfig> = sweep
        .0
        .iter()
        .map(|&nb| BenchConfig {
            cores: cores as usize,
            ..BenchConfig::new(nb, size.0, size.1)
        })
        .collect();
    let rows = benchmark_sweep(&configs, &paths, &CostTable::default())?;
    write_out(&out, &to_csv(&rows))
}

fn selftest() -> Result<(), String> {
    let suites = xtern::selftest::run_all();
    for s in &suites {
        println!("{}: {}/{} cases passed", s.name, s.passed, s.total);
    }
    if suites.iter().all(|s| s.ok()) {
        Ok(())
    } else {
        Err("selftest failed".into())
    }
}

fn zoo_cmd(net: Net, prec: Prec, channels: Option<usize>, seed: u64, out: PathBuf) -> Res {
    let p = match prec {
        Prec::Ternary => Precision::Ternary,
        Prec::TwoBit => Precision::TwoBit,
    };
    let ternary = matches!(prec, Prec::Ternary);
    let g: ModelGraph = match net {
        Net::Vgg => zoo::vgg_cifar(p, channels.unwrap_or(if ternary { 40 } else { 32 }), seed)?,
        Net::Dvs => zoo::dvs_hybrid(p, channels.unwrap_or(if ternary { 20 } else { 16 }), seed)?,
    };
    runtime::save_model(&g, out)?;
    Ok(())
}

fn input_cmd(model: PathBuf, frames: usize, seed: u64, out: PathBuf) -> Res {
    let g = runtime::load_model(model)?;
    let mut bytes = Vec::new();
    for f in 0..frames as u64 {
        bytes.extend(zoo::random_input(&g, seed.wrapping_add(f))?.to_blob());
    }
    fs::write(out, bytes)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res: Res = match cli.cmd {
        Cmd::Run {
            model,
            input,
            cores,
            report,
        } => run(model, input, cores, report),
        Cmd::Bench {
            sweep,
            paths,
            size,
            cores,
            out,
        } => bench(sweep, paths, size, cores, out),
        Cmd::Asm { file, out } => fs::read_to_string(&file)
            .map_err(Into::into)
            .and_then(|src| Ok(assemble(&src)?))
            .and_then(|p| write_out(&out, &to_hex(&p))),
        Cmd::Disasm { file, out } => fs::read_to_string(&file)
            .map_err(Into::into)
            .and_then(|src| Ok(from_hex(&src)?))
            .and_then(|p| write_out(&out, &disassemble(&p))),
        Cmd::Selftest => selftest().map_err(Into::into),
        Cmd::Zoo {
            net,
            precision,
            channels,
            seed,
            out,
        } => zoo_cmd(net, precision, channels, seed, out),
        Cmd::Input {
            model,
            frames,
            seed,
            out,
        } => input_cmd(model, frames, seed, out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

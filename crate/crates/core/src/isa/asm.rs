//! Text assembly and hex object files.
//!
//! Assembly: one instruction per line, `mnemonic rd, rs1, rs2` or
//! `smlsdotsp.t rd, rs1, imm`. Registers are `x0..x31` or ABI names. `#`
//! starts a comment. Hex objects hold one 8-digit word per line.

use super::encoding::{decode, encode, Instruction, Mnemonic, Reg};
use super::IsaError;

const ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4",
    "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4",
    "t5", "t6",
];

fn parse_reg(tok: &str) -> Option<Reg> {
    let idx = if let Some(n) = tok.strip_prefix('x') {
        n.parse::<u8>().ok()?
    } else if tok == "fp" {
        8
    } else {
        ABI_NAMES.iter().position(|&n| n == tok)? as u8
    };
    Reg::new(idx).ok()
}

fn parse_imm(tok: &str) -> Option<u8> {
    if let Some(hex) = tok.strip_prefix("0x") {
        u8::from_str_radix(hex, 16).ok()
    } else if let Some(bin) = tok.strip_prefix("0b") {
        u8::from_str_radix(bin, 2).ok()
    } else {
        tok.parse().ok()
    }
}

pub fn parse_line(line: &str, lineno: usize) -> Result<Option<Instruction>, IsaError> {
    let err = |msg: String| IsaError::Asm { line: lineno, msg };
    let code = line.split('#').next().unwrap_or("").trim();
    if code.is_empty() {
        return Ok(None);
    }
    let (name, rest) = code.split_once(char::is_whitespace).unwrap_or((code, ""));
    let m = Mnemonic::from_name(name).ok_or_else(|| err(format!("unknown mnemonic `{name}`")))?;
    let ops: Vec<&str> = rest
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if ops.len() != 3 {
        return Err(err(format!("`{name}` takes 3 operands, got {}", ops.len())));
    }
    let reg = |t: &str| parse_reg(t).ok_or_else(|| err(format!("bad register `{t}`")));
    let rd = reg(ops[0])?;
    let rs1 = reg(ops[1])?;
    let third = if m == Mnemonic::SmlsdotspT {
        parse_imm(ops[2])
            .filter(|&v| v < 32)
            .ok_or_else(|| err(format!("bad 5-bit immediate `{}`", ops[2])))?
    } else {
        reg(ops[2])?.index() as u8
    };
    Instruction::from_parts(m, rd, rs1, third).map(Some)
}

pub fn assemble(src: &str) -> Result<Vec<Instruction>, IsaError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if let Some(ins) = parse_line(line, i + 1)? {
            out.push(ins);
        }
    }
    Ok(out)
}

pub fn disassemble(program: &[Instruction]) -> String {
    program.iter().map(|i| format!("{i}\n")).collect()
}

pub fn to_hex(program: &[Instruction]) -> String {
    program
        .iter()
        .map(|i| format!("{:08x}\n", encode(i)))
        .collect()
}

pub fn from_hex(src: &str) -> Result<Vec<Instruction>, IsaError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.len() != 8 {
            return Err(IsaError::Asm {
                line: i + 1,
                msg: format!("expected 8 hex digits, got `{t}`"),
            });
        }
        let w = u32::from_str_radix(t, 16).map_err(|e| IsaError::Asm {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(decode(w).map_err(|e| IsaError::Asm {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

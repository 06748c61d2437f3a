//! Instruction words for the six ternary instructions.
//!
//! All six use the R-type field layout:
//!
//! ```text
//!  31      25 24   20 19   15 14  12 11    7 6      0
//! | funct7   | rs2   | rs1   |funct3| rd    | opcode |
//! ```
//!
//! `smlsdotsp.t` carries a 5-bit immediate in the `rs2` slot.
//!
//! | mnemonic      | funct7    | funct3 | opcode    |
//! |---------------|-----------|--------|-----------|
//! | `smlsdotsp.t` | `1111100` | `100`  | `1110111` |
//! | `sdotsp.t`    | `1011101` | `100`  | `1010111` |
//! | `dotsp.t`     | `1001101` | `100`  | `1010111` |
//! | `min.t`       | `0010001` | `100`  | `1010111` |
//! | `max.t`       | `0011001` | `100`  | `1010111` |
//! | `thrc`        | `0000100` | `110`  | `0110011` |

use std::fmt;

use super::IsaError;

/// General-purpose register index, always `< 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);

    pub fn new(idx: u8) -> Result<Reg, IsaError> {
        if idx < 32 {
            Ok(Reg(idx))
        } else {
            Err(IsaError::InvalidRegister(idx as u32))
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    fn from_field(bits: u32) -> Reg {
        Reg((bits & 0x1f) as u8)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// 5-bit immediate of `smlsdotsp.t`, always `< 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Imm5(u8);

impl Imm5 {
    pub fn new(v: u8) -> Result<Imm5, IsaError> {
        if v < 32 {
            Ok(Imm5(v))
        } else {
            Err(IsaError::InvalidImmediate(v as u32))
        }
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mnemonic {
    SmlsdotspT,
    SdotspT,
    DotspT,
    MinT,
    MaxT,
    Thrc,
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 6] = [
        Mnemonic::SmlsdotspT,
        Mnemonic::SdotspT,
        Mnemonic::DotspT,
        Mnemonic::MinT,
        Mnemonic::MaxT,
        Mnemonic::Thrc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mnemonic::SmlsdotspT => "smlsdotsp.t",
            Mnemonic::SdotspT => "sdotsp.t",
            Mnemonic::DotspT => "dotsp.t",
            Mnemonic::MinT => "min.t",
            Mnemonic::MaxT => "max.t",
            Mnemonic::Thrc => "thrc",
        }
    }

    pub fn from_name(s: &str) -> Option<Mnemonic> {
        Mnemonic::ALL.into_iter().find(|m| m.name() == s)
    }

    /// `(funct7, funct3, opcode)`.
    pub const fn fields(self) -> (u32, u32, u32) {
        match self {
            Mnemonic::SmlsdotspT => (0b1111100, 0b100, 0b1110111),
            Mnemonic::SdotspT => (0b1011101, 0b100, 0b1010111),
            Mnemonic::DotspT => (0b1001101, 0b100, 0b1010111),
            Mnemonic::MinT => (0b0010001, 0b100, 0b1010111),
            Mnemonic::MaxT => (0b0011001, 0b100, 0b1010111),
            Mnemonic::Thrc => (0b0000100, 0b110, 0b0110011),
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// MAC-and-load: `rd += dot(nnrf operands)`, then stream one word into the NN-RF.
    SmlsdotspT {
        rd: Reg,
        rs1: Reg,
        imm: Imm5,
    },
    SdotspT {
        rd: Reg,
        rs1: Reg,
        rs2: Reg,
    },
    DotspT {
        rd: Reg,
        rs1: Reg,
        rs2: Reg,
    },
    MinT {
        rd: Reg,
        rs1: Reg,
        rs2: Reg,
    },
    MaxT {
        rd: Reg,
        rs1: Reg,
        rs2: Reg,
    },
    /// Threshold-and-compress: value in `rs1`, threshold pair in `rs2`, status in `rd`.
    Thrc {
        rd: Reg,
        rs1: Reg,
        rs2: Reg,
    },
}

impl Instruction {
    pub fn mnemonic(&self) -> Mnemonic {
        match self {
            Instruction::SmlsdotspT { .. } => Mnemonic::SmlsdotspT,
            Instruction::SdotspT { .. } => Mnemonic::SdotspT,
            Instruction::DotspT { .. } => Mnemonic::DotspT,
            Instruction::MinT { .. } => Mnemonic::MinT,
            Instruction::MaxT { .. } => Mnemonic::MaxT,
            Instruction::Thrc { .. } => Mnemonic::Thrc,
        }
    }

    /// Build an R-type instruction from its mnemonic. `third` is `rs2`, or the
    /// immediate for `smlsdotsp.t`.
    pub fn from_parts(m: Mnemonic, rd: Reg, rs1: Reg, third: u8) -> Result<Instruction, IsaError> {
        Ok(match m {
            Mnemonic::SmlsdotspT => Instruction::SmlsdotspT {
                rd,
                rs1,
                imm: Imm5::new(third)?,
            },
            Mnemonic::SdotspT => Instruction::SdotspT {
                rd,
                rs1,
                rs2: Reg::new(third)?,
            },
            Mnemonic::DotspT => Instruction::DotspT {
                rd,
                rs1,
                rs2: Reg::new(third)?,
            },
            Mnemonic::MinT => Instruction::MinT {
                rd,
                rs1,
                rs2: Reg::new(third)?,
            },
            Mnemonic::MaxT => Instruction::MaxT {
                rd,
                rs1,
                rs2: Reg::new(third)?,
            },
            Mnemonic::Thrc => Instruction::Thrc {
                rd,
                rs1,
                rs2: Reg::new(third)?,
            },
        })
    }

    /// `(rd, rs1, rs2-or-imm)`.
    pub fn operands(&self) -> (Reg, Reg, u8) {
        match *self {
            Instruction::SmlsdotspT { rd, rs1, imm } => (rd, rs1, imm.0),
            Instruction::SdotspT { rd, rs1, rs2 }
            | Instruction::DotspT { rd, rs1, rs2 }
            | Instruction::MinT { rd, rs1, rs2 }
            | Instruction::MaxT { rd, rs1, rs2 }
            | Instruction::Thrc { rd, rs1, rs2 } => (rd, rs1, rs2.0),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (rd, rs1, third) = self.operands();
        match self {
            Instruction::SmlsdotspT { .. } => {
                write!(f, "{} {}, {}, {}", self.mnemonic(), rd, rs1, third)
            }
            _ => write!(f, "{} {}, {}, x{}", self.mnemonic(), rd, rs1, third),
        }
    }
}

pub fn encode(i: &Instruction) -> u32 {
    let (funct7, funct3, opcode) = i.mnemonic().fields();
    let (rd, rs1, third) = i.operands();
    funct7 << 25
        | (third as u32) << 20
        | (rs1.0 as u32) << 15
        | funct3 << 12
        | (rd.0 as u32) << 7
        | opcode
}

pub fn decode(w: u32) -> Result<Instruction, IsaError> {
    let funct7 = w >> 25;
    let funct3 = (w >> 12) & 0b111;
    let opcode = w & 0x7f;
    let m = Mnemonic::ALL
        .into_iter()
        .find(|m| m.fields() == (funct7, funct3, opcode))
        .ok_or(IsaError::UnknownInstruction(w))?;
    let rd = Reg::from_field(w >> 7);
    let rs1 = Reg::from_field(w >> 15);
    let third = ((w >> 20) & 0x1f) as u8;
    Instruction::from_parts(m, rd, rs1, third)
}

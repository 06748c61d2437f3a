//! Ternary ISA extension: encodings, value semantics and a small core model.

mod asm;
mod encoding;
mod machine;
mod semantics;
pub mod xpulpnn;

use thiserror::Error;

use crate::codec::CodecError;

pub use asm::{assemble, disassemble, from_hex, parse_line, to_hex};
pub use encoding::{decode, encode, Imm5, Instruction, Mnemonic, Reg};
pub use machine::{
    exec_smlsdotsp_t, run, step, CoreState, LaneFormat, Load, MalSelect, Memory, NnRf, Stream,
    ACT_SLOTS, L1_BYTES, WEIGHT_SLOTS,
};
pub use semantics::{
    exec_dotsp_t, exec_max_t, exec_min_t, exec_sdotsp_t, exec_thrc, ThrcStatus, ThresholdPair,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsaError {
    #[error("unknown instruction word {0:#010x}")]
    UnknownInstruction(u32),
    #[error("register index {0} out of range")]
    InvalidRegister(u32),
    #[error("immediate {0} does not fit in 5 bits")]
    InvalidImmediate(u32),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("misaligned word access at {0:#x}")]
    MisalignedAccess(u32),
    #[error("access out of bounds at {0:#x}")]
    OutOfBounds(u32),
    #[error("malformed thrc status {0:#010x}")]
    MalformedStatus(u32),
    #[error("expected smlsdotsp.t, got {0}")]
    WrongInstruction(Mnemonic),
    #[error("pc {0:#x} outside program")]
    PcOutOfRange(u32),
    #[error("at pc {pc:#x}: {source}")]
    AtPc { pc: u32, source: Box<IsaError> },
    #[error("line {line}: {msg}")]
    Asm { line: usize, msg: String },
}

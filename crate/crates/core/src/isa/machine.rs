//! Core state, scratchpad memory and the NN register file.
//!
//! The NN-RF holds six operand words, four activation slots `a0..a3` and two
//! weight slots `w0, w1`, plus two stream address registers (activations and
//! weights). The MAC-and-load immediate is decoded as:
//!
//! ```text
//!   4:3    2        1:0
//! | load | w-slot | a-slot |
//! ```
//!
//! The MAC always multiplies `a[a-slot]` with `w[w-slot]`. The load field then
//! selects what is fetched: `00` nothing, `01` the next activation word into
//! `a[a-slot]`, `10`/`11` the next weight word into `w0`/`w1`. The stream
//! address used advances by 4.

use crate::codec::ZERO_WORD;
use crate::perf::{KernelTrace, Op, Phase};

use super::encoding::{Imm5, Instruction, Reg};
use super::semantics::{self, ThrcStatus, ThresholdPair};
use super::{xpulpnn, IsaError};

/// L1 scratchpad size of a cluster.
pub const L1_BYTES: usize = 128 * 1024;

pub const ACT_SLOTS: usize = 4;
pub const WEIGHT_SLOTS: usize = 2;

/// Flat little-endian byte-addressable memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    bytes: Vec<u8>,
}

impl Default for Memory {
    fn default() -> Self {
        Self::new(L1_BYTES)
    }
}

impl Memory {
    pub fn new(size: usize) -> Self {
        Self {
            bytes: vec![0; size],
        }
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    fn check_word(&self, addr: u32) -> Result<usize, IsaError> {
        if addr % 4 != 0 {
            return Err(IsaError::MisalignedAccess(addr));
        }
        let a = addr as usize;
        if a + 4 > self.bytes.len() {
            return Err(IsaError::OutOfBounds(addr));
        }
        Ok(a)
    }

    pub fn read_word(&self, addr: u32) -> Result<u32, IsaError> {
        let a = self.check_word(addr)?;
        Ok(u32::from_le_bytes(
            self.bytes[a..a + 4].try_into().expect("4 bytes"),
        ))
    }

    pub fn write_word(&mut self, addr: u32, w: u32) -> Result<(), IsaError> {
        let a = self.check_word(addr)?;
        self.bytes[a..a + 4].copy_from_slice(&w.to_le_bytes());
        Ok(())
    }

    pub fn write_bytes(&mut self, addr: u32, data: &[u8]) -> Result<(), IsaError> {
        let a = addr as usize;
        let end = a.checked_add(data.len()).filter(|&e| e <= self.bytes.len());
        if end.is_none() {
            return Err(IsaError::OutOfBounds(addr));
        }
        self.bytes[a..a + data.len()].copy_from_slice(data);
        Ok(())
    }

    pub fn read_bytes(&self, addr: u32, len: usize) -> Result<&[u8], IsaError> {
        let a = addr as usize;
        self.bytes
            .get(a..a + len)
            .ok_or(IsaError::OutOfBounds(addr))
    }
}

/// Lane format of a packed MAC word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaneFormat {
    /// 20 compressed trits.
    Ternary,
    /// 16 signed 2-bit lanes.
    Crumb,
}

impl LaneFormat {
    pub fn lanes_per_word(self) -> usize {
        match self {
            LaneFormat::Ternary => 20,
            LaneFormat::Crumb => 16,
        }
    }

    pub fn elems_per_byte(self) -> usize {
        self.lanes_per_word() / 4
    }

    /// Byte encoding of an all-zero group of lanes.
    pub fn zero_byte(self) -> u8 {
        match self {
            LaneFormat::Ternary => crate::codec::ZERO_BYTE,
            LaneFormat::Crumb => 0,
        }
    }

    pub fn zero_word(self) -> u32 {
        u32::from_le_bytes([self.zero_byte(); 4])
    }

    #[inline]
    pub fn dot(self, a: u32, b: u32) -> Result<i32, IsaError> {
        match self {
            LaneFormat::Ternary => Ok(semantics::exec_dotsp_t(a, b)?),
            LaneFormat::Crumb => Ok(xpulpnn::dotsp_c(a, b)),
        }
    }

    #[inline]
    pub fn max(self, a: u32, b: u32) -> Result<u32, IsaError> {
        match self {
            LaneFormat::Ternary => Ok(semantics::exec_max_t(a, b)?),
            LaneFormat::Crumb => Ok(xpulpnn::max_c(a, b)),
        }
    }

    /// Element values of one byte.
    pub fn decode_byte(self, b: u8, index: usize) -> Result<Vec<i8>, IsaError> {
        match self {
            LaneFormat::Ternary => Ok(crate::codec::decode_values(b, index)?.to_vec()),
            LaneFormat::Crumb => Ok(xpulpnn::byte_lanes(b).to_vec()),
        }
    }

    pub fn encode_byte(self, v: &[i8]) -> u8 {
        match self {
            LaneFormat::Ternary => crate::codec::compress_values(v),
            LaneFormat::Crumb => xpulpnn::pack_byte(v),
        }
    }

    pub fn mal_op(self) -> Op {
        match self {
            LaneFormat::Ternary => Op::SmlsdotspT,
            LaneFormat::Crumb => Op::MlsdotspC,
        }
    }
}

/// Decoded MAC-and-load immediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MalSelect {
    pub act_slot: u8,
    pub weight_slot: u8,
    /// Word fetched after the MAC, if any.
    pub load: Option<Load>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Load {
    /// Next activation word into the selected activation slot.
    Act,
    /// Next weight word into the given weight slot.
    Weight(u8),
}

impl Load {
    pub fn stream(self) -> Stream {
        match self {
            Load::Act => Stream::Act,
            Load::Weight(_) => Stream::Weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Act = 0,
    Weight = 1,
}

impl MalSelect {
    pub fn decode(imm: Imm5) -> Self {
        let v = imm.value();
        let load = match v >> 3 {
            0 => None,
            1 => Some(Load::Act),
            n => Some(Load::Weight(n - 2)),
        };
        Self {
            act_slot: v & 0b11,
            weight_slot: (v >> 2) & 1,
            load,
        }
    }

    pub fn encode(self) -> Imm5 {
        let load = match self.load {
            None => 0,
            Some(Load::Act) => 1,
            Some(Load::Weight(w)) => 2 + (w & 1),
        };
        Imm5::new(self.act_slot & 0b11 | (self.weight_slot & 1) << 2 | load << 3).expect("5 bits")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnRf {
    pub act: [u32; ACT_SLOTS],
    pub weight: [u32; WEIGHT_SLOTS],
    /// Stream pointers, indexed by [`Stream`].
    pub addr: [u32; 2],
}

impl Default for NnRf {
    fn default() -> Self {
        Self {
            act: [ZERO_WORD; ACT_SLOTS],
            weight: [ZERO_WORD; WEIGHT_SLOTS],
            addr: [0; 2],
        }
    }
}

/// Architectural state of one simulated core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreState {
    gpr: [u32; 32],
    pub nnrf: NnRf,
    pub pc: u32,
    /// Core index within the cluster.
    pub id: u8,
    /// Phase label attached to trace events from [`step`].
    pub phase: Phase,
}

impl Default for CoreState {
    fn default() -> Self {
        Self::new(0)
    }
}

impl CoreState {
    pub fn new(id: u8) -> Self {
        Self {
            gpr: [0; 32],
            nnrf: NnRf::default(),
            pc: 0,
            id,
            phase: Phase::Other,
        }
    }

    #[inline]
    pub fn reg(&self, r: Reg) -> u32 {
        self.gpr[r.index()]
    }

    /// Writes to `x0` are discarded.
    #[inline]
    pub fn set_reg(&mut self, r: Reg, v: u32) {
        if r != Reg::ZERO {
            self.gpr[r.index()] = v;
        }
    }

    /// MAC-and-load with an explicit lane format (ternary for `smlsdotsp.t`,
    /// 2-bit for the baseline's MAL).
    pub fn mac_and_load(
        &mut self,
        fmt: LaneFormat,
        rd: Reg,
        imm: Imm5,
        mem: &Memory,
    ) -> Result<(), IsaError> {
        let sel = MalSelect::decode(imm);
        let a = self.nnrf.act[sel.act_slot as usize];
        let w = self.nnrf.weight[sel.weight_slot as usize];
        let dot = fmt.dot(a, w)?;
        self.set_reg(rd, (self.reg(rd) as i32).wrapping_add(dot) as u32);
        if let Some(load) = sel.load {
            let stream = load.stream() as usize;
            let addr = self.nnrf.addr[stream];
            let word = mem.read_word(addr)?;
            match load {
                Load::Act => self.nnrf.act[sel.act_slot as usize] = word,
                Load::Weight(w) => self.nnrf.weight[w as usize] = word,
            }
            self.nnrf.addr[stream] = addr.wrapping_add(4);
        }
        Ok(())
    }

    /// Execute one instruction. The program counter is left untouched.
    pub fn execute(&mut self, instr: &Instruction, mem: &Memory) -> Result<(), IsaError> {
        match *instr {
            Instruction::SmlsdotspT { rd, imm, .. } => {
                self.mac_and_load(LaneFormat::Ternary, rd, imm, mem)?;
            }
            Instruction::SdotspT { rd, rs1, rs2 } => {
                let acc = self.reg(rd) as i32;
                let v = semantics::exec_sdotsp_t(acc, self.reg(rs1), self.reg(rs2))?;
                self.set_reg(rd, v as u32);
            }
            Instruction::DotspT { rd, rs1, rs2 } => {
                let v = semantics::exec_dotsp_t(self.reg(rs1), self.reg(rs2))?;
                self.set_reg(rd, v as u32);
            }
            Instruction::MinT { rd, rs1, rs2 } => {
                let v = semantics::exec_min_t(self.reg(rs1), self.reg(rs2))?;
                self.set_reg(rd, v);
            }
            Instruction::MaxT { rd, rs1, rs2 } => {
                let v = semantics::exec_max_t(self.reg(rs1), self.reg(rs2))?;
                self.set_reg(rd, v);
            }
            Instruction::Thrc { rd, rs1, rs2 } => {
                let status = ThrcStatus::from_reg(self.reg(rd))?;
                let th = ThresholdPair::from_reg(self.reg(rs2));
                let next = semantics::exec_thrc(status, self.reg(rs1) as i32, th)?;
                self.set_reg(rd, next.to_reg());
            }
        }
        Ok(())
    }
}

/// `smlsdotsp.t` against explicit state.
pub fn exec_smlsdotsp_t(
    core: &mut CoreState,
    mem: &Memory,
    instr: &Instruction,
) -> Result<(), IsaError> {
    match instr {
        Instruction::SmlsdotspT { .. } => core.execute(instr, mem),
        other => Err(IsaError::WrongInstruction(other.mnemonic())),
    }
}

/// Fetch the instruction at `pc`, execute it, advance `pc` and log a trace event.
pub fn step(
    core: &mut CoreState,
    mem: &Memory,
    program: &[Instruction],
    trace: &mut KernelTrace,
) -> Result<(), IsaError> {
    let pc = core.pc;
    let idx = (pc / 4) as usize;
    let instr = match program.get(idx) {
        Some(i) if pc % 4 == 0 => *i,
        _ => return Err(IsaError::PcOutOfRange(pc)),
    };
    core.execute(&instr, mem).map_err(|e| IsaError::AtPc {
        pc,
        source: Box::new(e),
    })?;
    trace.push(instr.mnemonic().into(), core.phase, core.id);
    core.pc = pc + 4;
    Ok(())
}

/// Run until `pc` leaves the program.
pub fn run(
    core: &mut CoreState,
    mem: &Memory,
    program: &[Instruction],
    trace: &mut KernelTrace,
) -> Result<(), IsaError> {
    while ((core.pc / 4) as usize) < program.len() {
        step(core, mem, program, trace)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{pack_word, Trit};

    fn r(i: u8) -> Reg {
        Reg::new(i).unwrap()
    }

    fn word_of(v: [i8; 20]) -> u32 {
        pack_word(&v.map(|x| Trit::from_i8(x).unwrap()))
    }

    #[test]
    fn x0_stays_zero() {
        let mut c = CoreState::new(0);
        c.set_reg(Reg::ZERO, 0xdead_beef);
        assert_eq!(c.reg(Reg::ZERO), 0);
        let mem = Memory::new(64);
        c.set_reg(r(1), word_of([1; 20]));
        let i = Instruction::DotspT {
            rd: Reg::ZERO,
            rs1: r(1),
            rs2: r(1),
        };
        c.execute(&i, &mem).unwrap();
        assert_eq!(c.reg(Reg::ZERO), 0);
    }

    #[test]
    fn imm_round_trip() {
        for v in 0..32u8 {
            let imm = Imm5::new(v).unwrap();
            assert_eq!(MalSelect::decode(imm).encode(), imm);
        }
    }

    #[test]
    fn mal_zero_operands() {
        let mut mem = Memory::new(64);
        mem.write_word(16, 0x1234_5678 & 0x7979_7979).unwrap();
        let mut c = CoreState::new(0);
        c.set_reg(r(7), 7);
        c.nnrf.addr[Stream::Act as usize] = 16;
        let imm = MalSelect {
            act_slot: 2,
            weight_slot: 1,
            load: Some(Load::Act),
        }
        .encode();
        let i = Instruction::SmlsdotspT {
            rd: r(7),
            rs1: r(0),
            imm,
        };
        exec_smlsdotsp_t(&mut c, &mem, &i).unwrap();
        assert_eq!(c.reg(r(7)), 7);
        assert_eq!(c.nnrf.act[2], 0x1234_5678 & 0x7979_7979);
        assert_eq!(c.nnrf.addr[0], 20);
    }

    #[test]
    fn mal_streams_successive_words() {
        // hand-stepped: two loads into a0 then a1 from consecutive words
        let mut mem = Memory::new(64);
        let w0 = word_of([1; 20]);
        let w1 = word_of([-1; 20]);
        mem.write_word(8, w0).unwrap();
        mem.write_word(12, w1).unwrap();
        let mut c = CoreState::new(0);
        c.nnrf.addr[0] = 8;
        c.nnrf.weight[0] = word_of([1; 20]);
        let ld = |a| {
            MalSelect {
                act_slot: a,
                weight_slot: 0,
                load: Some(Load::Act),
            }
            .encode()
        };
        c.execute(
            &Instruction::SmlsdotspT {
                rd: r(5),
                rs1: r(0),
                imm: ld(0),
            },
            &mem,
        )
        .unwrap();
        assert_eq!((c.nnrf.act[0], c.nnrf.addr[0], c.reg(r(5))), (w0, 12, 0));
        c.execute(
            &Instruction::SmlsdotspT {
                rd: r(5),
                rs1: r(0),
                imm: ld(1),
            },
            &mem,
        )
        .unwrap();
        assert_eq!((c.nnrf.act[1], c.nnrf.addr[0], c.reg(r(5))), (w1, 16, 0));
        // now a0 = +1s: MAC with w0 = +1s adds 20, then a1 = -1s subtracts 20
        c.execute(
            &Instruction::SmlsdotspT {
                rd: r(5),
                rs1: r(0),
                imm: Imm5::new(0).unwrap(),
            },
            &mem,
        )
        .unwrap();
        assert_eq!(c.reg(r(5)), 20);
        c.execute(
            &Instruction::SmlsdotspT {
                rd: r(5),
                rs1: r(0),
                imm: Imm5::new(1).unwrap(),
            },
            &mem,
        )
        .unwrap();
        assert_eq!(c.reg(r(5)), 0);
    }

    #[test]
    fn weight_load_targets_named_slot() {
        let mut mem = Memory::new(64);
        let w = word_of([-1; 20]);
        mem.write_word(32, w).unwrap();
        let mut c = CoreState::new(0);
        c.nnrf.addr[Stream::Weight as usize] = 32;
        c.nnrf.act[3] = word_of([1; 20]);
        c.nnrf.weight[0] = word_of([1; 20]);
        let imm = MalSelect {
            act_slot: 3,
            weight_slot: 0,
            load: Some(Load::Weight(1)),
        }
        .encode();
        c.execute(
            &Instruction::SmlsdotspT {
                rd: r(9),
                rs1: r(0),
                imm,
            },
            &mem,
        )
        .unwrap();
        assert_eq!(c.reg(r(9)), 20);
        assert_eq!(c.nnrf.weight, [word_of([1; 20]), w]);
        assert_eq!(c.nnrf.addr[1], 36);
    }

    #[test]
    fn mal_memory_errors() {
        let mem = Memory::new(64);
        let mut c = CoreState::new(0);
        let imm = MalSelect {
            act_slot: 0,
            weight_slot: 0,
            load: Some(Load::Weight(1)),
        }
        .encode();
        let i = Instruction::SmlsdotspT {
            rd: r(1),
            rs1: r(0),
            imm,
        };
        c.nnrf.addr[1] = 64;
        assert_eq!(c.execute(&i, &mem), Err(IsaError::OutOfBounds(64)));
        c.nnrf.addr[1] = 6;
        assert_eq!(c.execute(&i, &mem), Err(IsaError::MisalignedAccess(6)));
    }

    #[test]
    fn step_matches_direct_execution() {
        let mem = Memory::new(64);
        let a = word_of([
            1, -1, 0, 1, 1, 0, 0, -1, 1, 1, -1, -1, 0, 0, 1, 0, 1, 1, -1, 0,
        ]);
        let b = word_of([
            1, 1, 1, -1, 0, 0, 1, -1, -1, 1, 0, -1, 1, 0, 1, 1, 0, -1, -1, 0,
        ]);
        let programs = [
            Instruction::DotspT {
                rd: r(3),
                rs1: r(1),
                rs2: r(2),
            },
            Instruction::MinT {
                rd: r(3),
                rs1: r(1),
                rs2: r(2),
            },
            Instruction::Thrc {
                rd: r(3),
                rs1: r(1),
                rs2: r(2),
            },
        ];
        for p in programs {
            let mut c = CoreState::new(0);
            c.set_reg(r(1), a);
            c.set_reg(r(2), b);
            let mut direct = c.clone();
            let mut trace = KernelTrace::new();
            run(&mut c, &mem, &[p], &mut trace).unwrap();
            direct.execute(&p, &mem).unwrap();
            assert_eq!(c.reg(r(3)), direct.reg(r(3)));
            assert_eq!(c.pc, 4);
            assert_eq!(trace.len(), 1);
            assert_eq!(trace.events()[0].op, p.mnemonic().into());
        }
        let mut c = CoreState::new(0);
        c.set_reg(r(1), a);
        c.set_reg(r(2), b);
        let mut t = KernelTrace::new();
        run(&mut c, &mem, &[programs[0]], &mut t).unwrap();
        assert_eq!(c.reg(r(3)) as i32, semantics::exec_dotsp_t(a, b).unwrap());
        assert_eq!(
            step(&mut c, &mem, &[programs[0]], &mut t),
            Err(IsaError::PcOutOfRange(4))
        );
    }

    #[test]
    fn step_errors_carry_pc() {
        let mem = Memory::new(64);
        let mut c = CoreState::new(0);
        c.set_reg(r(1), 0xFFFF_FFFF);
        let prog = [
            Instruction::DotspT {
                rd: r(2),
                rs1: r(0),
                rs2: r(0),
            },
            Instruction::DotspT {
                rd: r(2),
                rs1: r(1),
                rs2: r(1),
            },
        ];
        let mut t = KernelTrace::new();
        // x0 = 0 decodes as all -1 trits, which is valid
        step(&mut c, &mem, &prog, &mut t).unwrap();
        assert!(matches!(
            step(&mut c, &mem, &prog, &mut t),
            Err(IsaError::AtPc { pc: 4, .. })
        ));
    }
}

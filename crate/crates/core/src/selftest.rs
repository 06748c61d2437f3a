//! Exhaustive built-in checks run by `xtern selftest`.

use crate::codec::{self, Trit, CODE_POINTS};
use crate::isa::{assemble, decode, disassemble, encode, Instruction, Mnemonic, Reg};

/// Passed and total case counts of one suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suite {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
}

impl Suite {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

/// Every five-trit block: compress, decompress, and check the code is in
/// range and unused by any other block.
pub fn codec_suite() -> Suite {
    let mut seen = [false; 256];
    let mut passed = 0;
    for n in 0..CODE_POINTS {
        let mut block = [Trit::Zero; 5];
        let mut r = n;
        for t in block.iter_mut() {
            *t = [Trit::Neg, Trit::Zero, Trit::Pos][r % 3];
            r /= 3;
        }
        let b = codec::compress_block5(&block);
        let fresh = !std::mem::replace(&mut seen[b as usize], true);
        if fresh && b <= codec::MAX_CODE && codec::decompress_byte(b).ok() == Some(block) {
            passed += 1;
        }
    }
    Suite {
        name: "codec",
        passed,
        total: CODE_POINTS,
    }
}

/// Bytes `243..=255` must be rejected.
pub fn invalid_code_suite() -> Suite {
    let passed = (CODE_POINTS..256)
        .filter(|&b| codec::decompress_byte(b as u8).is_err())
        .count();
    Suite {
        name: "invalid codes",
        passed,
        total: 256 - CODE_POINTS,
    }
}

/// Every instruction with every operand value: encode/decode and text round trips.
pub fn encoding_suite() -> Suite {
    let (mut passed, mut total) = (0, 0);
    for m in Mnemonic::ALL {
        for rd in 0..32u8 {
            for rs1 in 0..32u8 {
                for third in 0..32u8 {
                    total += 1;
                    let (Ok(rd), Ok(rs1)) = (Reg::new(rd), Reg::new(rs1)) else {
                        continue;
                    };
                    let Ok(i) = Instruction::from_parts(m, rd, rs1, third) else {
                        continue;
                    };
                    let text_ok = assemble(&disassemble(&[i])).ok() == Some(vec![i]);
                    if decode(encode(&i)) == Ok(i) && text_ok {
                        passed += 1;
                    }
                }
            }
        }
    }
    Suite {
        name: "encoding",
        passed,
        total,
    }
}

pub fn run_all() -> Vec<Suite> {
    vec![codec_suite(), invalid_code_suite(), encoding_suite()]
}

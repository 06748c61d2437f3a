//! Emulator, kernel library and cost model for a ternary neural-network
//! extension of RISC-V.
//!
//! * [`codec`]: 5-trits-per-byte compression and tensor blobs.
//! * [`isa`]: instruction encodings, semantics and a core/NN-RF model.
//! * [`kernels`]: convolution, pooling and fully-connected kernels built on
//!   the emulated instructions, plus a 2-bit baseline.
//! * [`perf`]: traces, cycle cost tables, reports and benchmark sweeps.
//! * [`runtime`]: model container, validation and end-to-end inference.
//! * [`oracle`]: plain integer reference implementations.
//! * [`selftest`]: exhaustive codec and encoding checks.

pub mod codec;
pub mod isa;
pub mod kernels;
pub mod oracle;
pub mod perf;
pub mod runtime;
pub mod selftest;

//! Soft demapping for multi-dimensional modulation formats defined by
//! Boolean parity equations.
//!
//! The crate covers the whole chain of a coded-modulation simulation:
//!
//! * [`beq`]: parity-equation language, evaluation and affinity analysis.
//! * [`modem`]: mapping onto four Gray-labeled QPSK slots, codebooks.
//! * [`channel`]: AWGN with per-frame random streams, LLR-domain observations.
//! * [`demap`]: 1D, MaxLogMap, min-sum and partially ordered statistics
//!   demappers, with operation counting.
//! * [`fec`]: LDPC construction, alist files, encoding and min-sum decoding.
//! * [`harness`]: GMI and post-FEC BER sweeps, complexity reports, result files.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod beq;
pub mod channel;
pub mod demap;
pub mod fec;
pub mod harness;
pub mod modem;

pub use beq::{BoolExpr, FormatSpec, Provenance};
pub use demap::{Demapper, DemapperKind, LlrFrame, ObservationFrame, OpCount, PosdParams};

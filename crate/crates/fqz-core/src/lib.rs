//! Quantization and compression toolkit built around fibbinary numbers
//! (binary integers with no two adjacent 1 bits).
//!
//! The crate provides, bottom to top:
//!
//! * [`fibbinary`] — the fibbinary predicate, per-bitwidth enumeration tables,
//!   and the Zeckendorf rank/value bijection.
//! * [`quant`] — uniform affine quantization (8/16 bit) and fibbinary
//!   codeword quantization (FCQ), which snaps 8-bit codes to the nearest
//!   fibbinary value.
//! * [`codec`] — a two-stage lossless codec for fibbinary code tensors:
//!   word-length reduction (8-bit codes to 6-bit Zeckendorf ranks) followed
//!   by a run/literal word-count encoding.
//! * [`hw`] — a gate-level model of a carry-save array multiplier in which
//!   full adders can be swapped for OR gates, with an exhaustive discovery
//!   oracle and an area/power cost model.
//! * [`inq`] — an incremental network quantization scheduler with rollback
//!   and fraction-splitting refinement.
//! * [`toy`] — a small self-contained feed-forward network and trainer used
//!   to exercise the scheduler end to end.
//! * [`container`] — a binary tensor container shared by the CLI commands.

pub mod codec;
pub mod container;
pub mod fibbinary;
pub mod hw;
pub mod inq;
pub mod quant;
pub mod report;
pub mod tensor;
pub mod toy;

pub use fibbinary::FibbinaryTable;
pub use quant::{AffineParams, Bitwidth, QuantizedTensor, Scheme};
pub use tensor::{Tensor, TensorSet};

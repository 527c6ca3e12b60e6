//! Two-stage lossless codec for fibbinary code tensors.
//!
//! Stage one (*word-length*) replaces every 8-bit fibbinary code by its
//! 6-bit Zeckendorf rank (there are only 55 fibbinary values in 8 bits).
//! Stage two (*word-count*) run/literal-encodes the rank sequence against
//! its two most frequent ranks `A` and `B`.  Every codeword is one octet,
//! numbering bits 1 (MSB) to 8 (LSB):
//!
//! ```text
//! bits 1-2  00  LIT         bits 3-8 = literal rank C (C != A, C != B)
//!           01  A_THEN_LIT  an A followed by literal C
//!           10  B_THEN_LIT  a B followed by literal C
//!           11  RUN         bit 3: last symbol of the run (0 = A, 1 = B)
//!                           bit 4: mixed flag
//!                             mixed = 0: bits 5-8 = count 1..=15 of the
//!                                        flagged symbol
//!                             mixed = 1: bits 5-7 = n in 1..=7 copies of A,
//!                                        bit 8 = m = 1 copy of B; the last
//!                                        flag tells which symbol ends the
//!                                        run (A^n B or B A^n)
//! ```
//!
//! A run flushes when a literal arrives, when a pure count would exceed 15,
//! when a mixed run would need n > 7 or a second B, or when a third
//! homogeneous segment would start.  Streams are framed as `a_rank` octet,
//! `b_rank` octet, 4-octet little-endian codeword count, then the codewords.

use thiserror::Error;

use crate::fibbinary::{FibbinaryTable, FibError};

/// Number of distinct 8-bit fibbinary values; every rank is below this.
pub const RANK_LIMIT: u8 = 55;

/// Octets of stream framing preceding the codewords (a, b, 4-octet count).
pub const STREAM_HEADER_OCTETS: usize = 6;

const RUN_PURE_MAX: u8 = 15;
const RUN_MIXED_MAX_A: u8 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("code {code} at position {position} is not fibbinary")]
    NotFibbinary { position: usize, code: u32 },
    #[error("code {code} at position {position} does not fit in 8 bits")]
    CodeTooWide { position: usize, code: u32 },
    #[error("rank {rank} at position {position} outside 0..{RANK_LIMIT}")]
    RankOutOfRange { position: usize, rank: u8 },
    #[error("cannot choose common ranks from an empty sequence set")]
    EmptySequences,
    #[error("group size must be at least 1")]
    ZeroGroupSize,
    #[error("compressed length is zero")]
    ZeroCompressedLength,
    #[error("uncompressed length and bit widths must be positive")]
    NonPositiveRatioInput,
    #[error("corrupt stream at codeword {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },
    #[error("stream framing truncated: need {need} octets, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("6-bit payload mismatch: {expected} octets expected, got {got}")]
    PackedLength { expected: usize, got: usize },
    #[error("6-bit padding bits must be zero")]
    DirtyPadding,
}

impl From<FibError> for CodecError {
    fn from(e: FibError) -> Self {
        // Only surfaces through internal misuse; keep the message.
        CodecError::Corrupt {
            offset: 0,
            reason: e.to_string(),
        }
    }
}

/// A tensor's worth of 6-bit Zeckendorf ranks, tagged with the tensor name
/// it came from (names matter for grouping and reporting).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSequence {
    pub source: String,
    pub ranks: Vec<u8>,
}

/// Word-length stage: 8-bit fibbinary codes to 6-bit ranks.
/// Errors name the first offending position.
pub fn word_length_compress(
    source: impl Into<String>,
    codes: &[u32],
    table: &FibbinaryTable,
) -> Result<IndexSequence, CodecError> {
    let mut ranks = Vec::with_capacity(codes.len());
    for (position, &code) in codes.iter().enumerate() {
        if code > 0xFF {
            return Err(CodecError::CodeTooWide { position, code });
        }
        match table.value_to_index(code) {
            Ok(rank) => ranks.push(rank as u8),
            Err(FibError::NotFibbinary(_)) => {
                return Err(CodecError::NotFibbinary { position, code })
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(IndexSequence {
        source: source.into(),
        ranks,
    })
}

/// Inverse of [`word_length_compress`]: ranks back to 8-bit codes.
pub fn word_length_decompress(
    seq: &IndexSequence,
    table: &FibbinaryTable,
) -> Result<Vec<u32>, CodecError> {
    let mut codes = Vec::with_capacity(seq.ranks.len());
    for (position, &rank) in seq.ranks.iter().enumerate() {
        if rank >= RANK_LIMIT {
            return Err(CodecError::RankOutOfRange { position, rank });
        }
        codes.push(table.index_to_value(rank as usize)?);
    }
    Ok(codes)
}

/// Packs 6-bit ranks MSB-first into octets, zero-padding the final octet.
pub fn pack_6bit(ranks: &[u8]) -> Result<Vec<u8>, CodecError> {
    for (position, &rank) in ranks.iter().enumerate() {
        if rank >= 64 {
            return Err(CodecError::RankOutOfRange { position, rank });
        }
    }
    let mut out = Vec::with_capacity((ranks.len() * 6 + 7) / 8);
    let mut acc: u32 = 0;
    let mut nbits = 0u32;
    for &rank in ranks {
        acc = (acc << 6) | rank as u32;
        nbits += 6;
        while nbits >= 8 {
            out.push((acc >> (nbits - 8)) as u8);
            nbits -= 8;
            acc &= (1 << nbits) - 1;
        }
    }
    if nbits > 0 {
        out.push((acc << (8 - nbits)) as u8);
    }
    Ok(out)
}

/// Inverse of [`pack_6bit`] for a known element count.  The payload length
/// must match exactly and padding bits must be zero.
pub fn unpack_6bit(bytes: &[u8], count: usize) -> Result<Vec<u8>, CodecError> {
    let expected = (count * 6 + 7) / 8;
    if bytes.len() != expected {
        return Err(CodecError::PackedLength {
            expected,
            got: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut nbits = 0u32;
    let mut iter = bytes.iter();
    while out.len() < count {
        if nbits < 6 {
            acc = (acc << 8) | *iter.next().expect("length checked") as u32;
            nbits += 8;
        }
        out.push((acc >> (nbits - 6)) as u8 & 0x3F);
        nbits -= 6;
        acc &= (1 << nbits) - 1;
    }
    if acc != 0 {
        return Err(CodecError::DirtyPadding);
    }
    Ok(out)
}

/// Picks the word-count symbols `A` (most frequent rank) and `B` (second
/// most frequent) across a set of sequences.  Frequency ties break toward
/// the smaller rank; if only one distinct rank occurs, `B` falls back to the
/// smallest rank different from `A`.
pub fn choose_common(seqs: &[IndexSequence]) -> Result<(u8, u8), CodecError> {
    let mut counts = [0u64; RANK_LIMIT as usize];
    let mut total = 0u64;
    for seq in seqs {
        for (position, &rank) in seq.ranks.iter().enumerate() {
            if rank >= RANK_LIMIT {
                return Err(CodecError::RankOutOfRange { position, rank });
            }
            counts[rank as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(CodecError::EmptySequences);
    }
    // Scanning ascending ranks with a strict ">" keeps ties on the smaller.
    let mut a = 0usize;
    for r in 1..counts.len() {
        if counts[r] > counts[a] {
            a = r;
        }
    }
    let mut b = None;
    for (r, &c) in counts.iter().enumerate() {
        if r == a || c == 0 {
            continue;
        }
        match b {
            None => b = Some(r),
            Some(cur) if c > counts[cur] => b = Some(r),
            _ => {}
        }
    }
    let b = b.unwrap_or(if a == 0 { 1 } else { 0 });
    Ok((a as u8, b as u8))
}

/// A word-count-encoded rank sequence plus the symbols it was encoded
/// against.  `codewords.len()` is the compressed length CL in octets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedStream {
    pub a_rank: u8,
    pub b_rank: u8,
    pub codewords: Vec<u8>,
}

impl CompressedStream {
    pub fn codeword_count(&self) -> usize {
        self.codewords.len()
    }

    /// Serializes with the stream framing: `a`, `b`, 4-octet LE codeword
    /// count, codewords.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(STREAM_HEADER_OCTETS + self.codewords.len());
        out.push(self.a_rank);
        out.push(self.b_rank);
        out.extend_from_slice(&(self.codewords.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.codewords);
        out
    }

    /// Parses one framed stream from the front of `bytes`, returning it and
    /// the number of octets consumed.  Self-framing: the embedded count says
    /// where the stream ends.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize), CodecError> {
        if bytes.len() < STREAM_HEADER_OCTETS {
            return Err(CodecError::Truncated {
                need: STREAM_HEADER_OCTETS,
                have: bytes.len(),
            });
        }
        let a_rank = bytes[0];
        let b_rank = bytes[1];
        let count = u32::from_le_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]) as usize;
        let need = STREAM_HEADER_OCTETS + count;
        if bytes.len() < need {
            return Err(CodecError::Truncated {
                need,
                have: bytes.len(),
            });
        }
        Ok((
            Self {
                a_rank,
                b_rank,
                codewords: bytes[STREAM_HEADER_OCTETS..need].to_vec(),
            },
            need,
        ))
    }
}

/// Pending run over the symbols A and B.  At most two homogeneous segments
/// are representable, and a mixed run carries exactly one B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Run {
    Empty,
    /// `count` copies of A, 1..=15.
    PureA(u8),
    /// `count` copies of B, 1..=15.
    PureB(u8),
    /// `n` copies of A then one B (run ends on B), n in 1..=7.
    AThenB(u8),
    /// One B then `n` copies of A (run ends on A), n in 1..=7.
    BThenA(u8),
}

const TAG_LIT: u8 = 0b00 << 6;
const TAG_A_THEN_LIT: u8 = 0b01 << 6;
const TAG_B_THEN_LIT: u8 = 0b10 << 6;
const TAG_RUN: u8 = 0b11 << 6;
const RUN_LAST_B: u8 = 1 << 5; // bit 3
const RUN_MIXED: u8 = 1 << 4; // bit 4

fn run_codeword(run: Run) -> Option<u8> {
    match run {
        Run::Empty => None,
        Run::PureA(count) => Some(TAG_RUN | count),
        Run::PureB(count) => Some(TAG_RUN | RUN_LAST_B | count),
        Run::AThenB(n) => Some(TAG_RUN | RUN_LAST_B | RUN_MIXED | (n << 1) | 1),
        Run::BThenA(n) => Some(TAG_RUN | RUN_MIXED | (n << 1) | 1),
    }
}

/// Word-count stage encoder.  `a` and `b` are normally the output of
/// [`choose_common`] but any distinct pair of valid ranks is accepted.
pub fn word_count_compress(
    seq: &IndexSequence,
    a: u8,
    b: u8,
) -> Result<CompressedStream, CodecError> {
    for rank in [a, b] {
        if rank >= RANK_LIMIT {
            return Err(CodecError::RankOutOfRange { position: 0, rank });
        }
    }
    let mut out = Vec::new();
    let mut run = Run::Empty;

    let flush = |run: &mut Run, out: &mut Vec<u8>| {
        if let Some(cw) = run_codeword(*run) {
            out.push(cw);
        }
        *run = Run::Empty;
    };

    for (position, &rank) in seq.ranks.iter().enumerate() {
        if rank >= RANK_LIMIT {
            return Err(CodecError::RankOutOfRange { position, rank });
        }
        if rank == a {
            run = match run {
                Run::Empty => Run::PureA(1),
                Run::PureA(c) if c < RUN_PURE_MAX => Run::PureA(c + 1),
                Run::PureB(1) => Run::BThenA(1),
                Run::BThenA(n) if n < RUN_MIXED_MAX_A => Run::BThenA(n + 1),
                // Pure A overflow, B run too long to pair, mixed full, or a
                // third segment: flush and restart with this A.
                _ => {
                    flush(&mut run, &mut out);
                    Run::PureA(1)
                }
            };
        } else if rank == b {
            run = match run {
                Run::Empty => Run::PureB(1),
                Run::PureB(c) if c < RUN_PURE_MAX => Run::PureB(c + 1),
                Run::PureA(n) if n <= RUN_MIXED_MAX_A => Run::AThenB(n),
                _ => {
                    flush(&mut run, &mut out);
                    Run::PureB(1)
                }
            };
        } else {
            // Literal: a single pending A or B folds into the literal's
            // codeword; anything else flushes first.
            match run {
                Run::PureA(1) => {
                    run = Run::Empty;
                    out.push(TAG_A_THEN_LIT | rank);
                }
                Run::PureB(1) => {
                    run = Run::Empty;
                    out.push(TAG_B_THEN_LIT | rank);
                }
                _ => {
                    flush(&mut run, &mut out);
                    out.push(TAG_LIT | rank);
                }
            }
        }
    }
    flush(&mut run, &mut out);

    Ok(CompressedStream {
        a_rank: a,
        b_rank: b,
        codewords: out,
    })
}

/// Word-count stage decoder.  Rejects structurally invalid codewords with
/// the codeword offset: zero counts, mixed runs without the single B, and
/// literal payloads that collide with `A` or `B`.
pub fn word_count_decompress(stream: &CompressedStream) -> Result<IndexSequence, CodecError> {
    let corrupt = |offset: usize, reason: &str| CodecError::Corrupt {
        offset,
        reason: reason.to_string(),
    };
    let (a, b) = (stream.a_rank, stream.b_rank);
    if a >= RANK_LIMIT || b >= RANK_LIMIT {
        return Err(corrupt(0, "stream symbols outside rank range"));
    }
    let mut ranks = Vec::new();
    for (offset, &cw) in stream.codewords.iter().enumerate() {
        let payload = cw & 0x3F;
        match cw & 0xC0 {
            TAG_LIT | TAG_A_THEN_LIT | TAG_B_THEN_LIT => {
                if payload >= RANK_LIMIT {
                    return Err(corrupt(offset, "literal payload outside rank range"));
                }
                if payload == a || payload == b {
                    return Err(corrupt(offset, "literal payload equals a run symbol"));
                }
                match cw & 0xC0 {
                    TAG_A_THEN_LIT => ranks.push(a),
                    TAG_B_THEN_LIT => ranks.push(b),
                    _ => {}
                }
                ranks.push(payload);
            }
            _ => {
                // RUN
                let last_b = cw & RUN_LAST_B != 0;
                if cw & RUN_MIXED != 0 {
                    let n = (cw >> 1) & 0x07;
                    let m = cw & 1;
                    if n == 0 {
                        return Err(corrupt(offset, "mixed run with zero A count"));
                    }
                    if m == 0 {
                        return Err(corrupt(offset, "mixed run without its B"));
                    }
                    if last_b {
                        ranks.extend(std::iter::repeat(a).take(n as usize));
                        ranks.push(b);
                    } else {
                        ranks.push(b);
                        ranks.extend(std::iter::repeat(a).take(n as usize));
                    }
                } else {
                    let count = cw & 0x0F;
                    if count == 0 {
                        return Err(corrupt(offset, "pure run with zero count"));
                    }
                    let sym = if last_b { b } else { a };
                    ranks.extend(std::iter::repeat(sym).take(count as usize));
                }
            }
        }
    }
    Ok(IndexSequence {
        source: String::new(),
        ranks,
    })
}

/// Compresses a batch of rank sequences with shared symbols per group of
/// `k` consecutive tensors (`k = 1` is per-tensor symbols).  Runs never
/// cross tensor boundaries: every tensor gets its own stream.
pub fn compress_grouped(
    seqs: &[IndexSequence],
    k: usize,
) -> Result<Vec<CompressedStream>, CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroGroupSize);
    }
    let mut streams = Vec::with_capacity(seqs.len());
    for group in seqs.chunks(k) {
        // A group of empty tensors has no ranks to vote with; any valid
        // distinct pair works since no codewords reference the symbols.
        let (a, b) = if group.iter().all(|s| s.ranks.is_empty()) {
            (0, 1)
        } else {
            choose_common(group)?
        };
        for seq in group {
            streams.push(word_count_compress(seq, a, b)?);
        }
    }
    Ok(streams)
}

/// Compression summary in the units used throughout: symbol counts and bits
/// per symbol, with the ratio `(UL * UB) / (CL * CB)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionReport {
    /// Uncompressed length in symbols (weights).
    pub ul: u64,
    /// Uncompressed bits per symbol.
    pub ub: u32,
    /// Compressed length in codewords, framing headers excluded.
    pub cl: u64,
    /// Compressed bits per codeword.
    pub cb: u32,
    pub cr: f64,
}

/// `(ul * ub) / (cl * cb)`; all inputs must be positive.
pub fn compression_ratio(ul: u64, ub: u32, cl: u64, cb: u32) -> Result<f64, CodecError> {
    if cl == 0 {
        return Err(CodecError::ZeroCompressedLength);
    }
    if ul == 0 || ub == 0 || cb == 0 {
        return Err(CodecError::NonPositiveRatioInput);
    }
    Ok((ul as f64 * ub as f64) / (cl as f64 * cb as f64))
}

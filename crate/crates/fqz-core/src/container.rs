//! Binary container for float, quantized, and compressed tensors.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "FQZ1" | version 0x01 | tensor count u32
//! per tensor:
//!   name length u16 | UTF-8 name
//!   dtype u8   (0 f32, 1 u8 codes, 2 u16 codes, 3 packed 6-bit ranks,
//!               4 word-count stream)
//!   rank u8    | dims u32 × rank
//!   affine params when dtype != 0: scale f64 | min f64 | zero_point u32
//!   payload length u64 | payload
//! ```
//!
//! Payloads for dtype 3 use the codec's MSB-first 6-bit packing; dtype 4
//! payloads are self-framing codec streams (symbol pair, codeword count,
//! codewords).  Reading is strict: every structural problem is reported as
//! a parse error carrying the byte offset, and trailing bytes after the
//! last tensor are rejected.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::codec::{pack_6bit, unpack_6bit, word_count_decompress, CodecError, CompressedStream};
use crate::fibbinary::FibbinaryTable;
use crate::quant::{AffineParams, Bitwidth, QuantizedTensor, Scheme};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"FQZ1";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("parse error at offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("{0} trailing octets after the last tensor")]
    TrailingBytes(usize),
    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),
    #[error("tensor {name:?}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("tensor {name:?}: {source}")]
    Codec {
        name: String,
        #[source]
        source: CodecError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    U8,
    U16,
    Ranks6,
    Stream,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::Ranks6 => 3,
            Dtype::Stream => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::U8),
            2 => Some(Dtype::U16),
            3 => Some(Dtype::Ranks6),
            4 => Some(Dtype::Stream),
            _ => None,
        }
    }

    /// Every quantized representation carries affine parameters; raw floats
    /// do not.
    pub fn has_params(self) -> bool {
        !matches!(self, Dtype::F32)
    }

    /// The code bitwidth implied by the dtype, for quantized dtypes.
    pub fn bitwidth(self) -> Option<Bitwidth> {
        match self {
            Dtype::F32 => None,
            Dtype::U16 => Some(Bitwidth::B16),
            Dtype::U8 | Dtype::Ranks6 | Dtype::Stream => Some(Bitwidth::B8),
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dtype::F32 => "f32",
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
            Dtype::Ranks6 => "ranks6",
            Dtype::Stream => "stream",
        };
        f.write_str(s)
    }
}

/// Decoded tensor payload.  Ranks are held unpacked (one per element) and
/// packed only on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    U8(Vec<u8>),
    U16(Vec<u16>),
    Ranks6(Vec<u8>),
    Stream(CompressedStream),
}

impl Payload {
    pub fn dtype(&self) -> Dtype {
        match self {
            Payload::F32(_) => Dtype::F32,
            Payload::U8(_) => Dtype::U8,
            Payload::U16(_) => Dtype::U16,
            Payload::Ranks6(_) => Dtype::Ranks6,
            Payload::Stream(_) => Dtype::Stream,
        }
    }
}

/// One named tensor in the container.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<u32>,
    /// Present exactly when the dtype is a quantized one.
    pub params: Option<AffineParams>,
    pub payload: Payload,
}

impl Entry {
    pub fn dtype(&self) -> Dtype {
        self.payload.dtype()
    }

    /// Product of the dims, with overflow checked.
    pub fn element_count(&self) -> Result<u64, ContainerError> {
        checked_product(&self.dims).ok_or_else(|| ContainerError::Invalid {
            name: self.name.clone(),
            reason: "dims product overflows".into(),
        })
    }

    fn invalid(&self, reason: impl Into<String>) -> ContainerError {
        ContainerError::Invalid {
            name: self.name.clone(),
            reason: reason.into(),
        }
    }

    /// Structural self-checks shared by the writer and by `Container::push`.
    pub fn validate(&self) -> Result<(), ContainerError> {
        if self.name.len() > u16::MAX as usize {
            return Err(self.invalid("name longer than 65535 octets"));
        }
        if self.dims.len() > u8::MAX as usize {
            return Err(self.invalid("more than 255 dims"));
        }
        let n = self.element_count()?;
        let dtype = self.dtype();
        match (&self.params, dtype.has_params()) {
            (None, true) => return Err(self.invalid(format!("dtype {dtype} requires affine params"))),
            (Some(_), false) => return Err(self.invalid(format!("dtype {dtype} takes no affine params"))),
            _ => {}
        }
        if let Some(p) = &self.params {
            let expected = dtype.bitwidth().expect("quantized dtype");
            if p.bitwidth != expected {
                return Err(self.invalid(format!(
                    "params bitwidth {:?} does not match dtype {dtype}",
                    p.bitwidth
                )));
            }
            if !p.scale.is_finite() || p.scale <= 0.0 {
                return Err(self.invalid("non-finite or non-positive scale"));
            }
            if !p.min.is_finite() {
                return Err(self.invalid("non-finite min"));
            }
            if p.zero_point > expected.max_code() {
                return Err(self.invalid("zero point exceeds code range"));
            }
        }
        let count_ok = match &self.payload {
            Payload::F32(v) => v.len() as u64 == n,
            Payload::U8(v) => v.len() as u64 == n,
            Payload::U16(v) => v.len() as u64 == n,
            Payload::Ranks6(v) => v.len() as u64 == n && v.iter().all(|&r| r < 64),
            // Stream payloads are self-framing; the element count is only
            // checkable by decoding, which `decode_quantized` does.
            Payload::Stream(_) => true,
        };
        if !count_ok {
            return Err(self.invalid("payload length does not match dims"));
        }
        Ok(())
    }

    // ── Conversions to and from the in-memory tensor types ──────────────

    /// Float tensor → dtype-0 entry.  Values are stored at single
    /// precision, the container's float format.
    pub fn from_float(t: &Tensor) -> Result<Self, ContainerError> {
        let entry = Entry {
            name: t.name.clone(),
            dims: dims_from_shape(&t.name, &t.shape)?,
            params: None,
            payload: Payload::F32(t.values.iter().map(|&v| v as f32).collect()),
        };
        entry.validate()?;
        Ok(entry)
    }

    /// Dtype-0 entry → float tensor.
    pub fn to_float(&self) -> Result<Tensor, ContainerError> {
        let Payload::F32(values) = &self.payload else {
            return Err(self.invalid(format!("expected f32 payload, found {}", self.dtype())));
        };
        let shape: Vec<usize> = self.dims.iter().map(|&d| d as usize).collect();
        Tensor::new(self.name.clone(), shape, values.iter().map(|&v| v as f64).collect())
            .map_err(|e| self.invalid(e.to_string()))
    }

    /// Quantized tensor → dtype-1 or dtype-2 entry, by bitwidth.
    pub fn from_codes(q: &QuantizedTensor) -> Result<Self, ContainerError> {
        let payload = match q.params.bitwidth {
            Bitwidth::B8 => Payload::U8(q.codes.iter().map(|&c| c as u8).collect()),
            Bitwidth::B16 => Payload::U16(q.codes.iter().map(|&c| c as u16).collect()),
        };
        let entry = Entry {
            name: q.name.clone(),
            dims: dims_from_shape(&q.name, &q.shape)?,
            params: Some(q.params),
            payload,
        };
        entry.validate()?;
        Ok(entry)
    }

    /// Rank sequence → dtype-3 entry, preserving the affine params of the
    /// codes the ranks were derived from.
    pub fn from_ranks(
        name: impl Into<String>,
        dims: Vec<u32>,
        params: AffineParams,
        ranks: Vec<u8>,
    ) -> Result<Self, ContainerError> {
        let entry = Entry {
            name: name.into(),
            dims,
            params: Some(params),
            payload: Payload::Ranks6(ranks),
        };
        entry.validate()?;
        Ok(entry)
    }

    /// Compressed stream → dtype-4 entry.
    pub fn from_stream(
        name: impl Into<String>,
        dims: Vec<u32>,
        params: AffineParams,
        stream: CompressedStream,
    ) -> Result<Self, ContainerError> {
        let entry = Entry {
            name: name.into(),
            dims,
            params: Some(params),
            payload: Payload::Stream(stream),
        };
        entry.validate()?;
        Ok(entry)
    }

    /// Decodes any quantized dtype back to codes.  Dtype 3 and 4 go through
    /// the fibbinary table (they store ranks) and come back tagged as FCQ;
    /// dtype 1 and 2 are plain code arrays tagged uniform.
    pub fn decode_quantized(&self, table: &FibbinaryTable) -> Result<QuantizedTensor, ContainerError> {
        let params = *self
            .params
            .as_ref()
            .ok_or_else(|| self.invalid("not a quantized entry"))?;
        let shape: Vec<usize> = self.dims.iter().map(|&d| d as usize).collect();
        let n = self.element_count()? as usize;
        let ranks_to_codes = |ranks: &[u8]| -> Result<Vec<u32>, ContainerError> {
            ranks
                .iter()
                .map(|&r| {
                    table.index_to_value(r as usize).map_err(|e| ContainerError::Codec {
                        name: self.name.clone(),
                        source: e.into(),
                    })
                })
                .collect()
        };
        let (codes, scheme) = match &self.payload {
            Payload::F32(_) => return Err(self.invalid("float entries hold no codes")),
            Payload::U8(v) => (v.iter().map(|&c| c as u32).collect(), Scheme::Uniform),
            Payload::U16(v) => (v.iter().map(|&c| c as u32).collect(), Scheme::Uniform),
            Payload::Ranks6(ranks) => (ranks_to_codes(ranks)?, Scheme::Fcq),
            Payload::Stream(stream) => {
                let seq = word_count_decompress(stream).map_err(|e| ContainerError::Codec {
                    name: self.name.clone(),
                    source: e,
                })?;
                if seq.ranks.len() != n {
                    return Err(self.invalid(format!(
                        "stream decodes {} ranks, dims say {n}",
                        seq.ranks.len()
                    )));
                }
                (ranks_to_codes(&seq.ranks)?, Scheme::Fcq)
            }
        };
        Ok(QuantizedTensor {
            name: self.name.clone(),
            shape,
            codes,
            params,
            scheme,
        })
    }
}

fn dims_from_shape(name: &str, shape: &[usize]) -> Result<Vec<u32>, ContainerError> {
    shape
        .iter()
        .map(|&d| {
            u32::try_from(d).map_err(|_| ContainerError::Invalid {
                name: name.to_string(),
                reason: format!("dim {d} exceeds u32"),
            })
        })
        .collect()
}

fn checked_product(dims: &[u32]) -> Option<u64> {
    dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
}

/// An ordered collection of uniquely named entries plus the wire codec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    pub entries: Vec<Entry>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: Entry) -> Result<(), ContainerError> {
        entry.validate()?;
        if self.entries.iter().any(|e| e.name == entry.name) {
            return Err(ContainerError::DuplicateName(entry.name));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ContainerError> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(FORMAT_VERSION);
        let count = u32::try_from(self.entries.len()).map_err(|_| ContainerError::Invalid {
            name: String::new(),
            reason: "more than u32::MAX tensors".into(),
        })?;
        out.extend_from_slice(&count.to_le_bytes());
        for entry in &self.entries {
            entry.validate()?;
            out.extend_from_slice(&(entry.name.len() as u16).to_le_bytes());
            out.extend_from_slice(entry.name.as_bytes());
            out.push(entry.dtype().tag());
            out.push(entry.dims.len() as u8);
            for &d in &entry.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            if let Some(p) = &entry.params {
                out.extend_from_slice(&p.scale.to_le_bytes());
                out.extend_from_slice(&p.min.to_le_bytes());
                out.extend_from_slice(&p.zero_point.to_le_bytes());
            }
            let payload: Vec<u8> = match &entry.payload {
                Payload::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
                Payload::U8(v) => v.clone(),
                Payload::U16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
                Payload::Ranks6(ranks) => pack_6bit(ranks).map_err(|e| ContainerError::Codec {
                    name: entry.name.clone(),
                    source: e,
                })?,
                Payload::Stream(stream) => stream.to_bytes(),
            };
            out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
            out.extend_from_slice(&payload);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(ContainerError::Parse {
                offset: 0,
                reason: format!("bad magic {magic:02X?}, expected {MAGIC:02X?}"),
            });
        }
        let version = r.u8("version")?;
        if version != FORMAT_VERSION {
            return Err(ContainerError::Parse {
                offset: r.pos - 1,
                reason: format!("unsupported version {version}, expected {FORMAT_VERSION}"),
            });
        }
        let count = r.u32("tensor count")?;
        let mut container = Container::new();
        for index in 0..count {
            let entry = read_entry(&mut r, index)?;
            container.push(entry)?;
        }
        if r.pos != bytes.len() {
            return Err(ContainerError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(container)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ContainerError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ContainerError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ContainerError> {
        let have = self.bytes.len() - self.pos;
        if have < n {
            return Err(ContainerError::Parse {
                offset: self.pos,
                reason: format!("truncated in {what}: need {n} octets, {have} left"),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ContainerError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("length 2")))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("length 4")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("length 8")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ContainerError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("length 8")))
    }
}

fn read_entry(r: &mut Reader<'_>, index: u32) -> Result<Entry, ContainerError> {
    let parse = |offset: usize, reason: String| ContainerError::Parse { offset, reason };
    let what = |s: &str| format!("tensor {index} {s}");

    let name_len = r.u16(&what("name length"))? as usize;
    let name_offset = r.pos;
    let name_bytes = r.take(name_len, &what("name"))?;
    let name = std::str::from_utf8(name_bytes)
        .map_err(|e| parse(name_offset + e.valid_up_to(), "name is not UTF-8".to_string()))?
        .to_string();

    let dtype_offset = r.pos;
    let tag = r.u8(&what("dtype"))?;
    let dtype = Dtype::from_tag(tag)
        .ok_or_else(|| parse(dtype_offset, format!("unknown dtype tag {tag}")))?;

    let rank = r.u8(&what("rank"))? as usize;
    let dims_offset = r.pos;
    let mut dims = Vec::with_capacity(rank.min(64));
    for _ in 0..rank {
        dims.push(r.u32(&what("dims"))?);
    }
    let n = checked_product(&dims)
        .ok_or_else(|| parse(dims_offset, "dims product overflows".into()))?;

    let params = if dtype.has_params() {
        let params_offset = r.pos;
        let scale = r.f64(&what("scale"))?;
        let min = r.f64(&what("min"))?;
        let zero_point = r.u32(&what("zero point"))?;
        if !scale.is_finite() || scale <= 0.0 {
            return Err(parse(params_offset, "non-finite or non-positive scale".into()));
        }
        if !min.is_finite() {
            return Err(parse(params_offset + 8, "non-finite min".into()));
        }
        let bitwidth = dtype.bitwidth().expect("quantized dtype");
        if zero_point > bitwidth.max_code() {
            return Err(parse(params_offset + 16, "zero point exceeds code range".into()));
        }
        Some(AffineParams {
            scale,
            zero_point,
            bitwidth,
            min,
        })
    } else {
        None
    };

    let len_offset = r.pos;
    let payload_len = r.u64(&what("payload length"))?;
    let expected: Option<u64> = match dtype {
        Dtype::F32 => n.checked_mul(4),
        Dtype::U8 => Some(n),
        Dtype::U16 => n.checked_mul(2),
        Dtype::Ranks6 => n.checked_mul(6).map(|bits| bits.div_ceil(8)),
        Dtype::Stream => None,
    };
    if let Some(expected) = expected {
        if payload_len != expected {
            return Err(parse(
                len_offset,
                format!("payload length {payload_len} does not match dims (expected {expected})"),
            ));
        }
    }
    let payload_len = usize::try_from(payload_len)
        .map_err(|_| parse(len_offset, "payload length exceeds address space".into()))?;
    let payload_offset = r.pos;
    let payload_bytes = r.take(payload_len, &what("payload"))?;

    let payload = match dtype {
        Dtype::F32 => Payload::F32(
            payload_bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("length 4")))
                .collect(),
        ),
        Dtype::U8 => Payload::U8(payload_bytes.to_vec()),
        Dtype::U16 => Payload::U16(
            payload_bytes
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().expect("length 2")))
                .collect(),
        ),
        Dtype::Ranks6 => {
            let ranks = unpack_6bit(payload_bytes, n as usize)
                .map_err(|e| parse(payload_offset, format!("bad 6-bit packing: {e}")))?;
            Payload::Ranks6(ranks)
        }
        Dtype::Stream => {
            let (stream, consumed) = CompressedStream::from_bytes(payload_bytes)
                .map_err(|e| parse(payload_offset, format!("bad stream framing: {e}")))?;
            if consumed != payload_len {
                return Err(parse(
                    payload_offset,
                    format!("stream framing consumed {consumed} of {payload_len} payload octets"),
                ));
            }
            Payload::Stream(stream)
        }
    };

    Ok(Entry {
        name,
        dims,
        params,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{apply_fcq, dequantize, quantize_uniform};
    use crate::codec::word_length_compress;

    fn params8() -> AffineParams {
        AffineParams {
            scale: 1.0,
            zero_point: 0,
            bitwidth: Bitwidth::B8,
            min: 0.0,
        }
    }

    fn decode_hex(text: &str) -> Vec<u8> {
        let mut nibbles = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                nibbles.push(ch.to_digit(16).expect("hex digit") as u8);
            }
        }
        assert!(nibbles.len() % 2 == 0, "odd hex digit count");
        nibbles.chunks(2).map(|p| (p[0] << 4) | p[1]).collect()
    }

    #[test]
    fn empty_container_is_nine_octets() {
        let c = Container::new();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(bytes, vec![0x46, 0x51, 0x5A, 0x31, 0x01, 0, 0, 0, 0]);
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn empty_fixture_matches() {
        let bytes = decode_hex(include_str!("../tests/fixtures/empty.hex"));
        assert_eq!(Container::new().to_bytes().unwrap(), bytes);
    }

    #[test]
    fn one_u8_fixture_round_trips_bit_exactly() {
        let bytes = decode_hex(include_str!("../tests/fixtures/one_u8.hex"));
        let c = Container::from_bytes(&bytes).unwrap();
        assert_eq!(c.entries.len(), 1);
        let e = &c.entries[0];
        assert_eq!(e.name, "w");
        assert_eq!(e.dims, vec![2]);
        assert_eq!(e.payload, Payload::U8(vec![3, 7]));
        assert_eq!(c.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn all_dtypes_fixture_round_trips_bit_exactly() {
        let bytes = decode_hex(include_str!("../tests/fixtures/all_dtypes.hex"));
        let c = Container::from_bytes(&bytes).unwrap();
        assert_eq!(c.entries.len(), 5);
        assert_eq!(
            c.entries.iter().map(|e| e.dtype()).collect::<Vec<_>>(),
            vec![Dtype::F32, Dtype::U8, Dtype::U16, Dtype::Ranks6, Dtype::Stream]
        );
        assert_eq!(c.entries[0].payload, Payload::F32(vec![1.5, -2.0]));
        assert_eq!(c.entries[1].payload, Payload::U8(vec![0, 128, 255]));
        assert_eq!(c.entries[2].payload, Payload::U16(vec![1, 65535]));
        assert_eq!(c.entries[3].payload, Payload::Ranks6(vec![0, 54]));
        assert_eq!(
            c.entries[4].payload,
            Payload::Stream(CompressedStream {
                a_rank: 5,
                b_rank: 7,
                codewords: vec![0x4C],
            })
        );
        // Stream decodes to ranks [5, 12], whose fibbinary values are 8
        // and 21.
        let table = FibbinaryTable::new(8).unwrap();
        let q = c.entries[4].decode_quantized(&table).unwrap();
        assert_eq!(q.codes, vec![8, 21]);
        assert_eq!(c.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn bad_magic_version_and_trailing_bytes() {
        let good = Container::new().to_bytes().unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::Parse { offset: 0, .. })
        ));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::Parse { offset: 4, .. })
        ));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::TrailingBytes(1))
        ));
    }

    #[test]
    fn duplicate_names_rejected_both_ways() {
        let e = Entry {
            name: "t".into(),
            dims: vec![1],
            params: Some(params8()),
            payload: Payload::U8(vec![5]),
        };
        let mut c = Container::new();
        c.push(e.clone()).unwrap();
        assert!(matches!(
            c.push(e.clone()),
            Err(ContainerError::DuplicateName(_))
        ));

        // Same rejection when the duplicate arrives over the wire.
        let mut hand = Container::new();
        hand.push(e.clone()).unwrap();
        let mut bytes = hand.to_bytes().unwrap();
        let entry_bytes = bytes[9..].to_vec();
        bytes.extend_from_slice(&entry_bytes);
        bytes[5] = 2; // tensor count
        assert!(matches!(
            Container::from_bytes(&bytes),
            Err(ContainerError::DuplicateName(_))
        ));
    }

    #[test]
    fn validation_rejects_mismatches() {
        // Params on a float entry.
        let e = Entry {
            name: "f".into(),
            dims: vec![1],
            params: Some(params8()),
            payload: Payload::F32(vec![0.0]),
        };
        assert!(matches!(e.validate(), Err(ContainerError::Invalid { .. })));
        // Missing params on codes.
        let e = Entry {
            name: "q".into(),
            dims: vec![1],
            params: None,
            payload: Payload::U8(vec![0]),
        };
        assert!(matches!(e.validate(), Err(ContainerError::Invalid { .. })));
        // Payload length vs dims.
        let e = Entry {
            name: "q".into(),
            dims: vec![3],
            params: Some(params8()),
            payload: Payload::U8(vec![0]),
        };
        assert!(matches!(e.validate(), Err(ContainerError::Invalid { .. })));
        // Wrong-bitwidth params.
        let e = Entry {
            name: "q".into(),
            dims: vec![1],
            params: Some(params8()),
            payload: Payload::U16(vec![0]),
        };
        assert!(matches!(e.validate(), Err(ContainerError::Invalid { .. })));
        // Rank above the 6-bit packing domain.
        let e = Entry {
            name: "r".into(),
            dims: vec![1],
            params: Some(params8()),
            payload: Payload::Ranks6(vec![64]),
        };
        assert!(matches!(e.validate(), Err(ContainerError::Invalid { .. })));
    }

    #[test]
    fn wire_rejects_dirty_rank_padding_and_bad_streams() {
        let mut c = Container::new();
        c.push(
            Entry::from_ranks("r", vec![2], params8(), vec![0, 54]).unwrap(),
        )
        .unwrap();
        let good = c.to_bytes().unwrap();
        // Last payload octet is 0x60; dirty the padding bits.
        let mut bad = good.clone();
        let last = bad.len() - 1;
        bad[last] |= 0x01;
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::Parse { .. })
        ));

        // A stream whose codeword count disagrees with the payload length.
        let mut c = Container::new();
        c.push(
            Entry::from_stream(
                "s",
                vec![2],
                params8(),
                CompressedStream {
                    a_rank: 5,
                    b_rank: 7,
                    codewords: vec![0x4C],
                },
            )
            .unwrap(),
        )
        .unwrap();
        let good = c.to_bytes().unwrap();
        let mut bad = good.clone();
        // Codeword count field sits 4 octets before the final codeword.
        let count_pos = bad.len() - 5;
        bad[count_pos] = 9;
        assert!(matches!(
            Container::from_bytes(&bad),
            Err(ContainerError::Parse { .. })
        ));
    }

    #[test]
    fn float_and_quantized_round_trip_through_entries() {
        let t = Tensor::new("w", vec![2, 3], vec![0.5, -0.25, 1.0, 0.0, -1.0, 0.125]).unwrap();
        let e = Entry::from_float(&t).unwrap();
        let back = e.to_float().unwrap();
        // All values are f32-exact, so the round trip is lossless here.
        assert_eq!(back, t);

        let q = quantize_uniform(&t, Bitwidth::B8).unwrap();
        let e = Entry::from_codes(&q).unwrap();
        let table = FibbinaryTable::new(8).unwrap();
        let back = e.decode_quantized(&table).unwrap();
        assert_eq!(back.codes, q.codes);
        assert_eq!(back.params, q.params);
        assert_eq!(dequantize(&back).values, dequantize(&q).values);

        let q16 = quantize_uniform(&t, Bitwidth::B16).unwrap();
        let e = Entry::from_codes(&q16).unwrap();
        assert_eq!(e.dtype(), Dtype::U16);
        let back = e.decode_quantized(&table).unwrap();
        assert_eq!(back.codes, q16.codes);
    }

    #[test]
    fn rank_and_stream_entries_decode_to_fcq_codes() {
        let t = Tensor::new("w", vec![8], vec![-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9, 1.0]).unwrap();
        let table = FibbinaryTable::new(8).unwrap();
        let q = apply_fcq(&quantize_uniform(&t, Bitwidth::B8).unwrap()).unwrap();
        let seq = word_length_compress(q.name.clone(), &q.codes, &table).unwrap();

        let e = Entry::from_ranks(&q.name, vec![8], q.params, seq.ranks.clone()).unwrap();
        let bytes = {
            let mut c = Container::new();
            c.push(e).unwrap();
            c.to_bytes().unwrap()
        };
        let c = Container::from_bytes(&bytes).unwrap();
        let back = c.entries[0].decode_quantized(&table).unwrap();
        assert_eq!(back.codes, q.codes);
        assert_eq!(back.scheme, Scheme::Fcq);
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.fqz");
        let mut c = Container::new();
        c.push(Entry {
            name: "t".into(),
            dims: vec![1],
            params: Some(params8()),
            payload: Payload::U8(vec![42]),
        })
        .unwrap();
        c.save(&path).unwrap();
        assert_eq!(Container::load(&path).unwrap(), c);
        assert!(matches!(
            Container::load(dir.path().join("missing.fqz")),
            Err(ContainerError::Io(_))
        ));
    }

    #[test]
    fn every_truncation_of_a_rich_container_errors() {
        let t = Tensor::new("weights", vec![4], vec![0.5, -0.25, 1.0, 0.0]).unwrap();
        let mut c = Container::new();
        c.push(Entry::from_float(&t).unwrap()).unwrap();
        c.push(Entry {
            name: "codes".into(),
            dims: vec![3],
            params: Some(params8()),
            payload: Payload::U8(vec![1, 2, 3]),
        })
        .unwrap();
        let bytes = c.to_bytes().unwrap();
        for cut in 0..bytes.len() {
            let r = Container::from_bytes(&bytes[..cut]);
            assert!(r.is_err(), "prefix of length {cut} parsed successfully");
        }
    }
}

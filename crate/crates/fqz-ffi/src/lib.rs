//! C ABI over the fqz toolkit.
//!
//! Every function returns an [`FqzStatus`]; results travel through out
//! pointers.  Heap objects cross the boundary as opaque handles that must be
//! released with their matching `_free` function.  A thread-local message
//! explains the most recent failure (see [`fqz_last_error_message`]).
//! Panics never unwind across the boundary; they surface as
//! `FQZ_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fqz_core::codec::{
    choose_common, compression_ratio, word_count_compress, word_count_decompress,
    word_length_compress, CompressedStream,
};
use fqz_core::container::{Container, ContainerError, Entry};
use fqz_core::fibbinary::{is_fibbinary, FibbinaryTable};
use fqz_core::hw::{cost_report, discover_replaceable, quoted_replacement_count, MultiplierArray};
use fqz_core::quant::{apply_fcq, dequantize, quantize_uniform, Bitwidth, QuantizedTensor};
use fqz_core::tensor::Tensor;

/// Result of every FFI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FqzStatus {
    Ok = 0,
    /// A pointer was null, a buffer too small, or an argument out of range.
    InvalidArgument = 1,
    /// The inputs were well-formed but violate a domain rule (non-fibbinary
    /// codes, unsupported bitwidth, ...).
    DomainError = 2,
    /// Serialized data failed to parse.
    CorruptStream = 3,
    IoError = 4,
    Utf8Error = 5,
    /// A defect inside the library; details in the last error message.
    Internal = 6,
}

/// Gate-level cost summary, mirrored as a plain C struct.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FqzCostReport {
    pub n: u32,
    pub fa_total: u32,
    pub fa_replaced: u32,
    pub replaced_fraction: f64,
    pub area_saving: f64,
    pub power_saving: f64,
    pub replaced_pct: u32,
    pub area_saving_pct: u32,
    pub power_saving_pct: u32,
}

/// Opaque fibbinary lookup table.
pub struct FqzTable(FibbinaryTable);
/// Opaque quantized tensor (codes plus affine parameters).
pub struct FqzQuantized(QuantizedTensor);
/// Opaque compressed stream.
pub struct FqzStream(CompressedStream);
/// Opaque gate-level multiplier array.
pub struct FqzMultiplier(MultiplierArray);
/// Opaque tensor container.
pub struct FqzContainer(Container);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: FqzStatus, message: impl std::fmt::Display) -> FqzStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.to_string());
    status
}

fn container_status(e: &ContainerError) -> FqzStatus {
    match e {
        ContainerError::Io(_) => FqzStatus::IoError,
        ContainerError::Parse { .. } | ContainerError::TrailingBytes(_) => FqzStatus::CorruptStream,
        _ => FqzStatus::InvalidArgument,
    }
}

/// Runs the body under a panic guard so unwinding never crosses into C.
fn guarded(body: impl FnOnce() -> FqzStatus) -> FqzStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(FqzStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            return fail(
                FqzStatus::InvalidArgument,
                concat!("null pointer: ", stringify!($ptr)),
            );
        }
    };
}

/// Copies the explanation of the most recent failure on this thread into
/// `buf` (NUL-terminated, truncating to `cap`).  Returns the full message
/// length in bytes, so callers can size a retry; a null `buf` only queries.
#[no_mangle]
pub extern "C" fn fqz_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            // Safety: caller promises `cap` writable bytes at `buf`.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// fibbinary tables

/// Builds the fibbinary table for `bits`-wide codes (1..=16).
#[no_mangle]
pub extern "C" fn fqz_table_new(bits: u32, out: *mut *mut FqzTable) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        match FibbinaryTable::new(bits) {
            Ok(table) => {
                unsafe { *out = Box::into_raw(Box::new(FqzTable(table))) };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

#[no_mangle]
pub extern "C" fn fqz_table_free(table: *mut FqzTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Number of fibbinary values representable at the table's bitwidth.
#[no_mangle]
pub extern "C" fn fqz_table_len(table: *const FqzTable, out: *mut usize) -> FqzStatus {
    guarded(|| {
        nonnull!(table);
        nonnull!(out);
        unsafe { *out = (*table).0.len() };
        FqzStatus::Ok
    })
}

/// Zeckendorf rank -> fibbinary value.
#[no_mangle]
pub extern "C" fn fqz_table_index_to_value(
    table: *const FqzTable,
    rank: usize,
    out: *mut u32,
) -> FqzStatus {
    guarded(|| {
        nonnull!(table);
        nonnull!(out);
        match unsafe { &*table }.0.index_to_value(rank) {
            Ok(value) => {
                unsafe { *out = value };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

/// Fibbinary value -> Zeckendorf rank.
#[no_mangle]
pub extern "C" fn fqz_table_value_to_index(
    table: *const FqzTable,
    code: u32,
    out: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(table);
        nonnull!(out);
        match unsafe { &*table }.0.value_to_index(code) {
            Ok(rank) => {
                unsafe { *out = rank };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

/// Nearest fibbinary value to `code`, ties resolved downward.
#[no_mangle]
pub extern "C" fn fqz_table_nearest(
    table: *const FqzTable,
    code: u32,
    out: *mut u32,
) -> FqzStatus {
    guarded(|| {
        nonnull!(table);
        nonnull!(out);
        match unsafe { &*table }.0.nearest(code) {
            Ok(value) => {
                unsafe { *out = value };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

/// Whether `code` has no adjacent 1 bits within `bits`.
#[no_mangle]
pub extern "C" fn fqz_is_fibbinary(code: u32, bits: u32, out: *mut bool) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        match is_fibbinary(code, bits) {
            Ok(flag) => {
                unsafe { *out = flag };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

// ---------------------------------------------------------------------------
// quantization

/// Affine-quantizes `len` doubles to `bits`-wide codes (8 or 16); with
/// `fcq` set, codes are additionally rounded to fibbinary values (8-bit
/// only).
#[no_mangle]
pub extern "C" fn fqz_quantize(
    values: *const f64,
    len: usize,
    bits: u32,
    fcq: bool,
    out: *mut *mut FqzQuantized,
) -> FqzStatus {
    guarded(|| {
        nonnull!(values);
        nonnull!(out);
        let bitwidth = match bits {
            8 => Bitwidth::B8,
            16 => Bitwidth::B16,
            other => {
                return fail(
                    FqzStatus::InvalidArgument,
                    format!("unsupported bitwidth {other}; use 8 or 16"),
                )
            }
        };
        let values = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let tensor = match Tensor::new("ffi.input", vec![len], values) {
            Ok(t) => t,
            Err(e) => return fail(FqzStatus::InvalidArgument, e),
        };
        let mut q = match quantize_uniform(&tensor, bitwidth) {
            Ok(q) => q,
            Err(e) => return fail(FqzStatus::DomainError, e),
        };
        if fcq {
            q = match apply_fcq(&q) {
                Ok(q) => q,
                Err(e) => return fail(FqzStatus::DomainError, e),
            };
        }
        unsafe { *out = Box::into_raw(Box::new(FqzQuantized(q))) };
        FqzStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn fqz_quantized_free(q: *mut FqzQuantized) {
    if !q.is_null() {
        drop(unsafe { Box::from_raw(q) });
    }
}

#[no_mangle]
pub extern "C" fn fqz_quantized_len(q: *const FqzQuantized, out: *mut usize) -> FqzStatus {
    guarded(|| {
        nonnull!(q);
        nonnull!(out);
        unsafe { *out = (*q).0.codes.len() };
        FqzStatus::Ok
    })
}

/// Affine parameters of a quantized tensor.
#[no_mangle]
pub extern "C" fn fqz_quantized_params(
    q: *const FqzQuantized,
    scale: *mut f64,
    min: *mut f64,
    zero_point: *mut u32,
) -> FqzStatus {
    guarded(|| {
        nonnull!(q);
        nonnull!(scale);
        nonnull!(min);
        nonnull!(zero_point);
        let params = unsafe { &*q }.0.params;
        unsafe {
            *scale = params.scale;
            *min = params.min;
            *zero_point = params.zero_point;
        }
        FqzStatus::Ok
    })
}

/// Copies the integer codes into `buf` (`cap` elements).
#[no_mangle]
pub extern "C" fn fqz_quantized_codes(
    q: *const FqzQuantized,
    buf: *mut u32,
    cap: usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(q);
        nonnull!(buf);
        let codes = &unsafe { &*q }.0.codes;
        if cap < codes.len() {
            return fail(
                FqzStatus::InvalidArgument,
                format!("buffer holds {cap} codes, need {}", codes.len()),
            );
        }
        unsafe { std::ptr::copy_nonoverlapping(codes.as_ptr(), buf, codes.len()) };
        FqzStatus::Ok
    })
}

/// Reconstructs doubles from the codes into `buf` (`cap` elements).
#[no_mangle]
pub extern "C" fn fqz_dequantize(
    q: *const FqzQuantized,
    buf: *mut f64,
    cap: usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(q);
        nonnull!(buf);
        let tensor = dequantize(&unsafe { &*q }.0);
        if cap < tensor.values.len() {
            return fail(
                FqzStatus::InvalidArgument,
                format!("buffer holds {cap} values, need {}", tensor.values.len()),
            );
        }
        unsafe { std::ptr::copy_nonoverlapping(tensor.values.as_ptr(), buf, tensor.values.len()) };
        FqzStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// compression

/// Compresses a fibbinary-quantized tensor into a two-stage stream.  The
/// codes must all be fibbinary at the table's bitwidth.
#[no_mangle]
pub extern "C" fn fqz_compress(
    q: *const FqzQuantized,
    table: *const FqzTable,
    out: *mut *mut FqzStream,
) -> FqzStatus {
    guarded(|| {
        nonnull!(q);
        nonnull!(table);
        nonnull!(out);
        let q = &unsafe { &*q }.0;
        let table = &unsafe { &*table }.0;
        let seq = match word_length_compress(q.name.clone(), &q.codes, table) {
            Ok(seq) => seq,
            Err(e) => return fail(FqzStatus::DomainError, e),
        };
        let stream = choose_common(std::slice::from_ref(&seq))
            .and_then(|(a, b)| word_count_compress(&seq, a, b));
        match stream {
            Ok(stream) => {
                unsafe { *out = Box::into_raw(Box::new(FqzStream(stream))) };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

#[no_mangle]
pub extern "C" fn fqz_stream_free(stream: *mut FqzStream) {
    if !stream.is_null() {
        drop(unsafe { Box::from_raw(stream) });
    }
}

#[no_mangle]
pub extern "C" fn fqz_stream_codeword_count(
    stream: *const FqzStream,
    out: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(stream);
        nonnull!(out);
        unsafe { *out = (*stream).0.codeword_count() };
        FqzStatus::Ok
    })
}

/// Octets needed by [`fqz_stream_to_bytes`].
#[no_mangle]
pub extern "C" fn fqz_stream_serialized_size(
    stream: *const FqzStream,
    out: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(stream);
        nonnull!(out);
        unsafe { *out = (*stream).0.to_bytes().len() };
        FqzStatus::Ok
    })
}

/// Serializes the stream (self-framing header plus codewords).
#[no_mangle]
pub extern "C" fn fqz_stream_to_bytes(
    stream: *const FqzStream,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(stream);
        nonnull!(buf);
        nonnull!(written);
        let bytes = unsafe { &*stream }.0.to_bytes();
        if cap < bytes.len() {
            return fail(
                FqzStatus::InvalidArgument,
                format!("buffer holds {cap} octets, need {}", bytes.len()),
            );
        }
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
            *written = bytes.len();
        }
        FqzStatus::Ok
    })
}

/// Parses one stream from `bytes`; `consumed` reports how many octets the
/// frame occupied.
#[no_mangle]
pub extern "C" fn fqz_stream_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut FqzStream,
    consumed: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(bytes);
        nonnull!(out);
        nonnull!(consumed);
        let slice = unsafe { std::slice::from_raw_parts(bytes, len) };
        match CompressedStream::from_bytes(slice) {
            Ok((stream, used)) => {
                unsafe {
                    *out = Box::into_raw(Box::new(FqzStream(stream)));
                    *consumed = used;
                }
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::CorruptStream, e),
        }
    })
}

/// Expands the stream back to 6-bit ranks; `written` reports the count.
#[no_mangle]
pub extern "C" fn fqz_stream_decode_ranks(
    stream: *const FqzStream,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(stream);
        nonnull!(buf);
        nonnull!(written);
        let seq = match word_count_decompress(&unsafe { &*stream }.0) {
            Ok(seq) => seq,
            Err(e) => return fail(FqzStatus::CorruptStream, e),
        };
        if cap < seq.ranks.len() {
            return fail(
                FqzStatus::InvalidArgument,
                format!("buffer holds {cap} ranks, need {}", seq.ranks.len()),
            );
        }
        unsafe {
            std::ptr::copy_nonoverlapping(seq.ranks.as_ptr(), buf, seq.ranks.len());
            *written = seq.ranks.len();
        }
        FqzStatus::Ok
    })
}

/// (UL*UB)/(CL*CB); fails on zero compressed size.
#[no_mangle]
pub extern "C" fn fqz_compression_ratio(
    ul: u64,
    ub: u32,
    cl: u64,
    cb: u32,
    out: *mut f64,
) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        match compression_ratio(ul, ub, cl, cb) {
            Ok(ratio) => {
                unsafe { *out = ratio };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

// ---------------------------------------------------------------------------
// hardware model

/// Builds an `bits`-wide carry-save multiplier; with `or_replaced` set the
/// oracle-discovered safe cells are swapped for OR gates.
#[no_mangle]
pub extern "C" fn fqz_multiplier_new(
    bits: u32,
    or_replaced: bool,
    out: *mut *mut FqzMultiplier,
) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        let array = match MultiplierArray::build(bits) {
            Ok(a) => a,
            Err(e) => return fail(FqzStatus::DomainError, e),
        };
        let array = if or_replaced {
            let table = match FibbinaryTable::new(bits) {
                Ok(t) => t,
                Err(e) => return fail(FqzStatus::DomainError, e),
            };
            let replaced = match discover_replaceable(&array, &table) {
                Ok(r) => r,
                Err(e) => return fail(FqzStatus::DomainError, e),
            };
            match array.with_or_cells(&replaced) {
                Ok(a) => a,
                Err(e) => return fail(FqzStatus::DomainError, e),
            }
        } else {
            array
        };
        unsafe { *out = Box::into_raw(Box::new(FqzMultiplier(array))) };
        FqzStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn fqz_multiplier_free(m: *mut FqzMultiplier) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Gate-level product of `w * x`; exact whenever `w` is fibbinary (or no
/// cells were replaced).
#[no_mangle]
pub extern "C" fn fqz_multiplier_multiply(
    m: *const FqzMultiplier,
    w: u64,
    x: u64,
    out: *mut u64,
) -> FqzStatus {
    guarded(|| {
        nonnull!(m);
        nonnull!(out);
        match unsafe { &*m }.0.multiply(w, x) {
            Ok(product) => {
                unsafe { *out = product };
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

/// Area/power savings when `fa_replaced` of the array's full adders become
/// OR gates.
#[no_mangle]
pub extern "C" fn fqz_cost_report(
    n: u32,
    fa_replaced: u32,
    out: *mut FqzCostReport,
) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        match cost_report(n, fa_replaced) {
            Ok(report) => {
                unsafe {
                    *out = FqzCostReport {
                        n: report.n,
                        fa_total: report.fa_total,
                        fa_replaced: report.fa_replaced,
                        replaced_fraction: report.replaced_fraction,
                        area_saving: report.area_saving,
                        power_saving: report.power_saving,
                        replaced_pct: report.replaced_pct(),
                        area_saving_pct: report.area_saving_pct(),
                        power_saving_pct: report.power_saving_pct(),
                    };
                }
                FqzStatus::Ok
            }
            Err(e) => fail(FqzStatus::DomainError, e),
        }
    })
}

/// The quoted replaceable-cell count (n^2 - n)/2.
#[no_mangle]
pub extern "C" fn fqz_quoted_replacement_count(n: u32) -> u32 {
    quoted_replacement_count(n)
}

// ---------------------------------------------------------------------------
// containers

fn path_from(ptr: *const c_char) -> Result<String, FqzStatus> {
    let cstr = unsafe { CStr::from_ptr(ptr) };
    cstr.to_str()
        .map(str::to_owned)
        .map_err(|e| fail(FqzStatus::Utf8Error, e))
}

#[no_mangle]
pub extern "C" fn fqz_container_new(out: *mut *mut FqzContainer) -> FqzStatus {
    guarded(|| {
        nonnull!(out);
        unsafe { *out = Box::into_raw(Box::new(FqzContainer(Container::new()))) };
        FqzStatus::Ok
    })
}

/// Reads a container file.
#[no_mangle]
pub extern "C" fn fqz_container_open(
    path: *const c_char,
    out: *mut *mut FqzContainer,
) -> FqzStatus {
    guarded(|| {
        nonnull!(path);
        nonnull!(out);
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match Container::load(&path) {
            Ok(container) => {
                unsafe { *out = Box::into_raw(Box::new(FqzContainer(container))) };
                FqzStatus::Ok
            }
            Err(e) => fail(container_status(&e), e),
        }
    })
}

/// Writes the container to a file.
#[no_mangle]
pub extern "C" fn fqz_container_save(
    container: *const FqzContainer,
    path: *const c_char,
) -> FqzStatus {
    guarded(|| {
        nonnull!(container);
        nonnull!(path);
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match unsafe { &*container }.0.save(&path) {
            Ok(()) => FqzStatus::Ok,
            Err(e) => fail(container_status(&e), e),
        }
    })
}

#[no_mangle]
pub extern "C" fn fqz_container_free(container: *mut FqzContainer) {
    if !container.is_null() {
        drop(unsafe { Box::from_raw(container) });
    }
}

#[no_mangle]
pub extern "C" fn fqz_container_len(
    container: *const FqzContainer,
    out: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(container);
        nonnull!(out);
        unsafe { *out = (*container).0.entries.len() };
        FqzStatus::Ok
    })
}

/// Copies the NUL-terminated name of tensor `index` into `buf`; `written`
/// reports the name length without the terminator.
#[no_mangle]
pub extern "C" fn fqz_container_tensor_name(
    container: *const FqzContainer,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(container);
        nonnull!(buf);
        nonnull!(written);
        let entries = &unsafe { &*container }.0.entries;
        let Some(entry) = entries.get(index) else {
            return fail(
                FqzStatus::InvalidArgument,
                format!("index {index} out of range for {} tensors", entries.len()),
            );
        };
        let bytes = entry.name.as_bytes();
        if cap < bytes.len() + 1 {
            return fail(
                FqzStatus::InvalidArgument,
                format!("buffer holds {cap} octets, need {}", bytes.len() + 1),
            );
        }
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
            *buf.add(bytes.len()) = 0;
            *written = bytes.len();
        }
        FqzStatus::Ok
    })
}

/// Appends a float tensor (shape `[len]`) to the container.
#[no_mangle]
pub extern "C" fn fqz_container_push_floats(
    container: *mut FqzContainer,
    name: *const c_char,
    values: *const f64,
    len: usize,
) -> FqzStatus {
    guarded(|| {
        nonnull!(container);
        nonnull!(name);
        nonnull!(values);
        let name = match path_from(name) {
            Ok(n) => n,
            Err(status) => return status,
        };
        let values = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let tensor = match Tensor::new(name, vec![len], values) {
            Ok(t) => t,
            Err(e) => return fail(FqzStatus::InvalidArgument, e),
        };
        let entry = match Entry::from_float(&tensor) {
            Ok(e) => e,
            Err(e) => return fail(container_status(&e), e),
        };
        match unsafe { &mut *container }.0.push(entry) {
            Ok(()) => FqzStatus::Ok,
            Err(e) => fail(container_status(&e), e),
        }
    })
}

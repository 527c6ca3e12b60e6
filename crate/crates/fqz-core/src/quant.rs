//! Uniform affine quantization and fibbinary codeword quantization (FCQ).
//!
//! Codes are unsigned.  For a tensor with calibration range `[min, max]`:
//!
//! ```text
//! scale      = (max - min) / (2^bits - 1)
//! zero_point = clamp(round(-min / scale), 0, 2^bits - 1)
//! code(x)    = clamp(round(x / scale) + zero_point, 0, 2^bits - 1)
//! x_hat      = (code - zero_point) * scale
//! ```
//!
//! with round-half-away-from-zero rounding (`f64::round`).  FCQ then snaps
//! every 8-bit code to the nearest fibbinary value, which is what feeds the
//! codec and the OR-gate multiplier model.

use std::sync::OnceLock;

use thiserror::Error;

use crate::fibbinary::FibbinaryTable;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantError {
    #[error("tensor {0:?} is empty")]
    EmptyTensor(String),
    #[error("tensor {name:?} has a non-finite value at flat index {index}")]
    NonFinite { name: String, index: usize },
    #[error("length mismatch: {0} vs {1} elements")]
    LengthMismatch(usize, usize),
    #[error("FCQ requires 8-bit codes, tensor {0:?} is 16-bit")]
    FcqNeedsEightBits(String),
}

/// Code width of a quantized tensor.  Only the two widths used by the
/// pipeline are representable, so invalid widths cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bitwidth {
    B8,
    B16,
}

impl Bitwidth {
    pub fn bits(self) -> u32 {
        match self {
            Bitwidth::B8 => 8,
            Bitwidth::B16 => 16,
        }
    }

    /// Largest representable code, `2^bits - 1`.
    pub fn max_code(self) -> u32 {
        (1u32 << self.bits()) - 1
    }
}

/// Quantization scheme tag carried by a quantized tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Uniform,
    Fcq,
}

/// Affine mapping between real values and integer codes.
///
/// `min` is the calibration minimum.  It is redundant for regular tensors
/// (`-zero_point * scale` approximates it) but it is the only way to recover
/// a constant tensor, which quantizes to all-zero codes with `scale = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    pub scale: f64,
    pub zero_point: u32,
    pub bitwidth: Bitwidth,
    pub min: f64,
}

/// A quantized tensor: integer codes plus the affine parameters needed to
/// dequantize them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub codes: Vec<u32>,
    pub params: AffineParams,
    pub scheme: Scheme,
}

impl QuantizedTensor {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Min/max-calibrated uniform quantization.
///
/// Constant tensors (max == min) degenerate to `scale = 1`, `zero_point = 0`
/// and all-zero codes; dequantization then returns zeros and the stored
/// `min` is the only record of the constant value.
pub fn quantize_uniform(tensor: &Tensor, bitwidth: Bitwidth) -> Result<QuantizedTensor, QuantError> {
    if tensor.values.is_empty() {
        return Err(QuantError::EmptyTensor(tensor.name.clone()));
    }
    if let Some(index) = tensor.values.iter().position(|v| !v.is_finite()) {
        return Err(QuantError::NonFinite {
            name: tensor.name.clone(),
            index,
        });
    }
    let min = tensor.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = tensor.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_code = bitwidth.max_code();

    let (scale, zero_point, codes) = if max == min {
        (1.0, 0u32, vec![0u32; tensor.values.len()])
    } else {
        let scale = (max - min) / max_code as f64;
        let zero_point = (-min / scale).round().clamp(0.0, max_code as f64) as u32;
        let codes = tensor
            .values
            .iter()
            .map(|&x| {
                let c = (x / scale).round() + zero_point as f64;
                c.clamp(0.0, max_code as f64) as u32
            })
            .collect();
        (scale, zero_point, codes)
    };

    Ok(QuantizedTensor {
        name: tensor.name.clone(),
        shape: tensor.shape.clone(),
        codes,
        params: AffineParams {
            scale,
            zero_point,
            bitwidth,
            min,
        },
        scheme: Scheme::Uniform,
    })
}

/// Inverse affine map, `x_hat = (code - zero_point) * scale`.
pub fn dequantize(q: &QuantizedTensor) -> Tensor {
    let zp = q.params.zero_point as f64;
    let values = q
        .codes
        .iter()
        .map(|&c| (c as f64 - zp) * q.params.scale)
        .collect();
    Tensor {
        name: q.name.clone(),
        shape: q.shape.clone(),
        values,
    }
}

fn table8() -> &'static FibbinaryTable {
    static TABLE: OnceLock<FibbinaryTable> = OnceLock::new();
    TABLE.get_or_init(|| FibbinaryTable::new(8).expect("8 is a valid bitwidth"))
}

/// Snaps every code of an 8-bit tensor to the nearest fibbinary value
/// (ties toward the smaller value) and retags the tensor as FCQ.
/// Idempotent: codes that are already fibbinary are left untouched.
pub fn apply_fcq(q: &QuantizedTensor) -> Result<QuantizedTensor, QuantError> {
    if q.params.bitwidth != Bitwidth::B8 {
        return Err(QuantError::FcqNeedsEightBits(q.name.clone()));
    }
    let table = table8();
    let codes = q
        .codes
        .iter()
        .map(|&c| table.nearest(c).expect("8-bit code in table domain"))
        .collect();
    Ok(QuantizedTensor {
        name: q.name.clone(),
        shape: q.shape.clone(),
        codes,
        params: q.params,
        scheme: Scheme::Fcq,
    })
}

/// Mean squared error between two equally sized value slices.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64, QuantError> {
    if a.len() != b.len() {
        return Err(QuantError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(QuantError::EmptyTensor("mse operand".into()));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

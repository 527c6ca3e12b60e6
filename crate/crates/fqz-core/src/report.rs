//! Memory accounting across storage representations.
//!
//! Summarizes a container as the octets it would occupy at a 16-bit and an
//! 8-bit code per element versus what is actually stored, with the savings
//! expressed as `1 - stored_bits / reference_bits`.  Stream payloads count
//! their full wire size (symbol pair and codeword count included), so the
//! numbers reflect real storage, not just codeword counts.

use std::fmt;

use crate::container::{Container, Dtype, Payload};
use crate::codec::STREAM_HEADER_OCTETS;

/// Per-tensor storage line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInventory {
    pub name: String,
    pub dtype: Dtype,
    pub elements: u64,
    /// Wire payload size in octets.
    pub stored_octets: u64,
}

/// Container-wide storage summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    /// Sorted by tensor name.
    pub inventory: Vec<TensorInventory>,
    pub total_elements: u64,
    pub total_16bit_octets: u64,
    pub total_8bit_octets: u64,
    pub total_stored_octets: u64,
    pub saving_vs_16b: f64,
    pub saving_vs_8b: f64,
}

fn payload_octets(payload: &Payload, elements: u64) -> u64 {
    match payload {
        Payload::F32(_) => elements * 4,
        Payload::U8(_) => elements,
        Payload::U16(_) => elements * 2,
        Payload::Ranks6(_) => (elements * 6).div_ceil(8),
        Payload::Stream(s) => STREAM_HEADER_OCTETS as u64 + s.codewords.len() as u64,
    }
}

impl MemoryReport {
    pub fn from_container(container: &Container) -> Self {
        let mut inventory: Vec<TensorInventory> = container
            .entries
            .iter()
            .map(|e| {
                let elements = e.element_count().expect("validated entry");
                TensorInventory {
                    name: e.name.clone(),
                    dtype: e.dtype(),
                    elements,
                    stored_octets: payload_octets(&e.payload, elements),
                }
            })
            .collect();
        inventory.sort_by(|a, b| a.name.cmp(&b.name));

        let total_elements: u64 = inventory.iter().map(|i| i.elements).sum();
        let total_stored_octets: u64 = inventory.iter().map(|i| i.stored_octets).sum();
        let total_16bit_octets = total_elements * 2;
        let total_8bit_octets = total_elements;
        let saving = |reference_octets: u64| {
            if reference_octets == 0 {
                0.0
            } else {
                1.0 - total_stored_octets as f64 / reference_octets as f64
            }
        };
        Self {
            saving_vs_16b: saving(total_16bit_octets),
            saving_vs_8b: saving(total_8bit_octets),
            inventory,
            total_elements,
            total_16bit_octets,
            total_8bit_octets,
            total_stored_octets,
        }
    }
}

impl fmt::Display for MemoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.inventory {
            writeln!(
                f,
                "tensor={} dtype={} elements={} stored_octets={}",
                line.name, line.dtype, line.elements, line.stored_octets
            )?;
        }
        writeln!(f, "total_elements={}", self.total_elements)?;
        writeln!(f, "total_16bit_octets={}", self.total_16bit_octets)?;
        writeln!(f, "total_8bit_octets={}", self.total_8bit_octets)?;
        writeln!(f, "total_stored_octets={}", self.total_stored_octets)?;
        writeln!(f, "saving_vs_16b_pct={:.2}", 100.0 * self.saving_vs_16b)?;
        write!(f, "saving_vs_8b_pct={:.2}", 100.0 * self.saving_vs_8b)
    }
}

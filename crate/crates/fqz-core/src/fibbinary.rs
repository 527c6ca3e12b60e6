//! Fibbinary numbers and the Zeckendorf rank/value bijection.
//!
//! A *fibbinary* number is a non-negative integer whose binary expansion
//! contains no two adjacent 1 bits.  Every non-negative integer `n` has a
//! unique Zeckendorf expansion `n = F(k_1) + ... + F(k_m)` into
//! non-consecutive Fibonacci numbers (`k_i >= 2`, `k_{i+1} <= k_i - 2`,
//! with `F(1) = F(2) = 1`), and the map
//!
//! ```text
//! n  ->  sum over i of 2^(k_i - 2)
//! ```
//!
//! sends the rank `n` to the `n`-th fibbinary number in ascending order.
//! That bijection is what makes fibbinary codes compressible: the 55
//! fibbinary values expressible in 8 bits are addressed by ranks 0..=54,
//! which fit in 6 bits.

use thiserror::Error;

/// Widest code table supported; wide enough for 16-bit quantization codes.
pub const MAX_BITWIDTH: u32 = 16;

/// Fibonacci numbers `F(1)..=F(93)` with `F(1) = F(2) = 1`.  `F(93)` is the
/// largest Fibonacci number that fits in a `u64`.
const FIB: [u64; 93] = {
    let mut t = [0u64; 93];
    t[0] = 1;
    t[1] = 1;
    let mut i = 2;
    while i < 93 {
        t[i] = t[i - 1] + t[i - 2];
        i += 1;
    }
    t
};

/// `F(k)` for `k` in `1..=93`, with `F(1) = F(2) = 1`.
///
/// # Panics
/// Panics when `k` is outside `1..=93`; larger indices overflow `u64`.
pub fn fibonacci(k: u32) -> u64 {
    assert!((1..=93).contains(&k), "fibonacci index {k} outside 1..=93");
    FIB[(k - 1) as usize]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FibError {
    #[error("bitwidth {0} outside supported range 1..={MAX_BITWIDTH}")]
    BitwidthOutOfRange(u32),
    #[error("code {code} does not fit in {bitwidth} bits")]
    CodeOutOfRange { code: u32, bitwidth: u32 },
    #[error("rank {rank} outside table of {len} entries")]
    RankOutOfRange { rank: usize, len: usize },
    #[error("code {0} has adjacent 1 bits (not fibbinary)")]
    NotFibbinary(u32),
}

/// Tests whether `code` is fibbinary, i.e. `code & (code >> 1) == 0`.
///
/// Errors when `code` does not fit in `bitwidth` bits so that callers cannot
/// silently test codes outside the table domain they are working in.
pub fn is_fibbinary(code: u32, bitwidth: u32) -> Result<bool, FibError> {
    check_bitwidth(bitwidth)?;
    check_code(code, bitwidth)?;
    Ok(code & (code >> 1) == 0)
}

fn check_bitwidth(bitwidth: u32) -> Result<(), FibError> {
    if (1..=MAX_BITWIDTH).contains(&bitwidth) {
        Ok(())
    } else {
        Err(FibError::BitwidthOutOfRange(bitwidth))
    }
}

fn check_code(code: u32, bitwidth: u32) -> Result<(), FibError> {
    if (code as u64) < (1u64 << bitwidth) {
        Ok(())
    } else {
        Err(FibError::CodeOutOfRange { code, bitwidth })
    }
}

/// Zeckendorf expansion of a non-negative integer: the unique decomposition
/// into non-consecutive Fibonacci numbers `F(k)` with `k >= 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeckendorfExpansion {
    value: u64,
    /// Fibonacci indices `k_i`, strictly descending, each `>= 2`, no two
    /// consecutive.  Empty exactly when `value == 0`.
    indices: Vec<u32>,
}

impl ZeckendorfExpansion {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }
}

/// Greedy Zeckendorf decomposition.  Greedily taking the largest Fibonacci
/// number `<= n` always leaves a remainder smaller than the next Fibonacci
/// number down, which is what forbids consecutive indices.
pub fn zeckendorf(n: u64) -> ZeckendorfExpansion {
    let mut indices = Vec::new();
    let mut rest = n;
    // Highest index first; k >= 2 keeps the representation unique (F(1) and
    // F(2) are both 1; only F(2) is used).
    let mut k = 93u32;
    while rest > 0 {
        while fibonacci(k) > rest {
            k -= 1;
        }
        indices.push(k);
        rest -= fibonacci(k);
        // Next usable index is at most k - 2; stepping once here and once in
        // the inner loop is enough because fib(k-1) > rest already holds.
        if k > 2 {
            k -= 1;
        }
    }
    debug_assert!(indices.iter().all(|&k| k >= 2));
    debug_assert!(indices.windows(2).all(|w| w[0] > w[1] + 1));
    ZeckendorfExpansion { value: n, indices }
}

/// Ascending enumeration of every fibbinary value expressible in a given
/// number of bits, plus the rank/value bijection derived from Zeckendorf
/// expansions.  Build once per bitwidth; lookups dominate afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibbinaryTable {
    bitwidth: u32,
    values: Vec<u32>,
}

impl FibbinaryTable {
    /// Enumerates all fibbinary values below `2^bitwidth` in ascending order.
    /// The census is always `F(bitwidth + 2)` entries (55 for 8 bits).
    pub fn new(bitwidth: u32) -> Result<Self, FibError> {
        check_bitwidth(bitwidth)?;
        let values: Vec<u32> = (0..1u64 << bitwidth)
            .map(|v| v as u32)
            .filter(|v| v & (v >> 1) == 0)
            .collect();
        debug_assert_eq!(values.len() as u64, fibonacci(bitwidth + 2));
        Ok(Self { bitwidth, values })
    }

    pub fn bitwidth(&self) -> u32 {
        self.bitwidth
    }

    /// Number of table entries, `F(bitwidth + 2)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // every table contains at least 0 and 1
    }

    /// All fibbinary values for this bitwidth, ascending.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Largest fibbinary value for this bitwidth (170 for 8 bits).
    pub fn max_value(&self) -> u32 {
        *self.values.last().expect("table is never empty")
    }

    /// Rank -> value through the Zeckendorf expansion of the rank:
    /// `rank = sum F(k_i)` maps to `sum 2^(k_i - 2)`.
    ///
    /// Equals `self.values()[rank]`; the enumeration and the algebraic route
    /// are cross-checked in the test suite rather than collapsed into one.
    pub fn index_to_value(&self, rank: usize) -> Result<u32, FibError> {
        if rank >= self.values.len() {
            return Err(FibError::RankOutOfRange {
                rank,
                len: self.values.len(),
            });
        }
        let mut value: u32 = 0;
        for &k in zeckendorf(rank as u64).indices() {
            value |= 1 << (k - 2);
        }
        Ok(value)
    }

    /// Value -> rank, the inverse of [`index_to_value`]: each set bit `j` of
    /// a fibbinary code contributes `F(j + 2)` to the rank.
    ///
    /// [`index_to_value`]: FibbinaryTable::index_to_value
    pub fn value_to_index(&self, code: u32) -> Result<usize, FibError> {
        check_code(code, self.bitwidth)?;
        if code & (code >> 1) != 0 {
            return Err(FibError::NotFibbinary(code));
        }
        let mut rank: u64 = 0;
        for j in 0..self.bitwidth {
            if code & (1 << j) != 0 {
                rank += fibonacci(j + 2);
            }
        }
        Ok(rank as usize)
    }

    /// Rank lookup by binary search over the ascending enumeration.  Used as
    /// an independent route to [`value_to_index`] in tests.
    ///
    /// [`value_to_index`]: FibbinaryTable::value_to_index
    pub fn index_of(&self, code: u32) -> Result<usize, FibError> {
        check_code(code, self.bitwidth)?;
        self.values
            .binary_search(&code)
            .map_err(|_| FibError::NotFibbinary(code))
    }

    /// Nearest fibbinary value to `code`, ties resolved toward the smaller
    /// value so that rounding is deterministic.
    pub fn nearest(&self, code: u32) -> Result<u32, FibError> {
        check_code(code, self.bitwidth)?;
        let i = self.values.partition_point(|&v| v < code);
        if i == self.values.len() {
            return Ok(self.max_value());
        }
        if self.values[i] == code || i == 0 {
            return Ok(self.values[i]);
        }
        let above = self.values[i];
        let below = self.values[i - 1];
        // Strict inequality keeps the tie on the smaller value.
        if above - code < code - below {
            Ok(above)
        } else {
            Ok(below)
        }
    }
}

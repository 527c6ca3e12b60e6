//! Gate-level cost model for an OR-simplified carry-save array multiplier.
//!
//! The model is the textbook unsigned n x n array multiplier: partial
//! products `pp[i][j] = bit_i(w) AND bit_j(x)` feed a half-adder row that
//! merges the first two partial-product rows, then `n - 2` carry-save rows
//! of `n` full-adder (FA) cells each, then an exact carry-propagate stage
//! for the leftover sum/carry vectors.  Only the `(n - 2) * n` FA positions
//! participate in the cost model; the half adders and the final stage are
//! wiring.
//!
//! When the `w` operand is fibbinary, adjacent partial-product rows are
//! never simultaneously non-zero, so some FA cells never see two of their
//! three inputs high at once.  Such a cell can be replaced by an OR gate
//! (`sum = a | b | c`, `carry = 0`) without changing any reachable product.
//! [`discover_replaceable`] finds those cells by exhaustive simulation
//! rather than by a hard-coded pattern, and [`cost_report`] turns a
//! replacement count into area/power savings (an OR cell costs a quarter
//! of an FA's area and 23 % of its power).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::fibbinary::FibbinaryTable;

/// Area of an OR cell relative to an FA cell.
pub const OR_AREA_RATIO: f64 = 0.25;
/// Power of an OR cell relative to an FA cell.
pub const OR_POWER_RATIO: f64 = 0.23;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HwError {
    #[error("operand width {0} outside supported range 3..=16")]
    WidthOutOfRange(u32),
    #[error("cell ({row}, {col}) is not an FA position of a {n}-bit array")]
    BadCellPosition { row: u32, col: u32, n: u32 },
    #[error("operand {value} does not fit in {n} bits")]
    OperandTooWide { value: u64, n: u32 },
    #[error("table bitwidth {table} does not match array width {array}")]
    TableMismatch { table: u32, array: u32 },
    #[error("replacement count {got} exceeds the {total} FA positions")]
    TooManyReplacements { got: u32, total: u32 },
}

/// Position of an FA cell: `row` is the partial-product row the cell
/// absorbs (2..=n-1), `col` the multiplicand bit column (0..=n-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellPos {
    pub row: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Fa,
    Or,
}

/// An n-bit array multiplier whose FA grid may be partially replaced by OR
/// cells.  Construction fixes the wiring; only the cell kinds vary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplierArray {
    n: u32,
    /// Kind per FA position, indexed `(row - 2) * n + col`.
    kinds: Vec<CellKind>,
}

impl MultiplierArray {
    /// Builds the all-FA (exact) array.  Widths below 3 have no FA rows.
    pub fn build(n: u32) -> Result<Self, HwError> {
        if !(3..=16).contains(&n) {
            return Err(HwError::WidthOutOfRange(n));
        }
        Ok(Self {
            n,
            kinds: vec![CellKind::Fa; ((n - 2) * n) as usize],
        })
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    /// Total FA positions, `(n - 2) * n`.
    pub fn fa_total(&self) -> u32 {
        (self.n - 2) * self.n
    }

    pub fn kind_at(&self, pos: CellPos) -> Result<CellKind, HwError> {
        Ok(self.kinds[self.index_of(pos)?])
    }

    /// All positions currently replaced by OR cells, in row-major order.
    pub fn or_cells(&self) -> Vec<CellPos> {
        let mut out = Vec::new();
        for row in 2..self.n {
            for col in 0..self.n {
                let idx = ((row - 2) * self.n + col) as usize;
                if self.kinds[idx] == CellKind::Or {
                    out.push(CellPos { row, col });
                }
            }
        }
        out
    }

    /// Returns a copy of the array with exactly the given cells replaced by
    /// OR gates and every other position an FA.
    pub fn with_or_cells(&self, cells: &BTreeSet<CellPos>) -> Result<Self, HwError> {
        let mut kinds = vec![CellKind::Fa; self.kinds.len()];
        for &pos in cells {
            kinds[self.index_of(pos)?] = CellKind::Or;
        }
        Ok(Self { n: self.n, kinds })
    }

    fn index_of(&self, pos: CellPos) -> Result<usize, HwError> {
        if pos.row < 2 || pos.row >= self.n || pos.col >= self.n {
            return Err(HwError::BadCellPosition {
                row: pos.row,
                col: pos.col,
                n: self.n,
            });
        }
        Ok(((pos.row - 2) * self.n + pos.col) as usize)
    }

    fn check_operand(&self, value: u64) -> Result<(), HwError> {
        if value >> self.n != 0 {
            return Err(HwError::OperandTooWide { value, n: self.n });
        }
        Ok(())
    }

    /// Simulates the array on one operand pair.  Cells honour their kind,
    /// so an all-FA array returns the exact product and OR replacements
    /// return whatever the simplified netlist produces.
    pub fn multiply(&self, w: u64, x: u64) -> Result<u64, HwError> {
        self.check_operand(w)?;
        self.check_operand(x)?;
        Ok(self.eval(w, x, None))
    }

    /// Core netlist walk.  `probe`, when present, is a per-FA-position flag
    /// vector that records whether two or more of the cell's inputs were
    /// high at the same time in this evaluation.
    fn eval(&self, w: u64, x: u64, mut probe: Option<&mut [bool]>) -> u64 {
        let n = self.n as usize;
        let pp = |i: usize, j: usize| -> u8 { ((w >> i) & (x >> j) & 1) as u8 };

        // Sum/carry outputs of the previous adder row, indexed by column.
        // Row 0 is the bare first partial-product row.
        let mut s: Vec<u8> = (0..n).map(|j| pp(0, j)).collect();
        let mut c: Vec<u8> = vec![0; n];
        let mut product: u64 = (s[0] as u64) & 1;

        for i in 1..n {
            let mut s_next = vec![0u8; n];
            let mut c_next = vec![0u8; n];
            for j in 0..n {
                let a = pp(i, j);
                // Column j of row i sits at weight i + j.  The previous row
                // offers its sum from column j + 1 and its carry from
                // column j at that weight; the leftmost column receives the
                // previous row's top carry instead.
                let (b, cin) = if j + 1 < n { (s[j + 1], c[j]) } else { (c[n - 1], 0) };
                let kind = if i >= 2 {
                    let idx = (i - 2) * n + j;
                    if let Some(flags) = probe.as_deref_mut() {
                        if a + b + cin >= 2 {
                            flags[idx] = true;
                        }
                    }
                    self.kinds[idx]
                } else {
                    CellKind::Fa // half-adder row: cin is structurally 0
                };
                let (sum, carry) = match kind {
                    CellKind::Fa => (a ^ b ^ cin, (a & b) | (a & cin) | (b & cin)),
                    CellKind::Or => (a | b | cin, 0),
                };
                s_next[j] = sum;
                c_next[j] = carry;
            }
            // The rightmost sum of each row is a final product bit.
            product |= (s_next[0] as u64) << i;
            s = s_next;
            c = c_next;
        }

        // Exact carry-propagate stage over the leftover vectors.
        let mut high: u64 = 0;
        for j in 1..n {
            high += (s[j] as u64) << (n - 1 + j);
        }
        for j in 0..n {
            high += (c[j] as u64) << (n + j);
        }
        product + high
    }
}

/// Exhaustively simulates the exact array over every pair of a fibbinary
/// `w` and an arbitrary `x` and returns the FA positions whose three inputs
/// never carry two 1s at once.  Replacing all of them with OR gates leaves
/// every fibbinary-weighted product exact; replacing any cell outside the
/// set breaks at least one product (an OR cell strictly under-counts
/// whenever two inputs are high).
pub fn discover_replaceable(
    array: &MultiplierArray,
    table: &FibbinaryTable,
) -> Result<BTreeSet<CellPos>, HwError> {
    if table.bitwidth() != array.n {
        return Err(HwError::TableMismatch {
            table: table.bitwidth(),
            array: array.n,
        });
    }
    let exact = MultiplierArray::build(array.n)?;
    let mut saw_two_high = vec![false; exact.kinds.len()];
    for &w in table.values() {
        for x in 0..1u64 << array.n {
            exact.eval(w as u64, x, Some(&mut saw_two_high));
        }
    }
    let n = array.n;
    let mut out = BTreeSet::new();
    for row in 2..n {
        for col in 0..n {
            if !saw_two_high[((row - 2) * n + col) as usize] {
                out.insert(CellPos { row, col });
            }
        }
    }
    Ok(out)
}

/// Absolute-error summary of an array over every `x` for a fixed `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub max_abs: u64,
    pub mean_abs: f64,
}

/// Sweeps all `2^n` values of `x` for the given `w` and reports deviation
/// from the exact product.  Useful for quantifying what happens when a
/// non-fibbinary `w` reaches an OR-simplified array.
pub fn error_stats(array: &MultiplierArray, w: u64) -> Result<ErrorStats, HwError> {
    array.check_operand(w)?;
    let mut max_abs = 0u64;
    let mut total = 0u128;
    let count = 1u64 << array.n;
    for x in 0..count {
        let got = array.eval(w, x, None);
        let err = got.abs_diff(w * x);
        max_abs = max_abs.max(err);
        total += err as u128;
    }
    Ok(ErrorStats {
        max_abs,
        mean_abs: total as f64 / count as f64,
    })
}

/// Area/power model for replacing `fa_replaced` of the `(n - 2) * n` FA
/// cells with OR gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub n: u32,
    pub fa_total: u32,
    pub fa_replaced: u32,
    /// `fa_replaced / fa_total`.
    pub replaced_fraction: f64,
    /// Fractional area saved: `replaced_fraction * (1 - OR_AREA_RATIO)`.
    pub area_saving: f64,
    /// Fractional power saved: `replaced_fraction * (1 - OR_POWER_RATIO)`.
    pub power_saving: f64,
}

impl CostReport {
    pub fn replaced_pct(&self) -> u32 {
        (self.replaced_fraction * 100.0).round() as u32
    }

    pub fn area_saving_pct(&self) -> u32 {
        (self.area_saving * 100.0).round() as u32
    }

    pub fn power_saving_pct(&self) -> u32 {
        (self.power_saving * 100.0).round() as u32
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "fa_total={}", self.fa_total)?;
        writeln!(f, "fa_replaced={}", self.fa_replaced)?;
        writeln!(f, "replaced_fraction={:.6}", self.replaced_fraction)?;
        writeln!(f, "area_saving={:.6}", self.area_saving)?;
        writeln!(f, "power_saving={:.6}", self.power_saving)?;
        writeln!(f, "replaced_pct={}", self.replaced_pct())?;
        writeln!(f, "area_saving_pct={}", self.area_saving_pct())?;
        write!(f, "power_saving_pct={}", self.power_saving_pct())
    }
}

/// Builds the cost report for an `n`-bit array with `fa_replaced` OR cells.
pub fn cost_report(n: u32, fa_replaced: u32) -> Result<CostReport, HwError> {
    if !(3..=16).contains(&n) {
        return Err(HwError::WidthOutOfRange(n));
    }
    let fa_total = (n - 2) * n;
    if fa_replaced > fa_total {
        return Err(HwError::TooManyReplacements {
            got: fa_replaced,
            total: fa_total,
        });
    }
    let replaced_fraction = fa_replaced as f64 / fa_total as f64;
    Ok(CostReport {
        n,
        fa_total,
        fa_replaced,
        replaced_fraction,
        area_saving: replaced_fraction * (1.0 - OR_AREA_RATIO),
        power_saving: replaced_fraction * (1.0 - OR_POWER_RATIO),
    })
}

/// Replacement count quoted for fibbinary-operand arrays, `(n^2 - n) / 2`.
pub fn quoted_replacement_count(n: u32) -> u32 {
    (n * n - n) / 2
}

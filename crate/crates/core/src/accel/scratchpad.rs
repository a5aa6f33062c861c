/// Banked scratchpad of `array_dim`-element rows.
///
/// Tracks which rows have been written since the last reset so that
/// reading an operand that was never moved in is an error, not silent zeros.
#[derive(Clone, Debug)]
pub struct Scratchpad {
    row_len: usize,
    rows_per_bank: usize,
    banks: Vec<Vec<i8>>,
    valid: Vec<bool>,
}

impl Scratchpad {
    pub fn new(row_len: usize, rows_per_bank: usize, banks: usize) -> Self {
        Self {
            row_len,
            rows_per_bank,
            banks: vec![vec![0; rows_per_bank * row_len]; banks],
            valid: vec![false; rows_per_bank * banks],
        }
    }

    pub fn rows(&self) -> usize {
        self.valid.len()
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    /// `(bank, row within bank)` for a flat row index.
    pub fn locate(&self, row: usize) -> (usize, usize) {
        (row / self.rows_per_bank, row % self.rows_per_bank)
    }

    pub fn row(&self, row: usize) -> &[i8] {
        let (b, r) = self.locate(row);
        &self.banks[b][r * self.row_len..(r + 1) * self.row_len]
    }

    /// Writes `vals` at the start of `row` and zero-fills the remainder.
    pub fn write_row(&mut self, row: usize, vals: &[i8]) {
        let (b, r) = self.locate(row);
        let dst = &mut self.banks[b][r * self.row_len..(r + 1) * self.row_len];
        dst[..vals.len()].copy_from_slice(vals);
        dst[vals.len()..].fill(0);
        self.valid[row] = true;
    }

    pub fn is_resident(&self, row: usize) -> bool {
        self.valid[row]
    }

    pub fn clear(&mut self) {
        for b in &mut self.banks {
            b.fill(0);
        }
        self.valid.fill(false);
    }

    pub fn total_bytes(&self) -> usize {
        self.banks.iter().map(Vec::len).sum()
    }
}

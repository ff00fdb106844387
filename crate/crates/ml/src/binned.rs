//! Column-binned view of a feature matrix used by the tree grower.
//!
//! Every feature's distinct training values become ordered bins. The most
//! frequent bin of a feature is its default; only non-default cells are
//! stored row-wise, so one-hot matrices cost one entry per attribute.

use crate::encoding::LabeledMatrix;

#[derive(Debug, Clone)]
pub(crate) struct Binned {
    n_rows: usize,
    /// Sorted distinct values per feature.
    values: Vec<Vec<f64>>,
    default_bin: Vec<u32>,
    /// Start of each feature's bins in a flat histogram.
    offsets: Vec<usize>,
    row_ptr: Vec<usize>,
    /// `(feature, bin)` for every non-default cell, row-major.
    entries: Vec<(u32, u32)>,
    /// Feature-major bin of every cell.
    bins: Vec<u32>,
}

impl Binned {
    pub fn new(m: &LabeledMatrix) -> Self {
        let (n, cols) = (m.rows(), m.cols());
        let mut values = Vec::with_capacity(cols);
        let mut default_bin = Vec::with_capacity(cols);
        let mut offsets = Vec::with_capacity(cols + 1);
        let mut bins = vec![0u32; n * cols];
        let mut total = 0;
        for f in 0..cols {
            let mut distinct: Vec<f64> = (0..n).map(|i| m.value(i, f)).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let mut counts = vec![0usize; distinct.len()];
            for i in 0..n {
                let v = m.value(i, f);
                let b = distinct.partition_point(|x| x.total_cmp(&v).is_lt());
                bins[f * n + i] = b as u32;
                counts[b] += 1;
            }
            // First maximum: ties go to the smallest value.
            let mut best = 0;
            for (b, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = b;
                }
            }
            offsets.push(total);
            total += distinct.len();
            default_bin.push(best as u32);
            values.push(distinct);
        }
        offsets.push(total);

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut entries = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for f in 0..cols {
                let b = bins[f * n + i];
                if b != default_bin[f] {
                    entries.push((f as u32, b));
                }
            }
            row_ptr.push(entries.len());
        }
        Self {
            n_rows: n,
            values,
            default_bin,
            offsets,
            row_ptr,
            entries,
            bins,
        }
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn features(&self) -> usize {
        self.values.len()
    }

    pub fn total_bins(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn bin_count(&self, f: usize) -> usize {
        self.values[f].len()
    }

    pub fn offset(&self, f: usize) -> usize {
        self.offsets[f]
    }

    pub fn default_bin(&self, f: usize) -> u32 {
        self.default_bin[f]
    }

    pub fn bin(&self, row: usize, f: usize) -> u32 {
        self.bins[f * self.n_rows + row]
    }

    pub fn sparse_row(&self, row: usize) -> &[(u32, u32)] {
        &self.entries[self.row_ptr[row]..self.row_ptr[row + 1]]
    }

    /// Midpoint between the values of bins `lo < hi`, nudged down to the
    /// lower value when the midpoint rounds onto the upper one.
    pub fn threshold(&self, f: usize, lo: u32, hi: u32) -> f64 {
        let (a, b) = (self.values[f][lo as usize], self.values[f][hi as usize]);
        let mid = a / 2.0 + b / 2.0;
        if mid >= b || mid.is_infinite() {
            a
        } else {
            mid
        }
    }
}

use std::ops::Range;

use super::LinalgError;

/// A partition of the coordinates `{0, .., d-1}` into `m` contiguous,
/// disjoint blocks. Block `i` covers `offsets[i]..offsets[i+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    /// Builds a partition from per-block sizes. Every size must be positive
    /// and there must be at least one block.
    pub fn new(sizes: Vec<usize>) -> Result<Self, LinalgError> {
        if sizes.is_empty() {
            return Err(LinalgError::InvalidPartition("no blocks".into()));
        }
        if sizes.contains(&0) {
            return Err(LinalgError::InvalidPartition("zero-sized block".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &s in &sizes {
            acc = acc
                .checked_add(s)
                .ok_or_else(|| LinalgError::InvalidPartition("dimension overflow".into()))?;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// One block per coordinate.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![1; dim.max(1)]).expect("unit partition is valid")
    }

    /// A single block covering all coordinates.
    pub fn single(dim: usize) -> Self {
        Self::new(vec![dim.max(1)]).expect("single-block partition is valid")
    }

    /// `m` blocks of equal size `dim / m` (requires `m` to divide `dim`).
    pub fn uniform(dim: usize, num_blocks: usize) -> Result<Self, LinalgError> {
        if num_blocks == 0 || !dim.is_multiple_of(num_blocks) {
            return Err(LinalgError::InvalidPartition(format!(
                "{num_blocks} blocks do not evenly divide dimension {dim}"
            )));
        }
        Self::new(vec![dim / num_blocks; num_blocks])
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    /// Coordinate range covered by `block`.
    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// First coordinate of `block`.
    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    /// Index of the block containing coordinate `coord`.
    pub fn block_of(&self, coord: usize) -> usize {
        debug_assert!(coord < self.dim());
        match self.offsets.binary_search(&coord) {
            Ok(i) if i < self.sizes.len() => i,
            Ok(i) => i - 1,
            Err(i) => i - 1,
        }
    }

    pub fn largest_block(&self) -> usize {
        *self.sizes.iter().max().unwrap()
    }
}

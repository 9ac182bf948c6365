//! Row-block split of `Aᵀ`, column-block split of `B`, and reassembly of
//! the `mn` block products.
//!
//! All block indices exposed here are 1-based; flat index `j` maps to the
//! pair `(⌈j/n⌉, ((j−1) mod n) + 1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kr_column, kr_factor_columns, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("{dimension} = {value} is not divisible by {parts}")]
    NotDivisible {
        dimension: &'static str,
        value: usize,
        parts: usize,
    },
    #[error("inner dimensions differ: Aᵀ has {a_cols} columns, B has {b_rows} rows")]
    InnerMismatch { a_cols: usize, b_rows: usize },
    #[error("block counts must be positive (m = {m}, n = {n})")]
    ZeroBlocks { m: usize, n: usize },
    #[error("flat block index {index} outside [1, {max}]")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("block {index} has shape {got:?}, expected {expected:?}")]
    BlockShape {
        index: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("expected {expected} blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
}

/// Geometry of the split: `Aᵀ` is `n1 x n2` in `m` row blocks, `B` is
/// `n2 x n3` in `n` column blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub m: usize,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl BlockPartition {
    pub fn new(m: usize, n: usize, n1: usize, n2: usize, n3: usize) -> Result<Self, PartitionError> {
        if m == 0 || n == 0 {
            return Err(PartitionError::ZeroBlocks { m, n });
        }
        if !n1.is_multiple_of(m) {
            return Err(PartitionError::NotDivisible {
                dimension: "rows of Aᵀ",
                value: n1,
                parts: m,
            });
        }
        if !n3.is_multiple_of(n) {
            return Err(PartitionError::NotDivisible {
                dimension: "columns of B",
                value: n3,
                parts: n,
            });
        }
        Ok(Self { m, n, n1, n2, n3 })
    }

    /// Number of block products, `K = m·n`.
    pub fn k(&self) -> usize {
        self.m * self.n
    }

    /// Shape of every block product `A_{j'}ᵀ B_{j''}`.
    pub fn block_shape(&self) -> (usize, usize) {
        (self.n1 / self.m, self.n3 / self.n)
    }

    /// Scalar entries per block product, `N1·N3/(mn)`.
    pub fn entries_per_block(&self) -> usize {
        let (r, c) = self.block_shape();
        r * c
    }

    pub fn flat_index(&self, j: usize) -> Result<BlockIndex, PartitionError> {
        flat_index(j, self.m, self.n)
    }
}

/// A block product's position: flat index `j ∈ [1, mn]` and its
/// `(row_block, col_block) ∈ [1, m] x [1, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockIndex {
    pub flat: usize,
    pub row_block: usize,
    pub col_block: usize,
}

impl BlockIndex {
    /// Flat index of the 1-based `(row_block, col_block)` pair.
    pub fn from_pair(row_block: usize, col_block: usize, n: usize) -> Self {
        Self {
            flat: kr_column(row_block, col_block, n),
            row_block,
            col_block,
        }
    }
}

pub fn flat_index(j: usize, m: usize, n: usize) -> Result<BlockIndex, PartitionError> {
    if j == 0 || j > m * n {
        return Err(PartitionError::IndexOutOfRange {
            index: j,
            max: m * n,
        });
    }
    let (row_block, col_block) = kr_factor_columns(j, n);
    Ok(BlockIndex {
        flat: j,
        row_block,
        col_block,
    })
}

/// Split into materialized blocks: `m` row blocks of `a_t` and `n` column
/// blocks of `b`.
pub fn split(
    a_t: &DenseMatrix,
    b: &DenseMatrix,
    m: usize,
    n: usize,
) -> Result<(Vec<DenseMatrix>, Vec<DenseMatrix>, BlockPartition), PartitionError> {
    if a_t.cols() != b.rows() {
        return Err(PartitionError::InnerMismatch {
            a_cols: a_t.cols(),
            b_rows: b.rows(),
        });
    }
    let part = BlockPartition::new(m, n, a_t.rows(), a_t.cols(), b.cols())?;
    let (br, bc) = part.block_shape();
    let a_blocks = (0..m).map(|j| a_t.block(j * br, 0, br, part.n2)).collect();
    let b_blocks = (0..n).map(|l| b.block(0, l * bc, part.n2, bc)).collect();
    Ok((a_blocks, b_blocks, part))
}

/// Places `blocks[j−1]` at block-row `⌈j/n⌉`, block-column `((j−1) mod n)+1`.
pub fn assemble(blocks: &[DenseMatrix], part: &BlockPartition) -> Result<DenseMatrix, PartitionError> {
    if blocks.len() != part.k() {
        return Err(PartitionError::BlockCount {
            expected: part.k(),
            got: blocks.len(),
        });
    }
    let shape = part.block_shape();
    let mut out = DenseMatrix::zeros(part.n1, part.n3);
    for (idx, block) in blocks.iter().enumerate() {
        if block.shape() != shape {
            return Err(PartitionError::BlockShape {
                index: idx + 1,
                got: block.shape(),
                expected: shape,
            });
        }
        let pos = part.flat_index(idx + 1)?;
        out.write_block((pos.row_block - 1) * shape.0, (pos.col_block - 1) * shape.1, block);
    }
    Ok(out)
}

/// Zero-pads `a_t` rows up to a multiple of `m` and `b` columns up to a
/// multiple of `n`. Returns the padded pair plus the original `(n1, n3)` to
/// truncate the assembled product back to.
pub fn pad_to_multiple(
    a_t: &DenseMatrix,
    b: &DenseMatrix,
    m: usize,
    n: usize,
) -> Result<(DenseMatrix, DenseMatrix, (usize, usize)), PartitionError> {
    if m == 0 || n == 0 {
        return Err(PartitionError::ZeroBlocks { m, n });
    }
    let rows = a_t.rows().div_ceil(m) * m;
    let cols = b.cols().div_ceil(n) * n;
    let a_pad = DenseMatrix::from_fn(rows, a_t.cols(), |r, c| {
        if r < a_t.rows() { a_t.get(r, c) } else { 0.0 }
    });
    let b_pad = DenseMatrix::from_fn(b.rows(), cols, |r, c| {
        if c < b.cols() { b.get(r, c) } else { 0.0 }
    });
    Ok((a_pad, b_pad, (a_t.rows(), b.cols())))
}

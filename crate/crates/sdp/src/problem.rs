//! Problem data for a semidefinite program in equality form.
//!
//! ```text
//! minimize    c_freeᵀ x  +  Σ_j ⟨C_j, X_j⟩
//! subject to  Σ_k a_ik x_k + Σ_j ⟨A_ij, X_j⟩ = b_i      i = 1..m
//!             X_j ⪰ 0,  x free
//! ```
//!
//! Symmetric matrices are stored as upper-triangular triplets. An entry
//! `(r, c, v)` with `r != c` stands for the pair `M[r][c] = M[c][r] = v`, so
//! its contribution to `⟨M, X⟩` is `2 v X[r][c]`. This is the same convention
//! as the SDPA sparse format.

use crate::SdpError;

/// One stored entry of a symmetric block matrix (`row <= col`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl BlockEntry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Self { block, row, col, value }
    }
}

/// A single linear equality row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraint {
    pub free: Vec<(usize, f64)>,
    pub entries: Vec<BlockEntry>,
    pub rhs: f64,
}

impl Constraint {
    /// Merge duplicate coordinates and drop exact zeros.
    pub fn normalize(&mut self) {
        self.free.sort_by_key(|&(k, _)| k);
        let mut free: Vec<(usize, f64)> = Vec::with_capacity(self.free.len());
        for &(k, v) in &self.free {
            match free.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => free.push((k, v)),
            }
        }
        free.retain(|&(_, v)| v != 0.0);
        self.free = free;
        self.entries = merge_entries(std::mem::take(&mut self.entries));
    }
}

pub(crate) fn merge_entries(mut entries: Vec<BlockEntry>) -> Vec<BlockEntry> {
    for e in entries.iter_mut() {
        *e = BlockEntry::new(e.block, e.row, e.col, e.value);
    }
    entries.sort_by_key(|e| (e.block, e.row, e.col));
    let mut out: Vec<BlockEntry> = Vec::with_capacity(entries.len());
    for e in entries {
        match out.last_mut() {
            Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => last.value += e.value,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.value != 0.0);
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub n_free: usize,
    pub c_free: Vec<f64>,
    pub c_blocks: Vec<BlockEntry>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, size: usize) -> usize {
        self.block_sizes.push(size);
        self.block_sizes.len() - 1
    }

    pub fn add_free(&mut self) -> usize {
        self.n_free += 1;
        self.c_free.push(0.0);
        self.n_free - 1
    }

    pub fn add_constraint(&mut self, mut constraint: Constraint) -> usize {
        constraint.normalize();
        self.constraints.push(constraint);
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Sum of block orders; the barrier parameter is normalized by this.
    pub fn cone_order(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Canonical ordering of all sparse data, so that two problems holding
    /// the same numbers compare equal.
    pub fn normalize(&mut self) {
        for c in &mut self.constraints {
            c.normalize();
        }
        self.c_blocks = merge_entries(std::mem::take(&mut self.c_blocks));
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.c_free.len() != self.n_free {
            return Err(SdpError::Malformed(format!(
                "objective has {} free coefficients, expected {}",
                self.c_free.len(),
                self.n_free
            )));
        }
        let check_entry = |e: &BlockEntry| -> Result<(), SdpError> {
            let size = *self
                .block_sizes
                .get(e.block)
                .ok_or_else(|| SdpError::Malformed(format!("entry refers to missing block {}", e.block)))?;
            if e.row >= size || e.col >= size {
                return Err(SdpError::Malformed(format!(
                    "entry ({}, {}) outside block {} of order {}",
                    e.row, e.col, e.block, size
                )));
            }
            if !e.value.is_finite() {
                return Err(SdpError::Malformed("non-finite matrix entry".into()));
            }
            Ok(())
        };
        for e in &self.c_blocks {
            check_entry(e)?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            for e in &c.entries {
                check_entry(e)?;
            }
            for &(k, v) in &c.free {
                if k >= self.n_free || !v.is_finite() {
                    return Err(SdpError::Malformed(format!(
                        "constraint {i} has an invalid free-variable term"
                    )));
                }
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::Malformed(format!("constraint {i} has non-finite rhs")));
            }
        }
        if self.block_sizes.contains(&0) {
            return Err(SdpError::Malformed("block of order zero".into()));
        }
        Ok(())
    }
}

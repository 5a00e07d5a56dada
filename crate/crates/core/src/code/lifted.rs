use super::base_graph::BaseGraph;
use crate::error::{Error, Result};

/// Binary parity-check matrix obtained by circulant lifting, stored as sorted
/// column indices per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedParityCheck {
    pub z: usize,
    pub m: usize,
    pub n: usize,
    pub rows: Vec<Vec<usize>>,
}

impl LiftedParityCheck {
    /// Wraps an explicit sparse matrix (`z = 1`). Column lists are sorted and deduplicated.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<usize>>) -> Result<LiftedParityCheck> {
        for (r, cols) in rows.iter_mut().enumerate() {
            cols.sort_unstable();
            cols.dedup();
            if let Some(&c) = cols.last() {
                if c >= n {
                    return Err(Error::BaseGraph(format!("row {r} has column {c} >= n = {n}")));
                }
            }
        }
        Ok(LiftedParityCheck { z: 1, m: rows.len(), n, rows })
    }

    /// Builds from a dense 0/1 matrix given row by row.
    pub fn from_dense(dense: &[Vec<u8>]) -> Result<LiftedParityCheck> {
        let n = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(_, &b)| b != 0)
                    .map(|(c, _)| c)
                    .collect()
            })
            .collect();
        LiftedParityCheck::from_rows(n, rows)
    }

    pub fn popcount(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].binary_search(&c).is_ok()
    }

    /// GF(2) product `H x` restricted to the first `active_rows` rows.
    pub fn syndrome(&self, bits: &[u8], active_rows: usize) -> Vec<u8> {
        self.rows[..active_rows]
            .iter()
            .map(|cols| cols.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
            .collect()
    }
}

/// Expands every base entry into a `z x z` circulant permutation: block row `i`
/// has its one at column `(i + shift) mod z`.
pub fn lift(bg: &BaseGraph, z: usize) -> Result<LiftedParityCheck> {
    if z == 0 {
        return Err(Error::LiftingFactor(0));
    }
    let m = bg.rows * z;
    let n = bg.cols * z;
    let mut rows = vec![Vec::new(); m];
    for e in &bg.entries {
        let s = e.shift % z;
        for i in 0..z {
            rows[e.row * z + i].push(e.col * z + (i + s) % z);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
    }
    Ok(LiftedParityCheck { z, m, n, rows })
}

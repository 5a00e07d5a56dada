//! Systematic encoder for raptor-like codes.
//!
//! The precode parity block is inverted once over GF(2); every extension row
//! then fixes its own degree-1 parity bit as the XOR of the bits it already sees.

use super::base_graph::BaseGraph;
use super::lifted::LiftedParityCheck;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    /// Length `n`; positions outside the rate's active columns are 0.
    pub bits: Vec<u8>,
    pub rate_index: usize,
}

#[derive(Clone, Debug)]
pub struct Encoder {
    info_len: usize,
    precode_len: usize,
    n: usize,
    rows: Vec<Vec<usize>>,
    /// Dense inverse of the precode parity block, one bit-row per parity bit.
    precode_inverse: Vec<Vec<u64>>,
    /// Lifted rows used by each rate, highest rate first.
    rows_per_rate: Vec<usize>,
}

fn bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

/// Gauss-Jordan inverse over GF(2); `None` if singular.
fn invert_gf2(mut a: Vec<Vec<u64>>, size: usize) -> Option<Vec<Vec<u64>>> {
    let words = size.div_ceil(64);
    let mut inv: Vec<Vec<u64>> = (0..size)
        .map(|i| {
            let mut r = vec![0u64; words];
            r[i / 64] |= 1 << (i % 64);
            r
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size).find(|&r| bit(&a[r], col))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..size {
            if r != col && bit(&a[r], col) {
                for w in 0..words {
                    let (src_a, src_i) = (a[col][w], inv[col][w]);
                    a[r][w] ^= src_a;
                    inv[r][w] ^= src_i;
                }
            }
        }
    }
    Some(inv)
}

impl Encoder {
    pub fn new(bg: &BaseGraph, h: &LiftedParityCheck) -> Result<Encoder> {
        let z = h.z;
        let info_len = bg.info_cols * z;
        let precode_len = bg.precode_rows * z;
        let words = precode_len.div_ceil(64);
        let block: Vec<Vec<u64>> = h.rows[..precode_len]
            .iter()
            .map(|cols| {
                let mut r = vec![0u64; words];
                for &c in cols {
                    if (info_len..info_len + precode_len).contains(&c) {
                        let j = c - info_len;
                        r[j / 64] |= 1 << (j % 64);
                    }
                }
                r
            })
            .collect();
        let precode_inverse = invert_gf2(block, precode_len).ok_or(Error::SingularPrecode(z))?;
        Ok(Encoder {
            info_len,
            precode_len,
            n: h.n,
            rows: h.rows.clone(),
            precode_inverse,
            rows_per_rate: bg.rate_boundaries.iter().map(|b| b.rows_used * z).collect(),
        })
    }

    pub fn info_len(&self) -> usize {
        self.info_len
    }

    pub fn encode(&self, info_bits: &[u8], rate_index: usize) -> Result<Codeword> {
        if info_bits.len() != self.info_len {
            return Err(Error::Length { expected: self.info_len, got: info_bits.len() });
        }
        let active_rows = *self.rows_per_rate.get(rate_index).ok_or(Error::RateIndex {
            index: rate_index,
            len: self.rows_per_rate.len(),
        })?;
        let mut bits = vec![0u8; self.n];
        for (b, &u) in bits.iter_mut().zip(info_bits) {
            *b = u & 1;
        }

        let words = self.precode_len.div_ceil(64);
        let mut syndrome = vec![0u64; words];
        for (j, cols) in self.rows[..self.precode_len].iter().enumerate() {
            let s = cols
                .iter()
                .take_while(|&&c| c < self.info_len)
                .fold(0u8, |acc, &c| acc ^ bits[c]);
            if s == 1 {
                syndrome[j / 64] |= 1 << (j % 64);
            }
        }
        for (j, inv_row) in self.precode_inverse.iter().enumerate() {
            let parity = inv_row
                .iter()
                .zip(&syndrome)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            bits[self.info_len + j] = parity as u8;
        }

        // Extension rows: the largest column of each row is its degree-1 bit.
        for cols in &self.rows[self.precode_len..active_rows] {
            let (&own, rest) = cols.split_last().expect("extension rows are never empty");
            bits[own] = rest.iter().fold(0u8, |acc, &c| acc ^ bits[c]);
        }
        Ok(Codeword { bits, rate_index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::lifted::lift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> (BaseGraph, LiftedParityCheck) {
        let bg = BaseGraph::parse(include_str!("../../data/toy.bg")).unwrap();
        let h = lift(&bg, 4).unwrap();
        (bg, h)
    }

    /// Dense GF(2) product of every active row, independent of the sparse path.
    fn dense_syndrome_zero(h: &LiftedParityCheck, bits: &[u8], rows: usize) -> bool {
        (0..rows).all(|r| (0..h.n).filter(|&c| h.get(r, c)).fold(0u8, |a, c| a ^ bits[c]) == 0)
    }

    #[test]
    fn all_zero_info_gives_zero_codeword() {
        let (bg, h) = toy();
        let enc = Encoder::new(&bg, &h).unwrap();
        for rate in 0..3 {
            let cw = enc.encode(&[0; 32], rate).unwrap();
            assert!(cw.bits.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn random_codewords_satisfy_active_checks() {
        let (bg, h) = toy();
        let enc = Encoder::new(&bg, &h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let info: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            for (rate, b) in bg.rate_boundaries.iter().enumerate() {
                let cw = enc.encode(&info, rate).unwrap();
                assert!(dense_syndrome_zero(&h, &cw.bits, b.rows_used * 4));
                assert_eq!(&cw.bits[..32], &info[..]);
            }
        }
    }

    #[test]
    fn high_rate_codeword_nested_in_low_rate() {
        let (bg, h) = toy();
        let enc = Encoder::new(&bg, &h).unwrap();
        let info: Vec<u8> = (0..32).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let hi = enc.encode(&info, 0).unwrap();
        let lo = enc.encode(&info, 2).unwrap();
        let hi_len = bg.rate_boundaries[0].cols_used * 4;
        assert_eq!(&hi.bits[..hi_len], &lo.bits[..hi_len]);
        assert!(hi.bits[hi_len..].iter().all(|&b| b == 0));
    }

    #[test]
    fn bg2_encodes() {
        let bg = BaseGraph::parse(include_str!("../../data/bg2_z16.bg")).unwrap();
        let h = lift(&bg, 16).unwrap();
        let enc = Encoder::new(&bg, &h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let info: Vec<u8> = (0..160).map(|_| rng.random_range(0..2)).collect();
            let cw = enc.encode(&info, 2).unwrap();
            assert!(h.syndrome(&cw.bits, h.m).iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn singular_precode_rejected() {
        // Parity column 2 is never touched by the two precode rows.
        let text = "BG 2 3 1 2\nRATES\n2 3 3\n0 0 0\n0 1 0\n1 0 1\n1 1 0\n";
        let bg = BaseGraph::parse(text).unwrap();
        let h = lift(&bg, 2).unwrap();
        assert!(matches!(Encoder::new(&bg, &h), Err(Error::SingularPrecode(2))));
    }

    #[test]
    fn wrong_info_length() {
        let (bg, h) = toy();
        let enc = Encoder::new(&bg, &h).unwrap();
        assert!(matches!(enc.encode(&[0; 3], 0), Err(Error::Length { expected: 32, got: 3 })));
    }
}

//! Nested rate configurations and the sub-graphs they activate.

use super::base_graph::BaseGraph;
use super::tanner::TannerGraph;
use crate::error::{Error, Result};

/// Fixed-size bit set over edge indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeMask {
    words: Vec<u64>,
    len: usize,
}

impl EdgeMask {
    pub fn empty(len: usize) -> EdgeMask {
        EdgeMask { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(len: usize) -> EdgeMask {
        let mut m = EdgeMask::empty(len);
        for i in 0..len {
            m.insert(i);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &EdgeMask) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateEntry {
    /// information bits / transmitted bits.
    pub rate_value: f64,
    pub active_vn_count: usize,
    pub active_cn_count: usize,
    pub active_edges: EdgeMask,
    /// VN indices sent over the channel, ascending.
    pub transmitted_positions: Vec<usize>,
    /// Active VNs that are never sent and enter the decoder with LLR 0.
    pub zero_llr_positions: Vec<usize>,
}

/// Rates ordered from highest to lowest; the last one activates every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct RateLadder {
    pub info_bits: usize,
    pub rates: Vec<RateEntry>,
}

impl RateLadder {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn get(&self, rate_index: usize) -> Result<&RateEntry> {
        self.rates.get(rate_index).ok_or(Error::RateIndex {
            index: rate_index,
            len: self.rates.len(),
        })
    }

    /// Single-rate ladder activating the whole graph with every VN transmitted.
    pub fn single(tg: &TannerGraph, info_bits: usize) -> RateLadder {
        RateLadder {
            info_bits,
            rates: vec![RateEntry {
                rate_value: info_bits as f64 / tg.n as f64,
                active_vn_count: tg.n,
                active_cn_count: tg.m,
                active_edges: EdgeMask::full(tg.edge_count()),
                transmitted_positions: (0..tg.n).collect(),
                zero_llr_positions: Vec::new(),
            }],
        }
    }
}

/// One ladder entry per rate boundary. Boundary `(r, c)` activates the edges
/// whose CN lies in the first `r*z` rows and whose VN lies in the first `c*z`
/// columns. The transmitted positions are the first `transmitted` active VNs
/// outside the punctured information columns.
pub fn derive_rate_ladder(bg: &BaseGraph, z: usize, tg: &TannerGraph) -> Result<RateLadder> {
    if bg.rate_boundaries.is_empty() {
        return Err(Error::BaseGraph("no rate boundaries".into()));
    }
    let info_bits = bg.info_cols * z;
    let punctured = bg.punctured_cols * z;
    let mut rates = Vec::with_capacity(bg.rate_boundaries.len());
    for b in &bg.rate_boundaries {
        if b.rows_used > bg.rows || b.cols_used > bg.cols {
            return Err(Error::BaseGraph(format!(
                "rate boundary ({}, {}) exceeds {}x{}",
                b.rows_used, b.cols_used, bg.rows, bg.cols
            )));
        }
        let active_cn_count = b.rows_used * z;
        let active_vn_count = b.cols_used * z;
        let mut active_edges = EdgeMask::empty(tg.edge_count());
        for (e, &(vn, cn)) in tg.edges.iter().enumerate() {
            if cn < active_cn_count && vn < active_vn_count {
                active_edges.insert(e);
            }
        }
        let sendable = active_vn_count - punctured;
        if b.transmitted > sendable {
            return Err(Error::BaseGraph(format!(
                "rate boundary ({}, {}) transmits {} bits but only {sendable} are available at Z={z}",
                b.rows_used, b.cols_used, b.transmitted
            )));
        }
        let transmitted_positions: Vec<usize> = (punctured..punctured + b.transmitted).collect();
        let zero_llr_positions = (0..punctured)
            .chain(punctured + b.transmitted..active_vn_count)
            .collect();
        rates.push(RateEntry {
            rate_value: info_bits as f64 / b.transmitted as f64,
            active_vn_count,
            active_cn_count,
            active_edges,
            transmitted_positions,
            zero_llr_positions,
        });
    }
    Ok(RateLadder { info_bits, rates })
}

/// Per-rate activated edge counts `E_i`, highest rate first.
pub fn edge_counts(ladder: &RateLadder) -> Vec<usize> {
    ladder.rates.iter().map(|r| r.active_edges.count()).collect()
}

/// Adjacency restricted to one edge mask; what the decoders iterate over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveGraph {
    pub n: usize,
    pub m: usize,
    pub edge_total: usize,
    /// `(vn, cn)` for every edge of the full graph.
    pub edges: Vec<(usize, usize)>,
    pub edge_active: Vec<bool>,
    /// Active edges per VN (empty for inactive VNs), canonical order.
    pub vn_edges: Vec<Vec<usize>>,
    /// Active edges per CN, canonical order.
    pub cn_edges: Vec<Vec<usize>>,
    pub active_vns: Vec<usize>,
    pub active_cns: Vec<usize>,
    pub active_edge_count: usize,
}

impl ActiveGraph {
    pub fn new(tg: &TannerGraph, mask: &EdgeMask, active_vns: Vec<usize>, active_cns: Vec<usize>) -> ActiveGraph {
        let edge_active: Vec<bool> = (0..tg.edge_count()).map(|e| mask.contains(e)).collect();
        let mut vn_edges = vec![Vec::new(); tg.n];
        let mut cn_edges = vec![Vec::new(); tg.m];
        for (e, &(vn, cn)) in tg.edges.iter().enumerate() {
            if edge_active[e] {
                vn_edges[vn].push(e);
                cn_edges[cn].push(e);
            }
        }
        ActiveGraph {
            n: tg.n,
            m: tg.m,
            edge_total: tg.edge_count(),
            edges: tg.edges.clone(),
            edge_active,
            vn_edges,
            cn_edges,
            active_vns,
            active_cns,
            active_edge_count: mask.count(),
        }
    }

    /// Whole graph active.
    pub fn full(tg: &TannerGraph) -> ActiveGraph {
        ActiveGraph::new(tg, &EdgeMask::full(tg.edge_count()), (0..tg.n).collect(), (0..tg.m).collect())
    }

    pub fn for_rate(tg: &TannerGraph, entry: &RateEntry) -> ActiveGraph {
        ActiveGraph::new(
            tg,
            &entry.active_edges,
            (0..entry.active_vn_count).collect(),
            (0..entry.active_cn_count).collect(),
        )
    }

    /// True iff every active check is satisfied by `bits`.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.active_cns.iter().all(|&c| {
            self.cn_edges[c]
                .iter()
                .fold(0u8, |acc, &e| acc ^ (bits[self.edges[e].0] & 1))
                == 0
        })
    }
}

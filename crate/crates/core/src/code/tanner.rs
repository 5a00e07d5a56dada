use super::lifted::LiftedParityCheck;

/// Bipartite graph of a parity-check matrix. Edges are ordered by ascending
/// `(cn, vn)`; that order indexes messages and trainable parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TannerGraph {
    pub n: usize,
    pub m: usize,
    /// `(vn, cn)` per edge.
    pub edges: Vec<(usize, usize)>,
    pub vn_adjacency: Vec<Vec<usize>>,
    pub cn_adjacency: Vec<Vec<usize>>,
    /// Check nodes with no edges.
    pub empty_checks: Vec<usize>,
}

impl TannerGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

pub fn build_tanner(h: &LiftedParityCheck) -> TannerGraph {
    let mut edges = Vec::with_capacity(h.popcount());
    let mut vn_adjacency = vec![Vec::new(); h.n];
    let mut cn_adjacency = vec![Vec::new(); h.m];
    let mut empty_checks = Vec::new();
    for (cn, cols) in h.rows.iter().enumerate() {
        if cols.is_empty() {
            empty_checks.push(cn);
        }
        for &vn in cols {
            let e = edges.len();
            edges.push((vn, cn));
            vn_adjacency[vn].push(e);
            cn_adjacency[cn].push(e);
        }
    }
    if !empty_checks.is_empty() {
        log::warn!("{} check node(s) have no edges", empty_checks.len());
    }
    TannerGraph {
        n: h.n,
        m: h.m,
        edges,
        vn_adjacency,
        cn_adjacency,
        empty_checks,
    }
}

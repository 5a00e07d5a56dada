//! Raptor-like QC-LDPC code construction: base graph, lifting, Tanner graph,
//! rate ladder and encoder.

pub mod base_graph;
pub mod encoder;
pub mod ladder;
pub mod lifted;
pub mod tanner;

use std::path::Path;

use sha2::{Digest, Sha256};

pub use base_graph::{BaseEntry, BaseGraph, RateBoundary};
pub use encoder::{Codeword, Encoder};
pub use ladder::{derive_rate_ladder, edge_counts, ActiveGraph, EdgeMask, RateEntry, RateLadder};
pub use lifted::{lift, LiftedParityCheck};
pub use tanner::{build_tanner, TannerGraph};

use crate::error::{Error, Result};

/// A lifted rate-compatible code with everything the decoders and the
/// simulator need. Immutable once built.
#[derive(Clone, Debug)]
pub struct Code {
    pub base: BaseGraph,
    pub h: LiftedParityCheck,
    pub tanner: TannerGraph,
    pub ladder: RateLadder,
    pub encoder: Encoder,
    views: Vec<ActiveGraph>,
}

impl Code {
    pub fn new(base: BaseGraph, z: usize) -> Result<Code> {
        let h = lift(&base, z)?;
        let tanner = build_tanner(&h);
        let ladder = derive_rate_ladder(&base, z, &tanner)?;
        let encoder = Encoder::new(&base, &h)?;
        let views = ladder
            .rates
            .iter()
            .map(|r| ActiveGraph::for_rate(&tanner, r))
            .collect();
        Ok(Code { base, h, tanner, ladder, encoder, views })
    }

    pub fn from_text(text: &str, z: usize) -> Result<Code> {
        Code::new(BaseGraph::parse(text)?, z)
    }

    pub fn from_file(path: impl AsRef<Path>, z: usize) -> Result<Code> {
        let text = std::fs::read_to_string(path)?;
        Code::from_text(&text, z)
    }

    /// The bundled synthetic 8x16 code.
    pub fn toy(z: usize) -> Code {
        Code::from_text(TOY_BASE_GRAPH, z).expect("bundled toy base graph is valid")
    }

    pub fn z(&self) -> usize {
        self.h.z
    }

    pub fn n(&self) -> usize {
        self.h.n
    }

    pub fn rate_count(&self) -> usize {
        self.ladder.len()
    }

    pub fn view(&self, rate_index: usize) -> Result<&ActiveGraph> {
        self.views.get(rate_index).ok_or(Error::RateIndex {
            index: rate_index,
            len: self.views.len(),
        })
    }

    pub fn encode(&self, info_bits: &[u8], rate_index: usize) -> Result<Codeword> {
        self.encoder.encode(info_bits, rate_index)
    }

    /// Base-entry index of every lifted edge, in canonical edge order.
    pub fn base_edge_map(&self) -> Vec<usize> {
        let z = self.z();
        self.tanner
            .edges
            .iter()
            .map(|&(vn, cn)| {
                self.base
                    .entry_index(cn / z, vn / z)
                    .expect("every lifted edge comes from a base entry")
            })
            .collect()
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.tanner)
    }
}

/// SHA-256 over the canonical edge list, hex encoded.
pub fn fingerprint(tg: &TannerGraph) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("N {} M {} E {}\n", tg.n, tg.m, tg.edge_count()));
    for &(vn, cn) in &tg.edges {
        hasher.update(format!("{cn} {vn}\n"));
    }
    hex::encode(hasher.finalize())
}

pub const TOY_BASE_GRAPH: &str = include_str!("../../data/toy.bg");
pub const BG2_Z16_BASE_GRAPH: &str = include_str!("../../data/bg2_z16.bg");
pub const BG2_BASE_GRAPH: &str = include_str!("../../data/bg2.bg");

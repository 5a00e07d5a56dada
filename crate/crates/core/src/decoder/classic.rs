use std::fmt;
use std::str::FromStr;

use crate::channel::LlrFrame;
use crate::code::{ActiveGraph, Code};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Message magnitude bound applied to both message directions.
pub const DEFAULT_CLIP: f64 = 20.0;
/// Normalization weight of the conventional normalized min-sum baseline.
pub const DEFAULT_NMS_ALPHA: f64 = 0.8;
/// Margin keeping the `atanh` argument away from +-1.
pub const ATANH_DELTA: f64 = 1e-12;

/// Per-edge messages of one iteration. Inactive edges stay at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState<T> {
    pub v2c: Vec<T>,
    pub c2v: Vec<T>,
    pub iteration: usize,
}

impl<T: Scalar> MessageState<T> {
    pub fn new(edges: usize) -> MessageState<T> {
        MessageState {
            v2c: vec![T::zero(); edges],
            c2v: vec![T::zero(); edges],
            iteration: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm<T> {
    Bp,
    Ms,
    Nms(T),
}

impl<T: Scalar> FromStr for Algorithm<T> {
    type Err = Error;
    /// `bp`, `ms`, `nms` (alpha 0.8) or `nms:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "bp" => Ok(Algorithm::Bp),
            "ms" => Ok(Algorithm::Ms),
            "nms" | "cnms" => Ok(Algorithm::Nms(T::of(DEFAULT_NMS_ALPHA))),
            other => {
                let alpha = other
                    .strip_prefix("nms:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown decoder {s:?}")))?;
                Ok(Algorithm::Nms(T::of(alpha)))
            }
        }
    }
}

impl<T: Scalar> fmt::Display for Algorithm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Bp => f.write_str("bp"),
            Algorithm::Ms => f.write_str("ms"),
            Algorithm::Nms(a) => write!(f, "nms:{a}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoderConfig<T> {
    pub algorithm: Algorithm<T>,
    pub max_iter: usize,
    pub early_exit: bool,
    pub clip: T,
    /// Keep a copy of the messages after every iteration in the trace.
    pub record_messages: bool,
}

impl<T: Scalar> DecoderConfig<T> {
    pub fn new(algorithm: Algorithm<T>, max_iter: usize) -> DecoderConfig<T> {
        DecoderConfig {
            algorithm,
            max_iter,
            early_exit: false,
            clip: T::of(DEFAULT_CLIP),
            record_messages: false,
        }
    }

    pub fn early_exit(mut self, on: bool) -> Self {
        self.early_exit = on;
        self
    }

    pub fn record_messages(mut self, on: bool) -> Self {
        self.record_messages = on;
        self
    }
}

/// Outcome of a decode. Index 0 of the per-iteration vectors is the decision on
/// the channel LLRs alone; index `l` is after iteration `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeTrace<T> {
    pub soft: Vec<Vec<T>>,
    pub hard: Vec<Vec<u8>>,
    pub syndrome_ok: Vec<bool>,
    pub decoded: Vec<u8>,
    pub iterations_used: usize,
    /// Filled when message recording is on: state after each iteration.
    pub messages: Vec<MessageState<T>>,
}

impl<T: Scalar> DecodeTrace<T> {
    pub(crate) fn start(llr: &[T], g: &ActiveGraph) -> DecodeTrace<T> {
        let hard = hard_decision(llr);
        let ok = g.syndrome_ok(&hard);
        DecodeTrace {
            soft: vec![llr.to_vec()],
            hard: vec![hard],
            syndrome_ok: vec![ok],
            decoded: Vec::new(),
            iterations_used: 0,
            messages: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, soft: Vec<T>, g: &ActiveGraph) -> bool {
        let hard = hard_decision(&soft);
        let ok = g.syndrome_ok(&hard);
        self.soft.push(soft);
        self.hard.push(hard);
        self.syndrome_ok.push(ok);
        self.iterations_used += 1;
        ok
    }

    pub(crate) fn finish(&mut self) {
        self.decoded = self.hard.last().cloned().unwrap_or_default();
    }

    /// Decision after iteration `l`, or the final one if decoding exited earlier.
    pub fn hard_at(&self, l: usize) -> &[u8] {
        &self.hard[l.min(self.hard.len() - 1)]
    }
}

/// `bit = 1` iff the LLR is negative; zero decodes to 0.
pub fn hard_decision<T: Scalar>(o: &[T]) -> Vec<u8> {
    o.iter().map(|&x| u8::from(x < T::zero())).collect()
}

/// V2C: channel LLR plus every other active C2V at the VN, clipped.
pub fn v2c_update<T: Scalar>(state: &mut MessageState<T>, llr: &[T], g: &ActiveGraph, clip: T) {
    for &v in &g.active_vns {
        let edges = &g.vn_edges[v];
        for &e in edges {
            let mut acc = llr[v];
            for &e2 in edges {
                if e2 != e {
                    acc = acc + state.c2v[e2];
                }
            }
            state.v2c[e] = acc.clip(clip);
        }
    }
}

fn atanh_bound<T: Scalar>() -> T {
    T::one() - T::of(ATANH_DELTA).max(T::epsilon())
}

/// Tanh-product rule.
pub fn c2v_update_bp<T: Scalar>(state: &mut MessageState<T>, g: &ActiveGraph, clip: T) {
    let two = T::of(2.0);
    let bound = atanh_bound::<T>();
    let mut t = Vec::new();
    for &c in &g.active_cns {
        let edges = &g.cn_edges[c];
        t.clear();
        t.extend(edges.iter().map(|&e| (state.v2c[e] / two).tanh()));
        for (i, &e) in edges.iter().enumerate() {
            if edges.len() == 1 {
                state.c2v[e] = clip;
                continue;
            }
            let mut p = T::one();
            for (j, &tj) in t.iter().enumerate() {
                if j != i {
                    p = p * tj;
                }
            }
            let q = p.max(-bound).min(bound);
            state.c2v[e] = (two * q.atanh()).clip(clip);
        }
    }
}

/// Sign product times minimum magnitude over the other active edges.
pub fn c2v_update_ms<T: Scalar>(state: &mut MessageState<T>, g: &ActiveGraph, clip: T) {
    c2v_scaled_min_sum(state, g, T::one(), clip);
}

/// Min-sum scaled by a constant `alpha`.
pub fn c2v_update_nms<T: Scalar>(state: &mut MessageState<T>, g: &ActiveGraph, alpha: T, clip: T) {
    c2v_scaled_min_sum(state, g, alpha, clip);
}

fn c2v_scaled_min_sum<T: Scalar>(state: &mut MessageState<T>, g: &ActiveGraph, alpha: T, clip: T) {
    for &c in &g.active_cns {
        let edges = &g.cn_edges[c];
        if edges.len() == 1 {
            state.c2v[edges[0]] = clip;
            continue;
        }
        // two smallest magnitudes and the overall sign
        let (mut min1, mut min2, mut at) = (T::infinity(), T::infinity(), usize::MAX);
        let mut sign = T::one();
        for (i, &e) in edges.iter().enumerate() {
            let v = state.v2c[e];
            sign = sign * v.sign_pos();
            let a = v.abs();
            if a < min1 {
                min2 = min1;
                min1 = a;
                at = i;
            } else if a < min2 {
                min2 = a;
            }
        }
        for (i, &e) in edges.iter().enumerate() {
            let mag = if i == at { min2 } else { min1 };
            let s = sign * state.v2c[e].sign_pos();
            state.c2v[e] = (s * (alpha * mag)).clip(clip);
        }
    }
}

/// Full marginal `o_v = L_v + sum of active C2V` and the sign decision.
pub fn marginalize_and_decide<T: Scalar>(state: &MessageState<T>, llr: &[T], g: &ActiveGraph) -> (Vec<T>, Vec<u8>) {
    let o = marginals(&state.c2v, llr, g);
    let x = hard_decision(&o);
    (o, x)
}

pub(crate) fn marginals<T: Scalar>(c2v: &[T], llr: &[T], g: &ActiveGraph) -> Vec<T> {
    let mut o = llr.to_vec();
    for &v in &g.active_vns {
        let mut acc = llr[v];
        for &e in &g.vn_edges[v] {
            acc = acc + c2v[e];
        }
        o[v] = acc;
    }
    o
}

/// True iff `bits` satisfy every active check.
pub fn syndrome_check(bits: &[u8], g: &ActiveGraph) -> bool {
    g.syndrome_ok(bits)
}

/// Flooding decoder over the active graph.
pub fn decode<T: Scalar>(g: &ActiveGraph, llr: &[T], cfg: &DecoderConfig<T>) -> DecodeTrace<T> {
    assert!(cfg.max_iter >= 1, "max_iter must be at least 1");
    assert_eq!(llr.len(), g.n, "LLR length must equal the number of VNs");
    let mut state = MessageState::new(g.edge_total);
    let mut trace = DecodeTrace::start(llr, g);
    for l in 1..=cfg.max_iter {
        v2c_update(&mut state, llr, g, cfg.clip);
        match cfg.algorithm {
            Algorithm::Bp => c2v_update_bp(&mut state, g, cfg.clip),
            Algorithm::Ms => c2v_update_ms(&mut state, g, cfg.clip),
            Algorithm::Nms(alpha) => c2v_update_nms(&mut state, g, alpha, cfg.clip),
        }
        state.iteration = l;
        let (o, _) = marginalize_and_decide(&state, llr, g);
        if cfg.record_messages {
            trace.messages.push(state.clone());
        }
        if trace.push(o, g) && cfg.early_exit {
            break;
        }
    }
    trace.finish();
    trace
}

/// Decodes an LLR frame at its own rate.
pub fn decode_frame<T: Scalar>(code: &Code, frame: &LlrFrame<T>, cfg: &DecoderConfig<T>) -> Result<DecodeTrace<T>> {
    Ok(decode(code.view(frame.rate_index)?, &frame.llr, cfg))
}

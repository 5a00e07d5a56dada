//! Forward pass of the unrolled decoder over the edges a rate activates.

use crate::code::ActiveGraph;
use crate::decoder::{hard_decision, DecodeTrace, MessageState, ATANH_DELTA};
use crate::scalar::Scalar;

use super::params::{ParamView, Variant};

/// Per-bit output of one layer's head.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftOutput<T> {
    /// `sigmoid(-pre_sigmoid)`: probability that the bit is 1.
    pub probs: Vec<T>,
    /// `L_v + sum of the layer's C2V messages at v`.
    pub pre_sigmoid: Vec<T>,
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> SoftOutput<T> {
    pub fn from_pre_sigmoid(pre_sigmoid: Vec<T>) -> SoftOutput<T> {
        let probs = pre_sigmoid.iter().map(|&o| sigmoid(-o)).collect();
        SoftOutput { probs, pre_sigmoid }
    }

    /// Bit is 1 iff its probability exceeds one half, i.e. the corrected LLR is negative.
    pub fn hard(&self) -> Vec<u8> {
        hard_decision(&self.pre_sigmoid)
    }
}

/// Everything one layer computed, kept for reverse-mode differentiation.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerRecord<T> {
    /// V2C before clipping.
    pub v2c_raw: Vec<T>,
    pub v2c: Vec<T>,
    /// Check-node output before the weight: `2 atanh(q)` (NNBP) or the
    /// weighted minimum `min w |V|` (NNMS).
    pub core: Vec<T>,
    /// C2V before clipping.
    pub c2v_raw: Vec<T>,
    pub c2v: Vec<T>,
    /// NNBP: the atanh argument stayed strictly inside the clamp.
    /// NNMS: the ReLU argument was positive.
    pub gate: Vec<bool>,
    /// NNBP: `tanh(V/2)` per edge.
    pub tanh_half: Vec<T>,
    /// NNBP: clamped leave-one-out product.
    pub product: Vec<T>,
    /// NNMS: leave-one-out sign product.
    pub sign: Vec<T>,
    /// NNMS: edge attaining the minimum (lowest index on ties).
    pub argmin: Vec<usize>,
    /// Check node had a single active edge; output saturated, no gradient.
    pub saturated: Vec<bool>,
}

impl<T: Scalar> LayerRecord<T> {
    fn new(edges: usize) -> LayerRecord<T> {
        LayerRecord {
            v2c_raw: vec![T::zero(); edges],
            v2c: vec![T::zero(); edges],
            core: vec![T::zero(); edges],
            c2v_raw: vec![T::zero(); edges],
            c2v: vec![T::zero(); edges],
            gate: vec![false; edges],
            tanh_half: vec![T::zero(); edges],
            product: vec![T::zero(); edges],
            sign: vec![T::zero(); edges],
            argmin: vec![usize::MAX; edges],
            saturated: vec![false; edges],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput<T> {
    /// One head per evaluated layer.
    pub soft: Vec<SoftOutput<T>>,
    pub trace: DecodeTrace<T>,
    /// Present when recording was requested.
    pub layers: Vec<LayerRecord<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    /// Number of layers to evaluate (`<= l_max`).
    pub layers: usize,
    pub early_exit: bool,
    pub record: bool,
    pub record_messages: bool,
}

impl ForwardOptions {
    pub fn layers(layers: usize) -> ForwardOptions {
        ForwardOptions { layers, early_exit: false, record: false, record_messages: false }
    }
}

/// Runs `opts.layers` unrolled iterations. Inactive edges carry exact zeros.
pub fn forward_graph<T: Scalar>(
    g: &ActiveGraph,
    llr: &[T],
    params: &ParamView<'_, T>,
    variant: Variant,
    clip: T,
    opts: ForwardOptions,
) -> ForwardOutput<T> {
    assert_eq!(llr.len(), g.n, "LLR length must equal the number of VNs");
    assert!(opts.layers >= 1 && opts.layers <= params.params.l_max, "layer count out of range");
    let e_total = g.edge_total;
    let mut c2v_prev = vec![T::zero(); e_total];
    let mut trace = DecodeTrace::start(llr, g);
    let mut soft = Vec::with_capacity(opts.layers);
    let mut layers = Vec::new();

    for l in 0..opts.layers {
        let mut rec = LayerRecord::new(e_total);
        // variable-node sublayer
        for &v in &g.active_vns {
            let edges = &g.vn_edges[v];
            for &e in edges {
                let mut acc = llr[v];
                for &e2 in edges {
                    if e2 != e {
                        acc = acc + c2v_prev[e2];
                    }
                }
                rec.v2c_raw[e] = acc;
                rec.v2c[e] = acc.clip(clip);
            }
        }
        // check-node sublayer
        match variant {
            Variant::Nnbp => check_layer_bp(g, params, l, clip, &mut rec),
            Variant::Nnms => check_layer_ms(g, params, l, clip, &mut rec),
        }
        // output head
        let mut pre = llr.to_vec();
        for &v in &g.active_vns {
            let mut acc = llr[v];
            for &e in &g.vn_edges[v] {
                acc = acc + rec.c2v[e];
            }
            pre[v] = acc;
        }
        let out = SoftOutput::from_pre_sigmoid(pre);
        if opts.record_messages {
            trace.messages.push(MessageState {
                v2c: rec.v2c.clone(),
                c2v: rec.c2v.clone(),
                iteration: l + 1,
            });
        }
        let ok = trace.push(out.pre_sigmoid.clone(), g);
        soft.push(out);
        c2v_prev.clone_from(&rec.c2v);
        if opts.record {
            layers.push(rec);
        }
        if ok && opts.early_exit {
            break;
        }
    }
    trace.finish();
    ForwardOutput { soft, trace, layers }
}

fn check_layer_bp<T: Scalar>(g: &ActiveGraph, params: &ParamView<'_, T>, layer: usize, clip: T, rec: &mut LayerRecord<T>) {
    let two = T::of(2.0);
    let bound = T::one() - T::of(ATANH_DELTA).max(T::epsilon());
    for &c in &g.active_cns {
        let edges = &g.cn_edges[c];
        for &e in edges {
            rec.tanh_half[e] = (rec.v2c[e] / two).tanh();
        }
        if edges.len() == 1 {
            let e = edges[0];
            rec.saturated[e] = true;
            rec.c2v_raw[e] = clip;
            rec.c2v[e] = clip;
            continue;
        }
        for &e in edges {
            let mut p = T::one();
            for &e2 in edges {
                if e2 != e {
                    p = p * rec.tanh_half[e2];
                }
            }
            rec.gate[e] = p > -bound && p < bound;
            let q = p.max(-bound).min(bound);
            rec.product[e] = q;
            let a = two * q.atanh();
            rec.core[e] = a;
            let z = params.weight(layer, e) * a + params.bias(layer, e);
            rec.c2v_raw[e] = z;
            rec.c2v[e] = z.clip(clip);
        }
    }
}

fn check_layer_ms<T: Scalar>(g: &ActiveGraph, params: &ParamView<'_, T>, layer: usize, clip: T, rec: &mut LayerRecord<T>) {
    for &c in &g.active_cns {
        let edges = &g.cn_edges[c];
        if edges.len() == 1 {
            let e = edges[0];
            rec.saturated[e] = true;
            rec.c2v_raw[e] = clip;
            rec.c2v[e] = clip;
            continue;
        }
        for &e in edges {
            let w = params.weight(layer, e);
            let mut sign = T::one();
            let mut best = T::infinity();
            let mut at = usize::MAX;
            for &e2 in edges {
                if e2 == e {
                    continue;
                }
                let v = rec.v2c[e2];
                sign = sign * v.sign_pos();
                let m = w * v.abs();
                if m < best || at == usize::MAX {
                    best = m;
                    at = e2;
                }
            }
            let r = best + params.bias(layer, e);
            rec.gate[e] = r > T::zero();
            let relu = if r > T::zero() { r } else { T::zero() };
            rec.sign[e] = sign;
            rec.argmin[e] = at;
            rec.core[e] = best;
            let z = sign * relu;
            rec.c2v_raw[e] = z;
            rec.c2v[e] = z.clip(clip);
        }
    }
}

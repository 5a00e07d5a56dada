//! Reverse-mode differentiation of the unrolled decoder.
//!
//! Subgradient conventions: the minimum routes its gradient to the argmin input
//! only; sign products are constants; `ReLU'(0) = 0`; clipping and the atanh
//! clamp pass gradient strictly inside their interval and block it elsewhere.

use crate::code::ActiveGraph;
use crate::error::{Error, Result};
use crate::neural::{forward_graph, ForwardOptions, LayerRecord, ParamView, ParameterMatrix, SoftOutput, Variant};
use crate::scalar::Scalar;

/// Recorded forward intermediates of one frame.
#[derive(Clone, Debug)]
pub struct GradientTape<T> {
    pub llr: Vec<T>,
    pub rate_index: usize,
    pub variant: Variant,
    pub clip: T,
    pub layers: Vec<LayerRecord<T>>,
    pub soft: Vec<SoftOutput<T>>,
}

impl<T: Scalar> GradientTape<T> {
    /// Runs `layers` layers and records everything `backward` needs.
    pub fn record(
        g: &ActiveGraph,
        llr: &[T],
        params: &ParamView<'_, T>,
        variant: Variant,
        clip: T,
        layers: usize,
    ) -> GradientTape<T> {
        let out = forward_graph(g, llr, params, variant, clip, ForwardOptions { record: true, ..ForwardOptions::layers(layers) });
        GradientTape {
            llr: llr.to_vec(),
            rate_index: params.rate_index,
            variant,
            clip,
            layers: out.layers,
            soft: out.soft,
        }
    }

    /// Re-runs the forward pass and checks that it reproduces the recording bitwise.
    pub fn replay_matches(&self, g: &ActiveGraph, params: &ParamView<'_, T>) -> bool {
        let again = GradientTape::record(g, &self.llr, params, self.variant, self.clip, self.layers.len());
        let same = |a: &[T], b: &[T]| a.iter().zip(b).all(|(x, y)| x.to_bits_eq(*y)) && a.len() == b.len();
        self.soft.len() == again.soft.len()
            && self
                .soft
                .iter()
                .zip(&again.soft)
                .all(|(a, b)| same(&a.pre_sigmoid, &b.pre_sigmoid) && same(&a.probs, &b.probs))
            && self.layers.iter().zip(&again.layers).all(|(a, b)| same(&a.c2v, &b.c2v) && same(&a.v2c, &b.v2c))
    }
}

trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Scalar> BitsEq for T {
    fn to_bits_eq(self, other: T) -> bool {
        // Same value and same sign of zero; NaNs never occur in recorded values.
        self == other && self.is_sign_negative() == other.is_sign_negative()
    }
}

fn sgn0<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Accumulates into `grads` the gradient of a scalar loss whose derivative with
/// respect to the last recorded head's corrected LLRs is `seed`.
pub fn backward_into<T: Scalar>(
    tape: &GradientTape<T>,
    g: &ActiveGraph,
    params: &ParamView<'_, T>,
    seed: &[T],
    grads: &mut ParameterMatrix<T>,
) -> Result<()> {
    let p = params.params;
    if grads.values.len() != p.values.len() || grads.columns != p.columns {
        return Err(Error::Length { expected: p.values.len(), got: grads.values.len() });
    }
    if tape.layers.len() > p.l_max || seed.len() != g.n || tape.llr.len() != g.n {
        return Err(Error::Length { expected: g.n, got: seed.len() });
    }
    let e_total = g.edge_total;
    let clip = tape.clip;
    let two = T::of(2.0);
    let half = T::of(0.5);

    // d loss / d C2V of the current layer
    let mut g_c = vec![T::zero(); e_total];
    for &v in &g.active_vns {
        for &e in &g.vn_edges[v] {
            g_c[e] = seed[v];
        }
    }
    let mut g_v = vec![T::zero(); e_total];
    let mut g_t = vec![T::zero(); e_total];

    for l in (0..tape.layers.len()).rev() {
        let rec = &tape.layers[l];
        g_v.iter_mut().for_each(|x| *x = T::zero());
        let w_row = 2 * l;
        let b_row = 2 * l + 1;
        for &c in &g.active_cns {
            let edges = &g.cn_edges[c];
            match tape.variant {
                Variant::Nnbp => {
                    for &e in edges {
                        g_t[e] = T::zero();
                    }
                    for &e in edges {
                        if rec.saturated[e] || rec.c2v_raw[e].abs() >= clip {
                            continue;
                        }
                        let gz = g_c[e];
                        if gz == T::zero() {
                            continue;
                        }
                        let col = p.edge_to_column[e];
                        let w = p.weight(l, e);
                        grads.values[p.index(w_row, col)] = grads.values[p.index(w_row, col)] + gz * rec.core[e];
                        grads.values[p.index(b_row, col)] = grads.values[p.index(b_row, col)] + gz;
                        if !rec.gate[e] {
                            continue;
                        }
                        let q = rec.product[e];
                        let gq = gz * w * two / (T::one() - q * q);
                        for &e1 in edges {
                            if e1 == e {
                                continue;
                            }
                            let mut prod = T::one();
                            for &e2 in edges {
                                if e2 != e && e2 != e1 {
                                    prod = prod * rec.tanh_half[e2];
                                }
                            }
                            g_t[e1] = g_t[e1] + gq * prod;
                        }
                    }
                    for &e in edges {
                        let t = rec.tanh_half[e];
                        g_v[e] = g_v[e] + g_t[e] * (T::one() - t * t) * half;
                    }
                }
                Variant::Nnms => {
                    for &e in edges {
                        if rec.saturated[e] || rec.c2v_raw[e].abs() >= clip || !rec.gate[e] {
                            continue;
                        }
                        let gr = g_c[e] * rec.sign[e];
                        if gr == T::zero() {
                            continue;
                        }
                        let col = p.edge_to_column[e];
                        let k = rec.argmin[e];
                        let vk = rec.v2c[k];
                        grads.values[p.index(b_row, col)] = grads.values[p.index(b_row, col)] + gr;
                        grads.values[p.index(w_row, col)] = grads.values[p.index(w_row, col)] + gr * vk.abs();
                        g_v[k] = g_v[k] + gr * p.weight(l, e) * sgn0(vk);
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        // through the V2C clip and the leave-one-out sum into the previous C2V
        for &v in &g.active_vns {
            let edges = &g.vn_edges[v];
            let mut total = T::zero();
            for &e in edges {
                if rec.v2c_raw[e].abs() >= clip {
                    g_v[e] = T::zero();
                }
                total = total + g_v[e];
            }
            for &e in edges {
                g_c[e] = total - g_v[e];
            }
        }
    }
    Ok(())
}

/// Gradient matrix for one tape and seed.
pub fn backward<T: Scalar>(tape: &GradientTape<T>, g: &ActiveGraph, params: &ParamView<'_, T>, seed: &[T]) -> Result<ParameterMatrix<T>> {
    let mut grads = params.params.zeros_like();
    backward_into(tape, g, params, seed, &mut grads)?;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::code::Code;
    use crate::neural::{activate, Tying};
    use crate::testutil::noisy_frame;
    use crate::train::head_loss_and_seed;

    const LAYERS: usize = 3;

    fn random_params(code: &Code, tying: Tying, seed: u64) -> ParameterMatrix<f64> {
        let mut p = ParameterMatrix::identity_for(code, LAYERS, tying);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for r in 0..p.rows() {
            for x in p.row_mut(r) {
                *x = if r % 2 == 0 { rng.random_range(0.6..1.4) } else { rng.random_range(-0.4..0.4) };
            }
        }
        p
    }

    /// Discrete choices a forward pass made; gradients are smooth only where
    /// these stay fixed.
    fn regime(tape: &GradientTape<f64>, clip: f64) -> Vec<(bool, usize, bool, bool, bool)> {
        tape.layers
            .iter()
            .flat_map(|r| {
                (0..r.v2c.len()).map(move |e| {
                    (r.gate[e], r.argmin[e], r.c2v_raw[e].abs() >= clip, r.v2c_raw[e].abs() >= clip, r.v2c[e] < 0.0)
                })
            })
            .collect()
    }

    fn loss(code: &Code, p: &ParameterMatrix<f64>, variant: Variant, llr: &[f64], bits: &[u8], rate: usize) -> (f64, GradientTape<f64>) {
        let g = code.view(rate).unwrap();
        let view = activate(p, rate).unwrap();
        let tape = GradientTape::record(g, llr, &view, variant, 20.0, LAYERS);
        let active = code.ladder.rates[rate].active_vn_count;
        let (l, _) = head_loss_and_seed(&tape.soft.last().unwrap().pre_sigmoid, bits, active);
        (l, tape)
    }

    fn check_finite_differences(variant: Variant, tying: Tying) {
        let code = Code::toy(4);
        let h = 1e-4;
        for rate in 0..code.rate_count() {
            let p = random_params(&code, tying, 7 + rate as u64);
            let (bits, frame) = noisy_frame::<f64>(&code, rate, 1.0, 40 + rate as u64);
            let g = code.view(rate).unwrap();
            let (_, tape) = loss(&code, &p, variant, &frame.llr, &bits, rate);
            let active = code.ladder.rates[rate].active_vn_count;
            let (_, seed) = head_loss_and_seed(&tape.soft.last().unwrap().pre_sigmoid, &bits, active);
            let grads = backward(&tape, g, &activate(&p, rate).unwrap(), &seed).unwrap();
            let base_regime = regime(&tape, 20.0);
            let cols = p.block_boundaries[rate];
            let mut compared = 0;
            for r in 0..p.rows() {
                for c in 0..cols {
                    let i = p.index(r, c);
                    let mut plus = p.clone();
                    plus.values[i] += h;
                    let mut minus = p.clone();
                    minus.values[i] -= h;
                    let (lp, tp) = loss(&code, &plus, variant, &frame.llr, &bits, rate);
                    let (lm, tm) = loss(&code, &minus, variant, &frame.llr, &bits, rate);
                    if regime(&tp, 20.0) != base_regime || regime(&tm, 20.0) != base_regime {
                        continue;
                    }
                    let numeric = (lp - lm) / (2.0 * h);
                    let analytic = grads.values[i];
                    let scale = numeric.abs().max(analytic.abs());
                    assert!(
                        (numeric - analytic).abs() <= 1e-4 * scale + 1e-9,
                        "{variant} {tying} rate {rate} row {r} col {c}: analytic {analytic} numeric {numeric}"
                    );
                    compared += 1;
                }
            }
            // tied models can have fewer than 200 parameters in a block
            let wanted = 200.min(p.rows() * cols / 2);
            assert!(compared >= wanted, "{variant} rate {rate}: only {compared} smooth coordinates");
        }
    }

    #[test]
    fn nnbp_gradient_matches_finite_differences() {
        check_finite_differences(Variant::Nnbp, Tying::PerEdge);
    }

    #[test]
    fn nnms_gradient_matches_finite_differences() {
        check_finite_differences(Variant::Nnms, Tying::PerEdge);
    }

    #[test]
    fn tied_gradient_matches_finite_differences() {
        check_finite_differences(Variant::Nnms, Tying::PerBaseEdge);
    }

    #[test]
    fn inactive_columns_get_no_gradient() {
        let code = Code::toy(4);
        for variant in [Variant::Nnbp, Variant::Nnms] {
            let p = random_params(&code, Tying::PerEdge, 3);
            let (bits, frame) = noisy_frame::<f64>(&code, 0, 1.0, 5);
            let (_, tape) = loss(&code, &p, variant, &frame.llr, &bits, 0);
            let (_, seed) = head_loss_and_seed(&tape.soft.last().unwrap().pre_sigmoid, &bits, code.ladder.rates[0].active_vn_count);
            let grads = backward(&tape, code.view(0).unwrap(), &activate(&p, 0).unwrap(), &seed).unwrap();
            let lo = p.block_boundaries[0];
            for r in 0..p.rows() {
                assert!(grads.row(r)[lo..].iter().all(|&x| x == 0.0));
            }
            assert!(grads.row(0)[..lo].iter().any(|&x| x != 0.0));
        }
    }

    #[test]
    fn gradient_finite_at_identity() {
        let code = Code::toy(4);
        for variant in [Variant::Nnbp, Variant::Nnms] {
            let p = ParameterMatrix::<f64>::identity_for(&code, LAYERS, Tying::PerEdge);
            for snr in [-2.0, 3.0, 12.0] {
                let (bits, frame) = noisy_frame::<f64>(&code, 2, snr, 1);
                let (l, tape) = loss(&code, &p, variant, &frame.llr, &bits, 2);
                assert!(l.is_finite());
                let (_, seed) = head_loss_and_seed(&tape.soft.last().unwrap().pre_sigmoid, &bits, code.n());
                let grads = backward(&tape, code.view(2).unwrap(), &activate(&p, 2).unwrap(), &seed).unwrap();
                assert!(grads.values.iter().all(|x| x.is_finite()));
            }
        }
    }

    #[test]
    fn replay_reproduces_tape() {
        let code = Code::toy(4);
        let p = random_params(&code, Tying::PerEdge, 9);
        let (bits, frame) = noisy_frame::<f64>(&code, 1, 0.5, 2);
        let (_, tape) = loss(&code, &p, Variant::Nnms, &frame.llr, &bits, 1);
        assert!(tape.replay_matches(code.view(1).unwrap(), &activate(&p, 1).unwrap()));
        let mut q = p.clone();
        q.values[0] += 0.5;
        assert!(!tape.replay_matches(code.view(1).unwrap(), &activate(&q, 1).unwrap()));
    }

    #[test]
    fn mismatched_gradient_buffer_rejected() {
        let code = Code::toy(4);
        let p = random_params(&code, Tying::PerEdge, 1);
        let (bits, frame) = noisy_frame::<f64>(&code, 0, 1.0, 1);
        let (_, tape) = loss(&code, &p, Variant::Nnms, &frame.llr, &bits, 0);
        let mut small = ParameterMatrix::<f64>::identity(1, &[3]);
        let seed = vec![0.0; code.n()];
        assert!(backward_into(&tape, code.view(0).unwrap(), &activate(&p, 0).unwrap(), &seed, &mut small).is_err());
    }
}

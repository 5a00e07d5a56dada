use crate::error::{Error, Result};
use crate::neural::{sigmoid, SoftOutput};
use crate::scalar::Scalar;

/// Probability floor applied before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy between predicted bit-1 probabilities and the bits.
pub fn bce_loss<T: Scalar>(soft: &SoftOutput<T>, bits: &[u8]) -> Result<T> {
    if soft.probs.len() != bits.len() {
        return Err(Error::Length { expected: soft.probs.len(), got: bits.len() });
    }
    if bits.is_empty() {
        return Ok(T::zero());
    }
    let lo = T::of(PROB_CLAMP);
    let hi = T::one() - lo;
    let total: T = soft
        .probs
        .iter()
        .zip(bits)
        .map(|(&p, &x)| {
            let p = p.max(lo).min(hi);
            if x & 1 == 1 {
                -p.ln()
            } else {
                -(T::one() - p).ln()
            }
        })
        .sum();
    Ok(total / T::of(bits.len() as f64))
}

fn softplus<T: Scalar>(x: T) -> T {
    // log(1 + e^x) without overflow
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// Cross-entropy of one head over the first `active` bits, computed from the
/// corrected LLRs, together with its gradient with respect to them.
///
/// With `p = sigmoid(-o)` the per-bit loss is `x softplus(o) + (1-x) softplus(-o)`
/// and its derivative is `x - p`; both are scaled by `1 / active`.
pub fn head_loss_and_seed<T: Scalar>(pre_sigmoid: &[T], bits: &[u8], active: usize) -> (T, Vec<T>) {
    let scale = T::one() / T::of(active as f64);
    let mut seed = vec![T::zero(); pre_sigmoid.len()];
    let mut loss = T::zero();
    for v in 0..active {
        let o = pre_sigmoid[v];
        let x = bits[v] & 1 == 1;
        loss = loss + if x { softplus(o) } else { softplus(-o) };
        let p = sigmoid(-o);
        seed[v] = (if x { T::one() } else { T::zero() } - p) * scale;
    }
    (loss * scale, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_probabilities_give_ln2() {
        let soft = SoftOutput::from_pre_sigmoid(vec![0.0f64; 8]);
        let l = bce_loss(&soft, &[0, 1, 1, 0, 1, 0, 0, 1]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_near_zero() {
        let soft = SoftOutput::from_pre_sigmoid(vec![40.0f64, -40.0]);
        assert!(bce_loss(&soft, &[0, 1]).unwrap() < 1e-12);
    }

    #[test]
    fn matches_direct_formula() {
        let probs = [0.1f64, 0.75, 0.4, 0.99, 0.02];
        let bits = [0u8, 1, 1, 0, 0];
        let soft = SoftOutput { probs: probs.to_vec(), pre_sigmoid: vec![0.0; 5] };
        let mut oracle = 0.0;
        for (p, x) in probs.iter().zip(bits) {
            let x = f64::from(x);
            oracle -= x * p.ln() + (1.0 - x) * (1.0 - p).ln();
        }
        oracle /= 5.0;
        assert!((bce_loss(&soft, &bits).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch() {
        let soft = SoftOutput::from_pre_sigmoid(vec![0.0f64; 3]);
        assert!(bce_loss(&soft, &[0, 1]).is_err());
    }

    #[test]
    fn logit_form_agrees_with_probability_form() {
        let o = vec![-3.0f64, 0.5, 2.0, -0.1, 7.0];
        let bits = [1u8, 0, 1, 1, 0];
        let (l, seed) = head_loss_and_seed(&o, &bits, 5);
        let soft = SoftOutput::from_pre_sigmoid(o.clone());
        assert!((l - bce_loss(&soft, &bits).unwrap()).abs() < 1e-14);
        // derivative by central differences
        for v in 0..5 {
            let h = 1e-6;
            let mut up = o.clone();
            up[v] += h;
            let mut dn = o.clone();
            dn[v] -= h;
            let fd = (head_loss_and_seed(&up, &bits, 5).0 - head_loss_and_seed(&dn, &bits, 5).0) / (2.0 * h);
            assert!((fd - seed[v]).abs() < 1e-8);
        }
    }
}

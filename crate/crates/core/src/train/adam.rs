use crate::scalar::Scalar;

pub const DEFAULT_LR: f64 = 1e-4;

/// Adam moments shaped like the parameter storage they update.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(len: usize, lr: T) -> OptimizerState<T> {
        OptimizerState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
        }
    }
}

/// One bias-corrected Adam step over `params[i]` for every `i` where
/// `trainable(i)` holds.
pub fn adam_step<T: Scalar>(params: &mut [T], grads: &[T], opt: &mut OptimizerState<T>, trainable: impl Fn(usize) -> bool) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), opt.m.len());
    opt.step += 1;
    let t = opt.step as i32;
    let bc1 = T::one() - opt.beta1.powi(t);
    let bc2 = T::one() - opt.beta2.powi(t);
    for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
        if !trainable(i) {
            continue;
        }
        opt.m[i] = opt.beta1 * opt.m[i] + (T::one() - opt.beta1) * g;
        opt.v[i] = opt.beta2 * opt.v[i] + (T::one() - opt.beta2) * g * g;
        let m_hat = opt.m[i] / bc1;
        let v_hat = opt.v[i] / bc2;
        *p = *p - opt.lr * m_hat / (v_hat.sqrt() + opt.epsilon);
    }
}

/// Sidecar text for checkpoints: header, hyper-parameters, then the two moment vectors.
pub fn write_optimizer_state<T: Scalar>(opt: &OptimizerState<T>) -> String {
    let join = |v: &[T]| v.iter().map(|x| format!("{:.16e}", x.as_f64())).collect::<Vec<_>>().join(" ");
    format!(
        "ADAM v1\nstep {}\nlr {:.16e}\nbeta1 {:.16e}\nbeta2 {:.16e}\nepsilon {:.16e}\nm {}\nv {}\n",
        opt.step,
        opt.lr.as_f64(),
        opt.beta1.as_f64(),
        opt.beta2.as_f64(),
        opt.epsilon.as_f64(),
        join(&opt.m),
        join(&opt.v)
    )
}

pub fn read_optimizer_state<T: Scalar>(text: &str) -> crate::Result<OptimizerState<T>> {
    use crate::Error;
    let bad = |m: &str| Error::Model(format!("optimizer state: {m}"));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ADAM v1") {
        return Err(bad("missing header"));
    }
    let mut get = |key: &str| -> crate::Result<String> {
        let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(bad(&format!("expected {key}")));
        }
        Ok(v.to_string())
    };
    let scalar = |s: String| -> crate::Result<T> { s.trim().parse::<f64>().map(T::of).map_err(|_| bad("bad number")) };
    let step = get("step")?.trim().parse().map_err(|_| bad("bad step"))?;
    let lr = scalar(get("lr")?)?;
    let beta1 = scalar(get("beta1")?)?;
    let beta2 = scalar(get("beta2")?)?;
    let epsilon = scalar(get("epsilon")?)?;
    let vec = |s: String| -> crate::Result<Vec<T>> {
        s.split_whitespace().map(|t| t.parse::<f64>().map(T::of).map_err(|_| bad("bad moment"))).collect()
    };
    let m = vec(get("m")?)?;
    let v = vec(get("v")?)?;
    if m.len() != v.len() {
        return Err(bad("moment lengths differ"));
    }
    Ok(OptimizerState { m, v, step, lr, beta1, beta2, epsilon })
}

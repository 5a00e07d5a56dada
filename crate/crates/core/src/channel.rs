//! BPSK/QPSK modulation over AWGN and channel LLR computation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::code::{Code, Codeword, RateEntry};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SnrConvention {
    /// Energy per information bit; needs the code rate.
    EbN0,
    /// Energy per channel symbol.
    EsN0,
}

impl FromStr for Modulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            _ => Err(Error::Config(format!("unknown modulation {s:?}"))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
        })
    }
}

impl FromStr for SnrConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebn0" => Ok(SnrConvention::EbN0),
            "esn0" => Ok(SnrConvention::EsN0),
            _ => Err(Error::Config(format!("unknown SNR convention {s:?}"))),
        }
    }
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrConvention::EbN0 => "ebn0",
            SnrConvention::EsN0 => "esn0",
        })
    }
}

/// Bits carried per complex symbol of unit energy.
fn bits_per_symbol(m: Modulation) -> f64 {
    match m {
        Modulation::Bpsk => 1.0,
        Modulation::Qpsk => 2.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    pub modulation: Modulation,
    /// Noise variance per real dimension.
    pub noise_sigma2: f64,
    pub snr_db: f64,
    pub snr_convention: SnrConvention,
}

/// Noise variance per real dimension for unit-energy symbols. BPSK uses one
/// real dimension per symbol, so `sigma2 = 1 / (2 Es/N0)` for both schemes.
pub fn sigma2_from_snr(snr_db: f64, convention: SnrConvention, modulation: Modulation, rate: f64) -> f64 {
    let lin = 10f64.powf(snr_db / 10.0);
    let es_n0 = match convention {
        SnrConvention::EsN0 => lin,
        SnrConvention::EbN0 => lin * rate * bits_per_symbol(modulation),
    };
    1.0 / (2.0 * es_n0)
}

pub fn snr_from_sigma2(sigma2: f64, convention: SnrConvention, modulation: Modulation, rate: f64) -> f64 {
    let es_n0 = 1.0 / (2.0 * sigma2);
    let lin = match convention {
        SnrConvention::EsN0 => es_n0,
        SnrConvention::EbN0 => es_n0 / (rate * bits_per_symbol(modulation)),
    };
    10.0 * lin.log10()
}

impl ChannelModel {
    /// `rate` only matters for [`SnrConvention::EbN0`].
    pub fn new(modulation: Modulation, snr_db: f64, snr_convention: SnrConvention, rate: f64) -> Result<ChannelModel> {
        let noise_sigma2 = sigma2_from_snr(snr_db, snr_convention, modulation, rate);
        ChannelModel::with_sigma2(modulation, noise_sigma2, snr_db, snr_convention)
    }

    pub fn with_sigma2(
        modulation: Modulation,
        noise_sigma2: f64,
        snr_db: f64,
        snr_convention: SnrConvention,
    ) -> Result<ChannelModel> {
        if !(noise_sigma2 > 0.0 && noise_sigma2.is_finite()) {
            return Err(Error::Config(format!("noise variance must be positive, got {noise_sigma2}")));
        }
        Ok(ChannelModel { modulation, noise_sigma2, snr_db, snr_convention })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Symbols {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Symbols {
    pub fn len(&self) -> usize {
        match self {
            Symbols::Real(v) => v.len(),
            Symbols::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_energy(&self) -> f64 {
        match self {
            Symbols::Real(v) => v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64,
            Symbols::Complex(v) => v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisySymbolFrame {
    pub symbols: Symbols,
    pub rate_index: usize,
}

/// Channel LLRs over all `n` VNs; positions that were not transmitted hold 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame<T> {
    pub llr: Vec<T>,
    pub rate_index: usize,
}

/// BPSK: `b -> 1 - 2b`. QPSK: bit pairs Gray-mapped to `((1-2b0) + i(1-2b1)) / sqrt(2)`.
pub fn modulate(bits: &[u8], scheme: Modulation) -> Result<Symbols> {
    let amp = |b: u8| 1.0 - 2.0 * f64::from(b & 1);
    match scheme {
        Modulation::Bpsk => Ok(Symbols::Real(bits.iter().map(|&b| amp(b)).collect())),
        Modulation::Qpsk => {
            if !bits.len().is_multiple_of(2) {
                return Err(Error::OddQpskLength(bits.len()));
            }
            Ok(Symbols::Complex(
                bits.chunks_exact(2)
                    .map(|p| Complex64::new(amp(p[0]) * FRAC_1_SQRT_2, amp(p[1]) * FRAC_1_SQRT_2))
                    .collect(),
            ))
        }
    }
}

/// Independent stream for one frame: ChaCha8 keyed by `master_seed`, stream id `stream`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Combines several indices into one stream id (splitmix64 chaining).
pub fn stream_id(parts: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn add_awgn<R: Rng + ?Sized>(symbols: &Symbols, cm: &ChannelModel, rate_index: usize, rng: &mut R) -> NoisySymbolFrame {
    let sigma = cm.noise_sigma2.sqrt();
    let mut noise = || {
        let n: f64 = rng.sample(StandardNormal);
        sigma * n
    };
    let symbols = match symbols {
        Symbols::Real(v) => Symbols::Real(v.iter().map(|&x| x + noise()).collect()),
        Symbols::Complex(v) => Symbols::Complex(
            v.iter()
                .map(|&x| {
                    let re = noise();
                    let im = noise();
                    x + Complex64::new(re, im)
                })
                .collect(),
        ),
    };
    NoisySymbolFrame { symbols, rate_index }
}

/// Gaussian LLR `2 a y / sigma2` per real dimension, `a` being the amplitude of
/// that dimension; scattered onto the rate's transmitted VNs.
pub fn llr_from_channel<T: Scalar>(
    frame: &NoisySymbolFrame,
    cm: &ChannelModel,
    entry: &RateEntry,
    n: usize,
) -> Result<LlrFrame<T>> {
    let per_dim: Vec<f64> = match &frame.symbols {
        Symbols::Real(v) => v.iter().map(|&y| 2.0 * y / cm.noise_sigma2).collect(),
        Symbols::Complex(v) => v
            .iter()
            .flat_map(|y| [y.re, y.im])
            .map(|y| 2.0 * FRAC_1_SQRT_2 * y / cm.noise_sigma2)
            .collect(),
    };
    if per_dim.len() != entry.transmitted_positions.len() {
        return Err(Error::Length {
            expected: entry.transmitted_positions.len(),
            got: per_dim.len(),
        });
    }
    let mut llr = vec![T::zero(); n];
    for (&pos, &l) in entry.transmitted_positions.iter().zip(&per_dim) {
        llr[pos] = T::of(l);
    }
    Ok(LlrFrame { llr, rate_index: frame.rate_index })
}

/// `len` independent uniform bits.
pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

/// Modulate the transmitted part of `cw`, add noise and demap.
pub fn transmit<T: Scalar, R: Rng + ?Sized>(
    code: &Code,
    cw: &Codeword,
    cm: &ChannelModel,
    rng: &mut R,
) -> Result<LlrFrame<T>> {
    let entry = code.ladder.get(cw.rate_index)?;
    let sent: Vec<u8> = entry.transmitted_positions.iter().map(|&p| cw.bits[p]).collect();
    let symbols = modulate(&sent, cm.modulation)?;
    let noisy = add_awgn(&symbols, cm, cw.rate_index, rng);
    llr_from_channel(&noisy, cm, entry, code.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::Code;

    fn bpsk(sigma2: f64) -> ChannelModel {
        ChannelModel::with_sigma2(Modulation::Bpsk, sigma2, 0.0, SnrConvention::EsN0).unwrap()
    }

    #[test]
    fn bpsk_mapping() {
        assert_eq!(modulate(&[0, 1], Modulation::Bpsk).unwrap(), Symbols::Real(vec![1.0, -1.0]));
    }

    #[test]
    fn qpsk_corner_and_odd_length() {
        match modulate(&[0, 0], Modulation::Qpsk).unwrap() {
            Symbols::Complex(v) => {
                assert!((v[0] - Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15)
            }
            _ => unreachable!(),
        }
        assert!(matches!(modulate(&[0, 1, 1], Modulation::Qpsk), Err(Error::OddQpskLength(3))));
    }

    #[test]
    fn unit_energy() {
        let mut rng = stream_rng(1, 0);
        let bits: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        for m in [Modulation::Bpsk, Modulation::Qpsk] {
            assert!((modulate(&bits, m).unwrap().mean_energy() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn snr_conversion_self_inverse() {
        for conv in [SnrConvention::EbN0, SnrConvention::EsN0] {
            for m in [Modulation::Bpsk, Modulation::Qpsk] {
                for snr in [-3.0, 0.0, 2.5, 6.0, 40.0] {
                    let s2 = sigma2_from_snr(snr, conv, m, 0.37);
                    let back = snr_from_sigma2(s2, conv, m, 0.37);
                    assert!((back - snr).abs() <= 1e-12 * snr.abs().max(1.0));
                }
            }
        }
        // BPSK Eb/N0 0 dB at rate 1/2: sigma2 = 1 / (2 * 0.5) = 1
        assert!((sigma2_from_snr(0.0, SnrConvention::EbN0, Modulation::Bpsk, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_positive_noise_rejected() {
        assert!(ChannelModel::with_sigma2(Modulation::Bpsk, 0.0, 0.0, SnrConvention::EsN0).is_err());
    }

    #[test]
    fn tiny_noise_leaves_symbols() {
        let s = modulate(&[0, 1, 1, 0], Modulation::Bpsk).unwrap();
        let out = add_awgn(&s, &bpsk(1e-300), 0, &mut stream_rng(3, 1));
        match (&s, &out.symbols) {
            (Symbols::Real(a), Symbols::Real(b)) => {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() < 1e-140);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn same_stream_same_frame() {
        let s = modulate(&[0; 64], Modulation::Bpsk).unwrap();
        let a = add_awgn(&s, &bpsk(0.5), 0, &mut stream_rng(9, stream_id(&[1, 2, 3])));
        let b = add_awgn(&s, &bpsk(0.5), 0, &mut stream_rng(9, stream_id(&[1, 2, 3])));
        let c = add_awgn(&s, &bpsk(0.5), 0, &mut stream_rng(9, stream_id(&[1, 2, 4])));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_estimate() {
        let s = Symbols::Real(vec![0.0; 1_000_000]);
        let out = add_awgn(&s, &bpsk(0.7), 0, &mut stream_rng(5, 0));
        let Symbols::Real(v) = out.symbols else { unreachable!() };
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var / 0.7 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn llr_closed_form_matches_density_ratio() {
        // ln N(y; +1, s2) / N(y; -1, s2), evaluated directly
        let density = |y: f64, mean: f64, s2: f64| {
            (-(y - mean) * (y - mean) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt()
        };
        let code = Code::toy(4);
        let entry = &code.ladder.rates[0];
        let mut ys = vec![0.0; entry.transmitted_positions.len()];
        ys[0] = 1.0;
        ys[1] = 0.0;
        ys[2] = -0.3;
        let frame = NoisySymbolFrame { symbols: Symbols::Real(ys.clone()), rate_index: 0 };
        let cm = bpsk(1.0);
        let l: LlrFrame<f64> = llr_from_channel(&frame, &cm, entry, code.n()).unwrap();
        assert_eq!(l.llr[0], 2.0);
        assert_eq!(l.llr[1], 0.0);
        for (i, &y) in ys.iter().enumerate().take(3) {
            let oracle = (density(y, 1.0, 1.0) / density(y, -1.0, 1.0)).ln();
            assert!((l.llr[i] - oracle).abs() < 1e-12);
        }
        // the highest rate leaves the lower-rate parity columns at exactly zero
        assert!(l.llr[entry.active_vn_count..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn high_snr_sign_agreement() {
        let code = Code::toy(4);
        let cm = bpsk(0.05);
        let mut agree = 0usize;
        let mut total = 0usize;
        let mut rng = stream_rng(17, 0);
        while total < 100_000 {
            let info: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&info, 2).unwrap();
            let l: LlrFrame<f64> = transmit(&code, &cw, &cm, &mut rng).unwrap();
            for (&x, &v) in cw.bits.iter().zip(&l.llr) {
                total += 1;
                if (v >= 0.0) == (x == 0) {
                    agree += 1;
                }
            }
        }
        assert!(agree as f64 / total as f64 >= 0.9999);
    }

    #[test]
    fn qpsk_matches_bpsk_distribution_at_equal_ebn0() {
        let rate = 0.5;
        let b = ChannelModel::new(Modulation::Bpsk, 1.0, SnrConvention::EbN0, rate).unwrap();
        let q = ChannelModel::new(Modulation::Qpsk, 1.0, SnrConvention::EbN0, rate).unwrap();
        let entry = crate::code::RateEntry {
            rate_value: rate,
            active_vn_count: 100_000,
            active_cn_count: 0,
            active_edges: crate::code::EdgeMask::empty(0),
            transmitted_positions: (0..100_000).collect(),
            zero_llr_positions: vec![],
        };
        let bits = vec![0u8; 100_000];
        let sample = |cm: &ChannelModel, seed| {
            let s = modulate(&bits, cm.modulation).unwrap();
            let f = add_awgn(&s, cm, 0, &mut stream_rng(seed, 0));
            let mut l: Vec<f64> = llr_from_channel::<f64>(&f, cm, &entry, 100_000).unwrap().llr;
            l.sort_by(|a, b| a.partial_cmp(b).unwrap());
            l
        };
        let lb = sample(&b, 1);
        let lq = sample(&q, 2);
        // two-sample Kolmogorov-Smirnov statistic
        let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
        while i < lb.len() && j < lq.len() {
            if lb[i] <= lq[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / lb.len() as f64 - j as f64 / lq.len() as f64).abs());
        }
        assert!(d < 0.01, "KS statistic {d}");
    }
}

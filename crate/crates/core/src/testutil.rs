//! Shared helpers for unit tests.

use rand::Rng;

use crate::channel::{stream_rng, transmit, ChannelModel, LlrFrame, Modulation, SnrConvention};
use crate::code::Code;
use crate::scalar::Scalar;

/// Random codeword at `rate` sent over BPSK/AWGN at `snr_db` (Eb/N0).
pub fn noisy_frame<T: Scalar>(code: &Code, rate: usize, snr_db: f64, seed: u64) -> (Vec<u8>, LlrFrame<T>) {
    let mut rng = stream_rng(seed, 0);
    let info: Vec<u8> = (0..code.encoder.info_len()).map(|_| rng.random_range(0..2u8)).collect();
    let cw = code.encode(&info, rate).unwrap();
    let rv = code.ladder.rates[rate].rate_value;
    let cm = ChannelModel::new(Modulation::Bpsk, snr_db, SnrConvention::EbN0, rv).unwrap();
    let llr = transmit(code, &cw, &cm, &mut rng).unwrap();
    (cw.bits, llr)
}

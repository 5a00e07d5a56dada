use rand::Rng;

use crate::channel::{stream_id, stream_rng, transmit, ChannelModel, LlrFrame, Modulation, SnrConvention};
use crate::code::Code;
use crate::error::Result;
use crate::scalar::Scalar;

/// Stream tag separating training draws from simulation draws.
const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainFrame<T> {
    pub llr: LlrFrame<T>,
    pub bits: Vec<u8>,
    pub snr_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch<T> {
    pub frames: Vec<TrainFrame<T>>,
}

/// How training frames are drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    /// Ladder indices to draw rates from, uniformly.
    pub rates: Vec<usize>,
    pub snr_lo: f64,
    pub snr_hi: f64,
    pub modulation: Modulation,
    pub snr_convention: SnrConvention,
    /// Send the all-zero codeword instead of random ones.
    pub all_zero: bool,
    pub seed: u64,
}

impl DatasetSpec {
    /// Defaults: every rate, 0-6 dB Eb/N0, BPSK, random codewords.
    pub fn new(code: &Code, seed: u64) -> DatasetSpec {
        DatasetSpec {
            rates: (0..code.rate_count()).collect(),
            snr_lo: 0.0,
            snr_hi: 6.0,
            modulation: Modulation::Bpsk,
            snr_convention: SnrConvention::EbN0,
            all_zero: false,
            seed,
        }
    }

    /// Frame `index` of stream `stream`; a pure function of the spec and both indices.
    pub fn frame<T: Scalar>(&self, code: &Code, stream: u64, index: u64) -> Result<TrainFrame<T>> {
        let mut rng = stream_rng(self.seed, stream_id(&[TRAIN_STREAM, stream, index]));
        let rate_index = self.rates[rng.random_range(0..self.rates.len())];
        let snr_db = if self.snr_hi > self.snr_lo {
            rng.random_range(self.snr_lo..=self.snr_hi)
        } else {
            self.snr_lo
        };
        let info: Vec<u8> = if self.all_zero {
            vec![0; code.encoder.info_len()]
        } else {
            (0..code.encoder.info_len()).map(|_| rng.random_range(0..2u8)).collect()
        };
        let cw = code.encode(&info, rate_index)?;
        let rate = code.ladder.rates[rate_index].rate_value;
        let cm = ChannelModel::new(self.modulation, snr_db, self.snr_convention, rate)?;
        let llr = transmit(code, &cw, &cm, &mut rng)?;
        Ok(TrainFrame { llr, bits: cw.bits, snr_db })
    }

    /// Batch `batch_index` of stream `stream`.
    pub fn batch<T: Scalar>(&self, code: &Code, stream: u64, batch_index: u64, size: usize) -> Result<TrainingBatch<T>> {
        let frames = (0..size as u64)
            .map(|i| self.frame(code, stream, batch_index * size as u64 + i))
            .collect::<Result<_>>()?;
        Ok(TrainingBatch { frames })
    }
}

/// `count` frames from stream 0.
pub fn generate_dataset<T: Scalar>(code: &Code, spec: &DatasetSpec, count: usize) -> Result<TrainingBatch<T>> {
    spec.batch(code, 0, 0, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_reproduces() {
        let code = Code::toy(4);
        let spec = DatasetSpec::new(&code, 42);
        let a: TrainingBatch<f64> = generate_dataset(&code, &spec, 20).unwrap();
        let b: TrainingBatch<f64> = generate_dataset(&code, &spec, 20).unwrap();
        assert_eq!(a, b);
        let other = DatasetSpec { seed: 43, ..spec };
        assert_ne!(a, generate_dataset(&code, &other, 20).unwrap());
    }

    #[test]
    fn rates_uniform_and_snr_in_range() {
        let code = Code::toy(4);
        let spec = DatasetSpec::new(&code, 1);
        let n = 30_000;
        let mut hist = [0usize; 3];
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for i in 0..n {
            let f: TrainFrame<f32> = spec.frame(&code, 9, i).unwrap();
            hist[f.llr.rate_index] += 1;
            lo = lo.min(f.snr_db);
            hi = hi.max(f.snr_db);
            let active = code.ladder.rates[f.llr.rate_index].active_vn_count;
            assert!(code.view(f.llr.rate_index).unwrap().syndrome_ok(&f.bits));
            assert!(f.bits[active..].iter().all(|&b| b == 0));
        }
        let expect = n as f64 / 3.0;
        let sd = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for h in hist {
            assert!((h as f64 - expect).abs() <= 3.0 * sd, "{hist:?}");
        }
        assert!(lo >= 0.0 && hi <= 6.0);
        assert!(lo < 0.01 && hi > 5.99);
    }

    #[test]
    fn all_zero_mode() {
        let code = Code::toy(4);
        let spec = DatasetSpec { all_zero: true, ..DatasetSpec::new(&code, 3) };
        let b: TrainingBatch<f64> = generate_dataset(&code, &spec, 10).unwrap();
        assert!(b.frames.iter().all(|f| f.bits.iter().all(|&x| x == 0)));
    }
}

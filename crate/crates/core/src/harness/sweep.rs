use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{stream_id, stream_rng, transmit, ChannelModel, LlrFrame, Modulation, SnrConvention};
use crate::code::Code;
use crate::decoder::{decode, Algorithm, DecodeTrace, DecoderConfig};
use crate::error::{Error, Result};
use crate::neural::NeuralDecoder;
use crate::scalar::Scalar;

/// Stream tag separating simulation draws from training draws.
const SIM_STREAM: u64 = 0x7369_6d00_0000_0000;
/// Frames simulated between stopping-rule checks. Fixed so that results do not
/// depend on the number of workers.
const CHUNK: usize = 512;

#[derive(Clone, Debug)]
pub enum DecoderDescriptor<T> {
    Classic(Algorithm<T>),
    Neural(NeuralDecoder<T>),
}

impl<T: Scalar> DecoderDescriptor<T> {
    pub fn label(&self) -> String {
        match self {
            DecoderDescriptor::Classic(a) => a.to_string(),
            DecoderDescriptor::Neural(n) => format!("rc-{}", n.config.variant),
        }
    }

    fn decode(&self, code: &Code, frame: &LlrFrame<T>, max_iter: usize, early_exit: bool) -> Result<DecodeTrace<T>> {
        match self {
            DecoderDescriptor::Classic(alg) => {
                let cfg = DecoderConfig::new(*alg, max_iter).early_exit(early_exit);
                Ok(decode(code.view(frame.rate_index)?, &frame.llr, &cfg))
            }
            DecoderDescriptor::Neural(dec) => {
                if max_iter > dec.config.l_max {
                    return Err(Error::Config(format!(
                        "model has {} layers, {max_iter} iterations requested",
                        dec.config.l_max
                    )));
                }
                let opts = crate::neural::ForwardOptions {
                    early_exit,
                    ..crate::neural::ForwardOptions::layers(max_iter)
                };
                Ok(dec.forward(code, frame, opts)?.trace)
            }
        }
    }
}

/// Which bits decide a frame error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scoring {
    InfoBits,
    AllBits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// Ladder indices.
    pub rates: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// Upper bound on frames per point.
    pub frames: usize,
    /// Stop a point once this many frame errors are seen (checked every chunk)
    /// and at least `min_frames` frames have run.
    pub min_errors: Option<usize>,
    pub min_frames: usize,
    pub max_iter: usize,
    pub early_exit: bool,
    pub modulation: Modulation,
    pub snr_convention: SnrConvention,
    pub seed: u64,
    pub scoring: Scoring,
}

impl ExperimentSpec {
    pub fn new(rates: Vec<usize>, snr_db: Vec<f64>, frames: usize, max_iter: usize, seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            rates,
            snr_db,
            frames,
            min_errors: None,
            min_frames: 0,
            max_iter,
            early_exit: false,
            modulation: Modulation::Bpsk,
            snr_convention: SnrConvention::EbN0,
            seed,
            scoring: Scoring::InfoBits,
        }
    }

    fn validate(&self, code: &Code) -> Result<()> {
        if self.snr_db.is_empty() || self.frames == 0 || self.max_iter == 0 {
            return Err(Error::Config("need a nonempty SNR grid, frames >= 1 and max_iter >= 1".into()));
        }
        for &r in &self.rates {
            code.ladder.get(r)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FerRecord {
    pub rate: f64,
    pub snr_db: f64,
    pub frames_run: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// Mean iterations used; in iteration curves, the iteration index.
    pub avg_iterations: f64,
    pub wall_time: f64,
}

impl FerRecord {
    fn new(rate: f64, snr_db: f64, t: Tally, bits_per_frame: usize, seconds: f64) -> FerRecord {
        let f = t.frames.max(1) as f64;
        FerRecord {
            rate,
            snr_db,
            frames_run: t.frames,
            frame_errors: t.frame_errors,
            bit_errors: t.bit_errors,
            fer: t.frame_errors as f64 / f,
            ber: t.bit_errors as f64 / (f * bits_per_frame as f64),
            avg_iterations: t.iterations as f64 / f,
            wall_time: seconds,
        }
    }

    /// Normal-approximation 95% interval on the FER.
    pub fn confidence_95(&self) -> (f64, f64) {
        let half = 1.96 * (self.fer * (1.0 - self.fer) / self.frames_run.max(1) as f64).sqrt();
        ((self.fer - half).max(0.0), (self.fer + half).min(1.0))
    }

    /// Binomial standard deviation of the FER estimate.
    pub fn sigma(&self) -> f64 {
        (self.fer * (1.0 - self.fer) / self.frames_run.max(1) as f64).sqrt()
    }
}

/// Integer counts of one curve at one point; summing integers keeps results
/// independent of the order frames finish in.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    iterations: u64,
}

fn scored_bits(code: &Code, rate: usize, scoring: Scoring) -> usize {
    match scoring {
        Scoring::InfoBits => code.ladder.info_bits,
        Scoring::AllBits => code.ladder.rates[rate].active_vn_count,
    }
}

fn simulate_frame<T: Scalar>(code: &Code, spec: &ExperimentSpec, rate: usize, cm: &ChannelModel, index: u64) -> Result<(Vec<u8>, LlrFrame<T>)> {
    let mut rng = stream_rng(spec.seed, stream_id(&[SIM_STREAM, rate as u64, cm.snr_db.to_bits(), index]));
    let info: Vec<u8> = (0..code.encoder.info_len()).map(|_| rand::Rng::random_range(&mut rng, 0..2u8)).collect();
    let cw = code.encode(&info, rate)?;
    let llr = transmit(code, &cw, cm, &mut rng)?;
    Ok((cw.bits, llr))
}

/// Runs frames in fixed-size chunks until the frame budget or the error target.
/// `score` maps one decoded frame to per-slot `(frame_error, bit_errors)`;
/// `slots` is how many curves are scored from each frame.
fn run_point<T: Scalar, F>(
    code: &Code,
    spec: &ExperimentSpec,
    rate: usize,
    cm: &ChannelModel,
    slots: usize,
    score: F,
) -> Result<Vec<Tally>>
where
    F: Fn(&[u8], &LlrFrame<T>) -> Result<(Vec<(bool, u64)>, usize)> + Sync,
{
    let mut frames = 0u64;
    let mut totals = vec![Tally::default(); slots];
    while (frames as usize) < spec.frames {
        let count = CHUNK.min(spec.frames - frames as usize);
        let results = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let (bits, llr) = simulate_frame::<T>(code, spec, rate, cm, frames + i)?;
                score(&bits, &llr)
            })
            .collect::<Result<Vec<_>>>()?;
        for (per_slot, iters) in results {
            for (t, (err, bit_err)) in totals.iter_mut().zip(per_slot) {
                t.frames += 1;
                t.frame_errors += u64::from(err);
                t.bit_errors += bit_err;
                t.iterations += iters as u64;
            }
        }
        frames += count as u64;
        if let Some(min) = spec.min_errors {
            if totals.last().map_or(0, |t| t.frame_errors) >= min as u64 && frames as usize >= spec.min_frames {
                break;
            }
        }
    }
    Ok(totals)
}

fn count_errors(decided: &[u8], truth: &[u8], n: usize) -> (bool, u64) {
    let wrong = decided[..n].iter().zip(&truth[..n]).filter(|(a, b)| a != b).count() as u64;
    (wrong > 0, wrong)
}

/// FER/BER for every (rate, SNR) pair of the spec.
pub fn fer_sweep<T: Scalar>(code: &Code, decoder: &DecoderDescriptor<T>, spec: &ExperimentSpec) -> Result<Vec<FerRecord>> {
    spec.validate(code)?;
    if let DecoderDescriptor::Neural(n) = decoder {
        n.check_code(code)?;
    }
    let mut out = Vec::new();
    for &rate in &spec.rates {
        let rate_value = code.ladder.rates[rate].rate_value;
        let n_scored = scored_bits(code, rate, spec.scoring);
        for &snr in &spec.snr_db {
            let start = Instant::now();
            let cm = ChannelModel::new(spec.modulation, snr, spec.snr_convention, rate_value)?;
            let totals = run_point::<T, _>(code, spec, rate, &cm, 1, |bits, llr| {
                let trace = decoder.decode(code, llr, spec.max_iter, spec.early_exit)?;
                Ok((vec![count_errors(&trace.decoded, bits, n_scored)], trace.iterations_used))
            })?;
            out.push(FerRecord::new(rate_value, snr, totals[0], n_scored, start.elapsed().as_secs_f64()));
        }
    }
    Ok(out)
}

/// FER after every iteration `0..=max_iter` at one SNR, scored from a single
/// decode per frame. Record `l` carries `l` in `avg_iterations`; record 0 is the
/// channel-only decision. The stopping rule watches the final iteration.
pub fn fer_vs_iteration<T: Scalar>(code: &Code, decoder: &DecoderDescriptor<T>, spec: &ExperimentSpec) -> Result<Vec<FerRecord>> {
    spec.validate(code)?;
    if let DecoderDescriptor::Neural(n) = decoder {
        n.check_code(code)?;
    }
    if spec.rates.len() != 1 || spec.snr_db.len() != 1 {
        return Err(Error::Config("iteration curves take exactly one rate and one SNR".into()));
    }
    let rate = spec.rates[0];
    let snr = spec.snr_db[0];
    let rate_value = code.ladder.rates[rate].rate_value;
    let n_scored = scored_bits(code, rate, spec.scoring);
    let start = Instant::now();
    let cm = ChannelModel::new(spec.modulation, snr, spec.snr_convention, rate_value)?;
    let slots = spec.max_iter + 1;
    let totals = run_point::<T, _>(code, spec, rate, &cm, slots, |bits, llr| {
        let trace = decoder.decode(code, llr, spec.max_iter, false)?;
        let per = (0..slots).map(|l| count_errors(trace.hard_at(l), bits, n_scored)).collect();
        Ok((per, trace.iterations_used))
    })?;
    let secs = start.elapsed().as_secs_f64();
    Ok(totals
        .iter()
        .enumerate()
        .map(|(l, &t)| FerRecord::new(rate_value, snr, Tally { iterations: l as u64 * t.frames, ..t }, n_scored, secs))
        .collect())
}

/// Environment variable bounding the number of worker threads.
pub const THREADS_ENV: &str = "RCLDPC_THREADS";

/// Runs `f` on a pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Worker count requested through `RCLDPC_THREADS`, if any.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Parses `lo:step:hi` or a comma list.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad SNR grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (lo, step, hi) = (nums[0], nums[1], nums[2]);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| lo + step * i as f64).map(|x| (x * 1e9).round() / 1e9).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

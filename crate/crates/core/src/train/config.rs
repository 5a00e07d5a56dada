use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{Modulation, SnrConvention};
use crate::code::Code;
use crate::error::{Error, Result};
use crate::neural::{Tying, Variant};

/// Trainer settings, readable from a `key = value` text file (`#` comments).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub code: Option<PathBuf>,
    pub z: usize,
    pub variant: Variant,
    pub tying: Tying,
    pub l_max: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub batches_per_stage: usize,
    /// Extra batches over all layers after the last greedy stage.
    pub joint_batches: usize,
    pub snr_lo: f64,
    pub snr_hi: f64,
    /// Target rate values; empty means every ladder rate.
    pub rates: Vec<f64>,
    pub seed: u64,
    pub deterministic: bool,
    pub all_zero: bool,
    pub modulation: Modulation,
    pub snr_convention: SnrConvention,
    /// Held-out frames scored after every stage.
    pub validation_frames: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            code: None,
            z: 4,
            variant: Variant::Nnms,
            tying: Tying::PerEdge,
            l_max: 20,
            lr: 1e-4,
            batch_size: 300,
            batches_per_stage: 2000,
            joint_batches: 0,
            snr_lo: 0.0,
            snr_hi: 6.0,
            rates: Vec::new(),
            seed: 1,
            deterministic: true,
            all_zero: false,
            modulation: Modulation::Bpsk,
            snr_convention: SnrConvention::EbN0,
            validation_frames: 2000,
        }
    }
}

fn parse<V: FromStr>(key: &str, v: &str) -> Result<V> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: "expected key = value".into() })?;
            cfg.set(key, value).map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "code" => self.code = Some(PathBuf::from(v)),
            "z" | "Z" => self.z = parse(key, v)?,
            "variant" => self.variant = v.parse()?,
            "tying" => self.tying = v.parse()?,
            "L_max" | "l_max" => self.l_max = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "batches_per_stage" => self.batches_per_stage = parse(key, v)?,
            "joint_batches" => self.joint_batches = parse(key, v)?,
            "snr_lo" => self.snr_lo = parse(key, v)?,
            "snr_hi" => self.snr_hi = parse(key, v)?,
            "rates" => {
                self.rates = if v.eq_ignore_ascii_case("all") {
                    Vec::new()
                } else {
                    v.split(',').map(|t| parse(key, t.trim())).collect::<Result<_>>()?
                }
            }
            "seed" => self.seed = parse(key, v)?,
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            "all_zero" => self.all_zero = parse_bool(key, v)?,
            "modulation" => self.modulation = v.parse()?,
            "snr_convention" => self.snr_convention = v.parse()?,
            "validation_frames" => self.validation_frames = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Ladder indices of the configured rates (nearest entry within 0.01).
    pub fn resolve_rates(&self, code: &Code) -> Result<Vec<usize>> {
        if self.rates.is_empty() {
            return Ok((0..code.rate_count()).collect());
        }
        self.rates
            .iter()
            .map(|&target| {
                code.ladder
                    .rates
                    .iter()
                    .position(|r| (r.rate_value - target).abs() <= 0.01)
                    .ok_or_else(|| Error::Config(format!("no ladder rate within 0.01 of {target}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 || self.batch_size == 0 {
            return Err(Error::Config("L_max and batch_size must be positive".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.snr_hi < self.snr_lo {
            return Err(Error::Config("need lr > 0 and snr_lo <= snr_hi".into()));
        }
        Ok(())
    }
}

//! Unrolled rate-compatible neural decoder with nested parameter sharing.

mod forward;
mod model_file;
mod params;

pub use forward::{forward_graph, sigmoid, ForwardOptions, ForwardOutput, LayerRecord, SoftOutput};
pub use model_file::{read_model, write_model};
pub use params::{activate, tie_parameters_pb, ParamView, ParameterMatrix, Tying, Variant};

use crate::channel::LlrFrame;
use crate::code::Code;
use crate::decoder::{DecodeTrace, DEFAULT_CLIP};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuralConfig<T> {
    pub variant: Variant,
    pub tying: Tying,
    pub l_max: usize,
    pub clip: T,
}

impl<T: Scalar> NeuralConfig<T> {
    pub fn new(variant: Variant, tying: Tying, l_max: usize) -> NeuralConfig<T> {
        NeuralConfig { variant, tying, l_max, clip: T::of(DEFAULT_CLIP) }
    }
}

/// A parameter matrix bound to the code it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralDecoder<T> {
    pub config: NeuralConfig<T>,
    pub params: ParameterMatrix<T>,
    pub code_fingerprint: String,
}

impl<T: Scalar> NeuralDecoder<T> {
    /// Freshly initialized (`w = 1`, `b = 0`) decoder for `code`.
    pub fn new(code: &Code, config: NeuralConfig<T>) -> NeuralDecoder<T> {
        NeuralDecoder {
            params: ParameterMatrix::identity_for(code, config.l_max, config.tying),
            config,
            code_fingerprint: code.fingerprint(),
        }
    }

    pub fn check_code(&self, code: &Code) -> Result<()> {
        let fp = code.fingerprint();
        if fp != self.code_fingerprint {
            return Err(Error::Fingerprint { model: self.code_fingerprint.clone(), code: fp });
        }
        Ok(())
    }

    /// Forward pass at the frame's rate.
    pub fn forward(&self, code: &Code, frame: &LlrFrame<T>, opts: ForwardOptions) -> Result<ForwardOutput<T>> {
        let g = code.view(frame.rate_index)?;
        let view = activate(&self.params, frame.rate_index)?;
        if frame.llr.len() != g.n {
            return Err(Error::Length { expected: g.n, got: frame.llr.len() });
        }
        Ok(forward_graph(g, &frame.llr, &view, self.config.variant, self.config.clip, opts))
    }

    /// Full-depth decode returning the per-iteration trace.
    pub fn decode(&self, code: &Code, frame: &LlrFrame<T>, early_exit: bool) -> Result<DecodeTrace<T>> {
        let opts = ForwardOptions { early_exit, ..ForwardOptions::layers(self.config.l_max) };
        Ok(self.forward(code, frame, opts)?.trace)
    }
}

//! Rate-compatible LDPC decoding with nested, parameter-shared neural decoders.
//!
//! A raptor-like quasi-cyclic code is described by a small base graph whose
//! leading rows and columns define a ladder of nested code rates. Every rate
//! decodes on a prefix of the Tanner graph's edges, so one unrolled neural
//! decoder whose parameter columns follow the canonical edge order serves all
//! rates: the highest rate reads the first block of columns, each lower rate
//! additionally reads the next block.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pick `f64`, which is what training and the acceptance checks use.

pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod neural;
pub mod scalar;
pub mod train;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LlrFrame64 = channel::LlrFrame<f64>;
pub type LlrFrame32 = channel::LlrFrame<f32>;
pub type DecodeTrace64 = decoder::DecodeTrace<f64>;
pub type DecoderConfig64 = decoder::DecoderConfig<f64>;
pub type ParameterMatrix64 = neural::ParameterMatrix<f64>;
pub type ParameterMatrix32 = neural::ParameterMatrix<f32>;
pub type NeuralDecoder64 = neural::NeuralDecoder<f64>;
pub type NeuralDecoder32 = neural::NeuralDecoder<f32>;

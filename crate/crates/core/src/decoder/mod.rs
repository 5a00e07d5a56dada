//! Classic iterative decoders on a (possibly rate-masked) Tanner graph:
//! belief propagation, min-sum and normalized min-sum, flooding schedule.

mod classic;

pub use classic::*;

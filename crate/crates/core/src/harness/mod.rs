//! Monte-Carlo FER evaluation, complexity accounting and result files.

mod complexity;
mod output;
mod sweep;

pub use complexity::{complexity_report, ComplexityReport, ComplexityRow};
pub use output::{emit_csv, emit_svg, parse_csv, CSV_HEADER};
pub use sweep::{
    fer_sweep, fer_vs_iteration, parse_snr_grid, with_workers, workers_from_env, DecoderDescriptor, ExperimentSpec, FerRecord,
    Scoring, THREADS_ENV,
};

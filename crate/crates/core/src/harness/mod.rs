//! File I/O and experiment orchestration around the solvers.

pub mod experiment;
pub mod pgm;
pub mod phantom;

pub use experiment::{
    best_and_final, degrade, parse_trace_csv, run_experiment, run_on_images, trace_csv, ExperimentConfig,
    MuChoice, Summary, TraceRow, NOISE_GENERATOR, TRACE_HEADER,
};
pub use pgm::{decode_pgm, encode_pgm16, read_image, write_pgm16};
pub use phantom::{blocks_phantom, composite_phantom, phantom, PhantomKind};

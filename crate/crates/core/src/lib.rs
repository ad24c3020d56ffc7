//! Total-variation deconvolution under periodic boundary conditions.
//!
//! Solves `min_u Σᵢ‖Dᵢu‖ + μ/2‖Ku − f‖²` with two splitting schemes, a
//! quadratic penalty with β continuation and an augmented Lagrangian
//! alternating direction method, and records every intermediate iterate
//! together with its scores. Each iterate can be split into a piecewise
//! constant part and a smooth Tikhonov part, so a mixed-regularization
//! iterate can be picked over the pure-TV limit.
//!
//! ```
//! use tvdeconv::{degrade, make_kernel, composite_phantom, KernelSpec, SolverConfig, SolverKind};
//!
//! let truth = composite_phantom(32);
//! let k = make_kernel(KernelSpec::Average(5)).unwrap();
//! let f = degrade(&truth, &k, 0.01, 7).unwrap();
//! let trace = tvdeconv::solve(SolverKind::PenaltyContinuation, &f, &k, &SolverConfig::default(), Some(&truth)).unwrap();
//! assert_eq!(trace.records.len(), 11);
//! ```

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod error;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod shrinkage;
pub mod solvers;
pub mod spectral;

pub use decomposition::{decompose, tikhonov_energy, Decomposition};
pub use error::{Result, TvError};
pub use grid::{
    convolve_periodic, divergence_adjoint, forward_diff, make_kernel, total_variation, GradientField, Image, Kernel,
    KernelSpec, TvVariant,
};
pub use harness::{composite_phantom, degrade, run_experiment, ExperimentConfig};
pub use metrics::{best_iterate, rel_change, snr_db, BestBy, SNR_CAP_DB};
pub use shrinkage::{shrink, shrink_aniso, shrink_iso};
pub use solvers::{
    augmented_lagrangian_solve, eval_penalty_objective, eval_tv_objective, penalty_continuation_solve,
    penalty_inner_loop, solve, IterateRecord, IterateTrace, Recorder, SolverConfig, SolverKind,
};
pub use spectral::{build_cache, solve_u, SpectralCache};

//! Degradation and end-to-end experiment runs: blur + noise a ground truth,
//! solve, and write the trace, images and summary to an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomposition::decompose;
use crate::error::{Result, TvError};
use crate::grid::{convolve_periodic, make_kernel, Image, Kernel, KernelSpec, TvVariant};
use crate::metrics::{best_iterate, BestBy};
use crate::solvers::{
    augmented_lagrangian_with_cache, auto_mu, default_beta_schedule, penalty_continuation_with_cache,
    IterateRecord, IterateTrace, SolverConfig, SolverKind,
};
use crate::spectral::build_cache;

use super::pgm::{read_image, write_pgm16};

/// Identity of the noise source, recorded in every summary.
pub const NOISE_GENERATOR: &str =
    "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9) -> StandardNormal ziggurat (rand_distr 0.5), row-major";

/// Largest fidelity weight chosen automatically (reached when `sigma = 0`).
pub const AUTO_MU_MAX: f64 = 1e300;

pub const TRACE_HEADER: &str =
    "stage_index,inner_iter,beta,snr_db,objective_tv,penalty_objective,constraint_residual,rel_change";

/// `f = K u0 + ω` with `ω` i.i.d. `N(0, sigma²)` drawn from `seed`.
pub fn degrade(u0: &Image, k: &Kernel, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(TvError::InvalidConfig(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let blurred = convolve_periodic(u0, k)?;
    if sigma == 0.0 {
        return Ok(blurred);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noisy = blurred
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect();
    Ok(Image::from_raw(u0.size(), noisy))
}

/// Fidelity weight: explicit, or `0.05/σ²` capped at [`AUTO_MU_MAX`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuChoice {
    Auto,
    Fixed(f64),
}

impl MuChoice {
    pub fn resolve(self, sigma: f64) -> f64 {
        match self {
            MuChoice::Fixed(mu) => mu,
            MuChoice::Auto if sigma == 0.0 => AUTO_MU_MAX,
            MuChoice::Auto => auto_mu(sigma).min(AUTO_MU_MAX),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Ground-truth image.
    pub input_path: PathBuf,
    /// Already degraded observation; when set, no synthetic degradation is applied.
    pub observed_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub solver: SolverKind,
    pub kernel: KernelSpec,
    pub sigma: f64,
    pub mu: MuChoice,
    pub beta_schedule: Vec<f64>,
    pub beta_fixed: f64,
    pub seed: u64,
    pub tv_variant: TvVariant,
    pub save_intermediates: bool,
    pub tol: f64,
    pub max_inner_iters: usize,
    pub max_multiplier_updates: usize,
    pub record_inner: bool,
}

impl ExperimentConfig {
    pub fn new(input_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let defaults = SolverConfig::default();
        ExperimentConfig {
            input_path: input_path.into(),
            observed_path: None,
            output_dir: output_dir.into(),
            solver: SolverKind::PenaltyContinuation,
            kernel: KernelSpec::Average(9),
            sigma: 0.01,
            mu: MuChoice::Auto,
            beta_schedule: default_beta_schedule(),
            beta_fixed: defaults.beta_fixed,
            seed: 0,
            tv_variant: TvVariant::Isotropic,
            save_intermediates: false,
            tol: defaults.tol,
            max_inner_iters: defaults.max_inner_iters,
            max_multiplier_updates: defaults.max_multiplier_updates,
            record_inner: false,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            mu: self.mu.resolve(self.sigma),
            tv_variant: self.tv_variant,
            tol: self.tol,
            max_inner_iters: self.max_inner_iters,
            beta_schedule: self.beta_schedule.clone(),
            beta_fixed: self.beta_fixed,
            max_multiplier_updates: self.max_multiplier_updates,
            record_inner: self.record_inner,
            keep_multipliers: false,
        }
    }
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Summary {
    pub solver: SolverKind,
    pub n: usize,
    pub mu: f64,
    pub record_count: usize,
    pub converged: bool,
    pub initial_snr_db: Option<f64>,
    /// Record index and stage of the highest-SNR iterate.
    pub best_index: usize,
    pub best_stage: usize,
    pub best_snr_db: f64,
    pub final_stage: usize,
    pub final_snr_db: f64,
    pub best_integrability_residual: f64,
    pub final_integrability_residual: f64,
}

impl Summary {
    pub fn snr_gain_db(&self) -> f64 {
        self.best_snr_db - self.final_snr_db
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "solver: {}", self.solver);
        let _ = writeln!(s, "image size: {0}x{0}", self.n);
        let _ = writeln!(s, "mu: {}", self.mu);
        let _ = writeln!(s, "records: {}", self.record_count);
        let _ = writeln!(s, "converged: {}", self.converged);
        if let Some(snr) = self.initial_snr_db {
            let _ = writeln!(s, "observation snr_db: {snr:.4}");
        }
        let _ = writeln!(s, "best stage: {} (snr_db {:.4})", self.best_stage, self.best_snr_db);
        let _ = writeln!(s, "final stage: {} (snr_db {:.4})", self.final_stage, self.final_snr_db);
        let _ = writeln!(s, "best - final snr_db: {:.4}", self.snr_gain_db());
        let _ = writeln!(
            s,
            "u1 integrability residual max|w - Du1|: best {:.6e}, final {:.6e}",
            self.best_integrability_residual, self.final_integrability_residual
        );
        let _ = writeln!(s, "u1 images are written with a +0.5 offset");
        let _ = writeln!(s, "noise generator: {NOISE_GENERATOR}");
        s
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v}")
}

/// Renders `trace.csv`: the fixed header plus one row per record.
pub fn trace_csv(trace: &IterateTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let snr = r.snr_db.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.stage_index,
            r.inner_iter,
            fmt_f64(r.beta),
            snr,
            fmt_f64(r.objective_tv),
            fmt_f64(r.penalty_objective),
            fmt_f64(r.constraint_residual),
            fmt_f64(r.rel_change),
        );
    }
    out
}

/// One parsed `trace.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub stage_index: usize,
    pub inner_iter: usize,
    pub beta: f64,
    pub snr_db: Option<f64>,
    pub objective_tv: f64,
    pub penalty_objective: f64,
    pub constraint_residual: f64,
    pub rel_change: f64,
}

pub fn parse_trace_csv(text: &str, path: &Path) -> Result<Vec<TraceRow>> {
    let fail = |reason: String| TvError::Format { path: path.to_path_buf(), reason };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(fail("missing or unexpected trace header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(fail(format!("row {} has {} columns", i + 1, cols.len())));
        }
        let num = |j: usize| -> Result<f64> {
            cols[j].trim().parse().map_err(|_| fail(format!("row {}: bad number {:?}", i + 1, cols[j])))
        };
        let int = |j: usize| -> Result<usize> {
            cols[j].trim().parse().map_err(|_| fail(format!("row {}: bad integer {:?}", i + 1, cols[j])))
        };
        rows.push(TraceRow {
            stage_index: int(0)?,
            inner_iter: int(1)?,
            beta: num(2)?,
            snr_db: if cols[3].trim().is_empty() { None } else { Some(num(3)?) },
            objective_tv: num(4)?,
            penalty_objective: num(5)?,
            constraint_residual: num(6)?,
            rel_change: num(7)?,
        });
    }
    Ok(rows)
}

/// Best-vs-final report over parsed trace rows: `(best row, final row)`.
pub fn best_and_final(rows: &[TraceRow]) -> Result<(usize, usize)> {
    if rows.is_empty() {
        return Err(TvError::MissingScores("trace"));
    }
    let snr: Option<Vec<f64>> = rows.iter().map(|r| r.snr_db).collect();
    let snr = snr.ok_or(TvError::MissingScores("SNR"))?;
    let best = crate::metrics::argmax_first(&snr).ok_or(TvError::MissingScores("SNR"))?;
    Ok((best, rows.len() - 1))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| TvError::io(format!("writing {}", path.display()), e))
}

fn offset(u: &Image, by: f64) -> Image {
    u.map(|v| v + by)
}

/// Loads, degrades, solves and writes every artifact of one run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    let truth = read_image(&cfg.input_path)?;
    let kernel = make_kernel(cfg.kernel)?;
    let observed = match &cfg.observed_path {
        Some(p) => {
            let f = read_image(p)?;
            f.check_same_size(truth.size())?;
            f
        }
        None => degrade(&truth, &kernel, cfg.sigma, cfg.seed)?,
    };
    let (summary, _) = run_on_images(cfg, &truth, &observed, &kernel)?;
    Ok(summary)
}

/// [`run_experiment`] on in-memory images; also returns the trace.
pub fn run_on_images(
    cfg: &ExperimentConfig,
    truth: &Image,
    observed: &Image,
    kernel: &Kernel,
) -> Result<(Summary, IterateTrace)> {
    let n = truth.size();
    observed.check_same_size(n)?;
    let solver_cfg = cfg.solver_config();
    let cache = build_cache(kernel, n)?;
    let trace = match cfg.solver {
        SolverKind::PenaltyContinuation => penalty_continuation_with_cache(observed, &cache, &solver_cfg, Some(truth))?,
        SolverKind::AugmentedLagrangian => augmented_lagrangian_with_cache(observed, &cache, &solver_cfg, Some(truth))?,
    };

    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| TvError::io(format!("creating {}", out.display()), e))?;
    write_file(&out.join("trace.csv"), trace_csv(&trace).as_bytes())?;
    write_pgm16(&out.join("observed.pgm"), observed)?;
    if cfg.save_intermediates {
        for r in trace.stage_records() {
            write_pgm16(&out.join(format!("iter_{:04}.pgm", r.stage_index)), &r.u)?;
        }
    }

    let best_index = best_iterate(&trace, BestBy::Snr)?;
    let best = &trace.records[best_index];
    let last: &IterateRecord = trace.last().ok_or(TvError::MissingScores("trace"))?;
    let best_parts = decompose(&best.u, &best.w, &cache)?;
    let final_parts = decompose(&last.u, &last.w, &cache)?;
    write_pgm16(&out.join("best.pgm"), &best.u)?;
    write_pgm16(&out.join("final.pgm"), &last.u)?;
    write_pgm16(&out.join("best_u1.pgm"), &offset(&best_parts.u1, 0.5))?;
    write_pgm16(&out.join("best_u2.pgm"), &best_parts.u2)?;
    write_pgm16(&out.join("final_u1.pgm"), &offset(&final_parts.u1, 0.5))?;
    write_pgm16(&out.join("final_u2.pgm"), &final_parts.u2)?;

    let summary = Summary {
        solver: cfg.solver,
        n,
        mu: solver_cfg.mu,
        record_count: trace.records.len(),
        converged: trace.converged,
        initial_snr_db: trace.initial_snr_db,
        best_index,
        best_stage: best.stage_index,
        best_snr_db: best.snr_db.unwrap_or(f64::NAN),
        final_stage: last.stage_index,
        final_snr_db: last.snr_db.unwrap_or(f64::NAN),
        best_integrability_residual: best_parts.integrability_residual,
        final_integrability_residual: final_parts.integrability_residual,
    };
    write_file(&out.join("summary.txt"), summary.to_text().as_bytes())?;
    Ok((summary, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_delta_degrade_is_identity() {
        let u = Image::from_fn(8, |r, c| (r + 2 * c) as f64 / 30.0);
        let k = make_kernel(KernelSpec::Delta).unwrap();
        assert_eq!(degrade(&u, &k, 0.0, 9).unwrap(), u);
    }

    #[test]
    fn same_seed_same_noise() {
        let u = Image::constant(16, 0.5);
        let k = make_kernel(KernelSpec::Average(3)).unwrap();
        let a = degrade(&u, &k, 0.01, 42).unwrap();
        let b = degrade(&u, &k, 0.01, 42).unwrap();
        let c = degrade(&u, &k, 0.01, 43).unwrap();
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn negative_sigma_rejected() {
        let k = make_kernel(KernelSpec::Delta).unwrap();
        assert!(degrade(&Image::zeros(4), &k, -0.1, 0).is_err());
    }

    #[test]
    fn mu_choice() {
        assert!((MuChoice::Auto.resolve(0.01) - 500.0).abs() < 1e-9);
        assert_eq!(MuChoice::Auto.resolve(0.0), AUTO_MU_MAX);
        assert_eq!(MuChoice::Fixed(3.0).resolve(0.5), 3.0);
    }

    #[test]
    fn trace_csv_parses_back() {
        let text = format!("{TRACE_HEADER}\n0,3,1,12.5,1.25,1,0.5,0.001\n1,2,2,,1,0.75,0.25,1e-5\n");
        let rows = parse_trace_csv(&text, Path::new("t.csv")).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].snr_db, Some(12.5));
        assert_eq!(rows[1].snr_db, None);
        assert_eq!(rows[1].rel_change, 1e-5);
        assert!(parse_trace_csv("a,b\n", Path::new("t.csv")).is_err());
    }
}

//! The two splitting schemes for the TV/L2 model
//! `min_u Σ‖Dᵢu‖ + μ/2‖Ku − f‖²`:
//!
//! * quadratic penalty with continuation: for each β of an ascending schedule,
//!   alternate the w-step and u-step of `Q(u, w, β) = Σ‖wᵢ‖ + β/2 Σ‖wᵢ − Dᵢu‖² + μ/2‖Ku − f‖²`
//!   until the iterate settles, warm-starting the next β from the result;
//! * augmented Lagrangian / alternating direction method: β fixed, one w-step,
//!   one u-step and one multiplier update `λ ← λ − β(w − Du)` per iteration.
//!
//! Both record every stage into an [`IterateTrace`], since intermediate
//! iterates are solutions of mixed TV + Tikhonov models and may score better
//! than the final one.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, TvError};
use crate::grid::{forward_diff, total_variation, GradientField, Image, Kernel, TvVariant};
use crate::metrics::{rel_change, snr_db};
use crate::shrinkage::shrink;
use crate::spectral::{build_cache, solve_u, SpectralCache};

/// Which splitting scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Quadratic penalty with β continuation (`ftvd3` on the command line).
    PenaltyContinuation,
    /// Augmented Lagrangian with fixed β (`ftvd4` on the command line).
    AugmentedLagrangian,
}

impl FromStr for SolverKind {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ftvd3" | "penalty" => Ok(SolverKind::PenaltyContinuation),
            "ftvd4" | "admm" => Ok(SolverKind::AugmentedLagrangian),
            other => Err(TvError::BadSpec(format!(
                "unknown solver {other:?}, expected ftvd3 or ftvd4"
            ))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::PenaltyContinuation => "ftvd3",
            SolverKind::AugmentedLagrangian => "ftvd4",
        })
    }
}

/// `{2⁰, 2¹, …, 2¹⁰}`.
pub fn default_beta_schedule() -> Vec<f64> {
    (0..=10).map(|p| f64::powi(2.0, p)).collect()
}

/// Empirical fidelity weight for noise level `sigma`: `0.05 / σ²`.
pub fn auto_mu(sigma: f64) -> f64 {
    0.05 / (sigma * sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Fidelity weight μ.
    pub mu: f64,
    pub tv_variant: TvVariant,
    /// Relative-change stopping threshold.
    pub tol: f64,
    /// Cap on w/u alternations per β of the penalty solver.
    pub max_inner_iters: usize,
    /// Ascending β values for the penalty solver.
    pub beta_schedule: Vec<f64>,
    /// β of the augmented Lagrangian solver.
    pub beta_fixed: f64,
    pub max_multiplier_updates: usize,
    /// Also record every inner iteration of the penalty solver.
    pub record_inner: bool,
    /// Store λ in augmented Lagrangian records.
    pub keep_multipliers: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: auto_mu(0.01),
            tv_variant: TvVariant::Isotropic,
            tol: 1e-4,
            max_inner_iters: 100,
            beta_schedule: default_beta_schedule(),
            beta_fixed: 10.0,
            max_multiplier_updates: 500,
            record_inner: false,
            keep_multipliers: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TvError::InvalidConfig(msg));
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_inner_iters == 0 || self.max_multiplier_updates == 0 {
            return bad("iteration caps must be positive".into());
        }
        if self.beta_schedule.is_empty() {
            return bad("beta schedule is empty".into());
        }
        if self.beta_schedule.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return bad("beta schedule entries must be positive".into());
        }
        if self.beta_schedule.windows(2).any(|p| p[1] <= p[0]) {
            return bad("beta schedule must be strictly ascending".into());
        }
        if !(self.beta_fixed > 0.0) || !self.beta_fixed.is_finite() {
            return bad(format!("beta_fixed must be positive, got {}", self.beta_fixed));
        }
        Ok(())
    }
}

/// One recorded iterate with its scores.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    /// Continuation step (penalty) or multiplier-update index (ADMM), from 0.
    pub stage_index: usize,
    /// Inner iteration count: the iteration number for inner records, the
    /// number of iterations used for stage records.
    pub inner_iter: usize,
    pub beta: f64,
    pub u: Image,
    pub w: GradientField,
    pub lambda: Option<GradientField>,
    pub snr_db: Option<f64>,
    /// `Σ‖Dᵢu‖ + μ/2‖Ku − f‖²`.
    pub objective_tv: f64,
    /// `Σ‖wᵢ‖ + β/2 Σ‖wᵢ − Dᵢu‖² + μ/2‖Ku − f‖²`.
    pub penalty_objective: f64,
    /// `maxᵢ ‖wᵢ − Dᵢu‖₂`.
    pub constraint_residual: f64,
    pub rel_change: f64,
    /// Marks the record that closes a stage.
    pub stage_end: bool,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub solver: SolverKind,
    pub records: Vec<IterateRecord>,
    pub config: SolverConfig,
    pub converged: bool,
    /// SNR of the observation itself, when a ground truth was supplied.
    pub initial_snr_db: Option<f64>,
}

impl IterateTrace {
    pub fn stage_records(&self) -> impl Iterator<Item = &IterateRecord> {
        self.records.iter().filter(|r| r.stage_end)
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    pub fn final_u(&self) -> Option<&Image> {
        self.records.last().map(|r| &r.u)
    }
}

/// Objective of the TV/L2 model at `u`.
pub fn eval_tv_objective(
    u: &Image,
    f: &Image,
    cache: &SpectralCache,
    mu: f64,
    variant: TvVariant,
) -> Result<f64> {
    f.check_same_size(u.size())?;
    let tv = total_variation(&forward_diff(u), variant);
    Ok(tv + fidelity(u, f, cache, mu)?)
}

/// Penalty objective `Q(u, w, β)`.
pub fn eval_penalty_objective(
    u: &Image,
    w: &GradientField,
    f: &Image,
    beta: f64,
    cache: &SpectralCache,
    mu: f64,
    variant: TvVariant,
) -> Result<f64> {
    w.check_same_size(u.size())?;
    let gap = w.axpy(-1.0, &forward_diff(u));
    Ok(total_variation(w, variant) + 0.5 * beta * gap.dot(&gap) + fidelity(u, f, cache, mu)?)
}

fn fidelity(u: &Image, f: &Image, cache: &SpectralCache, mu: f64) -> Result<f64> {
    let r = &cache.apply_kernel(u)? - f;
    Ok(0.5 * mu * r.dot(&r))
}

/// Collects records while a solver runs.
#[derive(Debug)]
pub struct Recorder<'a> {
    ground_truth: Option<&'a Image>,
    record_inner: bool,
    stage_index: usize,
    records: Vec<IterateRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(ground_truth: Option<&'a Image>, record_inner: bool) -> Self {
        Recorder {
            ground_truth,
            record_inner,
            stage_index: 0,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[IterateRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<IterateRecord> {
        self.records
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        ctx: &Problem<'_>,
        inner_iter: usize,
        beta: f64,
        u: &Image,
        w: &GradientField,
        lambda: Option<&GradientField>,
        rel_change: f64,
        stage_end: bool,
    ) -> Result<()> {
        let du = forward_diff(u);
        let fid = fidelity(u, ctx.f, ctx.cache, ctx.cfg.mu)?;
        let gap = w.axpy(-1.0, &du);
        let variant = ctx.cfg.tv_variant;
        let snr = match self.ground_truth {
            Some(gt) => Some(snr_db(u, gt)?),
            None => None,
        };
        self.records.push(IterateRecord {
            stage_index: self.stage_index,
            inner_iter,
            beta,
            u: u.clone(),
            w: w.clone(),
            lambda: lambda.cloned(),
            snr_db: snr,
            objective_tv: total_variation(&du, variant) + fid,
            penalty_objective: total_variation(w, variant) + 0.5 * beta * gap.dot(&gap) + fid,
            constraint_residual: gap.max_pixel_norm(),
            rel_change,
            stage_end,
        });
        Ok(())
    }
}

struct Problem<'a> {
    f: &'a Image,
    cfg: &'a SolverConfig,
    cache: &'a SpectralCache,
}

/// Result of one penalty subproblem.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub u: Image,
    pub w: GradientField,
    pub iterations: usize,
    pub rel_change: f64,
    pub converged: bool,
}

/// Alternating minimization of the penalty objective for a fixed β, starting
/// from `init_u`. Stops once the relative change of `u` drops below `cfg.tol`
/// or after `cfg.max_inner_iters` alternations.
pub fn penalty_inner_loop(
    f: &Image,
    beta: f64,
    init_u: &Image,
    cfg: &SolverConfig,
    cache: &SpectralCache,
    recorder: &mut Recorder<'_>,
) -> Result<InnerOutcome> {
    if !(beta > 0.0) {
        return Err(TvError::InvalidConfig(format!("beta must be positive, got {beta}")));
    }
    let n = cache.size();
    f.check_same_size(n)?;
    init_u.check_same_size(n)?;
    let ctx = Problem { f, cfg, cache };
    let zero = GradientField::zeros(n);
    let mut u = init_u.clone();
    let mut w = zero.clone();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_inner_iters {
        w = shrink(&forward_diff(&u), 1.0 / beta, cfg.tv_variant)?;
        let next = solve_u(f, &w, &zero, cfg.mu, beta, cache)?;
        change = rel_change(&next, &u);
        u = next;
        iterations += 1;
        if recorder.record_inner {
            recorder.push(&ctx, iterations, beta, &u, &w, None, change, false)?;
        }
        if change < cfg.tol {
            break;
        }
    }
    Ok(InnerOutcome {
        u,
        w,
        iterations,
        rel_change: change,
        converged: change < cfg.tol,
    })
}

/// Quadratic penalty with continuation over `cfg.beta_schedule`, starting from
/// `u = f`. One stage record per β.
pub fn penalty_continuation_solve(
    f: &Image,
    k: &Kernel,
    cfg: &SolverConfig,
    ground_truth: Option<&Image>,
) -> Result<IterateTrace> {
    cfg.validate()?;
    let cache = build_cache(k, f.size())?;
    penalty_continuation_with_cache(f, &cache, cfg, ground_truth)
}

pub fn penalty_continuation_with_cache(
    f: &Image,
    cache: &SpectralCache,
    cfg: &SolverConfig,
    ground_truth: Option<&Image>,
) -> Result<IterateTrace> {
    cfg.validate()?;
    f.check_same_size(cache.size())?;
    if let Some(gt) = ground_truth {
        gt.check_same_size(cache.size())?;
    }
    let ctx = Problem { f, cfg, cache };
    let mut recorder = Recorder::new(ground_truth, cfg.record_inner);
    let mut u = f.clone();
    let mut converged = false;
    for (stage, &beta) in cfg.beta_schedule.iter().enumerate() {
        recorder.stage_index = stage;
        let out = penalty_inner_loop(f, beta, &u, cfg, cache, &mut recorder)?;
        if cfg.record_inner {
            if let Some(last) = recorder.records.last_mut() {
                last.stage_end = true;
            }
        } else {
            recorder.push(&ctx, out.iterations, beta, &out.u, &out.w, None, out.rel_change, true)?;
        }
        converged = out.converged;
        u = out.u;
    }
    Ok(IterateTrace {
        solver: SolverKind::PenaltyContinuation,
        records: recorder.into_records(),
        config: cfg.clone(),
        converged,
        initial_snr_db: initial_snr(f, ground_truth)?,
    })
}

/// The augmented Lagrangian solver only stops once `maxᵢ‖wᵢ − Dᵢu‖` is at most
/// this multiple of `tol`, in addition to the relative-change test.
pub const FEASIBILITY_FACTOR: f64 = 10.0;

/// Alternating direction method on the augmented Lagrangian with β fixed at
/// `cfg.beta_fixed`, starting from `u = f`, `λ = 0`. One record per iteration;
/// stops when the relative change is below `tol` and the constraint residual
/// is below `FEASIBILITY_FACTOR * tol`, or after `max_multiplier_updates`.
pub fn augmented_lagrangian_solve(
    f: &Image,
    k: &Kernel,
    cfg: &SolverConfig,
    ground_truth: Option<&Image>,
) -> Result<IterateTrace> {
    cfg.validate()?;
    let cache = build_cache(k, f.size())?;
    augmented_lagrangian_with_cache(f, &cache, cfg, ground_truth)
}

pub fn augmented_lagrangian_with_cache(
    f: &Image,
    cache: &SpectralCache,
    cfg: &SolverConfig,
    ground_truth: Option<&Image>,
) -> Result<IterateTrace> {
    cfg.validate()?;
    let n = cache.size();
    f.check_same_size(n)?;
    if let Some(gt) = ground_truth {
        gt.check_same_size(n)?;
    }
    let ctx = Problem { f, cfg, cache };
    let beta = cfg.beta_fixed;
    let mut recorder = Recorder::new(ground_truth, false);
    let mut u = f.clone();
    let mut du = forward_diff(&u);
    let mut lambda = GradientField::zeros(n);
    let mut converged = false;
    for k in 0..cfg.max_multiplier_updates {
        recorder.stage_index = k;
        let w = shrink(&du.axpy(1.0 / beta, &lambda), 1.0 / beta, cfg.tv_variant)?;
        let next = solve_u(f, &w, &lambda, cfg.mu, beta, cache)?;
        du = forward_diff(&next);
        lambda = lambda.axpy(-beta, &w.axpy(-1.0, &du));
        let change = rel_change(&next, &u);
        u = next;
        let kept = cfg.keep_multipliers.then_some(&lambda);
        recorder.push(&ctx, 1, beta, &u, &w, kept, change, true)?;
        let residual = recorder.records.last().map_or(f64::INFINITY, |r| r.constraint_residual);
        if change < cfg.tol && residual <= FEASIBILITY_FACTOR * cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(IterateTrace {
        solver: SolverKind::AugmentedLagrangian,
        records: recorder.into_records(),
        config: cfg.clone(),
        converged,
        initial_snr_db: initial_snr(f, ground_truth)?,
    })
}

/// Runs the requested scheme.
pub fn solve(
    kind: SolverKind,
    f: &Image,
    k: &Kernel,
    cfg: &SolverConfig,
    ground_truth: Option<&Image>,
) -> Result<IterateTrace> {
    match kind {
        SolverKind::PenaltyContinuation => penalty_continuation_solve(f, k, cfg, ground_truth),
        SolverKind::AugmentedLagrangian => augmented_lagrangian_solve(f, k, cfg, ground_truth),
    }
}

fn initial_snr(f: &Image, ground_truth: Option<&Image>) -> Result<Option<f64>> {
    ground_truth.map(|gt| snr_db(f, gt)).transpose()
}

//! Command-line front end: synthetic ground truth, degradation, deblurring
//! runs and trace reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tvdeconv::harness::{
    best_and_final, degrade, parse_trace_csv, phantom, read_image, run_experiment, write_pgm16, ExperimentConfig,
    MuChoice, PhantomKind,
};
use tvdeconv::solvers::default_beta_schedule;
use tvdeconv::{make_kernel, KernelSpec, SolverKind, TvError, TvVariant};

#[derive(Parser)]
#[command(name = "tvdeconv", version, about = "Total-variation deconvolution with iterate tracing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic ground-truth image.
    Phantom {
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// composite | blocks
        #[arg(long, default_value = "composite")]
        kind: PhantomKind,
        #[arg(long)]
        output: PathBuf,
    },
    /// Blur and add Gaussian noise to an image.
    Degrade {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// average:<m> | gaussian:<m>:<s> | delta
        #[arg(long, default_value = "average:9")]
        kernel: KernelSpec,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Degrade a ground truth (or load an observation), solve, and write the trace and images.
    Deblur(DeblurArgs),
    /// Summarize a trace.csv: best stage by SNR against the final stage.
    Report {
        /// trace.csv, or a directory containing one
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Args)]
struct DeblurArgs {
    /// Ground-truth image (PGM or PNG).
    #[arg(long)]
    input: PathBuf,
    /// Use this observation instead of degrading the input.
    #[arg(long)]
    observed: Option<PathBuf>,
    #[arg(long)]
    output_dir: PathBuf,
    /// ftvd3 (penalty + continuation) | ftvd4 (augmented Lagrangian)
    #[arg(long, default_value = "ftvd3")]
    solver: SolverKind,
    #[arg(long, default_value = "average:9")]
    kernel: KernelSpec,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    /// Fidelity weight, or "auto" for 0.05/sigma^2.
    #[arg(long, default_value = "auto")]
    mu: String,
    /// Comma-separated ascending list; defaults to 1,2,4,...,1024.
    #[arg(long, value_delimiter = ',')]
    beta_schedule: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0)]
    beta_fixed: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// iso | aniso
    #[arg(long, default_value = "iso")]
    tv_variant: TvVariant,
    #[arg(long)]
    save_intermediates: bool,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_inner_iters: usize,
    #[arg(long, default_value_t = 500)]
    max_multiplier_updates: usize,
    /// Also record every inner iteration of ftvd3.
    #[arg(long)]
    record_inner: bool,
}

impl DeblurArgs {
    fn into_config(self) -> Result<ExperimentConfig, TvError> {
        let mu = match self.mu.as_str() {
            "auto" => MuChoice::Auto,
            v => MuChoice::Fixed(
                v.parse()
                    .map_err(|_| TvError::InvalidConfig(format!("--mu expects a number or auto, got {v:?}")))?,
            ),
        };
        let mut cfg = ExperimentConfig::new(self.input, self.output_dir);
        cfg.observed_path = self.observed;
        cfg.solver = self.solver;
        cfg.kernel = self.kernel;
        cfg.sigma = self.sigma;
        cfg.mu = mu;
        cfg.beta_schedule = self.beta_schedule.unwrap_or_else(default_beta_schedule);
        cfg.beta_fixed = self.beta_fixed;
        cfg.seed = self.seed;
        cfg.tv_variant = self.tv_variant;
        cfg.save_intermediates = self.save_intermediates;
        cfg.tol = self.tol;
        cfg.max_inner_iters = self.max_inner_iters;
        cfg.max_multiplier_updates = self.max_multiplier_updates;
        cfg.record_inner = self.record_inner;
        cfg.solver_config().validate()?;
        Ok(cfg)
    }
}

fn report(path: &Path) -> Result<String, TvError> {
    let file = if path.is_dir() { path.join("trace.csv") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| TvError::Io {
        context: format!("reading {}", file.display()),
        source: e,
    })?;
    let rows = parse_trace_csv(&text, &file)?;
    let (best, last) = best_and_final(&rows)?;
    let (b, l) = (&rows[best], &rows[last]);
    let (bs, ls) = (b.snr_db.unwrap_or(f64::NAN), l.snr_db.unwrap_or(f64::NAN));
    Ok(format!(
        "records: {}\nbest stage: {} (snr_db {bs:.4})\nfinal stage: {} (snr_db {ls:.4})\nbest - final snr_db: {:.4}\n",
        rows.len(),
        b.stage_index,
        l.stage_index,
        bs - ls
    ))
}

fn run(cli: Cli) -> Result<(), TvError> {
    match cli.command {
        Command::Phantom { size, kind, output } => {
            if size < 2 {
                return Err(TvError::InvalidImage(format!("size {size} < 2")));
            }
            write_pgm16(&output, &phantom(kind, size))
        }
        Command::Degrade { input, output, kernel, sigma, seed } => {
            let u0 = read_image(&input)?;
            let f = degrade(&u0, &make_kernel(kernel)?, sigma, seed)?;
            write_pgm16(&output, &f)
        }
        Command::Deblur(args) => {
            let cfg = args.into_config()?;
            let summary = run_experiment(&cfg)?;
            print!("{}", summary.to_text());
            Ok(())
        }
        Command::Report { trace } => {
            print!("{}", report(&trace)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

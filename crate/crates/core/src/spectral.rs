//! Fourier diagonalization of the periodic operators and the closed-form
//! u-subproblem solve shared by both solvers.
//!
//! Every operator here is a circular convolution, so under the 2-D DFT each
//! becomes a pointwise multiplication. Frequencies are stored row-major:
//! entry `kr * n + kc` holds row frequency `kr` and column frequency `kc`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, TvError};
use crate::grid::{GradientField, Image, Kernel};

/// Denominators of the u-step below this value are reported as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// Transfer functions of `K`, `Dx`, `Dy` for one `(kernel, n)` pair, plus the
/// FFT plans to apply them.
#[derive(Clone)]
pub struct SpectralCache {
    n: usize,
    eig_k: Vec<Complex64>,
    eig_dx: Vec<Complex64>,
    eig_dy: Vec<Complex64>,
    eig_dtd: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralCache").field("n", &self.n).finish_non_exhaustive()
    }
}

/// Precomputes the eigenvalues of `K` and `D` for `n x n` periodic images.
pub fn build_cache(k: &Kernel, n: usize) -> Result<SpectralCache> {
    if n < 2 {
        return Err(TvError::InvalidImage(format!("side {n} < 2")));
    }
    k.check_fits(n)?;
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    // Kernel zero-padded to n x n with its anchor moved to the origin.
    let m = k.size();
    let anchor = k.anchor();
    let mut padded = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..m {
        for b in 0..m {
            let r = (a + n - anchor) % n;
            let c = (b + n - anchor) % n;
            padded[r * n + c].re += k.tap(a, b);
        }
    }
    let mut cache = SpectralCache {
        n,
        eig_k: Vec::new(),
        eig_dx: Vec::with_capacity(n * n),
        eig_dy: Vec::with_capacity(n * n),
        eig_dtd: Vec::with_capacity(n * n),
        forward,
        inverse,
    };
    cache.fft2(&mut padded, false);
    cache.eig_k = padded;

    // Forward difference u(j+1) - u(j) has transfer function e^{2πi k/n} - 1.
    let stencil = |freq: usize| {
        let theta = 2.0 * PI * freq as f64 / n as f64;
        if freq == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(theta.cos() - 1.0, theta.sin())
        }
    };
    for kr in 0..n {
        for kc in 0..n {
            let ex = stencil(kc);
            let ey = stencil(kr);
            cache.eig_dx.push(ex);
            cache.eig_dy.push(ey);
            cache.eig_dtd.push(ex.norm_sqr() + ey.norm_sqr());
        }
    }
    Ok(cache)
}

impl SpectralCache {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn eig_k(&self) -> &[Complex64] {
        &self.eig_k
    }

    pub fn eig_dx(&self) -> &[Complex64] {
        &self.eig_dx
    }

    pub fn eig_dy(&self) -> &[Complex64] {
        &self.eig_dy
    }

    /// `|eig(Dx)|² + |eig(Dy)|²` per frequency.
    pub fn eig_dtd(&self) -> &[f64] {
        &self.eig_dtd
    }

    /// Unnormalized 2-D DFT in place; the inverse divides by `n²`.
    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        if inverse {
            let s = 1.0 / (n * n) as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub(crate) fn transform(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        buf
    }

    pub(crate) fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.fft2(&mut spectrum, true);
        spectrum.into_iter().map(|z| z.re).collect()
    }

    /// `K u` evaluated in the frequency domain.
    pub fn apply_kernel(&self, u: &Image) -> Result<Image> {
        u.check_same_size(self.n)?;
        let mut spec = self.transform(u.data());
        spec.iter_mut().zip(&self.eig_k).for_each(|(z, k)| *z *= k);
        Ok(Image::from_raw(self.n, self.inverse_real(spec)))
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Exact minimizer over `u` of
/// `μ/2‖Ku−f‖² + β/2 Σ‖wᵢ − Dᵢu‖² − Σ λᵢᵀ(wᵢ − Dᵢu)`,
/// i.e. the solution of `(μKᵀK + βDᵀD) u = μKᵀf + Dᵀ(βw − λ)`.
pub fn solve_u(
    f: &Image,
    w: &GradientField,
    lambda: &GradientField,
    mu: f64,
    beta: f64,
    cache: &SpectralCache,
) -> Result<Image> {
    let n = cache.n;
    if !(mu > 0.0) || !(beta > 0.0) {
        return Err(TvError::InvalidConfig(format!(
            "u-step needs mu > 0 and beta > 0, got mu = {mu}, beta = {beta}"
        )));
    }
    f.check_same_size(n)?;
    w.check_same_size(n)?;
    lambda.check_same_size(n)?;

    let rx: Vec<f64> = w.dx().iter().zip(lambda.dx()).map(|(w, l)| beta * w - l).collect();
    let ry: Vec<f64> = w.dy().iter().zip(lambda.dy()).map(|(w, l)| beta * w - l).collect();
    let f_hat = cache.transform(f.data());
    let rx_hat = cache.transform(&rx);
    let ry_hat = cache.transform(&ry);

    let mut u_hat = Vec::with_capacity(n * n);
    for i in 0..n * n {
        let k = cache.eig_k[i];
        let den = mu * k.norm_sqr() + beta * cache.eig_dtd[i];
        if den < SINGULAR_THRESHOLD {
            return Err(TvError::SingularSystem {
                row: i / n,
                col: i % n,
                denominator: den,
            });
        }
        let num = mu * k.conj() * f_hat[i]
            + cache.eig_dx[i].conj() * rx_hat[i]
            + cache.eig_dy[i].conj() * ry_hat[i];
        u_hat.push(num / den);
    }
    Ok(Image::from_raw(n, cache.inverse_real(u_hat)))
}

//! Splitting an iterate `u` into a piecewise-constant part `u₁` whose gradient
//! approximates the shrunk field `w`, and a smooth remainder `u₂ = u − u₁`
//! that carries the Tikhonov-penalized gradient `Du − w`.
//!
//! Shrinkage output is generally not a discrete gradient field, so `u₁` is the
//! least-squares potential of `w` (zero mean) and the leftover
//! `‖w − Du₁‖∞` is reported rather than assumed zero.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{forward_diff, GradientField, Image};
use crate::spectral::SpectralCache;

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Zero-mean least-squares potential of `w`.
    pub u1: Image,
    /// `u − u₁`; owns the mean of `u`.
    pub u2: Image,
    /// `maxᵢ ‖wᵢ − Dᵢu₁‖₂`, zero when `w` is an exact gradient field.
    pub integrability_residual: f64,
}

pub fn decompose(u: &Image, w: &GradientField, cache: &SpectralCache) -> Result<Decomposition> {
    let n = cache.size();
    u.check_same_size(n)?;
    w.check_same_size(n)?;
    let wx = cache.transform(w.dx());
    let wy = cache.transform(w.dy());
    let mut spectrum = Vec::with_capacity(n * n);
    for i in 0..n * n {
        let dtd = cache.eig_dtd()[i];
        if i == 0 || dtd == 0.0 {
            spectrum.push(Complex64::new(0.0, 0.0));
        } else {
            spectrum.push((cache.eig_dx()[i].conj() * wx[i] + cache.eig_dy()[i].conj() * wy[i]) / dtd);
        }
    }
    let raw = cache.inverse_real(spectrum);
    // remove the rounding-level mean left by the inverse transform
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let u1 = Image::from_raw(n, raw.into_iter().map(|v| v - mean).collect());
    let u2 = u - &u1;
    let integrability_residual = w.axpy(-1.0, &forward_diff(&u1)).max_pixel_norm();
    Ok(Decomposition {
        u1,
        u2,
        integrability_residual,
    })
}

/// `Σᵢ ‖Dᵢu₂‖²`; callers apply the `β/2` weight.
pub fn tikhonov_energy(u2: &Image) -> f64 {
    let g = forward_diff(u2);
    g.dot(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_kernel, KernelSpec};
    use crate::spectral::build_cache;

    fn cache(n: usize) -> SpectralCache {
        build_cache(&make_kernel(KernelSpec::Delta).unwrap(), n).unwrap()
    }

    fn zero_mean(n: usize) -> Image {
        let u = Image::from_fn(n, |r, c| ((r * 7 + c * 3) % 5) as f64 * 0.2 + (r as f64 * 0.3).sin());
        let m = u.mean();
        u.map(|v| v - m)
    }

    #[test]
    fn gradient_field_goes_entirely_to_u1() {
        let u = zero_mean(8);
        let d = decompose(&u, &forward_diff(&u), &cache(8)).unwrap();
        assert!((&d.u1 - &u).max_abs() < 1e-12);
        assert!(d.u2.max_abs() < 1e-12);
        assert!(d.integrability_residual < 1e-12);
    }

    #[test]
    fn zero_field_goes_entirely_to_u2() {
        let u = zero_mean(8).map(|v| v + 0.5);
        let d = decompose(&u, &GradientField::zeros(8), &cache(8)).unwrap();
        assert_eq!(d.u1, Image::zeros(8));
        assert_eq!(d.u2, u);
    }

    #[test]
    fn tikhonov_energy_examples() {
        assert_eq!(tikhonov_energy(&Image::constant(5, 0.3)), 0.0);
        let u = Image::new(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tikhonov_energy(&u), 4.0);
        let v = zero_mean(6);
        let e = tikhonov_energy(&v);
        assert!((tikhonov_energy(&v.scale(-2.5)) - 6.25 * e).abs() < 1e-12 * e);
    }
}

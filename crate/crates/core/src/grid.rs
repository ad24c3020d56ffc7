//! Square images, per-pixel gradient fields, blur kernels, and the periodic
//! operators `D`, `Dᵀ` and `K` acting on them.
//!
//! Storage is row-major with `(row, col)` indexing. The horizontal component
//! `dx` differences along columns, the vertical component `dy` along rows, and
//! every stencil wraps around the image border.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use crate::error::{Result, TvError};

/// A real-valued `n x n` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major samples, checking shape and finiteness.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(TvError::InvalidImage(format!("side {n} < 2")));
        }
        if data.len() != n * n {
            return Err(TvError::InvalidImage(format!(
                "{} samples for a {n}x{n} grid",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(TvError::InvalidImage(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Image { n, data })
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Image { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        assert!(n >= 2, "image side must be at least 2");
        Image {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 2, "image side must be at least 2");
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Image { n, data }
    }

    /// Side length `n`.
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn height(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.n, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, s: f64) -> Image {
        self.map(|v| s * v)
    }

    /// Values clamped to `[0, 1]`, used only on export.
    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Cyclic shift: the output at `(r, c)` is the input at `(r - dr, c - dc)`.
    pub fn shifted(&self, dr: usize, dc: usize) -> Image {
        let n = self.n;
        Image::from_fn(n, |r, c| self.get((r + n - dr % n) % n, (c + n - dc % n) % n))
    }

    pub(crate) fn check_same_size(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(TvError::ShapeMismatch {
                expected: n,
                got: self.n,
            });
        }
        Ok(())
    }
}

impl Add for &Image {
    type Output = Image;
    fn add(self, rhs: &Image) -> Image {
        assert_eq!(self.n, rhs.n, "image size mismatch");
        Image::from_raw(
            self.n,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &Image {
    type Output = Image;
    fn sub(self, rhs: &Image) -> Image {
        assert_eq!(self.n, rhs.n, "image size mismatch");
        Image::from_raw(
            self.n,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

/// A 2-vector per pixel: a discrete gradient, the splitting variable `w`, or
/// the multiplier `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    n: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl GradientField {
    pub fn new(n: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if n < 2 || dx.len() != n * n || dy.len() != n * n {
            return Err(TvError::InvalidImage(format!(
                "gradient field components of length {} and {} for side {n}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(TvError::InvalidImage(
                "non-finite gradient component".into(),
            ));
        }
        Ok(GradientField { n, dx, dy })
    }

    pub(crate) fn from_raw(n: usize, dx: Vec<f64>, dy: Vec<f64>) -> Self {
        debug_assert_eq!(dx.len(), n * n);
        debug_assert_eq!(dy.len(), n * n);
        GradientField { n, dx, dy }
    }

    pub fn zeros(n: usize) -> Self {
        GradientField {
            n,
            dx: vec![0.0; n * n],
            dy: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    /// The 2-vector at `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let i = row * self.n + col;
        (self.dx[i], self.dy[i])
    }

    pub fn is_finite(&self) -> bool {
        self.dx.iter().chain(&self.dy).all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        let x: f64 = self.dx.iter().zip(&other.dx).map(|(a, b)| a * b).sum();
        let y: f64 = self.dy.iter().zip(&other.dy).map(|(a, b)| a * b).sum();
        x + y
    }

    /// Euclidean norm over all `2n²` components.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Largest per-pixel 2-norm.
    pub fn max_pixel_norm(&self) -> f64 {
        self.dx
            .iter()
            .zip(&self.dy)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// `self + s * other`, componentwise.
    pub fn axpy(&self, s: f64, other: &GradientField) -> GradientField {
        assert_eq!(self.n, other.n, "gradient field size mismatch");
        GradientField {
            n: self.n,
            dx: self.dx.iter().zip(&other.dx).map(|(a, b)| a + s * b).collect(),
            dy: self.dy.iter().zip(&other.dy).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> GradientField {
        GradientField {
            n: self.n,
            dx: self.dx.iter().map(|v| s * v).collect(),
            dy: self.dy.iter().map(|v| s * v).collect(),
        }
    }

    pub(crate) fn check_same_size(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(TvError::ShapeMismatch {
                expected: n,
                got: self.n,
            });
        }
        Ok(())
    }
}

/// Which per-pixel norm the total variation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TvVariant {
    /// 2-norm of each gradient vector.
    #[default]
    Isotropic,
    /// 1-norm of each gradient vector.
    Anisotropic,
}

impl FromStr for TvVariant {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iso" | "isotropic" => Ok(TvVariant::Isotropic),
            "aniso" | "anisotropic" => Ok(TvVariant::Anisotropic),
            other => Err(TvError::BadSpec(format!("unknown TV variant {other:?}"))),
        }
    }
}

impl fmt::Display for TvVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TvVariant::Isotropic => "iso",
            TvVariant::Anisotropic => "aniso",
        })
    }
}

/// Description of a blur kernel, parsed from strings like `average:9`,
/// `gaussian:7:1.5` or `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `m x m` box filter, every tap `1/m²`.
    Average(usize),
    /// `m x m` sampled isotropic Gaussian with standard deviation `sigma`.
    Gaussian { size: usize, sigma: f64 },
    /// Identity.
    Delta,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Average(9)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Average(m) => write!(f, "average:{m}"),
            KernelSpec::Gaussian { size, sigma } => write!(f, "gaussian:{size}:{sigma}"),
            KernelSpec::Delta => write!(f, "delta"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let size = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| TvError::BadSpec(format!("invalid kernel size {p:?}")))
        };
        match parts.as_slice() {
            ["delta"] => Ok(KernelSpec::Delta),
            ["average", m] => Ok(KernelSpec::Average(size(m)?)),
            ["gaussian", m, s] => Ok(KernelSpec::Gaussian {
                size: size(m)?,
                sigma: s
                    .parse()
                    .map_err(|_| TvError::BadSpec(format!("invalid gaussian sigma {s:?}")))?,
            }),
            _ => Err(TvError::BadSpec(format!(
                "expected average:<m>, gaussian:<m>:<sigma> or delta, got {s:?}"
            ))),
        }
    }
}

/// An odd-sized square convolution kernel anchored at its center tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    /// Kernel from explicit row-major taps.
    pub fn from_taps(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(TvError::BadSpec(format!("kernel size {size} must be odd")));
        }
        if taps.len() != size * size || taps.iter().any(|t| !t.is_finite()) {
            return Err(TvError::BadSpec(format!(
                "{} finite taps required for a {size}x{size} kernel",
                size * size
            )));
        }
        Ok(Kernel { size, taps })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn anchor(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }

    pub fn flux(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub(crate) fn check_fits(&self, n: usize) -> Result<()> {
        if self.size > n {
            return Err(TvError::KernelTooLarge {
                kernel: self.size,
                image: n,
            });
        }
        Ok(())
    }
}

/// Realizes a [`KernelSpec`] with the same conventions as MATLAB's `fspecial`.
pub fn make_kernel(spec: KernelSpec) -> Result<Kernel> {
    match spec {
        KernelSpec::Delta => Kernel::from_taps(1, vec![1.0]),
        KernelSpec::Average(m) => {
            if m % 2 == 0 {
                return Err(TvError::BadSpec(format!("average size {m} must be odd")));
            }
            let tap = 1.0 / (m * m) as f64;
            Kernel::from_taps(m, vec![tap; m * m])
        }
        KernelSpec::Gaussian { size, sigma } => {
            if size % 2 == 0 {
                return Err(TvError::BadSpec(format!("gaussian size {size} must be odd")));
            }
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(TvError::BadSpec(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            let c = (size / 2) as f64;
            let mut taps = Vec::with_capacity(size * size);
            for r in 0..size {
                for col in 0..size {
                    let (y, x) = (r as f64 - c, col as f64 - c);
                    taps.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp());
                }
            }
            let total: f64 = taps.iter().sum();
            taps.iter_mut().for_each(|t| *t /= total);
            Kernel::from_taps(size, taps)
        }
    }
}

/// Periodic forward differences:
/// `dx(i,j) = u(i, j+1) - u(i,j)`, `dy(i,j) = u(i+1, j) - u(i,j)`.
pub fn forward_diff(u: &Image) -> GradientField {
    let n = u.n;
    let mut dx = Vec::with_capacity(n * n);
    let mut dy = Vec::with_capacity(n * n);
    for r in 0..n {
        let down = (r + 1) % n;
        for c in 0..n {
            let right = (c + 1) % n;
            let here = u.get(r, c);
            dx.push(u.get(r, right) - here);
            dy.push(u.get(down, c) - here);
        }
    }
    GradientField::from_raw(n, dx, dy)
}

/// The adjoint `Dᵀ` of [`forward_diff`] (minus the periodic backward divergence).
pub fn divergence_adjoint(g: &GradientField) -> Image {
    let n = g.n;
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        let up = (r + n - 1) % n;
        for c in 0..n {
            let left = (c + n - 1) % n;
            let i = r * n + c;
            out.push(g.dx[r * n + left] - g.dx[i] + g.dy[up * n + c] - g.dy[i]);
        }
    }
    Image::from_raw(n, out)
}

/// Circular 2-D convolution (kernel flipped) computed directly in space.
pub fn convolve_periodic(u: &Image, k: &Kernel) -> Result<Image> {
    let n = u.n;
    k.check_fits(n)?;
    let m = k.size;
    let anchor = k.anchor();
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for a in 0..m {
                // source row r - (a - anchor), wrapped
                let sr = (r + n + anchor - a) % n;
                let row = &u.data[sr * n..(sr + 1) * n];
                for b in 0..m {
                    let sc = (c + n + anchor - b) % n;
                    acc += k.taps[a * m + b] * row[sc];
                }
            }
            out[r * n + c] = acc;
        }
    }
    Ok(Image::from_raw(n, out))
}

/// Sum over pixels of the per-pixel gradient norm: isotropic (2-norm) or
/// anisotropic (1-norm) total variation of a field.
pub fn total_variation(g: &GradientField, variant: TvVariant) -> f64 {
    match variant {
        TvVariant::Isotropic => g.dx.iter().zip(&g.dy).map(|(a, b)| a.hypot(*b)).sum(),
        TvVariant::Anisotropic => g.dx.iter().zip(&g.dy).map(|(a, b)| a.abs() + b.abs()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_gradient() {
        for n in [2, 5, 8] {
            let g = forward_diff(&Image::constant(n, 0.5));
            assert!(g.dx().iter().chain(g.dy()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn two_by_two_stencil() {
        let u = Image::new(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let g = forward_diff(&u);
        assert_eq!(g.dx(), &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(g.dy(), &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let d = divergence_adjoint(&GradientField::zeros(6));
        assert_eq!(d, Image::zeros(6));
    }

    #[test]
    fn identity_kernel_is_identity() {
        let u = Image::from_fn(7, |r, c| (r * 7 + c) as f64 * 0.1);
        let k = make_kernel(KernelSpec::Delta).unwrap();
        assert_eq!(convolve_periodic(&u, &k).unwrap(), u);
    }

    #[test]
    fn flux_one_kernel_preserves_constants() {
        let u = Image::constant(9, 0.37);
        for spec in [
            KernelSpec::Average(3),
            KernelSpec::Average(9),
            KernelSpec::Gaussian { size: 5, sigma: 1.2 },
        ] {
            let out = convolve_periodic(&u, &make_kernel(spec).unwrap()).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-14), "{spec}");
        }
    }

    #[test]
    fn kernel_too_large() {
        let k = make_kernel(KernelSpec::Average(9)).unwrap();
        let err = convolve_periodic(&Image::zeros(8), &k).unwrap_err();
        assert!(matches!(err, TvError::KernelTooLarge { kernel: 9, image: 8 }));
    }

    #[test]
    fn average_nine_taps() {
        let k = make_kernel(KernelSpec::Average(9)).unwrap();
        assert_eq!(k.size(), 9);
        assert!(k.taps().iter().all(|&t| t == 1.0 / 81.0));
    }

    #[test]
    fn delta_kernel() {
        let k = make_kernel(KernelSpec::Delta).unwrap();
        assert_eq!((k.size(), k.taps()), (1, &[1.0][..]));
    }

    #[test]
    fn gaussian_is_rotation_symmetric_and_normalized() {
        let k = make_kernel(KernelSpec::Gaussian { size: 3, sigma: 0.5 }).unwrap();
        assert!((k.flux() - 1.0).abs() < 1e-12);
        let m = k.size();
        for r in 0..m {
            for c in 0..m {
                // 90 degree rotation: (r, c) -> (c, m-1-r)
                assert!((k.tap(r, c) - k.tap(c, m - 1 - r)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bad_specs() {
        assert!(make_kernel(KernelSpec::Average(4)).is_err());
        assert!(make_kernel(KernelSpec::Gaussian { size: 6, sigma: 1.0 }).is_err());
        assert!(make_kernel(KernelSpec::Gaussian { size: 5, sigma: 0.0 }).is_err());
        assert!(make_kernel(KernelSpec::Gaussian { size: 5, sigma: -1.0 }).is_err());
    }

    #[test]
    fn kernel_spec_parsing() {
        assert_eq!("average:9".parse::<KernelSpec>().unwrap(), KernelSpec::Average(9));
        assert_eq!("delta".parse::<KernelSpec>().unwrap(), KernelSpec::Delta);
        assert_eq!(
            "gaussian:7:1.5".parse::<KernelSpec>().unwrap(),
            KernelSpec::Gaussian { size: 7, sigma: 1.5 }
        );
        assert!("box:3".parse::<KernelSpec>().is_err());
        let spec = KernelSpec::Gaussian { size: 5, sigma: 0.75 };
        assert_eq!(spec.to_string().parse::<KernelSpec>().unwrap(), spec);
    }

    #[test]
    fn image_validation() {
        assert!(Image::new(1, vec![0.0]).is_err());
        assert!(Image::new(3, vec![0.0; 8]).is_err());
        assert!(Image::new(2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Image::new(2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn shifted_moves_content() {
        let u = Image::from_fn(4, |r, c| (r * 4 + c) as f64);
        let s = u.shifted(1, 2);
        assert_eq!(s.get(1, 2), u.get(0, 0));
        assert_eq!(s.get(0, 0), u.get(3, 2));
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvdeconv::{GradientField, Image, Kernel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, n: usize) -> Image {
    Image::new(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_field(rng: &mut impl Rng, n: usize) -> GradientField {
    let dx = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dy = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    GradientField::new(n, dx, dy).unwrap()
}

/// Asymmetric kernel with positive taps, odd side at most `max_size`.
pub fn random_kernel(rng: &mut impl Rng, max_size: usize) -> Kernel {
    let sizes: Vec<usize> = (1..=max_size).filter(|s| s % 2 == 1).collect();
    let size = sizes[rng.random_range(0..sizes.len())];
    let taps: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = taps.iter().sum();
    Kernel::from_taps(size, taps.iter().map(|t| t / total).collect()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_l2(a: &Image, reference: &Image) -> f64 {
    (a - reference).norm() / reference.norm()
}

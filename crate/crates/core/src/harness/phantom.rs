//! Deterministic synthetic test images with flat regions, sharp edges, smooth
//! shading and an oscillating texture band. Feature positions scale with `n`.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::TvError;
use crate::grid::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhantomKind {
    /// Smooth ramp background, flat shapes, a shaded bump and a texture band.
    #[default]
    Composite,
    /// Flat rectangles and a disk on a flat background.
    Blocks,
}

impl FromStr for PhantomKind {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self, TvError> {
        match s {
            "composite" => Ok(PhantomKind::Composite),
            "blocks" => Ok(PhantomKind::Blocks),
            other => Err(TvError::BadSpec(format!("unknown phantom {other:?}"))),
        }
    }
}

pub fn phantom(kind: PhantomKind, n: usize) -> Image {
    match kind {
        PhantomKind::Composite => composite_phantom(n),
        PhantomKind::Blocks => blocks_phantom(n),
    }
}

fn unit(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// Piecewise-smooth image in `[0, 1]`.
pub fn composite_phantom(n: usize) -> Image {
    Image::from_fn(n, |r, c| {
        let (y, x) = (unit(r, n), unit(c, n));
        // shading: diagonal ramp plus a wide Gaussian bump
        let bump = 0.4 * (-((x - 0.72).powi(2) + (y - 0.8).powi(2)) / (2.0 * 0.12f64.powi(2))).exp();
        let mut v = (0.2 + 0.5 * (0.6 * x + 0.4 * y) + bump).min(1.0);
        if (0.1..0.42).contains(&x) && (0.1..0.38).contains(&y) {
            v = 0.85;
        }
        if (x - 0.72).powi(2) + (y - 0.26).powi(2) < 0.16f64.powi(2) {
            v = 0.12;
        }
        if (0.5..0.64).contains(&y) {
            v = 0.5 + 0.22 * (2.0 * PI * 5.0 * x).sin();
        }
        if (0.08..0.3).contains(&x) && (0.7..0.92).contains(&y) && x - 0.08 < y - 0.7 {
            v = 0.95;
        }
        v
    })
}

/// Piecewise-constant image in `[0, 1]`.
pub fn blocks_phantom(n: usize) -> Image {
    Image::from_fn(n, |r, c| {
        let (y, x) = (unit(r, n), unit(c, n));
        if (x - 0.68).powi(2) + (y - 0.66).powi(2) < 0.2f64.powi(2) {
            0.3
        } else if (0.12..0.55).contains(&x) && (0.15..0.45).contains(&y) {
            0.85
        } else if (0.2..0.4).contains(&x) && (0.6..0.9).contains(&y) {
            0.6
        } else {
            0.1
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_in_unit_range_and_deterministic() {
        for kind in [PhantomKind::Composite, PhantomKind::Blocks] {
            for n in [8, 16, 64] {
                let a = phantom(kind, n);
                assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
                assert_eq!(a, phantom(kind, n));
            }
        }
    }

    #[test]
    fn blocks_has_few_levels() {
        let u = blocks_phantom(16);
        let mut levels: Vec<f64> = u.data().to_vec();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        assert_eq!(levels, vec![0.1, 0.3, 0.6, 0.85]);
    }
}

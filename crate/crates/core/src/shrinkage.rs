//! Per-pixel proximal operators of the isotropic and anisotropic TV terms.

use crate::error::{Result, TvError};
use crate::grid::{GradientField, TvVariant};

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(TvError::NonpositiveThreshold(t))
    }
}

/// 2-D shrinkage: `max(‖vᵢ‖ − t, 0) · vᵢ/‖vᵢ‖`, the minimizer of
/// `‖wᵢ‖₂ + ‖wᵢ − vᵢ‖²/(2t)` at every pixel.
pub fn shrink_iso(v: &GradientField, t: f64) -> Result<GradientField> {
    check_threshold(t)?;
    let n = v.size();
    let mut dx = Vec::with_capacity(n * n);
    let mut dy = Vec::with_capacity(n * n);
    for (&x, &y) in v.dx().iter().zip(v.dy()) {
        let norm = x.hypot(y);
        if norm <= t {
            dx.push(0.0);
            dy.push(0.0);
        } else {
            let s = (norm - t) / norm;
            dx.push(s * x);
            dy.push(s * y);
        }
    }
    Ok(GradientField::from_raw(n, dx, dy))
}

/// Componentwise soft threshold, the minimizer of `‖wᵢ‖₁ + ‖wᵢ − vᵢ‖²/(2t)`.
pub fn shrink_aniso(v: &GradientField, t: f64) -> Result<GradientField> {
    check_threshold(t)?;
    let soft = |c: f64| c.signum() * (c.abs() - t).max(0.0);
    Ok(GradientField::from_raw(
        v.size(),
        v.dx().iter().map(|&c| soft(c)).collect(),
        v.dy().iter().map(|&c| soft(c)).collect(),
    ))
}

pub fn shrink(v: &GradientField, t: f64, variant: TvVariant) -> Result<GradientField> {
    match variant {
        TvVariant::Isotropic => shrink_iso(v, t),
        TvVariant::Anisotropic => shrink_aniso(v, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: f64, y: f64) -> GradientField {
        GradientField::new(2, vec![x, 0.0, 0.0, 0.0], vec![y, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn iso_values() {
        let out = shrink_iso(&single(3.0, 4.0), 1.0).unwrap();
        let (x, y) = out.at(0, 0);
        assert!((x - 2.4).abs() < 1e-15 && (y - 3.2).abs() < 1e-15);
        assert_eq!(shrink_iso(&single(0.3, 0.4), 1.0).unwrap().at(0, 0), (0.0, 0.0));
        assert_eq!(shrink_iso(&single(0.0, 0.0), 0.1).unwrap().at(0, 0), (0.0, 0.0));
        // exact tie resolves to zero
        assert_eq!(shrink_iso(&single(3.0, 4.0), 5.0).unwrap().at(0, 0), (0.0, 0.0));
    }

    #[test]
    fn aniso_values() {
        assert_eq!(shrink_aniso(&single(3.0, 4.0), 1.0).unwrap().at(0, 0), (2.0, 3.0));
        assert_eq!(shrink_aniso(&single(-0.5, 2.0), 1.0).unwrap().at(0, 0), (0.0, 1.0));
        let out = shrink_aniso(&single(-0.5, 2.0), 2.5).unwrap();
        assert!(out.dx().iter().chain(out.dy()).all(|&v| v == 0.0));
    }

    #[test]
    fn nonpositive_threshold() {
        for t in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                shrink_iso(&single(1.0, 1.0), t),
                Err(TvError::NonpositiveThreshold(_))
            ));
            assert!(shrink_aniso(&single(1.0, 1.0), t).is_err());
        }
    }
}

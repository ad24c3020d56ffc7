//! Scores for iterates: SNR against a reference, relative change between
//! successive iterates, and best-iterate selection over a trace.

use std::str::FromStr;

use crate::error::{Result, TvError};
use crate::grid::Image;
use crate::solvers::IterateTrace;

/// Reported SNR when the estimate matches the reference exactly (or the
/// ratio would exceed it).
pub const SNR_CAP_DB: f64 = 300.0;

/// `10 log10(‖ref − mean(ref)‖² / ‖u − ref‖²)`, capped at [`SNR_CAP_DB`].
pub fn snr_db(u: &Image, reference: &Image) -> Result<f64> {
    u.check_same_size(reference.size())?;
    let first = reference.data()[0];
    if reference.data().iter().all(|&r| r == first) {
        return Err(TvError::DegenerateReference);
    }
    let mean = reference.mean();
    let signal: f64 = reference.data().iter().map(|r| (r - mean).powi(2)).sum();
    let error: f64 = u
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if error == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / error).log10()).min(SNR_CAP_DB))
}

/// `‖u_new − u_old‖ / max(‖u_old‖, 1e-12)`.
pub fn rel_change(u_new: &Image, u_old: &Image) -> f64 {
    (u_new - u_old).norm() / u_old.norm().max(1e-12)
}

/// What "best" means when picking an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestBy {
    /// Highest SNR against the ground truth.
    Snr,
    /// Lowest TV/L2 objective.
    ObjectiveTv,
}

impl FromStr for BestBy {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(BestBy::Snr),
            "objective" | "objective_tv" => Ok(BestBy::ObjectiveTv),
            other => Err(TvError::BadSpec(format!("unknown criterion {other:?}"))),
        }
    }
}

/// Index of the best record; ties go to the earliest.
pub fn best_iterate(trace: &IterateTrace, criterion: BestBy) -> Result<usize> {
    match criterion {
        BestBy::Snr => {
            let scores = trace
                .records
                .iter()
                .map(|r| r.snr_db)
                .collect::<Option<Vec<f64>>>()
                .ok_or(TvError::MissingScores("SNR"))?;
            argmax_first(&scores).ok_or(TvError::MissingScores("SNR"))
        }
        BestBy::ObjectiveTv => {
            let scores: Vec<f64> = trace.records.iter().map(|r| -r.objective_tv).collect();
            argmax_first(&scores).ok_or(TvError::MissingScores("objective"))
        }
    }
}

/// First index of the maximum.
pub(crate) fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_mean_unit_variance(n: usize) -> Image {
        // checkerboard of ±1
        Image::from_fn(n, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 })
    }

    #[test]
    fn identical_images_hit_the_cap() {
        let r = zero_mean_unit_variance(8);
        assert_eq!(snr_db(&r, &r).unwrap(), SNR_CAP_DB);
    }

    #[test]
    fn constant_offset_gives_variance_ratio() {
        let r = zero_mean_unit_variance(16).scale(3.0); // variance 9
        let u = r.map(|v| v + 1.0);
        let expected = 10.0 * 9f64.log10();
        assert!((snr_db(&u, &r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn doubling_error_costs_six_db() {
        let r = Image::from_fn(8, |i, j| (i * 8 + j) as f64 / 64.0);
        let e = Image::from_fn(8, |i, j| ((i * 31 + j * 17) % 7) as f64 * 1e-3 - 0.003);
        let a = snr_db(&(&r + &e), &r).unwrap();
        let b = snr_db(&(&r + &e.scale(2.0)), &r).unwrap();
        assert!((a - b - 20.0 * 2f64.log10()).abs() < 1e-10);
    }

    #[test]
    fn constant_reference_is_degenerate() {
        let r = Image::constant(4, 0.2);
        assert!(matches!(snr_db(&r, &r), Err(TvError::DegenerateReference)));
    }

    #[test]
    fn rel_change_cases() {
        let u = Image::from_fn(5, |r, c| 1.0 + (r + c) as f64);
        assert_eq!(rel_change(&u, &u), 0.0);
        assert!((rel_change(&u.scale(1.01), &u) - 0.01).abs() < 1e-12);
        let z = Image::zeros(5);
        assert!((rel_change(&u, &z) - u.norm() / 1e-12).abs() <= 1e-3 * u.norm() / 1e-12);
    }

    #[test]
    fn argmax_prefers_earliest() {
        assert_eq!(argmax_first(&[3.0, 7.0, 7.0, 5.0]), Some(1));
        assert_eq!(argmax_first(&[1.0]), Some(0));
        assert_eq!(argmax_first(&[]), None);
    }
}

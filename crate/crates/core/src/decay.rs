//! Exponential decay fits of strain profiles.
//!
//! Ground-state and corrector strains decay like `C mu^l` into the bulk;
//! the ratio `mu` is measured by a least-squares line through
//! `(l, ln |s_l|)` over a fit window that skips the boundary-dominated
//! first bonds and anything at the rounding floor.

use std::ops::Range;

use thiserror::Error;

/// Entries with magnitude at or below this are treated as numerical zero
/// and excluded from fits.
pub const DECAY_FLOOR: f64 = 1e-14;

/// Default fit window: skips bonds 0 and 1, ends before bond 21.
pub const DEFAULT_FIT_RANGE: Range<usize> = 2..21;

/// Result of an exponential decay fit `|s_l| ~ prefactor * mu^l`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayFit {
    /// Fitted ratio, in `[0, 1)`.
    pub mu: f64,
    pub prefactor: f64,
    pub fit_start: usize,
    pub fit_end: usize,
    /// Root-mean-square residual of the line fit in log space.
    pub residual: f64,
    /// Number of points that entered the fit.
    pub points: usize,
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("decay fit needs at least 4 usable points, found {usable}")]
    TooFewPoints { usable: usize },
    #[error("fitted ratio {mu} is not a decay (mu >= 1)")]
    NotDecaying { mu: f64 },
}

/// Fit `ln |values_l| = ln C + l ln mu` on `range`, skipping entries at
/// the floor.
pub fn fit_decay(values: &[f64], range: Range<usize>) -> Result<DecayFit, FitError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for l in range.clone() {
        if let Some(&v) = values.get(l) {
            if v.abs() > DECAY_FLOOR {
                xs.push(l as f64);
                ys.push(v.abs().ln());
            }
        }
    }
    let n = xs.len();
    if n < 4 {
        return Err(FitError::TooFewPoints { usable: n });
    }
    let (slope, intercept) = least_squares_line(&xs, &ys);
    let mu = slope.exp();
    if mu.is_nan() || mu >= 1.0 {
        return Err(FitError::NotDecaying { mu });
    }
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    Ok(DecayFit {
        mu,
        prefactor: intercept.exp(),
        fit_start: range.start,
        fit_end: range.end,
        residual: (ss / n as f64).sqrt(),
        points: n,
    })
}

/// Ordinary least squares for `y = intercept + slope x`;
/// returns `(slope, intercept)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn exact_geometric_sequence() {
        let vals: Vec<f64> = (0..30).map(|l| 0.5f64.powi(l)).collect();
        let fit = fit_decay(&vals, DEFAULT_FIT_RANGE).unwrap();
        assert_abs_diff_eq!(fit.mu, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.prefactor, 1.0, epsilon = 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn alternating_sign_fits_magnitude() {
        let vals: Vec<f64> = (0..30).map(|l| (-0.3f64).powi(l)).collect();
        let fit = fit_decay(&vals, DEFAULT_FIT_RANGE).unwrap();
        assert_abs_diff_eq!(fit.mu, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn floor_entries_are_skipped() {
        let mut vals: Vec<f64> = (0..30).map(|l| 0.25f64.powi(l)).collect();
        // bonds 22.. sit below the floor already (0.25^22 ~ 6e-14... not quite);
        // force a few exact zeros inside the window instead
        vals[5] = 0.0;
        vals[9] = 1e-15;
        let fit = fit_decay(&vals, DEFAULT_FIT_RANGE).unwrap();
        assert_relative_eq!(fit.mu, 0.25, max_relative = 1e-9);
        assert_eq!(fit.points, 17);
    }

    #[test]
    fn too_few_points() {
        let vals = vec![1.0, 0.5, 0.25, 0.125];
        assert!(matches!(
            fit_decay(&vals, 2..21),
            Err(FitError::TooFewPoints { usable: 2 })
        ));
    }

    #[test]
    fn growth_is_rejected() {
        let vals: Vec<f64> = (0..30).map(|l| 1.5f64.powi(l)).collect();
        assert!(matches!(
            fit_decay(&vals, DEFAULT_FIT_RANGE),
            Err(FitError::NotDecaying { .. })
        ));
    }
}

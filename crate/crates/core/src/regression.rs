//! Ordinary least squares for scale-versus-level slope estimates.

use crate::error::{Error, Result};
use serde::Serialize;

/// Fit of `y ≈ slope · x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `y_i − (slope · x_i + intercept)` in input order.
    pub residuals: Vec<f64>,
    /// Coefficient of determination; 1 when `y` is constant and fitted exactly.
    pub r_squared: f64,
}

/// Least-squares line through at least three points with at least two
/// distinct abscissae.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Degenerate(format!("{} abscissae for {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("regression needs at least 3 points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, residuals, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.75 * x - 2.0).collect();
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope - 0.75).abs() < 1e-14);
        assert!((f.intercept + 2.0).abs() < 1e-14);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-14));
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(least_squares(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(least_squares(&[1.0, 2.0, 3.0], &[0.0, 1.0]).is_err());
    }
}

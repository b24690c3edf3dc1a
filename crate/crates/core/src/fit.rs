//! Least-squares power-law fits in log-log coordinates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// `ln y_i - (intercept + slope ln x_i)`.
    pub residuals: Vec<f64>,
}

/// Fits `ln y = intercept + slope ln x`. All inputs must be positive.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} point(s), need at least 2", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite inputs".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(LogLogFit { slope, intercept, residuals })
}

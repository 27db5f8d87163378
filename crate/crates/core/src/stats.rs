//! Least-squares line fits and summary statistics for the sweeps.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("linear fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        rss,
    })
}

/// Fit of `y` against `ln x`.
pub fn log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().any(|&a| !(a > 0.0)) {
        return Err(invalid("log fit needs positive x values"));
    }
    let lx: Vec<f64> = x.iter().map(|a| a.ln()).collect();
    linear_fit(&lx, y)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

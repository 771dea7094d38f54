//! Log-log least-squares power-law fits.

use crate::error::{Error, Result};
use crate::runner::record::SweepRecord;

pub const MIN_FIT_POINTS: usize = 4;

/// `log y = exponent · log x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!("need at least {MIN_FIT_POINTS} points, got {}", points.len())));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::Fit(format!("non-positive or non-finite point ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - (exponent * p.0 + intercept)).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(ScalingFit { exponent, intercept, r_squared, points_used: logs.len() })
}

/// Fits `inv_var` against `delta` over the converged records.
pub fn fit_records(records: &[SweepRecord]) -> Result<ScalingFit> {
    let skipped = records.iter().filter(|r| !r.converged).count();
    if skipped > 0 {
        log::warn!("excluding {skipped} unconverged record(s) from the fit");
    }
    let points: Vec<(f64, f64)> = records.iter().filter(|r| r.converged).map(|r| (r.delta, r.inv_var)).collect();
    fit_powerlaw(&points)
}

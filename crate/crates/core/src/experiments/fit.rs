use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weighted least-squares fit `ln y = intercept + slope·ln t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the weighted residuals.
    pub stderr: f64,
    pub points: usize,
    pub t_start: f64,
    pub t_end: f64,
}

/// Fits a power law on samples with `t, y > 0`, weighting each sample by its
/// share of `ln t` so that uneven sampling does not bias the slope.
pub fn fit_power_law(name: &str, times: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if times.len() != values.len() {
        return Err(Error::ShapeMismatch { expected: times.len(), got: values.len() });
    }
    if times.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: times.len() });
    }
    if times.iter().chain(values).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("power-law fit needs positive finite samples".into()));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
            let hi = if i == n - 1 { x[n - 1] } else { 0.5 * (x[i] + x[i + 1]) };
            hi - lo
        })
        .collect();
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::InvalidParameter("power-law fit needs increasing times".into()));
    }
    let mx = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w[i] * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    // effective sample size for normalized weights
    let sw2: f64 = w.iter().map(|a| a * a).sum();
    let n_eff = sw * sw / sw2;
    let stderr = if n_eff > 2.0 { (rss / sw * n_eff / (n_eff - 2.0) / (sxx / sw) / n_eff).sqrt() } else { f64::INFINITY };
    Ok(SlopeFit { name: name.into(), slope, intercept, stderr, points: n, t_start: times[0], t_end: times[n - 1] })
}

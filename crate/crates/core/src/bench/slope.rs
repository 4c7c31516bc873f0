//! Least-squares slopes on log-log axes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for a perfect fit or two points.
    pub stderr: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope·log x` over the last `tail_fraction` of
/// `points` (at least three points).
pub fn fit_loglog_slope(points: &[(f64, f64)], tail_fraction: f64) -> Result<SlopeFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param(
            "tail_fraction",
            format!("{tail_fraction} outside (0, 1]"),
        ));
    }
    let take = ((points.len() as f64 * tail_fraction).ceil() as usize).min(points.len());
    let tail = &points[points.len() - take..];
    if tail.len() < 3 {
        return Err(Error::TooFewPoints(tail.len()));
    }
    if let Some((x, y)) = tail.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::param(
            "points",
            format!("log-log fit needs positive coordinates, got ({x}, {y})"),
        ));
    }
    let xs: Vec<f64> = tail.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all x values coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points: xs.len(),
    })
}

//! Accuracy statistics for residual vectors and grid pairs.
//!
//! All functions ignore `NaN` entries; callers pass raw slices or grids and
//! get statistics over the valid subset. Quantiles use linear interpolation
//! between order statistics (the common "type 7" definition), so the median
//! of an even-length sample is the mean of the two middle values.

use crate::error::{Error, Result};
use crate::raster::{grid_subtract, Grid};

/// Scale factor that makes the median absolute deviation a consistent
/// estimator of the standard deviation under a normal distribution.
pub const NMAD_SCALE: f64 = 1.4826;

fn finite_sorted(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Quantile with linear interpolation on a pre-sorted slice:
/// position `p * (n - 1)` between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData("quantile of empty sample".into()));
    }
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Quantile of the valid (non-`NaN`) entries.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    quantile_sorted(&finite_sorted(values), p)
}

/// Median of the valid entries.
pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// Interquartile range `q75 - q25` of the valid entries.
pub fn iqr(values: &[f64]) -> Result<f64> {
    let sorted = finite_sorted(values);
    Ok(quantile_sorted(&sorted, 0.75)? - quantile_sorted(&sorted, 0.25)?)
}

/// Mean of the valid entries.
pub fn mean(values: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        if !v.is_nan() {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData("mean of empty sample".into()));
    }
    Ok(sum / n as f64)
}

/// Root mean square of the valid entries (for residuals: the RMSE).
pub fn rmse(values: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        if !v.is_nan() {
            sum += v * v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData("rmse of empty sample".into()));
    }
    Ok((sum / n as f64).sqrt())
}

/// Normalized median absolute deviation:
/// `1.4826 * median(|v - median(v)|)` over valid entries.
/// A robust spread estimate that a few blunders cannot inflate.
pub fn nmad(values: &[f64]) -> Result<f64> {
    let sorted = finite_sorted(values);
    let med = quantile_sorted(&sorted, 0.5)?;
    let dev: Vec<f64> = sorted.iter().map(|v| (v - med).abs()).collect();
    Ok(NMAD_SCALE * quantile(&dev, 0.5)?)
}

/// Pearson correlation over indices where both entries are valid.
/// Errors if fewer than 2 such pairs exist or either side has zero variance.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "correlation inputs have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| !x.is_nan() && !y.is_nan())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 complete pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pairs {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("correlation undefined for constant input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Fraction (in percent) of pixels where `|candidate - truth|` is strictly
/// smaller than `|baseline - truth|`, over pixels valid in all three grids.
pub fn pct_pixels_improved(candidate: &Grid, baseline: &Grid, truth: &Grid) -> Result<f64> {
    if !candidate.header().same_geometry(baseline.header())
        || !candidate.header().same_geometry(truth.header())
    {
        return Err(Error::Geometry("pct_pixels_improved: grids differ in geometry".into()));
    }
    let mut improved = 0usize;
    let mut total = 0usize;
    for ((c, b), t) in candidate.values().iter().zip(baseline.values()).zip(truth.values()) {
        if c.is_nan() || b.is_nan() || t.is_nan() {
            continue;
        }
        total += 1;
        if (c - t).abs() < (b - t).abs() {
            improved += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no pixels valid in all three grids".into()));
    }
    Ok(100.0 * improved as f64 / total as f64)
}

/// Summary statistics of one DEM (or fusion product) against reference
/// heights, computed from the per-pixel difference `dem - truth` over
/// doubly-valid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub sample_count: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub rmse: f64,
    pub nmad: f64,
    /// Correlation between DEM and reference heights.
    pub correlation: f64,
    /// Percentage of pixels more accurate than the baseline, when one was
    /// supplied.
    pub pct_improved: Option<f64>,
}

impl AccuracyReport {
    /// `key=value` lines, one statistic per line, parse-friendly.
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "sample_count={}\nmean_error={}\nmedian_error={}\nrmse={}\nnmad={}\ncorrelation={}\n",
            self.sample_count,
            self.mean_error,
            self.median_error,
            self.rmse,
            self.nmad,
            self.correlation
        );
        if let Some(pct) = self.pct_improved {
            out.push_str(&format!("pct_improved={pct}\n"));
        }
        out
    }
}

/// Assembles every accuracy measure of `dem` against `truth`; with a
/// `baseline`, also the fraction of pixels where `dem` beats it.
pub fn accuracy_report(dem: &Grid, truth: &Grid, baseline: Option<&Grid>) -> Result<AccuracyReport> {
    let diff = grid_subtract(dem, truth)?;
    let residuals = finite_sorted(diff.values());
    if residuals.is_empty() {
        return Err(Error::InsufficientData("no doubly-valid pixels".into()));
    }
    let pct_improved = match baseline {
        Some(b) => Some(pct_pixels_improved(dem, b, truth)?),
        None => None,
    };
    Ok(AccuracyReport {
        sample_count: residuals.len(),
        mean_error: mean(&residuals)?,
        median_error: quantile_sorted(&residuals, 0.5)?,
        rmse: rmse(&residuals)?,
        nmad: nmad(&residuals)?,
        correlation: pearson_correlation(dem.values(), truth.values())?,
        pct_improved,
    })
}

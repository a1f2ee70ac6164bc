//! From raw DEM-minus-reference residuals to smoothed training targets:
//! outlier removal, Freedman–Diaconis binning per feature, bin-wise mean
//! filtering, and the cross-feature combination that yields one absolute
//! error target per pixel.

use crate::error::{Error, Result};
use crate::features::{extract_feature_table, FeatureKind, FeatureTable};
use crate::metrics::{self, NMAD_SCALE};
use crate::raster::{grid_subtract, Grid};

/// Signed and absolute height residuals aligned with a [`FeatureTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pixel_indices: Vec<usize>,
    signed: Vec<f64>,
    absolute: Vec<f64>,
}

impl ResidualVector {
    pub fn new(pixel_indices: Vec<usize>, signed: Vec<f64>) -> Result<ResidualVector> {
        if pixel_indices.len() != signed.len() {
            return Err(Error::Structure(format!(
                "residual vector: {} indices but {} values",
                pixel_indices.len(),
                signed.len()
            )));
        }
        if signed.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structure("residuals must be finite".into()));
        }
        let absolute = signed.iter().map(|v| v.abs()).collect();
        Ok(ResidualVector { pixel_indices, signed, absolute })
    }

    pub fn len(&self) -> usize {
        self.signed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signed.is_empty()
    }

    pub fn pixel_indices(&self) -> &[usize] {
        &self.pixel_indices
    }

    pub fn signed(&self) -> &[f64] {
        &self.signed
    }

    pub fn absolute(&self) -> &[f64] {
        &self.absolute
    }

    fn retain(&self, mask: &[bool]) -> ResidualVector {
        let mut indices = Vec::new();
        let mut signed = Vec::new();
        for (i, keep) in mask.iter().enumerate() {
            if *keep {
                indices.push(self.pixel_indices[i]);
                signed.push(self.signed[i]);
            }
        }
        ResidualVector::new(indices, signed).expect("filtered subset stays valid")
    }
}

/// Computes `dem - reference` at the table's pixels. Pixels that are nodata
/// in either grid are dropped from both the table and the residuals, so the
/// returned pair stays aligned.
pub fn compute_residuals(
    dem: &Grid,
    reference: &Grid,
    table: &FeatureTable,
) -> Result<(FeatureTable, ResidualVector)> {
    let diff = grid_subtract(dem, reference)?;
    let mut mask = Vec::with_capacity(table.len());
    let mut indices = Vec::new();
    let mut signed = Vec::new();
    for (i, idx) in table.pixel_indices().iter().enumerate() {
        if *idx >= diff.values().len() {
            return Err(Error::Structure(format!(
                "table pixel index {idx} out of grid range"
            )));
        }
        let d = diff.values()[*idx];
        let keep = !d.is_nan();
        mask.push(keep);
        if keep {
            indices.push(*idx);
            signed.push(d);
        }
        let _ = i;
    }
    let filtered = table.retain_rows(&mask)?;
    Ok((filtered, ResidualVector::new(indices, signed)?))
}

/// Keep-mask for the robust outlier rule: a residual is kept when
/// `|e - median(e)| <= 3 * NMAD(e)` (strict exceedance removes). With
/// NMAD = 0 (all residuals equal) nothing is removed.
pub fn outlier_mask(signed: &[f64]) -> Result<Vec<bool>> {
    let med = metrics::median(signed)?;
    let nmad = metrics::nmad(signed)?;
    let limit = 3.0 * nmad;
    Ok(signed.iter().map(|e| (e - med).abs() <= limit).collect())
}

/// Drops residual outliers and the corresponding feature rows. Errors when
/// fewer than 10 samples survive.
pub fn remove_outliers(
    res: &ResidualVector,
    table: &FeatureTable,
) -> Result<(ResidualVector, FeatureTable)> {
    if res.len() != table.len() {
        return Err(Error::Usage(format!(
            "residuals ({}) and feature table ({}) are not aligned",
            res.len(),
            table.len()
        )));
    }
    let mask = outlier_mask(res.signed())?;
    let survivors = mask.iter().filter(|k| **k).count();
    if survivors < 10 {
        return Err(Error::InsufficientData(format!(
            "only {survivors} residuals survive outlier removal (need 10)"
        )));
    }
    Ok((res.retain(&mask), table.retain_rows(&mask)?))
}

/// Freedman–Diaconis binning of one feature column: interquartile range `I`
/// over `k` samples gives bin width `h = 2·I·k^(-1/3)` and bin count
/// `N = ceil((max-min)/h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    /// Which feature column this spec was built from.
    pub feature_index: usize,
    /// Interquartile range of the samples (linear-interpolation quantiles).
    pub iqr: f64,
    /// Number of samples binned.
    pub sample_count: usize,
    /// Freedman–Diaconis width; zero when degenerate.
    pub bin_width: f64,
    pub bin_count: usize,
    /// `bin_count + 1` uniform edges from min to max; rightmost inclusive.
    pub edges: Vec<f64>,
    /// Samples per bin; sums to `sample_count`.
    pub counts: Vec<usize>,
    /// Mean absolute residual per bin; `NaN` until smoothing runs, and for
    /// empty bins.
    pub bin_means: Vec<f64>,
    /// True when the feature had zero spread (single catch-all bin).
    pub degenerate: bool,
    /// Bin index of each sample, aligned with the input order.
    assignments: Vec<usize>,
}

impl BinSpec {
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }
}

/// Builds the Freedman–Diaconis [`BinSpec`] for one feature column.
/// Zero spread (IQR 0 or max = min) degenerates to a single flagged bin
/// instead of failing, so constant features still contribute a global mean.
pub fn fd_bin(values: &[f64], feature_index: usize) -> Result<BinSpec> {
    let k = values.len();
    if k < 10 {
        return Err(Error::InsufficientData(format!(
            "binning needs at least 10 samples, got {k}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Structure("binning input must be finite".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let iqr = metrics::iqr(values)?;
    let bin_width = 2.0 * iqr * (k as f64).powf(-1.0 / 3.0);

    if iqr <= 0.0 || hi <= lo {
        return Ok(BinSpec {
            feature_index,
            iqr,
            sample_count: k,
            bin_width,
            bin_count: 1,
            edges: vec![lo, hi],
            counts: vec![k],
            bin_means: vec![f64::NAN],
            degenerate: true,
            assignments: vec![0; k],
        });
    }

    let span = hi - lo;
    let bin_count = ((span / bin_width).ceil() as usize).max(1);
    let edges: Vec<f64> = (0..=bin_count)
        .map(|i| lo + span * i as f64 / bin_count as f64)
        .collect();
    let mut counts = vec![0usize; bin_count];
    let mut assignments = Vec::with_capacity(k);
    for v in values {
        let idx = (((v - lo) / span) * bin_count as f64).floor() as usize;
        let idx = idx.min(bin_count - 1); // rightmost edge inclusive
        counts[idx] += 1;
        assignments.push(idx);
    }
    Ok(BinSpec {
        feature_index,
        iqr,
        sample_count: k,
        bin_width,
        bin_count,
        edges,
        counts,
        bin_means: vec![f64::NAN; bin_count],
        degenerate: false,
        assignments,
    })
}

/// Replaces each pixel's residual with the mean absolute residual of its
/// bin, filling `bins.bin_means` along the way. Pixels whose bin holds fewer
/// than `min_count` samples get `NaN` (missing).
pub fn binwise_smooth(
    bins: &mut BinSpec,
    res: &ResidualVector,
    min_count: usize,
) -> Result<Vec<f64>> {
    if res.len() != bins.sample_count {
        return Err(Error::Usage(format!(
            "bin spec built from {} samples but residual vector has {}",
            bins.sample_count,
            res.len()
        )));
    }
    let mut sums = vec![0.0f64; bins.bin_count];
    for (i, &bin) in bins.assignments.iter().enumerate() {
        sums[bin] += res.absolute()[i];
    }
    for b in 0..bins.bin_count {
        bins.bin_means[b] = if bins.counts[b] > 0 {
            sums[b] / bins.counts[b] as f64
        } else {
            f64::NAN
        };
    }
    Ok(bins
        .assignments
        .iter()
        .map(|&bin| {
            if bins.counts[bin] >= min_count.max(1) {
                bins.bin_means[bin]
            } else {
                f64::NAN
            }
        })
        .collect())
}

/// Per-pixel mean of the non-missing per-feature smoothed values. A pixel
/// missing in every feature stays `NaN` and is dropped downstream.
pub fn combine_smoothed(per_feature: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = per_feature
        .first()
        .ok_or_else(|| Error::Usage("no smoothed arrays to combine".into()))?
        .len();
    if per_feature.iter().any(|a| a.len() != m) {
        return Err(Error::Usage("smoothed arrays have differing lengths".into()));
    }
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut sum = 0.0;
        let mut n = 0usize;
        for arr in per_feature {
            let v = arr[i];
            if !v.is_nan() {
                sum += v;
                n += 1;
            }
        }
        out.push(if n == 0 { f64::NAN } else { sum / n as f64 });
    }
    Ok(out)
}

/// Feature rows paired with smoothed nonnegative absolute-error targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: FeatureTable,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(features: FeatureTable, targets: Vec<f64>) -> Result<TrainingSet> {
        if features.len() != targets.len() {
            return Err(Error::Structure(format!(
                "training set: {} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if targets.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Structure(
                "targets must be finite and nonnegative (absolute errors)".into(),
            ));
        }
        Ok(TrainingSet { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        self.features.names()
    }

    /// CSV with header `row,col,<features...>,target`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col");
        for name in self.features.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",target\n");
        for i in 0..self.len() {
            let (r, c) = self.features.row_col(i);
            out.push_str(&format!("{r},{c}"));
            for v in self.features.row(i) {
                out.push_str(&format!(",{:.9e}", v));
            }
            out.push_str(&format!(",{:.9e}\n", self.targets[i]));
        }
        out
    }

    /// Uniform random subset without replacement, deterministic per seed.
    /// Returns a clone when `max_samples` is not smaller than the set.
    pub fn subsample(&self, max_samples: usize, seed: u64) -> Result<TrainingSet> {
        if max_samples == 0 {
            return Err(Error::Usage("cannot subsample to 0 samples".into()));
        }
        if max_samples >= self.len() {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = crate::rng::SplitMix64::new(seed);
        rng.shuffle(&mut order);
        order.truncate(max_samples);
        order.sort_unstable(); // keep row-major pixel order for readability
        let mut mask = vec![false; self.len()];
        for i in &order {
            mask[*i] = true;
        }
        let features = self.features.retain_rows(&mask)?;
        let targets = order.iter().map(|i| self.targets[*i]).collect();
        TrainingSet::new(features, targets)
    }
}

/// Default sparse-bin threshold: `max(10, 0.001·k)` for `k` retained samples.
pub fn default_min_count(k: usize) -> usize {
    ((k as f64 * 0.001) as usize).max(10)
}

/// Runs the whole refinement pipeline: feature extraction on the DEM,
/// residuals against the reference, outlier removal, per-feature binning and
/// bin-wise mean filtering, and the final cross-feature combination.
pub fn build_training_set(
    dem: &Grid,
    reference: &Grid,
    aux: Option<&Grid>,
    kinds: &[FeatureKind],
    min_count: Option<usize>,
) -> Result<TrainingSet> {
    let table = extract_feature_table(dem, aux, kinds)?;
    let (table, res) = compute_residuals(dem, reference, &table)?;
    if res.is_empty() {
        return Err(Error::InsufficientData("no overlapping valid pixels".into()));
    }
    let (res, table) = remove_outliers(&res, &table)?;
    let min_count = min_count.unwrap_or_else(|| default_min_count(res.len()));

    let mut smoothed: Vec<Vec<f64>> = Vec::with_capacity(table.width());
    for j in 0..table.width() {
        let column = table.column(j);
        let mut bins = fd_bin(&column, j)?;
        smoothed.push(binwise_smooth(&mut bins, &res, min_count)?);
    }
    let combined = combine_smoothed(&smoothed)?;

    let mask: Vec<bool> = combined.iter().map(|v| !v.is_nan()).collect();
    let kept: Vec<f64> = combined.into_iter().filter(|v| !v.is_nan()).collect();
    if kept.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} pixels keep a smoothed target after sparse-bin removal",
            kept.len()
        )));
    }
    TrainingSet::new(table.retain_rows(&mask)?, kept)
}

/// NMAD re-exported scale, for callers that document the outlier rule.
pub const OUTLIER_NMAD_SCALE: f64 = NMAD_SCALE;

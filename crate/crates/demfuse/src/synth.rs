//! Synthetic scenes with known ground truth: fractal terrain, block
//! buildings, and feature-correlated DEM corruption. Every pipeline stage
//! and end-to-end test runs on these instead of proprietary survey data.
//!
//! All generation is bitwise-deterministic per seed (see [`crate::rng`] for
//! the documented generator contract).

use crate::error::{Error, Result};
use crate::features::{compute_feature, FeatureKind};
use crate::raster::{Grid, GridHeader};
use crate::rng::SplitMix64;

/// Diamond-square fractal surface of `size` × `size` cells
/// (`size = 2^k + 1`), rescaled to `height_range`. `roughness` in `(0, 1]`
/// scales the random offsets per subdivision level: values near 0 give
/// smooth rolling terrain, values near 1 keep detail at every scale.
pub fn generate_terrain(
    size: usize,
    roughness: f64,
    height_range: (f64, f64),
    cellsize: f64,
    seed: u64,
) -> Result<Grid> {
    if size < 3 || !(size - 1).is_power_of_two() {
        return Err(Error::Usage(format!(
            "terrain size must be 2^k + 1 (e.g. 129, 257), got {size}"
        )));
    }
    if !(roughness > 0.0 && roughness <= 1.0) {
        return Err(Error::Usage(format!("roughness must be in (0, 1], got {roughness}")));
    }
    let (lo, hi) = height_range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Usage(format!("height range must satisfy lo < hi, got {lo}..{hi}")));
    }

    let mut rng = SplitMix64::new(seed);
    let n = size;
    let mut h = vec![0.0f64; n * n];
    let at = |r: usize, c: usize| r * n + c;
    // Corner seeds.
    for (r, c) in [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)] {
        h[at(r, c)] = rng.uniform_in(-1.0, 1.0);
    }
    let mut step = n - 1;
    let mut amp = 1.0f64;
    while step > 1 {
        let half = step / 2;
        // Diamond step: centers of squares get the 4-corner mean plus noise.
        for r in (half..n).step_by(step) {
            for c in (half..n).step_by(step) {
                let mean = (h[at(r - half, c - half)]
                    + h[at(r - half, c + half)]
                    + h[at(r + half, c - half)]
                    + h[at(r + half, c + half)])
                    / 4.0;
                h[at(r, c)] = mean + rng.uniform_in(-amp, amp);
            }
        }
        // Square step: edge midpoints get the mean of their diamond
        // neighbors (3 at borders, 4 inside) plus noise.
        for r in (0..n).step_by(half) {
            let c_start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (c_start..n).step_by(step) {
                let mut sum = 0.0;
                let mut cnt = 0.0;
                if r >= half {
                    sum += h[at(r - half, c)];
                    cnt += 1.0;
                }
                if r + half < n {
                    sum += h[at(r + half, c)];
                    cnt += 1.0;
                }
                if c >= half {
                    sum += h[at(r, c - half)];
                    cnt += 1.0;
                }
                if c + half < n {
                    sum += h[at(r, c + half)];
                    cnt += 1.0;
                }
                h[at(r, c)] = sum / cnt + rng.uniform_in(-amp, amp);
            }
        }
        amp *= roughness;
        step = half;
    }

    // Rescale to the requested height range.
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in &h {
        min = min.min(*v);
        max = max.max(*v);
    }
    let span = max - min;
    for v in &mut h {
        *v = lo + (*v - min) / span * (hi - lo);
    }
    let header = GridHeader::new(n, n, 0.0, 0.0, cellsize, -9999.0)?;
    Grid::new(header, h)
}

/// Raises axis-aligned rectangular blocks above the terrain until roughly
/// `density` of the cells are covered. Footprints span 3–12 cells per side;
/// each block's flat roof sits `height_range` meters above the highest
/// terrain inside its footprint, so every building pixel is at or above the
/// original surface.
pub fn add_buildings(
    terrain: &Grid,
    density: f64,
    height_range: (f64, f64),
    seed: u64,
) -> Result<Grid> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Usage(format!("building density must be in [0, 1], got {density}")));
    }
    let (hlo, hhi) = height_range;
    if !(hlo > 0.0 && hhi >= hlo) {
        return Err(Error::Usage(format!(
            "building heights must satisfy 0 < lo <= hi, got {hlo}..{hhi}"
        )));
    }
    let mut out = terrain.clone();
    if density == 0.0 {
        return Ok(out);
    }
    let (nrows, ncols) = (terrain.nrows(), terrain.ncols());
    if nrows < 3 || ncols < 3 {
        return Ok(out); // nothing sensible to place
    }
    let target = (density * (nrows * ncols) as f64).round() as usize;
    let mut covered = vec![false; nrows * ncols];
    let mut covered_count = 0usize;
    let mut rng = SplitMix64::new(seed);
    let mut attempts = 0usize;
    let max_attempts = 40 * (target.max(1) / 9 + 1);

    while covered_count < target && attempts < max_attempts {
        attempts += 1;
        let w = 3 + rng.below(10); // 3..=12
        let d = 3 + rng.below(10);
        if w > ncols || d > nrows {
            continue;
        }
        let r0 = rng.below(nrows - d + 1);
        let c0 = rng.below(ncols - w + 1);
        let lift = rng.uniform_in(hlo, hhi);

        let mut base = f64::NEG_INFINITY;
        let mut has_nodata = false;
        for r in r0..r0 + d {
            for c in c0..c0 + w {
                let v = terrain.get(r, c);
                if v.is_nan() {
                    has_nodata = true;
                } else {
                    base = base.max(v);
                }
            }
        }
        if has_nodata || !base.is_finite() {
            continue;
        }
        let roof = base + lift;
        for r in r0..r0 + d {
            for c in c0..c0 + w {
                if out.get(r, c) < roof {
                    out.set(r, c, roof);
                }
                let idx = r * ncols + c;
                if !covered[idx] {
                    covered[idx] = true;
                    covered_count += 1;
                }
            }
        }
    }
    Ok(out)
}

/// How a synthetic DEM deviates from truth: a constant bias, a linear tilt
/// plane (meters per cell, centered on the scene), and zero-mean Gaussian
/// noise whose per-pixel sigma follows one terrain feature:
/// `sigma(i) = base_sigma + feature_gain * driver(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub base_sigma: f64,
    pub feature_gain: f64,
    pub driver: FeatureKind,
    pub bias: f64,
    /// (east, south) tilt in meters per cell, zero-mean across the scene.
    pub tilt: (f64, f64),
    pub seed: u64,
}

impl ErrorModel {
    /// Radar-flavored corruption: noise grows sharply with local relief
    /// (quality loss over rough/built-up areas), small floor elsewhere.
    pub fn insar_like(seed: u64) -> ErrorModel {
        ErrorModel {
            base_sigma: 0.5,
            feature_gain: 0.6,
            driver: FeatureKind::Roughness,
            bias: 0.0,
            tilt: (0.0, 0.0),
            seed,
        }
    }

    /// Stereo-matching-flavored corruption: larger noise floor, milder
    /// dependence on height-texture entropy.
    pub fn optical_like(seed: u64) -> ErrorModel {
        ErrorModel {
            base_sigma: 1.2,
            feature_gain: 0.35,
            driver: FeatureKind::Entropy,
            bias: 0.0,
            tilt: (0.0, 0.0),
            seed,
        }
    }

    /// `key=value` description for fixture manifests.
    pub fn describe(&self) -> String {
        format!(
            "base_sigma={}\nfeature_gain={}\ndriver={}\nbias={}\ntilt_x={}\ntilt_y={}\nseed={}\n",
            self.base_sigma, self.feature_gain, self.driver, self.bias, self.tilt.0, self.tilt.1, self.seed
        )
    }
}

/// Applies an [`ErrorModel`] to a truth grid. Returns the corrupted DEM and
/// the per-pixel sigma actually used — an exact height-error oracle. Where
/// the driver feature is undefined (borders, nodata neighborhoods) the noise
/// falls back to `base_sigma`, so the DEM keeps exactly the truth's nodata
/// mask.
pub fn corrupt(truth: &Grid, model: &ErrorModel) -> Result<(Grid, Grid)> {
    if !(model.base_sigma >= 0.0) {
        return Err(Error::Usage(format!(
            "base_sigma must be nonnegative, got {}",
            model.base_sigma
        )));
    }
    if model.driver == FeatureKind::AuxErrorMap {
        return Err(Error::Usage("driver must be a computable feature".into()));
    }
    let driver = compute_feature(truth, model.driver)?;
    let (nrows, ncols) = (truth.nrows(), truth.ncols());

    let mut sigma = Grid::nodata_like(truth);
    for r in 0..nrows {
        for c in 0..ncols {
            if truth.is_nodata(r, c) {
                continue;
            }
            let d = driver.get(r, c);
            let s = if d.is_nan() {
                model.base_sigma
            } else {
                model.base_sigma + model.feature_gain * d
            };
            if s < 0.0 {
                return Err(Error::Usage(format!(
                    "error model yields negative sigma {s} at ({r},{c})"
                )));
            }
            sigma.set(r, c, s);
        }
    }

    let mut rng = SplitMix64::new(model.seed);
    let mut dem = truth.clone();
    let cx = (ncols as f64 - 1.0) / 2.0;
    let cy = (nrows as f64 - 1.0) / 2.0;
    for r in 0..nrows {
        for c in 0..ncols {
            // One draw per cell, valid or not, keeps the noise field stable
            // under nodata-mask changes.
            let z = rng.normal();
            if truth.is_nodata(r, c) {
                continue;
            }
            let plane = model.tilt.0 * (c as f64 - cx) + model.tilt.1 * (r as f64 - cy);
            let v = truth.get(r, c) + model.bias + plane + z * sigma.get(r, c);
            dem.set(r, c, v);
        }
    }
    Ok((dem, sigma))
}

//! Per-pixel terrain descriptors from 3×3 height windows, and the feature
//! matrix assembled from them.
//!
//! Every windowed descriptor is computed from the 3×3 neighborhood of a
//! pixel; border pixels and windows touching nodata yield nodata. The
//! eleventh kind, [`FeatureKind::AuxErrorMap`], is a pass-through for an
//! externally supplied per-pixel quality raster and is never computed here.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{Grid, GridHeader};

/// The supported per-pixel descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// Steepest height gradient, degrees from horizontal.
    Slope,
    /// Orientation of the gradient, degrees in `[0, 360)`; flat → 0.
    Aspect,
    /// Anisotropy of local relief from the four directional differences.
    Acv,
    /// Population standard deviation of the 9 window heights.
    Tri,
    /// Center height minus the mean of the 8 neighbors.
    Tpi,
    /// Largest absolute center-to-neighbor height difference.
    Roughness,
    /// Height range (max − min) over the window.
    Ruggedness,
    /// Surface roughness factor from triangle-facet normals, ≥ 1.
    Srf,
    /// Shannon entropy (nats) of window heights over 8 equal bins.
    Entropy,
    /// Sobel gradient magnitude on raw heights.
    Edginess,
    /// Externally supplied per-pixel error/quality raster, passed through.
    AuxErrorMap,
}

impl FeatureKind {
    /// The ten computable kinds, in canonical order (excludes the aux map).
    pub const COMPUTED: [FeatureKind; 10] = [
        FeatureKind::Slope,
        FeatureKind::Aspect,
        FeatureKind::Acv,
        FeatureKind::Tri,
        FeatureKind::Tpi,
        FeatureKind::Roughness,
        FeatureKind::Ruggedness,
        FeatureKind::Srf,
        FeatureKind::Entropy,
        FeatureKind::Edginess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Slope => "slope",
            FeatureKind::Aspect => "aspect",
            FeatureKind::Acv => "acv",
            FeatureKind::Tri => "tri",
            FeatureKind::Tpi => "tpi",
            FeatureKind::Roughness => "roughness",
            FeatureKind::Ruggedness => "ruggedness",
            FeatureKind::Srf => "srf",
            FeatureKind::Entropy => "entropy",
            FeatureKind::Edginess => "edginess",
            FeatureKind::AuxErrorMap => "aux_error",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<FeatureKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slope" => Ok(FeatureKind::Slope),
            "aspect" => Ok(FeatureKind::Aspect),
            "acv" => Ok(FeatureKind::Acv),
            "tri" => Ok(FeatureKind::Tri),
            "tpi" => Ok(FeatureKind::Tpi),
            "roughness" => Ok(FeatureKind::Roughness),
            "ruggedness" => Ok(FeatureKind::Ruggedness),
            "srf" => Ok(FeatureKind::Srf),
            "entropy" => Ok(FeatureKind::Entropy),
            "edginess" => Ok(FeatureKind::Edginess),
            "aux_error" => Ok(FeatureKind::AuxErrorMap),
            other => Err(Error::Usage(format!("unknown feature kind `{other}`"))),
        }
    }
}

/// 3×3 window around `(row, col)`, row-major
/// `[NW, N, NE, W, C, E, SW, S, SE]`; `None` at borders or when any cell is
/// nodata.
#[inline]
pub fn window3(grid: &Grid, row: usize, col: usize) -> Option<[f64; 9]> {
    if row == 0 || col == 0 || row + 1 >= grid.nrows() || col + 1 >= grid.ncols() {
        return None;
    }
    let mut w = [0.0; 9];
    let mut k = 0;
    for dr in 0..3 {
        for dc in 0..3 {
            let v = grid.get(row + dr - 1, col + dc - 1);
            if v.is_nan() {
                return None;
            }
            w[k] = v;
            k += 1;
        }
    }
    Some(w)
}

// Window index aliases for readability.
const NW: usize = 0;
const N: usize = 1;
const NE: usize = 2;
const W: usize = 3;
const C: usize = 4;
const E: usize = 5;
const SW: usize = 6;
const S: usize = 7;
const SE: usize = 8;

fn gradient(w: &[f64; 9], cellsize: f64) -> (f64, f64) {
    let gx = (w[E] - w[W]) / (2.0 * cellsize);
    let gy = (w[N] - w[S]) / (2.0 * cellsize);
    (gx, gy)
}

fn slope_deg(w: &[f64; 9], cellsize: f64) -> f64 {
    let (gx, gy) = gradient(w, cellsize);
    (gx * gx + gy * gy).sqrt().atan().to_degrees()
}

fn aspect_deg(w: &[f64; 9], cellsize: f64) -> f64 {
    let (gx, gy) = gradient(w, cellsize);
    if (gx * gx + gy * gy).sqrt() < 1e-12 {
        return 0.0;
    }
    let mut deg = gy.atan2(-gx).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    if deg >= 360.0 {
        deg -= 360.0;
    }
    deg
}

fn tri(w: &[f64; 9]) -> f64 {
    let mean = w.iter().sum::<f64>() / 9.0;
    (w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0).sqrt()
}

fn tpi(w: &[f64; 9]) -> f64 {
    let neighbor_sum = w.iter().sum::<f64>() - w[C];
    w[C] - neighbor_sum / 8.0
}

fn roughness(w: &[f64; 9]) -> f64 {
    w.iter()
        .enumerate()
        .filter(|(i, _)| *i != C)
        .map(|(_, v)| (w[C] - v).abs())
        .fold(0.0, f64::max)
}

fn ruggedness(w: &[f64; 9]) -> f64 {
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn acv(w: &[f64; 9]) -> f64 {
    let d = [w[N] - w[S], w[E] - w[W], w[NE] - w[SW], w[NW] - w[SE]];
    let mean = d.iter().sum::<f64>() / 4.0;
    let sigma = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0).sqrt();
    let mean_abs = d.iter().map(|v| v.abs()).sum::<f64>() / 4.0;
    (1.0 + sigma / (mean_abs + 1e-9)).ln()
}

/// Ring of the 8 neighbors counterclockwise from east, as
/// (window index, x offset, y offset) in cell units.
const RING: [(usize, f64, f64); 8] = [
    (E, 1.0, 0.0),
    (NE, 1.0, 1.0),
    (N, 0.0, 1.0),
    (NW, -1.0, 1.0),
    (W, -1.0, 0.0),
    (SW, -1.0, -1.0),
    (S, 0.0, -1.0),
    (SE, 1.0, -1.0),
];

fn srf(w: &[f64; 9], cellsize: f64) -> f64 {
    // Eight triangle facets fan from the center to consecutive ring
    // neighbors; a plane makes all unit normals identical, giving exactly 1.
    let mut sum = [0.0f64; 3];
    for i in 0..8 {
        let (ia, ax, ay) = RING[i];
        let (ib, bx, by) = RING[(i + 1) % 8];
        let u = [ax * cellsize, ay * cellsize, w[ia] - w[C]];
        let v = [bx * cellsize, by * cellsize, w[ib] - w[C]];
        let mut n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len == 0.0 {
            continue;
        }
        if n[2] < 0.0 {
            for c in &mut n {
                *c = -*c;
            }
        }
        for (s, c) in sum.iter_mut().zip(n) {
            *s += c / len;
        }
    }
    let norm = (sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]).sqrt();
    if norm == 0.0 {
        f64::NAN
    } else {
        8.0 / norm
    }
}

fn entropy(w: &[f64; 9]) -> f64 {
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 {
        return 0.0;
    }
    let mut counts = [0usize; 8];
    for v in w {
        let idx = (((v - lo) / span) * 8.0).floor() as usize;
        counts[idx.min(7)] += 1;
    }
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / 9.0;
            h -= p * p.ln();
        }
    }
    h
}

fn edginess(w: &[f64; 9]) -> f64 {
    let sx = (w[NE] + 2.0 * w[E] + w[SE]) - (w[NW] + 2.0 * w[W] + w[SW]);
    let sy = (w[SW] + 2.0 * w[S] + w[SE]) - (w[NW] + 2.0 * w[N] + w[NE]);
    (sx * sx + sy * sy).sqrt()
}

/// Evaluates one computable descriptor on one window.
pub fn feature_on_window(kind: FeatureKind, w: &[f64; 9], cellsize: f64) -> f64 {
    match kind {
        FeatureKind::Slope => slope_deg(w, cellsize),
        FeatureKind::Aspect => aspect_deg(w, cellsize),
        FeatureKind::Acv => acv(w),
        FeatureKind::Tri => tri(w),
        FeatureKind::Tpi => tpi(w),
        FeatureKind::Roughness => roughness(w),
        FeatureKind::Ruggedness => ruggedness(w),
        FeatureKind::Srf => srf(w, cellsize),
        FeatureKind::Entropy => entropy(w),
        FeatureKind::Edginess => edginess(w),
        FeatureKind::AuxErrorMap => f64::NAN,
    }
}

/// Computes one descriptor over the whole grid. Border pixels and windows
/// touching nodata become nodata. The aux map cannot be computed here.
pub fn compute_feature(grid: &Grid, kind: FeatureKind) -> Result<Grid> {
    if kind == FeatureKind::AuxErrorMap {
        return Err(Error::Usage(
            "aux_error is an externally supplied raster, not a computed feature".into(),
        ));
    }
    let cellsize = grid.header().cellsize;
    let mut out = Grid::nodata_like(grid);
    for row in 0..grid.nrows() {
        for col in 0..grid.ncols() {
            if let Some(w) = window3(grid, row, col) {
                out.set(row, col, feature_on_window(kind, &w, cellsize));
            }
        }
    }
    Ok(out)
}

/// Pixel-by-feature value matrix over the pixels where the height and every
/// requested feature are valid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    /// Flat (row-major) pixel index into the source grid, per row.
    pixel_indices: Vec<usize>,
    /// Feature names in column order.
    names: Vec<String>,
    /// Row-major m × n values.
    values: Vec<f64>,
    /// Source grid width, for flat-index ↔ (row, col) conversion.
    grid_ncols: usize,
}

impl FeatureTable {
    pub fn new(
        pixel_indices: Vec<usize>,
        names: Vec<String>,
        values: Vec<f64>,
        grid_ncols: usize,
    ) -> Result<FeatureTable> {
        if names.is_empty() {
            return Err(Error::Usage("feature table needs at least one column".into()));
        }
        if values.len() != pixel_indices.len() * names.len() {
            return Err(Error::Structure(format!(
                "feature table size mismatch: {} values for {} rows x {} columns",
                values.len(),
                pixel_indices.len(),
                names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structure("feature table contains non-finite entries".into()));
        }
        Ok(FeatureTable { pixel_indices, names, values, grid_ncols })
    }

    /// Number of pixel rows.
    pub fn len(&self) -> usize {
        self.pixel_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixel_indices.is_empty()
    }

    /// Number of feature columns.
    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn pixel_indices(&self) -> &[usize] {
        &self.pixel_indices
    }

    pub fn grid_ncols(&self) -> usize {
        self.grid_ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.width();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_col(&self, i: usize) -> (usize, usize) {
        let idx = self.pixel_indices[i];
        (idx / self.grid_ncols, idx % self.grid_ncols)
    }

    /// One feature column by position.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i)[j]).collect()
    }

    /// One feature column by name.
    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Usage(format!("feature table has no column `{name}`")))?;
        Ok(self.column(j))
    }

    /// Keeps the rows where `mask` is true.
    pub fn retain_rows(&self, mask: &[bool]) -> Result<FeatureTable> {
        if mask.len() != self.len() {
            return Err(Error::Usage(format!(
                "mask length {} does not match table rows {}",
                mask.len(),
                self.len()
            )));
        }
        let n = self.width();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, keep) in mask.iter().enumerate() {
            if *keep {
                indices.push(self.pixel_indices[i]);
                values.extend_from_slice(&self.values[i * n..(i + 1) * n]);
            }
        }
        FeatureTable::new(indices, self.names.clone(), values, self.grid_ncols)
    }

    /// Reorders/subsets columns to the given names (e.g. the feature order a
    /// trained model expects).
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        let positions: Vec<usize> = names
            .iter()
            .map(|name| {
                self.names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Usage(format!("feature table has no column `{name}`")))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.len() * names.len());
        for i in 0..self.len() {
            let row = self.row(i);
            for &j in &positions {
                values.push(row[j]);
            }
        }
        FeatureTable::new(self.pixel_indices.clone(), names.to_vec(), values, self.grid_ncols)
    }

    /// CSV with header `row,col,<feature names...>`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.len() {
            let (r, c) = self.row_col(i);
            out.push_str(&format!("{r},{c}"));
            for v in self.row(i) {
                out.push_str(&format!(",{:.9e}", v));
            }
            out.push('\n');
        }
        out
    }
}

/// Computes the requested features and assembles the pixel-by-feature matrix
/// over pixels where everything is valid. `aux` must be present exactly when
/// `kinds` includes the aux pass-through, and must match `height` geometry.
pub fn extract_feature_table(
    height: &Grid,
    aux: Option<&Grid>,
    kinds: &[FeatureKind],
) -> Result<FeatureTable> {
    if kinds.is_empty() {
        return Err(Error::Usage("no feature kinds requested".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for k in kinds {
        if !seen.insert(*k) {
            return Err(Error::Usage(format!("duplicate feature kind `{k}`")));
        }
    }
    let wants_aux = kinds.contains(&FeatureKind::AuxErrorMap);
    match (wants_aux, aux) {
        (true, None) => {
            return Err(Error::Usage("aux_error requested but no aux raster supplied".into()))
        }
        (false, Some(_)) => {
            return Err(Error::Usage("aux raster supplied but aux_error not requested".into()))
        }
        _ => {}
    }
    if let Some(a) = aux {
        if !a.header().same_geometry(height.header()) {
            return Err(Error::Geometry("aux raster geometry differs from height grid".into()));
        }
    }

    let mut columns: Vec<Grid> = Vec::with_capacity(kinds.len());
    for kind in kinds {
        match kind {
            FeatureKind::AuxErrorMap => columns.push(aux.unwrap().clone()),
            k => columns.push(compute_feature(height, *k)?),
        }
    }

    let mut indices = Vec::new();
    let mut values = Vec::new();
    let ncols = height.ncols();
    for row in 0..height.nrows() {
        for col in 0..ncols {
            if height.is_nodata(row, col) {
                continue;
            }
            if columns.iter().any(|g| g.is_nodata(row, col)) {
                continue;
            }
            indices.push(row * ncols + col);
            for g in &columns {
                values.push(g.get(row, col));
            }
        }
    }
    let names = kinds.iter().map(|k| k.name().to_string()).collect();
    FeatureTable::new(indices, names, values, ncols)
}

/// Builds a grid from per-pixel values at table rows; nodata elsewhere.
pub fn table_values_to_grid(
    geometry: &GridHeader,
    pixel_indices: &[usize],
    values: &[f64],
) -> Result<Grid> {
    if pixel_indices.len() != values.len() {
        return Err(Error::Usage("pixel index / value length mismatch".into()));
    }
    let mut grid = Grid::constant(geometry.clone(), f64::NAN);
    for (idx, v) in pixel_indices.iter().zip(values) {
        if *idx >= geometry.cell_count() {
            return Err(Error::Structure(format!(
                "pixel index {idx} out of range for {}x{} grid",
                geometry.ncols, geometry.nrows
            )));
        }
        grid.values_mut()[*idx] = *v;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GridHeader;

    fn grid_from_fn(n: usize, cellsize: f64, f: impl Fn(usize, usize) -> f64) -> Grid {
        let header = GridHeader::new(n, n, 0.0, 0.0, cellsize, -9999.0).unwrap();
        let values = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Grid::new(header, values).unwrap()
    }

    #[test]
    fn constant_grid_features_zero() {
        let g = grid_from_fn(6, 5.0, |_, _| 42.0);
        for kind in [
            FeatureKind::Slope,
            FeatureKind::Tri,
            FeatureKind::Tpi,
            FeatureKind::Roughness,
            FeatureKind::Ruggedness,
            FeatureKind::Edginess,
            FeatureKind::Entropy,
            FeatureKind::Aspect,
        ] {
            let f = compute_feature(&g, kind).unwrap();
            for row in 1..5 {
                for col in 1..5 {
                    assert!(
                        f.get(row, col).abs() < 1e-12,
                        "{kind} not zero on flat grid: {}",
                        f.get(row, col)
                    );
                }
            }
        }
        let srf = compute_feature(&g, FeatureKind::Srf).unwrap();
        assert!((srf.get(2, 2) - 1.0).abs() < 1e-12, "flat SRF = 1");
    }

    #[test]
    fn plane_slope_matches_analytic_gradient() {
        // 1 m of rise per 5 m cell going east: slope = atan(1/5).
        let g = grid_from_fn(8, 5.0, |_, col| col as f64);
        let slope = compute_feature(&g, FeatureKind::Slope).unwrap();
        let expected = (1.0f64 / 5.0).atan().to_degrees();
        for row in 1..7 {
            for col in 1..7 {
                assert!((slope.get(row, col) - expected).abs() < 1e-9);
            }
        }
        assert!((expected - 11.3099).abs() < 1e-4);
        // SRF of any plane is exactly 1.
        let srf = compute_feature(&g, FeatureKind::Srf).unwrap();
        assert!((srf.get(3, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counting_window_hand_values() {
        // Window [1..9] row-major around the center of a 3x3 grid.
        let g = grid_from_fn(3, 1.0, |r, c| (r * 3 + c + 1) as f64);
        let w = window3(&g, 1, 1).unwrap();
        assert_eq!(w, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert!((tpi(&w) - 0.0).abs() < 1e-12); // 5 - mean(1,2,3,4,6,7,8,9) = 0
        assert_eq!(roughness(&w), 4.0);
        assert_eq!(ruggedness(&w), 8.0);
        // TRI: population sigma of 1..9 = sqrt(60/9).
        assert!((tri(&w) - (60.0f64 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aspect_of_cardinal_tilts() {
        // Heights rising east: gx>0, gy=0 → atan2(0,-gx) = 180°.
        let east = grid_from_fn(5, 2.0, |_, c| c as f64);
        let a = compute_feature(&east, FeatureKind::Aspect).unwrap();
        assert!((a.get(2, 2) - 180.0).abs() < 1e-9);
        // Heights rising north (row 0 highest): gy>0, gx=0 → 90°.
        let north = grid_from_fn(5, 2.0, |r, _| (4 - r) as f64);
        let a = compute_feature(&north, FeatureKind::Aspect).unwrap();
        assert!((a.get(2, 2) - 90.0).abs() < 1e-9);
        // Flat → 0 by convention.
        let flat = grid_from_fn(5, 2.0, |_, _| 3.0);
        let a = compute_feature(&flat, FeatureKind::Aspect).unwrap();
        assert_eq!(a.get(2, 2), 0.0);
    }

    #[test]
    fn aspect_range_and_invariants_on_random_windows() {
        let g = grid_from_fn(20, 3.0, |r, c| {
            ((r * 31 + c * 17) % 97) as f64 * 0.37 + ((r * 7 + c * 13) % 23) as f64
        });
        for kind in FeatureKind::COMPUTED {
            let f = compute_feature(&g, kind).unwrap();
            for row in 1..19 {
                for col in 1..19 {
                    let v = f.get(row, col);
                    assert!(v.is_finite());
                    match kind {
                        FeatureKind::Slope => assert!((0.0..90.0).contains(&v)),
                        FeatureKind::Aspect => assert!((0.0..360.0).contains(&v)),
                        FeatureKind::Tri
                        | FeatureKind::Roughness
                        | FeatureKind::Ruggedness
                        | FeatureKind::Entropy
                        | FeatureKind::Edginess => assert!(v >= 0.0),
                        FeatureKind::Srf => assert!(v >= 1.0 - 1e-12),
                        _ => {}
                    }
                }
            }
        }
        // Ruggedness >= Roughness holds exactly (window range bounds any
        // center-to-neighbor difference).
        let rug = compute_feature(&g, FeatureKind::Ruggedness).unwrap();
        let rough = compute_feature(&g, FeatureKind::Roughness).unwrap();
        for (a, b) in rug.values().iter().zip(rough.values()) {
            if !a.is_nan() {
                assert!(*a >= *b - 1e-12);
            }
        }
    }

    #[test]
    fn translation_invariance_in_height() {
        let g = grid_from_fn(10, 5.0, |r, c| ((r * 13 + c * 7) % 29) as f64 * 0.8);
        let mut shifted = g.clone();
        for v in shifted.values_mut() {
            *v += 1234.5;
        }
        for kind in FeatureKind::COMPUTED {
            if kind == FeatureKind::Aspect {
                continue; // flat-window tie-break may differ under fp shift
            }
            let a = compute_feature(&g, kind).unwrap();
            let b = compute_feature(&shifted, kind).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                if !x.is_nan() {
                    assert!((x - y).abs() < 1e-9, "{kind}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn compute_feature_rejects_aux() {
        let g = grid_from_fn(4, 1.0, |_, _| 0.0);
        assert!(matches!(
            compute_feature(&g, FeatureKind::AuxErrorMap),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn table_border_exclusion() {
        let g = grid_from_fn(4, 1.0, |r, c| (r + c) as f64);
        let t = extract_feature_table(&g, None, &[FeatureKind::Slope]).unwrap();
        assert_eq!(t.len(), 4); // interior 2x2 of a 4x4 grid
        assert_eq!(t.width(), 1);
        let rc: Vec<(usize, usize)> = (0..t.len()).map(|i| t.row_col(i)).collect();
        assert_eq!(rc, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn table_aux_passthrough() {
        let g = grid_from_fn(4, 1.0, |r, c| (r * 4 + c) as f64);
        let aux = grid_from_fn(4, 1.0, |r, c| (r * 10 + c) as f64 * 0.1);
        let t = extract_feature_table(&g, Some(&aux), &[FeatureKind::Tri, FeatureKind::AuxErrorMap])
            .unwrap();
        let col = t.column_by_name("aux_error").unwrap();
        for (i, v) in col.iter().enumerate() {
            let (r, c) = t.row_col(i);
            assert_eq!(*v, aux.get(r, c));
        }
        // aux presence must match the kinds list in both directions
        assert!(extract_feature_table(&g, None, &[FeatureKind::AuxErrorMap]).is_err());
        assert!(extract_feature_table(&g, Some(&aux), &[FeatureKind::Tri]).is_err());
    }

    #[test]
    fn nodata_window_exclusion_matches_brute_force() {
        let mut g = grid_from_fn(6, 1.0, |r, c| (r * 6 + c) as f64);
        g.set(2, 3, f64::NAN);
        let t = extract_feature_table(&g, None, &[FeatureKind::Tpi]).unwrap();
        let excluded: Vec<(usize, usize)> = (1usize..5)
            .flat_map(|r| (1usize..5).map(move |c| (r, c)))
            .filter(|&(r, c)| r.abs_diff(2) <= 1 && c.abs_diff(3) <= 1)
            .collect();
        for (r, c) in excluded {
            assert!(
                !(0..t.len()).any(|i| t.row_col(i) == (r, c)),
                "({r},{c}) should be excluded"
            );
        }
        assert_eq!(t.len(), 16 - 9); // interior 4x4 minus the 3x3 block around (2,3)
    }

    #[test]
    fn csv_shape() {
        let g = grid_from_fn(4, 1.0, |r, c| (r + 2 * c) as f64);
        let t = extract_feature_table(&g, None, &[FeatureKind::Slope, FeatureKind::Tri]).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "row,col,slope,tri");
        assert_eq!(csv.lines().count(), 1 + t.len());
    }

    #[test]
    fn select_and_retain() {
        let g = grid_from_fn(5, 1.0, |r, c| ((r * 5 + c) % 7) as f64);
        let t = extract_feature_table(&g, None, &[FeatureKind::Tri, FeatureKind::Tpi]).unwrap();
        let sel = t.select_columns(&["tpi".to_string()]).unwrap();
        assert_eq!(sel.width(), 1);
        assert_eq!(sel.column(0), t.column_by_name("tpi").unwrap());
        let mask: Vec<bool> = (0..t.len()).map(|i| i % 2 == 0).collect();
        let kept = t.retain_rows(&mask).unwrap();
        assert_eq!(kept.len(), t.len().div_ceil(2));
        assert!(t.select_columns(&["nope".to_string()]).is_err());
    }
}

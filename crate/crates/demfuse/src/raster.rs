//! Grid data model, ASCII raster I/O, resampling and elementwise arithmetic.
//!
//! A [`Grid`] is a georeferenced single-band raster of heights in meters,
//! stored row-major with the north row first. Cells are registered on their
//! centers: cell `(row, col)` has its center at
//! `x = xll + (col + 0.5) * cellsize`,
//! `y = yll + (nrows - row - 0.5) * cellsize`.
//!
//! Nodata is represented as `NaN` in memory; the header's sentinel value only
//! appears in serialized ASCII files. The writer rejects grids that contain
//! the sentinel as a real height, so read/write roundtrips are unambiguous.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Header of an ASCII grid: dimensions, lower-left corner, cell size, sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    /// x of the lower-left corner of the lower-left cell (map units).
    pub xll: f64,
    /// y of the lower-left corner of the lower-left cell (map units).
    pub yll: f64,
    /// Cell size in map units per pixel, identical in x and y.
    pub cellsize: f64,
    /// Nodata sentinel used in files. In memory nodata is `NaN`.
    pub nodata: f64,
}

impl GridHeader {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64, nodata: f64) -> Result<Self> {
        if ncols < 1 || nrows < 1 {
            return Err(Error::Structure(format!(
                "grid dimensions must be at least 1x1, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > 0.0) || !cellsize.is_finite() {
            return Err(Error::Structure(format!("cellsize must be positive, got {cellsize}")));
        }
        if !xll.is_finite() || !yll.is_finite() || !nodata.is_finite() {
            return Err(Error::Structure("header values must be finite".into()));
        }
        Ok(GridHeader { ncols, nrows, xll, yll, cellsize, nodata })
    }

    /// Geometry comparison: everything except the nodata sentinel.
    pub fn same_geometry(&self, other: &GridHeader) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.xll == other.xll
            && self.yll == other.yll
            && self.cellsize == other.cellsize
    }

    pub fn cell_count(&self) -> usize {
        self.ncols * self.nrows
    }

    /// Map coordinates of the center of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.xll + (col as f64 + 0.5) * self.cellsize,
            self.yll + (self.nrows as f64 - row as f64 - 0.5) * self.cellsize,
        )
    }
}

/// Single-band raster with `NaN` nodata. Carrier for heights, error maps,
/// weight maps and feature maps alike; the semantic role is the caller's.
#[derive(Debug, Clone)]
pub struct Grid {
    header: GridHeader,
    values: Vec<f64>,
}

/// Equality treats nodata as equal to nodata (unlike raw `f64` NaN), so a
/// grid always equals itself and roundtrips compare cleanly.
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a.is_nan() && b.is_nan()) || a == b)
    }
}

impl Grid {
    /// Wraps a header and row-major values (north row first).
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        if values.len() != header.cell_count() {
            return Err(Error::Structure(format!(
                "value count {} does not match {}x{} grid",
                values.len(),
                header.ncols,
                header.nrows
            )));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::Structure("grid values must be finite or nodata".into()));
        }
        Ok(Grid { header, values })
    }

    /// Grid filled with a single value.
    pub fn constant(header: GridHeader, value: f64) -> Self {
        let n = header.cell_count();
        Grid { header, values: vec![value; n] }
    }

    /// Grid of the same geometry as `other`, filled with nodata.
    pub fn nodata_like(other: &Grid) -> Self {
        Grid::constant(other.header.clone(), f64::NAN)
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    pub fn ncols(&self) -> usize {
        self.header.ncols
    }

    pub fn nrows(&self) -> usize {
        self.header.nrows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.header.ncols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.header.ncols + col] = v;
    }

    #[inline]
    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_nan()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// Min and max over valid cells, `None` if the grid is all nodata.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| !v.is_nan());
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for v in it {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        Some((lo, hi))
    }

    /// Bilinear sample at fractional index position (`fx` along columns,
    /// `fy` along rows from the north). Positions are clamped to the cell
    /// center lattice, so the sample is always a convex combination of
    /// stored values. Returns `NaN` if any source cell with nonzero weight
    /// is nodata.
    pub fn sample_index(&self, fx: f64, fy: f64) -> f64 {
        let (ncols, nrows) = (self.header.ncols, self.header.nrows);
        let fx = fx.clamp(0.0, (ncols - 1) as f64);
        let fy = fy.clamp(0.0, (nrows - 1) as f64);
        let c0 = (fx.floor() as usize).min(ncols.saturating_sub(2));
        let r0 = (fy.floor() as usize).min(nrows.saturating_sub(2));
        let (c1, r1) = if ncols == 1 || nrows == 1 {
            // 1-cell axes degenerate to nearest.
            ((c0 + 1).min(ncols - 1), (r0 + 1).min(nrows - 1))
        } else {
            (c0 + 1, r0 + 1)
        };
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
        let cells = [(r0, c0), (r0, c1), (r1, c0), (r1, c1)];
        let mut acc = 0.0;
        for (wi, (r, c)) in w.iter().zip(cells) {
            // Weights that are zero up to rounding do not pull in nodata.
            if *wi < 1e-12 {
                continue;
            }
            let v = self.get(r, c);
            if v.is_nan() {
                return f64::NAN;
            }
            acc += wi * v;
        }
        acc
    }

    /// Bilinear sample at map coordinates; `NaN` outside the cell-center hull.
    pub fn sample_map(&self, x: f64, y: f64) -> f64 {
        let h = &self.header;
        let fx = (x - h.xll) / h.cellsize - 0.5;
        let fy = (h.yll + h.nrows as f64 * h.cellsize - y) / h.cellsize - 0.5;
        if fx < -1e-9 || fy < -1e-9 || fx > (h.ncols - 1) as f64 + 1e-9 || fy > (h.nrows - 1) as f64 + 1e-9 {
            return f64::NAN;
        }
        self.sample_index(fx, fy)
    }
}

/// Parses the ASCII grid format: six header lines (`ncols`, `nrows`,
/// `xllcorner`, `yllcorner`, `cellsize`, `NODATA_value`, keys
/// case-insensitive) followed by `nrows` lines of `ncols` values,
/// north row first. Cells equal to the sentinel become nodata.
pub fn read_ascii_grid(text: &str) -> Result<Grid> {
    let mut lines = text.lines();
    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut xll: Option<f64> = None;
    let mut yll: Option<f64> = None;
    let mut cellsize: Option<f64> = None;
    let mut nodata: Option<f64> = None;

    for _ in 0..6 {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated header: expected 6 header lines".into()))?;
        let mut parts = line.split_whitespace();
        let key = parts
            .next()
            .ok_or_else(|| Error::Parse("blank line in header".into()))?;
        let value = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("header key `{key}` has no value")))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("header key `{key}` has trailing tokens")));
        }
        let bad = || Error::Parse(format!("header key `{key}` has a malformed value `{value}`"));
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(value.parse::<usize>().map_err(|_| bad())?),
            "nrows" => nrows = Some(value.parse::<usize>().map_err(|_| bad())?),
            "xllcorner" => xll = Some(value.parse::<f64>().map_err(|_| bad())?),
            "yllcorner" => yll = Some(value.parse::<f64>().map_err(|_| bad())?),
            "cellsize" => cellsize = Some(value.parse::<f64>().map_err(|_| bad())?),
            "nodata_value" => nodata = Some(value.parse::<f64>().map_err(|_| bad())?),
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }

    let missing = [
        ("ncols", ncols.is_none()),
        ("nrows", nrows.is_none()),
        ("xllcorner", xll.is_none()),
        ("yllcorner", yll.is_none()),
        ("cellsize", cellsize.is_none()),
        ("NODATA_value", nodata.is_none()),
    ]
    .iter()
    .find(|(_, m)| *m)
    .map(|(k, _)| *k);
    if let Some(key) = missing {
        return Err(Error::Parse(format!("header key `{key}` is missing")));
    }

    let header = GridHeader::new(
        ncols.unwrap(),
        nrows.unwrap(),
        xll.unwrap(),
        yll.unwrap(),
        cellsize.unwrap(),
        nodata.unwrap(),
    )?;

    let sentinel = header.nodata;
    let mut values = Vec::with_capacity(header.cell_count());
    let mut data_rows = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        if data_rows == header.nrows {
            return Err(Error::Structure(format!(
                "more than {} data rows present",
                header.nrows
            )));
        }
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{tok}` in data row {data_rows}")))?;
            values.push(if v == sentinel { f64::NAN } else { v });
            count += 1;
        }
        if count != header.ncols {
            return Err(Error::Structure(format!(
                "data row {data_rows} has {count} values, expected {}",
                header.ncols
            )));
        }
        data_rows += 1;
    }
    if data_rows != header.nrows {
        return Err(Error::Structure(format!(
            "found {data_rows} data rows, expected {}",
            header.nrows
        )));
    }
    if values.iter().any(|v| v.is_infinite() || (!v.is_nan() && !v.is_finite())) {
        return Err(Error::Structure("non-finite value in data".into()));
    }
    Grid::new(header, values)
}

/// Serializes a grid to the ASCII format. Values print with Rust's shortest
/// roundtrip formatting, which preserves every significant digit, so
/// `read(write(g))` reproduces `g` exactly.
///
/// Fails if a valid height equals the nodata sentinel: such a grid could not
/// be read back unambiguously.
pub fn write_ascii_grid(grid: &Grid) -> Result<String> {
    let h = grid.header();
    if grid.values().iter().any(|v| *v == h.nodata) {
        return Err(Error::Structure(format!(
            "grid contains the nodata sentinel {} as a real height",
            h.nodata
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", h.ncols);
    let _ = writeln!(out, "nrows {}", h.nrows);
    let _ = writeln!(out, "xllcorner {}", h.xll);
    let _ = writeln!(out, "yllcorner {}", h.yll);
    let _ = writeln!(out, "cellsize {}", h.cellsize);
    let _ = writeln!(out, "NODATA_value {}", h.nodata);
    for row in 0..h.nrows {
        for col in 0..h.ncols {
            if col > 0 {
                out.push(' ');
            }
            let v = grid.get(row, col);
            if v.is_nan() {
                let _ = write!(out, "{}", h.nodata);
            } else {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_ascii_grid_file(path: &std::path::Path) -> Result<Grid> {
    let text = std::fs::read_to_string(path)?;
    read_ascii_grid(&text)
}

pub fn write_ascii_grid_file(grid: &Grid, path: &std::path::Path) -> Result<()> {
    let text = write_ascii_grid(grid)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Resamples to a new cell size over the same extent with bilinear
/// interpolation of the four surrounding source centers. The origin is kept;
/// partial trailing cells (east and north edges) are dropped. Interpolation
/// touching a nodata source cell yields nodata.
pub fn resample_bilinear(grid: &Grid, target_cellsize: f64) -> Result<Grid> {
    if !(target_cellsize > 0.0) || !target_cellsize.is_finite() {
        return Err(Error::Usage(format!("target cellsize must be positive, got {target_cellsize}")));
    }
    let src = grid.header();
    let ncols_out = (src.ncols as f64 * src.cellsize / target_cellsize).floor() as usize;
    let nrows_out = (src.nrows as f64 * src.cellsize / target_cellsize).floor() as usize;
    if ncols_out < 1 || nrows_out < 1 {
        return Err(Error::Degenerate(format!(
            "target cellsize {target_cellsize} leaves no whole cell in the extent"
        )));
    }
    let header = GridHeader::new(ncols_out, nrows_out, src.xll, src.yll, target_cellsize, src.nodata)?;
    // Row offsets are measured from the north edge; when trailing cells are
    // dropped the output's north edge sits below the source's.
    let delta_top = src.nrows as f64 * src.cellsize - nrows_out as f64 * target_cellsize;
    let mut values = Vec::with_capacity(header.cell_count());
    for row in 0..nrows_out {
        let fy = (delta_top + (row as f64 + 0.5) * target_cellsize) / src.cellsize - 0.5;
        for col in 0..ncols_out {
            let fx = ((col as f64 + 0.5) * target_cellsize) / src.cellsize - 0.5;
            values.push(grid.sample_index(fx, fy));
        }
    }
    Grid::new(header, values)
}

/// Per-pixel `a - b`. Nodata in either input propagates.
pub fn grid_subtract(a: &Grid, b: &Grid) -> Result<Grid> {
    if !a.header().same_geometry(b.header()) {
        return Err(Error::Geometry(format!(
            "subtract: {}x{} vs {}x{}",
            a.ncols(),
            a.nrows(),
            b.ncols(),
            b.nrows()
        )));
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    Grid::new(a.header().clone(), values)
}

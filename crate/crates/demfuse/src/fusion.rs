//! Weighted fusion of two overlapping elevation grids.
//!
//! Per-pixel error estimates (predicted by the network or taken from
//! supplied error maps) become raw weights under one of two schemes —
//! inverse squared error or one-minus-normalized error — which are then
//! normalized to sum to one and applied as a convex combination of the two
//! heights. Pixels covered by only one input copy that input through.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Floor applied to error estimates before inverse-square weighting, so a
/// zero predicted error cannot produce an infinite weight.
pub const DEFAULT_ERROR_FLOOR: f64 = 0.05;

/// How per-pixel error estimates are turned into raw weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// `w = 1 / max(e, floor)^2`
    InverseSquare,
    /// `w = 1 - (e - min) / (max - min)`, min/max over the grid's valid pixels
    OneMinusNorm,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::InverseSquare => "inverse-square",
            WeightScheme::OneMinusNorm => "one-minus-norm",
        })
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeightScheme> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inverse-square" => Ok(WeightScheme::InverseSquare),
            "one-minus-norm" => Ok(WeightScheme::OneMinusNorm),
            other => Err(Error::Usage(format!(
                "unknown weight scheme `{other}` (expected inverse-square or one-minus-norm)"
            ))),
        }
    }
}

/// Normalized weight maps for a pair of grids. Wherever both are valid the
/// weights are in `[0, 1]` and sum to one; a pixel weighted on one side
/// only carries weight 1 there and nodata on the other.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    w_a: Grid,
    w_b: Grid,
}

impl WeightPair {
    /// Validates geometry and the convexity invariant before wrapping.
    pub fn new(w_a: Grid, w_b: Grid) -> Result<WeightPair> {
        if !w_a.header().same_geometry(w_b.header()) {
            return Err(Error::Geometry("weight grids have mismatched geometry".into()));
        }
        for (i, (a, b)) in w_a.values().iter().zip(w_b.values()).enumerate() {
            if a.is_nan() || b.is_nan() {
                continue;
            }
            let tol = 1e-9;
            if (a + b - 1.0).abs() > tol {
                return Err(Error::Structure(format!(
                    "weights at flat index {i} sum to {} instead of 1",
                    a + b
                )));
            }
            if *a < -tol || *a > 1.0 + tol || *b < -tol || *b > 1.0 + tol {
                return Err(Error::Structure(format!(
                    "weights at flat index {i} fall outside [0,1]: ({a}, {b})"
                )));
            }
        }
        Ok(WeightPair { w_a, w_b })
    }

    pub fn w_a(&self) -> &Grid {
        &self.w_a
    }

    pub fn w_b(&self) -> &Grid {
        &self.w_b
    }

    /// Swapped view, for exercising the fusion symmetry property.
    pub fn swapped(&self) -> WeightPair {
        WeightPair { w_a: self.w_b.clone(), w_b: self.w_a.clone() }
    }
}

/// Raw weights as the inverse of the squared (floored) error:
/// `w = 1 / max(e, floor)^2`. Nodata propagates.
pub fn weights_inverse_square(errors: &Grid, floor: f64) -> Result<Grid> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::Usage(format!("error floor must be a positive real, got {floor}")));
    }
    let mut out = errors.clone();
    for v in out.values_mut() {
        if !v.is_nan() {
            let e = v.max(floor);
            *v = 1.0 / (e * e);
        }
    }
    Ok(out)
}

/// Raw weights as one minus the min-max-normalized error over this grid's
/// valid pixels. A constant error grid cannot be normalized; every weight
/// becomes 1 and the returned flag is set so callers can warn.
pub fn weights_one_minus_norm(errors: &Grid) -> (Grid, bool) {
    let mut out = errors.clone();
    let Some((lo, hi)) = errors.min_max() else {
        // no valid pixels at all: nothing to normalize, everything nodata
        return (out, true);
    };
    let span = hi - lo;
    if !(span > 0.0) {
        for v in out.values_mut() {
            if !v.is_nan() {
                *v = 1.0;
            }
        }
        return (out, true);
    }
    for v in out.values_mut() {
        if !v.is_nan() {
            *v = 1.0 - (*v - lo) / span;
        }
    }
    (out, false)
}

/// Raw weights under the requested scheme; the flag reports a degenerate
/// (constant-error) normalization and is always false for inverse-square.
pub fn weights_for_scheme(errors: &Grid, scheme: WeightScheme, floor: f64) -> Result<(Grid, bool)> {
    match scheme {
        WeightScheme::InverseSquare => Ok((weights_inverse_square(errors, floor)?, false)),
        WeightScheme::OneMinusNorm => Ok(weights_one_minus_norm(errors)),
    }
}

/// Normalizes two raw weight grids so they sum to one per pixel. A pixel
/// valid on one side only gets weight 1 there; both raw weights zero is
/// broken symmetrically to 0.5/0.5.
pub fn normalize_pair(raw_a: &Grid, raw_b: &Grid) -> Result<WeightPair> {
    if !raw_a.header().same_geometry(raw_b.header()) {
        return Err(Error::Geometry("raw weight grids have mismatched geometry".into()));
    }
    for (i, v) in raw_a.values().iter().chain(raw_b.values()).enumerate() {
        if !v.is_nan() && (*v < 0.0 || !v.is_finite()) {
            return Err(Error::Usage(format!(
                "raw weights must be finite and nonnegative, found {v} at flat index {}",
                i % raw_a.values().len()
            )));
        }
    }
    let mut w_a = raw_a.clone();
    let mut w_b = raw_b.clone();
    for (a, b) in w_a.values_mut().iter_mut().zip(w_b.values_mut()) {
        match (a.is_nan(), b.is_nan()) {
            (false, false) => {
                let total = *a + *b;
                if total > 0.0 {
                    *a /= total;
                    *b = 1.0 - *a;
                } else {
                    *a = 0.5;
                    *b = 0.5;
                }
            }
            (false, true) => *a = 1.0,
            (true, false) => *b = 1.0,
            (true, true) => {}
        }
    }
    WeightPair::new(w_a, w_b)
}

/// Convex per-pixel combination `w_a·d_a + w_b·d_b`. A side contributes
/// only where both its height and weight are valid; if exactly one side
/// contributes its height is copied through, and if neither does the pixel
/// is nodata.
pub fn fuse_weighted(d_a: &Grid, d_b: &Grid, w: &WeightPair) -> Result<Grid> {
    if !d_a.header().same_geometry(d_b.header())
        || !d_a.header().same_geometry(w.w_a.header())
    {
        return Err(Error::Geometry("fusion inputs have mismatched geometry".into()));
    }
    let mut out = Grid::constant(d_a.header().clone(), f64::NAN);
    let values = out.values_mut();
    for i in 0..values.len() {
        let (ha, hb) = (d_a.values()[i], d_b.values()[i]);
        let (wa, wb) = (w.w_a.values()[i], w.w_b.values()[i]);
        let a_ok = !ha.is_nan() && !wa.is_nan();
        let b_ok = !hb.is_nan() && !wb.is_nan();
        values[i] = match (a_ok, b_ok) {
            (true, true) => wa * ha + wb * hb,
            (true, false) => ha,
            (false, true) => hb,
            (false, false) => f64::NAN,
        };
    }
    Ok(out)
}

/// Baseline fusion driven by supplied error maps: raw weights under the
/// scheme, normalized, then weighted averaging.
pub fn fuse_hem_baseline(
    d_a: &Grid,
    d_b: &Grid,
    hem_a: &Grid,
    hem_b: &Grid,
    scheme: WeightScheme,
    floor: f64,
) -> Result<Grid> {
    let (raw_a, _) = weights_for_scheme(hem_a, scheme, floor)?;
    let (raw_b, _) = weights_for_scheme(hem_b, scheme, floor)?;
    let pair = normalize_pair(&raw_a, &raw_b)?;
    fuse_weighted(d_a, d_b, &pair)
}

/// Equal-weight average of the two grids, with the same nodata
/// copy-through rules as weighted fusion.
pub fn fuse_plain_average(d_a: &Grid, d_b: &Grid) -> Result<Grid> {
    let half = Grid::constant(d_a.header().clone(), 0.5);
    let pair = WeightPair::new(half.clone(), half)?;
    fuse_weighted(d_a, d_b, &pair)
}

/// Replaces `d_a` heights with `d_b` wherever the mask is 1; mask 0 or
/// nodata leaves `d_a` untouched. Mask values other than 0/1/nodata are
/// rejected.
pub fn substitute_by_mask(d_a: &Grid, d_b: &Grid, mask: &Grid) -> Result<Grid> {
    if !d_a.header().same_geometry(d_b.header())
        || !d_a.header().same_geometry(mask.header())
    {
        return Err(Error::Geometry("substitution inputs have mismatched geometry".into()));
    }
    for v in mask.values() {
        if !v.is_nan() && *v != 0.0 && *v != 1.0 {
            return Err(Error::Usage(format!("mask values must be 0, 1 or nodata, found {v}")));
        }
    }
    let mut out = d_a.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        if mask.values()[i] == 1.0 {
            *v = d_b.values()[i];
        }
    }
    Ok(out)
}

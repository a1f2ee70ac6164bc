//! Co-registration of two elevation grids before fusion: a robust vertical
//! datum shift and rigid point-to-point iterative-closest-point alignment.
//!
//! Grids are lifted to 3-D point clouds at their cell centers. Each ICP
//! iteration matches every moving point to its nearest fixed point through
//! a k-d tree, discards pairs beyond three times the median match
//! distance, solves the best rigid motion in closed form from the
//! cross-covariance SVD, and keeps the update only if the match RMSE
//! actually drops, so the recorded RMSE history is strictly decreasing.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::raster::{Grid, GridHeader};

/// Default ICP iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 50;
/// Default ICP stopping tolerance: minimum RMSE improvement in meters.
pub const DEFAULT_TOL: f64 = 1e-4;
/// Clouds are thinned to at most this many points by uniform stride.
const MAX_CLOUD_POINTS: usize = 50_000;
/// The reference surface gets a larger budget: denser coverage of the
/// fixed side costs only tree size, not extra queries, and it pushes the
/// correspondence quantization noise below the registration tolerances.
const MAX_FIXED_CLOUD_POINTS: usize = 200_000;

/// Proper rigid motion `p ↦ R·p + t` in map coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> RigidTransform {
        RigidTransform { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Pure translation (dx east, dy north, dz up).
    pub fn translation(dx: f64, dy: f64, dz: f64) -> RigidTransform {
        RigidTransform { rotation: Matrix3::identity(), translation: Vector3::new(dx, dy, dz) }
    }

    /// Rotation by `degrees` about the vertical axis through `(cx, cy)`,
    /// counterclockwise in map view.
    pub fn yaw_about(degrees: f64, cx: f64, cy: f64) -> RigidTransform {
        let rad = degrees.to_radians();
        let (s, c) = rad.sin_cos();
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let center = Vector3::new(cx, cy, 0.0);
        let translation = center - rotation * center;
        RigidTransform { rotation, translation }
    }

    /// Checks the rotation is orthonormal (within 1e-9) with determinant +1.
    pub fn validate(&self) -> Result<()> {
        if self.rotation.iter().any(|v| !v.is_finite())
            || self.translation.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Structure("transform contains non-finite entries".into()));
        }
        let gram = self.rotation.transpose() * self.rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(Error::Structure(format!(
                "rotation is not orthonormal (max deviation {dev:.3e})"
            )));
        }
        if self.rotation.determinant() <= 0.0 {
            return Err(Error::Structure("rotation determinant must be +1, found a reflection".into()));
        }
        Ok(())
    }

    pub fn apply_point(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> RigidTransform {
        let rotation = self.rotation.transpose();
        RigidTransform { rotation, translation: -(rotation * self.translation) }
    }

    /// Composition `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Rotation about the vertical axis implied by the matrix, in degrees.
    pub fn yaw_deg(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)]).to_degrees()
    }

    /// How far this transform is from the identity: max absolute rotation
    /// deviation and translation norm.
    pub fn deviation_from_identity(&self) -> (f64, f64) {
        let rot_dev = (self.rotation - Matrix3::identity()).abs().max();
        (rot_dev, self.translation.norm())
    }

    /// Serializes as 12 whitespace-separated numbers: the rotation in
    /// row-major order, then the translation.
    pub fn to_text(&self) -> String {
        let mut parts = Vec::with_capacity(12);
        for r in 0..3 {
            for c in 0..3 {
                parts.push(format!("{:.16e}", self.rotation[(r, c)]));
            }
        }
        for i in 0..3 {
            parts.push(format!("{:.16e}", self.translation[i]));
        }
        format!("{}\n", parts.join(" "))
    }

    /// Parses the 12-number form of [`to_text`] and validates rigidity.
    pub fn from_text(text: &str) -> Result<RigidTransform> {
        let numbers: Vec<f64> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{t}` in transform")))
            })
            .collect::<Result<_>>()?;
        if numbers.len() != 12 {
            return Err(Error::Parse(format!(
                "transform needs exactly 12 numbers, found {}",
                numbers.len()
            )));
        }
        let rotation = Matrix3::from_row_slice(&numbers[..9]);
        let translation = Vector3::new(numbers[9], numbers[10], numbers[11]);
        let t = RigidTransform { rotation, translation };
        t.validate()?;
        Ok(t)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<RigidTransform> {
        RigidTransform::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Exact-midpoint median, written so that negating every input negates the
/// result bit-for-bit (needed for the vertical-bias antisymmetry
/// guarantee).
fn median_midpoint(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median of `fixed − moving` over doubly-valid pixels: the additive shift
/// that moves `moving` onto `fixed`'s vertical datum. Requires at least
/// 100 overlapping pixels; exactly antisymmetric in its arguments.
pub fn vertical_bias(moving: &Grid, fixed: &Grid) -> Result<f64> {
    if !moving.header().same_geometry(fixed.header()) {
        return Err(Error::Geometry("vertical bias needs matching geometry".into()));
    }
    let mut diffs: Vec<f64> = fixed
        .values()
        .iter()
        .zip(moving.values())
        .filter(|(f, m)| !f.is_nan() && !m.is_nan())
        .map(|(f, m)| f - m)
        .collect();
    if diffs.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "vertical bias needs at least 100 overlapping pixels, got {}",
            diffs.len()
        )));
    }
    Ok(median_midpoint(&mut diffs))
}

/// Static 3-D k-d tree over a point set, median-split, for exact
/// nearest-neighbor queries.
struct KdTree<'a> {
    points: &'a [Vector3<f64>],
    /// Permutation of point indices arranged so that each subtree segment
    /// has its median (split point) at the segment midpoint.
    order: Vec<u32>,
}

impl<'a> KdTree<'a> {
    fn build(points: &'a [Vector3<f64>]) -> KdTree<'a> {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree { points, order: Vec::new() };
        Self::build_segment(points, &mut order, 0);
        tree.order = order;
        tree
    }

    fn build_segment(points: &[Vector3<f64>], seg: &mut [u32], depth: usize) {
        if seg.len() <= 1 {
            return;
        }
        let axis = depth % 3;
        let mid = seg.len() / 2;
        seg.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize][axis]
                .partial_cmp(&points[b as usize][axis])
                .unwrap()
        });
        let (left, rest) = seg.split_at_mut(mid);
        Self::build_segment(points, left, depth + 1);
        Self::build_segment(points, &mut rest[1..], depth + 1);
    }

    /// Index of the nearest point to `q` and the squared distance.
    fn nearest(&self, q: &Vector3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &Vector3<f64>, lo: usize, hi: usize, depth: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid] as usize;
        let p = &self.points[idx];
        let d2 = (q - p).norm_squared();
        if d2 < best.1 {
            *best = (idx, d2);
        }
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta * delta < best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn thin_to_cap(mut cloud: Vec<Vector3<f64>>) -> Vec<Vector3<f64>> {
    if cloud.len() > MAX_CLOUD_POINTS {
        let stride = cloud.len().div_ceil(MAX_CLOUD_POINTS);
        cloud = cloud.into_iter().step_by(stride).collect();
    }
    cloud
}

/// Valid cells as 3-D points at their map-coordinate cell centers, thinned
/// by uniform stride to the cloud size cap.
fn grid_to_cloud(grid: &Grid) -> Vec<Vector3<f64>> {
    let h = grid.header();
    let mut cloud = Vec::new();
    for row in 0..h.nrows {
        for col in 0..h.ncols {
            let z = grid.get(row, col);
            if !z.is_nan() {
                let (x, y) = h.cell_center(row, col);
                cloud.push(Vector3::new(x, y, z));
            }
        }
    }
    thin_to_cap(cloud)
}

/// The reference surface as a dense point cloud: every valid cell center
/// (so registering a grid onto itself still yields exact zero-distance
/// matches) topped up to the cloud cap with seeded uniform-random surface
/// samples read off bilinearly. The random infill keeps nearest-neighbor
/// quantization error well below the cell size and free of lattice
/// coherence, which point-to-point matching needs for sub-cell accuracy.
fn grid_to_dense_cloud(grid: &Grid) -> Vec<Vector3<f64>> {
    let mut cloud = grid_to_cloud(grid);
    let budget = MAX_FIXED_CLOUD_POINTS.saturating_sub(cloud.len());
    if budget == 0 {
        return cloud;
    }
    let h = grid.header();
    let (x0, y0) = h.cell_center(0, 0);
    let (x1, y1) = h.cell_center(h.nrows - 1, h.ncols - 1);
    let mut rng = crate::rng::SplitMix64::new(0x1C9_A11E4);
    let mut attempts = 0usize;
    while cloud.len() < MAX_FIXED_CLOUD_POINTS && attempts < 4 * budget {
        attempts += 1;
        let x = rng.uniform_in(x0, x1);
        let y = rng.uniform_in(y1, y0);
        let z = grid.sample_map(x, y);
        if !z.is_nan() {
            cloud.push(Vector3::new(x, y, z));
        }
    }
    cloud
}

fn bounds(cloud: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in cloud {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Nearest-neighbor match for every transformed moving point:
/// (moving index, fixed index, squared distance), plus the squared median
/// match distance.
fn match_all(transformed: &[Vector3<f64>], tree: &KdTree<'_>) -> (Vec<(usize, usize, f64)>, f64) {
    let matches: Vec<(usize, usize, f64)> = transformed
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (j, d2) = tree.nearest(p);
            (i, j, d2)
        })
        .collect();
    let mut d2s: Vec<f64> = matches.iter().map(|m| m.2).collect();
    let median_d2 = median_midpoint(&mut d2s);
    (matches, median_d2)
}

/// Pairs within `scale` times the median match distance (everything when
/// the median is zero, i.e. exact coincidence).
fn reject_beyond(
    matches: &[(usize, usize, f64)],
    median_d2: f64,
    scale: f64,
) -> Vec<(usize, usize, f64)> {
    if median_d2 > 0.0 {
        let cutoff = scale * scale * median_d2;
        matches.iter().copied().filter(|m| m.2 <= cutoff).collect()
    } else {
        matches.to_vec()
    }
}

/// The registration objective: RMSE of the matches kept by the standard
/// 3×median rejection, with the kept pairs.
fn evaluate(
    matches: &[(usize, usize, f64)],
    median_d2: f64,
) -> Result<(Vec<(usize, usize, f64)>, f64)> {
    let kept = reject_beyond(matches, median_d2, 3.0);
    if kept.len() < 3 {
        return Err(Error::Divergence(
            "alignment lost overlap: fewer than 3 correspondences survive rejection".into(),
        ));
    }
    let mse = kept.iter().map(|m| m.2).sum::<f64>() / kept.len() as f64;
    let rmse = mse.sqrt();
    if !rmse.is_finite() {
        return Err(Error::Divergence("non-finite correspondence distance".into()));
    }
    Ok((kept, rmse))
}

/// Closed-form least-squares rigid motion taking `src` points onto `dst`
/// via the SVD of the centered cross-covariance.
fn kabsch(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    pairs: &[(usize, usize, f64)],
) -> Result<RigidTransform> {
    let n = pairs.len() as f64;
    let mut c_src = Vector3::zeros();
    let mut c_dst = Vector3::zeros();
    for &(i, j, _) in pairs {
        c_src += src[i];
        c_dst += dst[j];
    }
    c_src /= n;
    c_dst /= n;
    let mut h = Matrix3::zeros();
    for &(i, j, _) in pairs {
        h += (src[i] - c_src) * (dst[j] - c_dst).transpose();
    }
    // motion R·p + t minimizing Σ‖R·srcᵢ + t − dstᵢ‖²: R from SVD of Hᵀ…
    // with H = Σ (src−c̄)(dst−d̄)ᵀ, R = V·diag(1,1,det)·Uᵀ for H = U·Σ·Vᵀ.
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Degenerate("SVD failed in rigid estimation".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed in rigid estimation".into()))?;
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rotation = v * correction * u.transpose();
    let translation = c_dst - rotation * c_src;
    let t = RigidTransform { rotation, translation };
    t.validate()?;
    Ok(t)
}

/// Rigid ICP alignment of `moving` onto `fixed`, also returning the RMSE
/// after each accepted iteration (index 0 is the pre-alignment RMSE).
pub fn icp_register_with_history(
    moving: &Grid,
    fixed: &Grid,
    max_iters: usize,
    tol: f64,
) -> Result<(RigidTransform, f64, Vec<f64>)> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::Usage("ICP needs max_iters ≥ 1 and a positive tolerance".into()));
    }
    let moving_cloud = grid_to_cloud(moving);
    if moving_cloud.len() < 1000 || grid_to_cloud(fixed).len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "ICP needs at least 1000 valid cells per grid, got {} and {}",
            moving_cloud.len(),
            grid_to_cloud(fixed).len()
        )));
    }
    let fixed_cloud = grid_to_dense_cloud(fixed);
    let (mlo, mhi) = bounds(&moving_cloud);
    let (flo, fhi) = bounds(&fixed_cloud);
    if mlo.x > fhi.x || flo.x > mhi.x || mlo.y > fhi.y || flo.y > mhi.y {
        return Err(Error::Geometry("grid extents do not overlap horizontally".into()));
    }

    let tree = KdTree::build(&fixed_cloud);
    let mut transform = RigidTransform::identity();
    let mut transformed = moving_cloud.clone();
    let (mut matches, mut median_d2) = match_all(&transformed, &tree);
    let (_, mut rmse) = evaluate(&matches, median_d2)?;
    let mut history = vec![rmse];

    // Rigid updates are estimated from the standard rejection set first;
    // if that update no longer lowers the objective, progressively closer
    // subsets are tried before giving up, which resolves the last
    // sub-cell of registration without ever accepting a worse RMSE.
    const ESTIMATION_CUTOFFS: [f64; 5] = [3.0, 2.0, 1.5, 1.2, 1.0];

    'outer: for _ in 0..max_iters {
        for scale in ESTIMATION_CUTOFFS {
            let est_pairs = reject_beyond(&matches, median_d2, scale);
            if est_pairs.len() < 3 {
                continue;
            }
            let delta = kabsch(&transformed, &fixed_cloud, &est_pairs)?;
            let candidate = delta.compose(&transform);
            let candidate_points: Vec<Vector3<f64>> =
                moving_cloud.iter().map(|p| candidate.apply_point(*p)).collect();
            let (cand_matches, cand_median) = match_all(&candidate_points, &tree);
            let (_, cand_rmse) = evaluate(&cand_matches, cand_median)?;
            if cand_rmse >= rmse {
                continue; // try a tighter estimation subset
            }
            let improvement = rmse - cand_rmse;
            transform = candidate;
            transformed = candidate_points;
            matches = cand_matches;
            median_d2 = cand_median;
            rmse = cand_rmse;
            history.push(rmse);
            if improvement < tol {
                break 'outer;
            }
            continue 'outer;
        }
        break; // no estimation subset improves the objective
    }
    Ok((transform, rmse, history))
}

/// Rigid ICP alignment of `moving` onto `fixed`; see
/// [`icp_register_with_history`] for the iteration rules.
pub fn icp_register(
    moving: &Grid,
    fixed: &Grid,
    max_iters: usize,
    tol: f64,
) -> Result<(RigidTransform, f64)> {
    let (t, rmse, _) = icp_register_with_history(moving, fixed, max_iters, tol)?;
    Ok((t, rmse))
}

/// Resamples the transformed surface of `grid` onto `target_geometry`.
///
/// Works by inverse warping: each target cell center is pulled back
/// through the transform to a source location, the source surface is
/// sampled bilinearly there, and the sampled point is pushed forward to
/// read off the output height. Because the pull-back needs a height to
/// invert exactly when the rotation tilts the vertical axis, the height is
/// resolved by a short fixed-point iteration (exact immediately for
/// yaw-only rotations and translations). Target cells whose pull-back
/// lands outside the source hull become nodata.
pub fn apply_transform(grid: &Grid, t: &RigidTransform, target_geometry: &GridHeader) -> Result<Grid> {
    t.validate()?;
    let inv = t.inverse();
    let mut out = Grid::constant(target_geometry.clone(), f64::NAN);
    for row in 0..target_geometry.nrows {
        for col in 0..target_geometry.ncols {
            let (x, y) = target_geometry.cell_center(row, col);
            let mut z_guess = 0.0;
            let mut result = f64::NAN;
            for _ in 0..8 {
                let src = inv.apply_point(Vector3::new(x, y, z_guess));
                let h = grid.sample_map(src.x, src.y);
                if h.is_nan() {
                    result = f64::NAN;
                    break;
                }
                let fwd = t.apply_point(Vector3::new(src.x, src.y, h));
                result = fwd.z;
                if (fwd.z - z_guess).abs() < 1e-10 {
                    break;
                }
                z_guess = fwd.z;
            }
            if !result.is_nan() {
                out.set(row, col, result);
            }
        }
    }
    Ok(out)
}

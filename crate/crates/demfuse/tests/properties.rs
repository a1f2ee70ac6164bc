//! Property-based tests of the library's structural invariants: fusion
//! convexity and weight normalization, scheme monotonicity, serialization
//! roundtrips, binning partitions and metric symmetries.

use proptest::prelude::*;

use demfuse::fusion::{
    fuse_weighted, normalize_pair, weights_for_scheme, WeightScheme, DEFAULT_ERROR_FLOOR,
};
use demfuse::metrics;
use demfuse::raster::{
    read_ascii_grid, resample_bilinear, write_ascii_grid, Grid, GridHeader,
};
use demfuse::refine::fd_bin;

fn header(ncols: usize, nrows: usize) -> GridHeader {
    GridHeader::new(ncols, nrows, 0.0, 0.0, 5.0, -9999.0).unwrap()
}

/// Heights with occasional missing pixels.
fn height() -> impl Strategy<Value = f64> {
    prop_oneof![
        5 => -500.0..500.0f64,
        1 => Just(f64::NAN),
    ]
}

/// Non-negative error magnitudes with occasional missing pixels.
fn error_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        5 => 0.0..50.0f64,
        1 => Just(f64::NAN),
    ]
}

/// Two same-geometry height grids and two same-geometry error maps.
fn fusion_inputs() -> impl Strategy<Value = (Grid, Grid, Grid, Grid)> {
    (3usize..9, 3usize..9).prop_flat_map(|(nc, nr)| {
        let n = nc * nr;
        (
            prop::collection::vec(height(), n),
            prop::collection::vec(height(), n),
            prop::collection::vec(error_value(), n),
            prop::collection::vec(error_value(), n),
        )
            .prop_map(move |(a, b, ea, eb)| {
                let h = header(nc, nr);
                (
                    Grid::new(h.clone(), a).unwrap(),
                    Grid::new(h.clone(), b).unwrap(),
                    Grid::new(h.clone(), ea).unwrap(),
                    Grid::new(h, eb).unwrap(),
                )
            })
    })
}

fn scheme() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::InverseSquare),
        Just(WeightScheme::OneMinusNorm),
    ]
}

proptest! {
    /// Every fused height lies between the two input heights where both
    /// exist, equals the surviving input where only one exists, and is
    /// missing where neither does — for weights from either scheme.
    #[test]
    fn fused_height_is_convex_combination(
        (da, db, ea, eb) in fusion_inputs(),
        scheme in scheme(),
    ) {
        let (raw_a, _) = weights_for_scheme(&ea, scheme, DEFAULT_ERROR_FLOOR).unwrap();
        let (raw_b, _) = weights_for_scheme(&eb, scheme, DEFAULT_ERROR_FLOOR).unwrap();
        let pair = normalize_pair(&raw_a, &raw_b).unwrap();
        let fused = fuse_weighted(&da, &db, &pair).unwrap();

        for i in 0..fused.values().len() {
            let (a, b) = (da.values()[i], db.values()[i]);
            let (wa, wb) = (pair.w_a().values()[i], pair.w_b().values()[i]);
            let f = fused.values()[i];
            let usable_a = a.is_finite() && wa.is_finite();
            let usable_b = b.is_finite() && wb.is_finite();
            match (usable_a, usable_b) {
                (true, true) => {
                    prop_assert!(
                        f >= a.min(b) - 1e-9 && f <= a.max(b) + 1e-9,
                        "pixel {i}: fused {f} outside [{}, {}]", a.min(b), a.max(b)
                    );
                }
                (true, false) => prop_assert_eq!(f, a, "pixel {} should copy input A", i),
                (false, true) => prop_assert_eq!(f, b, "pixel {} should copy input B", i),
                (false, false) => prop_assert!(f.is_nan(), "pixel {i} should be nodata, got {f}"),
            }
        }
    }

    /// Normalized weights sum to 1 wherever both sides are present, and a
    /// lone present side carries the full weight.
    #[test]
    fn normalized_weights_sum_to_one(
        (_, _, ea, eb) in fusion_inputs(),
        scheme in scheme(),
    ) {
        let (raw_a, _) = weights_for_scheme(&ea, scheme, DEFAULT_ERROR_FLOOR).unwrap();
        let (raw_b, _) = weights_for_scheme(&eb, scheme, DEFAULT_ERROR_FLOOR).unwrap();
        let pair = normalize_pair(&raw_a, &raw_b).unwrap();
        for i in 0..pair.w_a().values().len() {
            let (wa, wb) = (pair.w_a().values()[i], pair.w_b().values()[i]);
            match (wa.is_finite(), wb.is_finite()) {
                (true, true) => {
                    prop_assert!((wa + wb - 1.0).abs() <= 1e-9, "pixel {i}: {wa} + {wb} != 1");
                    prop_assert!(wa >= 0.0 && wb >= 0.0);
                }
                (true, false) => prop_assert_eq!(wa, 1.0),
                (false, true) => prop_assert_eq!(wb, 1.0),
                (false, false) => {}
            }
        }
    }

    /// Scaling both raw weight maps by the same positive factor leaves the
    /// normalized pair unchanged (up to rounding).
    #[test]
    fn normalization_is_scale_invariant(
        (_, _, ea, eb) in fusion_inputs(),
        factor in 0.001..1000.0f64,
    ) {
        let (raw_a, _) = weights_for_scheme(&ea, WeightScheme::InverseSquare, 0.1).unwrap();
        let (raw_b, _) = weights_for_scheme(&eb, WeightScheme::InverseSquare, 0.1).unwrap();
        let scale = |g: &Grid| {
            let mut s = g.clone();
            s.values_mut().iter_mut().for_each(|v| *v *= factor);
            s
        };
        let base = normalize_pair(&raw_a, &raw_b).unwrap();
        let scaled = normalize_pair(&scale(&raw_a), &scale(&raw_b)).unwrap();
        for i in 0..base.w_a().values().len() {
            let (x, y) = (base.w_a().values()[i], scaled.w_a().values()[i]);
            if x.is_finite() || y.is_finite() {
                prop_assert!((x - y).abs() <= 1e-9, "pixel {i}: {x} vs {y}");
            }
        }
    }

    /// Swapping the inputs and the weights gives the identical fused grid.
    #[test]
    fn fusion_is_symmetric((da, db, ea, eb) in fusion_inputs()) {
        let (raw_a, _) = weights_for_scheme(&ea, WeightScheme::InverseSquare, 0.05).unwrap();
        let (raw_b, _) = weights_for_scheme(&eb, WeightScheme::InverseSquare, 0.05).unwrap();
        let pair = normalize_pair(&raw_a, &raw_b).unwrap();
        let forward = fuse_weighted(&da, &db, &pair).unwrap();
        let backward = fuse_weighted(&db, &da, &pair.swapped()).unwrap();
        prop_assert_eq!(forward, backward);
    }

    /// Inverse-square weights never increase with error, and errors below
    /// the floor share the floor's weight.
    #[test]
    fn inverse_square_weight_is_monotone(
        e1 in 0.0..30.0f64,
        e2 in 0.0..30.0f64,
        floor in 0.01..2.0f64,
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let h = header(3, 3);
        let grid = |v: f64| Grid::new(h.clone(), vec![v; 9]).unwrap();
        let w = |v: f64| {
            weights_for_scheme(&grid(v), WeightScheme::InverseSquare, floor).unwrap().0.values()[0]
        };
        prop_assert!(w(lo) >= w(hi), "w({lo}) = {} < w({hi}) = {}", w(lo), w(hi));
        if hi <= floor {
            prop_assert_eq!(w(lo), w(floor));
        }
    }

    /// Within one grid, one-minus-norm weighting reverses the error
    /// ordering: strictly larger error means strictly smaller weight.
    #[test]
    fn one_minus_norm_reverses_error_order(
        values in prop::collection::vec(0.0..40.0f64, 9),
    ) {
        let grid = Grid::new(header(3, 3), values.clone()).unwrap();
        let (w, degenerate) = weights_for_scheme(&grid, WeightScheme::OneMinusNorm, 0.0).unwrap();
        let (lo, hi) = grid.min_max().unwrap();
        prop_assert_eq!(degenerate, hi <= lo);
        for i in 0..9 {
            for j in 0..9 {
                let (ei, ej) = (values[i], values[j]);
                let (wi, wj) = (w.values()[i], w.values()[j]);
                if ei < ej {
                    prop_assert!(
                        degenerate || wi > wj,
                        "error {ei} < {ej} but weight {wi} <= {wj}"
                    );
                }
                if ei == ej {
                    prop_assert_eq!(wi, wj);
                }
            }
        }
    }

    /// Writing a grid and reading it back reproduces the original exactly,
    /// including missing pixels and header geometry.
    #[test]
    fn ascii_grid_roundtrip(
        (nc, nr) in (3usize..8, 3usize..8),
        xll in -1000.0..1000.0f64,
        yll in -1000.0..1000.0f64,
        cellsize in 0.5..50.0f64,
        seedvals in prop::collection::vec(height(), 64),
    ) {
        let h = GridHeader::new(nc, nr, xll, yll, cellsize, -9999.0).unwrap();
        let values = seedvals.into_iter().cycle().take(nc * nr).collect();
        let grid = Grid::new(h, values).unwrap();
        let text = write_ascii_grid(&grid).unwrap();
        let back = read_ascii_grid(&text).unwrap();
        prop_assert_eq!(grid, back);
    }

    /// Bilinear resampling cannot overshoot the source height range.
    #[test]
    fn resampling_respects_source_bounds(
        values in prop::collection::vec(-100.0..100.0f64, 36),
        target_factor in 0.4..3.0f64,
    ) {
        let grid = Grid::new(header(6, 6), values).unwrap();
        let (lo, hi) = grid.min_max().unwrap();
        let out = resample_bilinear(&grid, 5.0 * target_factor).unwrap();
        for v in out.values() {
            if v.is_finite() {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
            }
        }
    }

    /// Summary statistics are order-independent.
    #[test]
    fn metrics_ignore_sample_order(
        values in prop::collection::vec(-50.0..50.0f64, 2..200),
    ) {
        let mut reversed = values.clone();
        reversed.reverse();
        let mut rotated = values.clone();
        rotated.rotate_left(values.len() / 2);
        for other in [&reversed, &rotated] {
            let close = |f: fn(&[f64]) -> demfuse::Result<f64>| {
                let x = f(&values).unwrap();
                let y = f(other).unwrap();
                (x - y).abs() <= 1e-9 * (1.0 + x.abs())
            };
            prop_assert!(close(metrics::rmse));
            prop_assert!(close(metrics::mean));
            prop_assert!(close(metrics::median));
            prop_assert!(close(metrics::nmad));
            prop_assert!(close(metrics::iqr));
        }
    }

    /// Freedman–Diaconis binning partitions the samples: every sample gets
    /// exactly one bin, counts add up, and each value lies inside its
    /// bin's edges.
    #[test]
    fn fd_binning_partitions_samples(
        values in prop::collection::vec(-100.0..100.0f64, 10..400),
    ) {
        let bins = fd_bin(&values, 0).unwrap();
        prop_assert_eq!(bins.sample_count, values.len());
        prop_assert_eq!(bins.counts.iter().sum::<usize>(), values.len());
        prop_assert_eq!(bins.counts.len(), bins.bin_count);
        prop_assert_eq!(bins.edges.len(), bins.bin_count + 1);
        prop_assert_eq!(bins.assignments().len(), values.len());
        for (v, &idx) in values.iter().zip(bins.assignments()) {
            prop_assert!(idx < bins.bin_count);
            let eps = 1e-9 * (1.0 + v.abs());
            prop_assert!(
                *v >= bins.edges[idx] - eps && *v <= bins.edges[idx + 1] + eps,
                "value {v} outside bin {idx} edges [{}, {}]",
                bins.edges[idx],
                bins.edges[idx + 1]
            );
        }
    }

    /// The vertical bias between two surfaces is exactly antisymmetric.
    #[test]
    fn vertical_bias_is_antisymmetric(
        values_a in prop::collection::vec(-50.0..50.0f64, 144),
        values_b in prop::collection::vec(-50.0..50.0f64, 144),
    ) {
        let h = header(12, 12);
        let a = Grid::new(h.clone(), values_a).unwrap();
        let b = Grid::new(h, values_b).unwrap();
        let ab = demfuse::align::vertical_bias(&a, &b).unwrap();
        let ba = demfuse::align::vertical_bias(&b, &a).unwrap();
        prop_assert_eq!(ab, -ba);
    }
}

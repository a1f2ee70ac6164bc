//! DEM fusion toolkit: learn per-pixel height-error magnitudes from terrain
//! features with a small feed-forward network, then fuse two overlapping
//! elevation models by weighted averaging.
//!
//! Pipeline, end to end:
//!
//! 1. [`raster`] — load two DEMs of one scene onto a common grid.
//! 2. [`align`] — remove residual shift/rotation between them (optional).
//! 3. [`features`] — compute per-pixel terrain descriptors (slope, local
//!    relief, entropy, …) from 3×3 windows.
//! 4. [`refine`] — where reference heights exist, turn DEM-minus-reference
//!    residuals into smoothed absolute-error training targets (outlier
//!    removal, Freedman–Diaconis binning, bin-wise mean filtering).
//! 5. [`mlp`] — train a small tanh network mapping features to expected
//!    absolute error; predict an error map for each DEM over the full scene.
//! 6. [`fusion`] — convert error maps to weights and average the DEMs.
//! 7. [`metrics`] — score everything against reference data.
//!
//! [`synth`] generates self-contained synthetic scenes (terrain, buildings,
//! controlled error fields) for testing and experimentation, and [`config`]
//! parses the key=value pipeline configuration shared by the CLI.

pub mod align;
pub mod config;
pub mod error;
pub mod features;
pub mod fusion;
pub mod metrics;
pub mod mlp;
pub mod raster;
pub mod refine;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureTable};
pub use raster::{Grid, GridHeader};

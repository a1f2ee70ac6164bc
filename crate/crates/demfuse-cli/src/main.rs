//! `demfuse` — command-line pipeline around the demfuse library.
//!
//! Subcommands cover the full workflow: generate synthetic scenes
//! (`synth`), rigidly align two DEMs (`align`), extract terrain features
//! (`features`), build error-training targets from a reference surface
//! (`residuals`), train the error-prediction network (`train`), predict
//! per-pixel error maps (`predict`), fuse two DEMs (`fuse`), and score a
//! DEM against ground truth (`eval`).
//!
//! Exit codes: 0 on success, 2 for usage/input problems (bad arguments,
//! missing or malformed files, incompatible grids), 1 for runtime
//! failures (divergence, insufficient data, I/O errors mid-run).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use demfuse::align::{self, RigidTransform};
use demfuse::config::PipelineConfig;
use demfuse::features::{extract_feature_table, FeatureKind};
use demfuse::fusion::{
    fuse_hem_baseline, fuse_plain_average, fuse_weighted, normalize_pair, weights_for_scheme,
};
use demfuse::metrics::accuracy_report;
use demfuse::mlp::{self, MlpModel};
use demfuse::raster::{read_ascii_grid_file, write_ascii_grid_file, Grid};
use demfuse::refine::build_training_set;
use demfuse::synth::{self, ErrorModel};
use demfuse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "demfuse",
    version,
    about = "Fuse two overlapping elevation models using learned per-pixel error estimates",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: truth terrain plus two corrupted DEMs
    /// with their simulated error maps
    Synth(SynthCmd),
    /// Rigidly align a moving DEM onto a fixed DEM (vertical bias + ICP)
    Align(AlignCmd),
    /// Extract per-pixel terrain features from a DEM to CSV
    Features(FeaturesCmd),
    /// Build smoothed error-magnitude training targets from a DEM and a
    /// reference surface
    Residuals(ResidualsCmd),
    /// Train the error-prediction network on a DEM/reference pair
    Train(TrainCmd),
    /// Predict a per-pixel error map with a trained model
    Predict(PredictCmd),
    /// Fuse two DEMs by weighted averaging
    Fuse(FuseCmd),
    /// Score a DEM against ground truth
    Eval(EvalCmd),
}

/// Pipeline options shared by several subcommands. Values from `--config`
/// are applied first; explicit flags override them. Each subcommand uses
/// the subset it needs and ignores the rest.
#[derive(Args)]
struct ConfigArgs {
    /// Key=value configuration file; explicit flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Comma-separated feature kinds (e.g. slope,roughness,entropy)
    #[arg(long, value_name = "LIST")]
    kinds: Option<String>,
    /// Weighting scheme: inverse-square or one-minus-norm
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,
    /// Error floor in meters for inverse-square weighting
    #[arg(long, value_name = "METERS")]
    floor: Option<f64>,
    /// Minimum residual-bin occupancy (omit to choose automatically)
    #[arg(long, value_name = "N")]
    min_count: Option<usize>,
    /// Comma-separated hidden layer sizes (e.g. 20 or 16,8)
    #[arg(long, value_name = "LIST")]
    hidden: Option<String>,
    /// Train/validation/test fractions, comma-separated, summing to 1
    #[arg(long, value_name = "F,F,F")]
    split: Option<String>,
    /// Gradient-descent learning rate
    #[arg(long, value_name = "RATE")]
    learning_rate: Option<f64>,
    /// Maximum training epochs
    #[arg(long, value_name = "N")]
    max_epochs: Option<usize>,
    /// Early-stopping patience in epochs
    #[arg(long, value_name = "N")]
    patience: Option<usize>,
    /// Mini-batch size
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Random seed for splitting, shuffling and initialization
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

impl ConfigArgs {
    /// Loads the config file (or defaults), then overrides with any
    /// explicit flags, funneling everything through the same key=value
    /// parser so validation stays in one place.
    fn build(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::parse_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.kinds {
            cfg.set("kinds", v)?;
        }
        if let Some(v) = &self.scheme {
            cfg.set("scheme", v)?;
        }
        if let Some(v) = self.floor {
            cfg.set("floor", &format!("{v}"))?;
        }
        if let Some(v) = self.min_count {
            cfg.set("min_count", &format!("{v}"))?;
        }
        if let Some(v) = &self.hidden {
            cfg.set("hidden", v)?;
        }
        if let Some(v) = &self.split {
            cfg.set("split", v)?;
        }
        if let Some(v) = self.learning_rate {
            cfg.set("learning_rate", &format!("{v}"))?;
        }
        if let Some(v) = self.max_epochs {
            cfg.set("max_epochs", &format!("{v}"))?;
        }
        if let Some(v) = self.patience {
            cfg.set("patience", &format!("{v}"))?;
        }
        if let Some(v) = self.batch_size {
            cfg.set("batch_size", &format!("{v}"))?;
        }
        if let Some(v) = self.seed {
            cfg.set("seed", &format!("{v}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthCmd {
    /// Output directory (created if missing)
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Grid size per side; must be a power of two plus one (65, 129, 257…)
    #[arg(long, default_value_t = 129)]
    size: usize,
    /// Master seed; terrain, buildings and both error fields derive from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated error presets for DEM A and DEM B
    /// (insar-like, optical-like)
    #[arg(long, default_value = "insar-like,optical-like", value_name = "A,B")]
    preset: String,
    /// Cell size in meters
    #[arg(long, default_value_t = 5.0)]
    cellsize: f64,
    /// Terrain roughness in (0, 1]
    #[arg(long, default_value_t = 0.55)]
    roughness: f64,
    /// Terrain height range LO,HI in meters
    #[arg(long, default_value = "0,120", value_name = "LO,HI")]
    height_range: String,
    /// Fraction of cells seeded with rectangular buildings (0 disables)
    #[arg(long, default_value_t = 0.0)]
    buildings: f64,
    /// Building height range LO,HI in meters
    #[arg(long, default_value = "5,25", value_name = "LO,HI")]
    building_heights: String,
}

#[derive(Args)]
struct AlignCmd {
    /// DEM to move (ASCII grid)
    moving: PathBuf,
    /// DEM to stay fixed (ASCII grid)
    fixed: PathBuf,
    /// Where to write the recovered rigid transform
    #[arg(long, value_name = "FILE")]
    out_transform: PathBuf,
    /// Where to write the moving DEM resampled onto the fixed grid after
    /// applying the transform
    #[arg(long, value_name = "FILE")]
    out_aligned: PathBuf,
    /// Maximum ICP iterations
    #[arg(long, default_value_t = align::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Stop when the registration error improves by less than this
    #[arg(long, default_value_t = align::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct FeaturesCmd {
    /// Input DEM (ASCII grid)
    dem: PathBuf,
    /// Output CSV path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Companion error map; adds the aux_error feature
    #[arg(long, value_name = "FILE")]
    aux: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ResidualsCmd {
    /// DEM whose errors are being modeled (ASCII grid)
    dem: PathBuf,
    /// Reference surface supplying true heights (ASCII grid)
    reference: PathBuf,
    /// Output CSV path (features plus smoothed target column)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Companion error map; adds the aux_error feature
    #[arg(long, value_name = "FILE")]
    aux: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TrainCmd {
    /// DEM whose errors are being modeled (ASCII grid)
    dem: PathBuf,
    /// Reference surface supplying true heights (ASCII grid)
    reference: PathBuf,
    /// Where to write the trained model
    #[arg(long, value_name = "FILE")]
    out_model: PathBuf,
    /// Optional per-epoch loss history CSV
    #[arg(long, value_name = "FILE")]
    out_history: Option<PathBuf>,
    /// Companion error map; adds the aux_error feature
    #[arg(long, value_name = "FILE")]
    aux: Option<PathBuf>,
    /// Cap training samples by seeded random subsampling (0 = use all)
    #[arg(long, default_value_t = 0, value_name = "N")]
    subsample: usize,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct PredictCmd {
    /// Input DEM (ASCII grid)
    dem: PathBuf,
    /// Trained model file
    model: PathBuf,
    /// Output error-map grid
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Companion error map; required if the model uses the aux_error feature
    #[arg(long, value_name = "FILE")]
    aux: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FuseMode {
    /// Weights from network-predicted error maps
    Ann,
    /// Weights from supplied (simulated or external) error maps
    Hem,
    /// Plain equal-weight average
    Average,
}

#[derive(Args)]
struct FuseCmd {
    /// First DEM (ASCII grid)
    dem_a: PathBuf,
    /// Second DEM, same grid (ASCII grid)
    dem_b: PathBuf,
    /// Weight source
    #[arg(long, value_enum)]
    mode: FuseMode,
    /// Output fused grid
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Trained model for DEM A (mode ann)
    #[arg(long, value_name = "FILE")]
    model_a: Option<PathBuf>,
    /// Trained model for DEM B (mode ann)
    #[arg(long, value_name = "FILE")]
    model_b: Option<PathBuf>,
    /// Error map for DEM A (mode hem)
    #[arg(long, value_name = "FILE")]
    hem_a: Option<PathBuf>,
    /// Error map for DEM B (mode hem)
    #[arg(long, value_name = "FILE")]
    hem_b: Option<PathBuf>,
    /// Companion error map for DEM A's features (mode ann, models using
    /// aux_error)
    #[arg(long, value_name = "FILE")]
    aux_a: Option<PathBuf>,
    /// Companion error map for DEM B's features (mode ann, models using
    /// aux_error)
    #[arg(long, value_name = "FILE")]
    aux_b: Option<PathBuf>,
    /// Ground truth; if given, an accuracy report is printed
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Comparison DEM for the percent-improved statistic in the report
    #[arg(long, value_name = "FILE")]
    baseline: Option<PathBuf>,
    /// Also write the accuracy report to this file
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalCmd {
    /// DEM to score (ASCII grid)
    dem: PathBuf,
    /// Ground truth on the same grid (ASCII grid)
    truth: PathBuf,
    /// Comparison DEM for the percent-improved statistic
    #[arg(long, value_name = "FILE")]
    baseline: Option<PathBuf>,
    /// Also write the report to this file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(cmd) => run_synth(cmd),
        Command::Align(cmd) => run_align(cmd),
        Command::Features(cmd) => run_features(cmd),
        Command::Residuals(cmd) => run_residuals(cmd),
        Command::Train(cmd) => run_train(cmd),
        Command::Predict(cmd) => run_predict(cmd),
        Command::Fuse(cmd) => run_fuse(cmd),
        Command::Eval(cmd) => run_eval(cmd),
    }
}

/// Reads a grid, labeling failures with the offending path.
fn load_grid(path: &Path) -> Result<Grid> {
    read_ascii_grid_file(path).map_err(|e| label(e, path))
}

fn label(e: Error, path: &Path) -> Error {
    match e {
        // Preserve the I/O error kind: NotFound still maps to exit code 2.
        Error::Io(io) => {
            let kind = io.kind();
            Error::Io(std::io::Error::new(kind, format!("{}: {io}", path.display())))
        }
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Structure(m) => Error::Structure(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| label(Error::from(e), path))
}

/// Parses "lo,hi" into an ordered pair.
fn parse_range(text: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Usage(format!("{what} must be LO,HI, got `{text}`")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Usage(format!("invalid {what} low bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Usage(format!("invalid {what} high bound `{}`", parts[1])))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Usage(format!("{what} needs finite LO < HI, got `{text}`")));
    }
    Ok((lo, hi))
}

fn preset_model(name: &str, seed: u64) -> Result<ErrorModel> {
    match name {
        "insar-like" => Ok(ErrorModel::insar_like(seed)),
        "optical-like" => Ok(ErrorModel::optical_like(seed)),
        other => Err(Error::Usage(format!(
            "unknown error preset `{other}` (expected insar-like or optical-like)"
        ))),
    }
}

fn run_synth(cmd: SynthCmd) -> Result<()> {
    let presets: Vec<&str> = cmd.preset.split(',').map(str::trim).collect();
    if presets.len() != 2 {
        return Err(Error::Usage(format!(
            "--preset needs exactly two comma-separated names, got `{}`",
            cmd.preset
        )));
    }
    let height_range = parse_range(&cmd.height_range, "--height-range")?;
    let building_heights = parse_range(&cmd.building_heights, "--building-heights")?;
    if !(0.0..=1.0).contains(&cmd.buildings) {
        return Err(Error::Usage(format!(
            "--buildings must be in [0, 1], got {}",
            cmd.buildings
        )));
    }

    // Sub-seeds are fixed offsets of the master seed so one --seed value
    // pins the whole scene.
    let mut truth =
        synth::generate_terrain(cmd.size, cmd.roughness, height_range, cmd.cellsize, cmd.seed)?;
    if cmd.buildings > 0.0 {
        truth = synth::add_buildings(&truth, cmd.buildings, building_heights, cmd.seed.wrapping_add(1))?;
    }
    let model_a = preset_model(presets[0], cmd.seed.wrapping_add(2))?;
    let model_b = preset_model(presets[1], cmd.seed.wrapping_add(3))?;
    let (dem_a, hem_a) = synth::corrupt(&truth, &model_a)?;
    let (dem_b, hem_b) = synth::corrupt(&truth, &model_b)?;

    std::fs::create_dir_all(&cmd.out).map_err(|e| label(Error::from(e), &cmd.out))?;
    let file = |name: &str| cmd.out.join(name);
    write_ascii_grid_file(&truth, &file("truth.asc"))?;
    write_ascii_grid_file(&dem_a, &file("dem_a.asc"))?;
    write_ascii_grid_file(&dem_b, &file("dem_b.asc"))?;
    write_ascii_grid_file(&hem_a, &file("hem_a.asc"))?;
    write_ascii_grid_file(&hem_b, &file("hem_b.asc"))?;

    let manifest = format!(
        "size={}\nseed={}\ncellsize={}\nroughness={}\nheight_range={},{}\n\
         buildings={}\nbuilding_heights={},{}\npreset_a={}\npreset_b={}\n\
         model_a: {}\nmodel_b: {}\n",
        cmd.size,
        cmd.seed,
        cmd.cellsize,
        cmd.roughness,
        height_range.0,
        height_range.1,
        cmd.buildings,
        building_heights.0,
        building_heights.1,
        presets[0],
        presets[1],
        model_a.describe(),
        model_b.describe(),
    );
    write_text(&file("manifest.txt"), &manifest)?;

    println!("wrote truth.asc dem_a.asc dem_b.asc hem_a.asc hem_b.asc manifest.txt");
    println!("out_dir={}", cmd.out.display());
    Ok(())
}

fn run_align(cmd: AlignCmd) -> Result<()> {
    let moving = load_grid(&cmd.moving)?;
    let fixed = load_grid(&cmd.fixed)?;

    // Pre-alignment RMSE: resample the untouched moving surface onto the
    // fixed grid so before/after are measured on the same cells.
    let identity = RigidTransform::identity();
    let before = align::apply_transform(&moving, &identity, fixed.header())?;
    let pre_rmse = demfuse::metrics::rmse(demfuse::raster::grid_subtract(&before, &fixed)?.values())?;

    let (transform, cloud_rmse, history) =
        align::icp_register_with_history(&moving, &fixed, cmd.max_iters, cmd.tol)?;
    let aligned = align::apply_transform(&moving, &transform, fixed.header())?;
    let post_rmse = demfuse::metrics::rmse(demfuse::raster::grid_subtract(&aligned, &fixed)?.values())?;

    transform.write_file(&cmd.out_transform)?;
    write_ascii_grid_file(&aligned, &cmd.out_aligned)?;

    let (shift, angle) = (transform.translation, transform.yaw_deg());
    println!("pre_rmse={pre_rmse}");
    println!("post_rmse={post_rmse}");
    println!("cloud_rmse={cloud_rmse}");
    println!("iterations={}", history.len().saturating_sub(1));
    println!("tx={} ty={} tz={}", shift.x, shift.y, shift.z);
    println!("yaw_deg={angle}");
    Ok(())
}

/// Appends the companion-error feature when an aux grid is supplied and
/// the request doesn't already include it.
fn kinds_with_aux(kinds: &[FeatureKind], aux: Option<&Grid>) -> Vec<FeatureKind> {
    let mut kinds = kinds.to_vec();
    if aux.is_some() && !kinds.contains(&FeatureKind::AuxErrorMap) {
        kinds.push(FeatureKind::AuxErrorMap);
    }
    kinds
}

fn load_aux(path: &Option<PathBuf>) -> Result<Option<Grid>> {
    match path {
        Some(p) => Ok(Some(load_grid(p)?)),
        None => Ok(None),
    }
}

fn run_features(cmd: FeaturesCmd) -> Result<()> {
    let cfg = cmd.config.build()?;
    let dem = load_grid(&cmd.dem)?;
    let aux = load_aux(&cmd.aux)?;
    let kinds = kinds_with_aux(&cfg.kinds, aux.as_ref());
    let table = extract_feature_table(&dem, aux.as_ref(), &kinds)?;
    write_text(&cmd.out, &table.to_csv())?;
    println!("rows={}", table.len());
    println!("columns={}", table.names().join(","));
    Ok(())
}

fn run_residuals(cmd: ResidualsCmd) -> Result<()> {
    let cfg = cmd.config.build()?;
    let dem = load_grid(&cmd.dem)?;
    let reference = load_grid(&cmd.reference)?;
    let aux = load_aux(&cmd.aux)?;
    let kinds = kinds_with_aux(&cfg.kinds, aux.as_ref());
    let ts = build_training_set(&dem, &reference, aux.as_ref(), &kinds, cfg.min_count)?;
    write_text(&cmd.out, &ts.to_csv())?;
    println!("samples={}", ts.len());
    Ok(())
}

fn run_train(cmd: TrainCmd) -> Result<()> {
    let cfg = cmd.config.build()?;
    let dem = load_grid(&cmd.dem)?;
    let reference = load_grid(&cmd.reference)?;
    let aux = load_aux(&cmd.aux)?;
    let kinds = kinds_with_aux(&cfg.kinds, aux.as_ref());
    let mut ts = build_training_set(&dem, &reference, aux.as_ref(), &kinds, cfg.min_count)?;
    if cmd.subsample > 0 {
        ts = ts.subsample(cmd.subsample, cfg.train.seed)?;
    }

    let (model, history) = mlp::train(&ts, &cfg.train)?;
    mlp::save_model_file(&model, &cmd.out_model)?;
    if let Some(path) = &cmd.out_history {
        write_text(path, &history.to_csv())?;
    }

    let (train_sse, validation_sse) = history.epochs[history.best_epoch];
    println!("samples={}", ts.len());
    println!(
        "split_counts={}/{}/{}",
        history.train_count, history.validation_count, history.test_count
    );
    println!("epochs={}", history.epochs.len());
    println!("best_epoch={}", history.best_epoch);
    println!("train_sse={train_sse}");
    println!("validation_sse={validation_sse}");
    println!("test_sse={}", history.test_sse);
    println!("test_correlation={}", history.test_correlation);
    if !model.dropped_features().is_empty() {
        eprintln!("note: dropped constant features: {}", model.dropped_features().join(","));
    }
    Ok(())
}

/// Feature kinds a model was trained on, recovered from its stored
/// feature names.
fn model_kinds(model: &MlpModel) -> Result<Vec<FeatureKind>> {
    model
        .feature_names()
        .iter()
        .map(|name| {
            name.parse::<FeatureKind>()
                .map_err(|_| Error::Structure(format!("model uses unknown feature `{name}`")))
        })
        .collect()
}

fn predict_map(dem: &Grid, model: &MlpModel, aux: Option<&Grid>) -> Result<Grid> {
    let kinds = model_kinds(model)?;
    if kinds.contains(&FeatureKind::AuxErrorMap) && aux.is_none() {
        return Err(Error::Usage(
            "model uses the aux_error feature; supply the companion error map with --aux".into(),
        ));
    }
    let table = extract_feature_table(dem, aux, &kinds)?;
    mlp::predict_error_map(model, &table, dem.header())
}

fn run_predict(cmd: PredictCmd) -> Result<()> {
    let dem = load_grid(&cmd.dem)?;
    let model = mlp::load_model_file(&cmd.model).map_err(|e| label(e, &cmd.model))?;
    let aux = load_aux(&cmd.aux)?;
    let map = predict_map(&dem, &model, aux.as_ref())?;
    write_ascii_grid_file(&map, &cmd.out)?;
    println!("predicted_pixels={}", map.valid_count());
    Ok(())
}

fn reject_flag<T>(value: &Option<T>, flag: &str, mode: &str) -> Result<()> {
    if value.is_some() {
        return Err(Error::Usage(format!("{flag} does not apply to --mode {mode}")));
    }
    Ok(())
}

fn require_flag<'a, T>(value: &'a Option<T>, flag: &str, mode: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Usage(format!("--mode {mode} requires {flag}")))
}

fn run_fuse(cmd: FuseCmd) -> Result<()> {
    if cmd.truth.is_none() {
        if cmd.report.is_some() {
            return Err(Error::Usage("--report needs --truth".into()));
        }
        if cmd.baseline.is_some() {
            return Err(Error::Usage("--baseline needs --truth".into()));
        }
    }
    let cfg = cmd.config.build()?;
    let dem_a = load_grid(&cmd.dem_a)?;
    let dem_b = load_grid(&cmd.dem_b)?;

    let fused = match cmd.mode {
        FuseMode::Ann => {
            reject_flag(&cmd.hem_a, "--hem-a", "ann")?;
            reject_flag(&cmd.hem_b, "--hem-b", "ann")?;
            let model_a =
                mlp::load_model_file(require_flag(&cmd.model_a, "--model-a", "ann")?)?;
            let model_b =
                mlp::load_model_file(require_flag(&cmd.model_b, "--model-b", "ann")?)?;
            let aux_a = load_aux(&cmd.aux_a)?;
            let aux_b = load_aux(&cmd.aux_b)?;
            let err_a = predict_map(&dem_a, &model_a, aux_a.as_ref())?;
            let err_b = predict_map(&dem_b, &model_b, aux_b.as_ref())?;
            let (raw_a, degenerate_a) = weights_for_scheme(&err_a, cfg.scheme, cfg.floor)?;
            let (raw_b, degenerate_b) = weights_for_scheme(&err_b, cfg.scheme, cfg.floor)?;
            if degenerate_a || degenerate_b {
                eprintln!("note: constant error map; affected weights fall back to equal");
            }
            let pair = normalize_pair(&raw_a, &raw_b)?;
            fuse_weighted(&dem_a, &dem_b, &pair)?
        }
        FuseMode::Hem => {
            reject_flag(&cmd.model_a, "--model-a", "hem")?;
            reject_flag(&cmd.model_b, "--model-b", "hem")?;
            reject_flag(&cmd.aux_a, "--aux-a", "hem")?;
            reject_flag(&cmd.aux_b, "--aux-b", "hem")?;
            let hem_a = load_grid(require_flag(&cmd.hem_a, "--hem-a", "hem")?)?;
            let hem_b = load_grid(require_flag(&cmd.hem_b, "--hem-b", "hem")?)?;
            fuse_hem_baseline(&dem_a, &dem_b, &hem_a, &hem_b, cfg.scheme, cfg.floor)?
        }
        FuseMode::Average => {
            reject_flag(&cmd.model_a, "--model-a", "average")?;
            reject_flag(&cmd.model_b, "--model-b", "average")?;
            reject_flag(&cmd.hem_a, "--hem-a", "average")?;
            reject_flag(&cmd.hem_b, "--hem-b", "average")?;
            reject_flag(&cmd.aux_a, "--aux-a", "average")?;
            reject_flag(&cmd.aux_b, "--aux-b", "average")?;
            fuse_plain_average(&dem_a, &dem_b)?
        }
    };

    write_ascii_grid_file(&fused, &cmd.out)?;
    println!("fused_pixels={}", fused.valid_count());

    if let Some(truth_path) = &cmd.truth {
        let truth = load_grid(truth_path)?;
        let baseline = load_aux(&cmd.baseline)?;
        let report = accuracy_report(&fused, &truth, baseline.as_ref())?;
        let text = report.to_key_values();
        print!("{text}");
        if let Some(path) = &cmd.report {
            write_text(path, &text)?;
        }
    }
    Ok(())
}

fn run_eval(cmd: EvalCmd) -> Result<()> {
    let dem = load_grid(&cmd.dem)?;
    let truth = load_grid(&cmd.truth)?;
    let baseline = load_aux(&cmd.baseline)?;
    let report = accuracy_report(&dem, &truth, baseline.as_ref())?;
    let text = report.to_key_values();
    print!("{text}");
    if let Some(path) = &cmd.out {
        write_text(path, &text)?;
    }
    Ok(())
}

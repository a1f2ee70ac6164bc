//! Small fully connected feed-forward network mapping terrain-feature
//! vectors to expected absolute height error, trained by backpropagation
//! with mini-batch gradient descent, momentum, and validation-based early
//! stopping.
//!
//! Inputs and targets are z-score standardized with statistics from the
//! training split; the loss is the sum of squared errors in that scaled
//! space. Physical predictions are de-standardized and clamped at zero,
//! since targets are error magnitudes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::raster::{Grid, GridHeader};
use crate::refine::TrainingSet;
use crate::rng::SplitMix64;

/// Feed-forward network with tanh hidden layers and an identity output
/// unit, plus the input/target scaling that ties it to physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    /// `weights[l]` has shape `layer_sizes[l+1] × layer_sizes[l]`.
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    /// Feature names the model consumes, in input order.
    feature_names: Vec<String>,
    /// Features dropped at training time for having zero variance.
    dropped_features: Vec<String>,
}

/// Per-layer gradients, same shapes as the model's parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// A training batch in scaled space: `inputs` holds one sample per column.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: DMatrix<f64>,
    pub targets: DVector<f64>,
}

impl MlpModel {
    /// Random initialization: uniform weights in
    /// `±sqrt(6 / (fan_in + fan_out))`, zero biases, identity scaling,
    /// placeholder feature names. Deterministic per seed.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
        if layer_sizes.len() < 2 {
            return Err(Error::Usage(format!(
                "layer sizes must chain input to output, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.iter().any(|s| *s == 0) {
            return Err(Error::Usage("layer sizes must be positive".into()));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Usage("output layer must have exactly 1 unit".into()));
        }
        let mut rng = SplitMix64::new(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = DMatrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_in(-limit, limit));
            weights.push(w);
            biases.push(DVector::zeros(fan_out));
        }
        let n = layer_sizes[0];
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            input_mean: vec![0.0; n],
            input_std: vec![1.0; n],
            target_mean: 0.0,
            target_std: 1.0,
            feature_names: (0..n).map(|i| format!("f{i}")).collect(),
            dropped_features: Vec::new(),
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn dropped_features(&self) -> &[String] {
        &self.dropped_features
    }

    /// Direct parameter access, mainly for optimizers and gradient oracles.
    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.biases
    }

    fn set_scaling(
        &mut self,
        input_mean: Vec<f64>,
        input_std: Vec<f64>,
        target_mean: f64,
        target_std: f64,
    ) -> Result<()> {
        if input_mean.len() != self.input_len() || input_std.len() != self.input_len() {
            return Err(Error::Structure("scaling length mismatch".into()));
        }
        if input_std.iter().any(|s| !(*s > 0.0)) || !(target_std > 0.0) {
            return Err(Error::Structure("scaling stds must be positive".into()));
        }
        self.input_mean = input_mean;
        self.input_std = input_std;
        self.target_mean = target_mean;
        self.target_std = target_std;
        Ok(())
    }

    /// Network output for an already-standardized batch (one sample per
    /// column), without de-standardization or clamping.
    pub fn forward_scaled(&self, inputs: &DMatrix<f64>) -> DVector<f64> {
        let (activations, _) = self.forward_pass(inputs);
        activations.last().unwrap().row(0).transpose()
    }

    /// All layer activations for a scaled batch; `activations[0]` is the
    /// input itself.
    fn forward_pass(&self, inputs: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, usize) {
        let batch = inputs.ncols();
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(inputs.clone());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * activations.last().unwrap();
            for c in 0..batch {
                let mut col = z.column_mut(c);
                col += b;
            }
            if l < last {
                z.apply(|v| *v = v.tanh());
            }
            activations.push(z);
        }
        (activations, batch)
    }

    /// Predicted absolute error (meters) for one physical feature vector:
    /// standardize, propagate, de-standardize, clamp at zero.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_len() {
            return Err(Error::Usage(format!(
                "model expects {} features, got {}",
                self.input_len(),
                features.len()
            )));
        }
        let scaled: Vec<f64> = features
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.input_mean[j]) / self.input_std[j])
            .collect();
        let x = DMatrix::from_column_slice(self.input_len(), 1, &scaled);
        let out = self.forward_scaled(&x)[0];
        Ok((out * self.target_std + self.target_mean).max(0.0))
    }
}

/// Sum of squared errors over the batch (scaled space) and its exact
/// gradients by reverse-mode differentiation.
pub fn loss_and_gradients(model: &MlpModel, batch: &Batch) -> Result<(f64, Gradients)> {
    let b = batch.inputs.ncols();
    if b == 0 {
        return Err(Error::Usage("empty batch".into()));
    }
    if batch.inputs.nrows() != model.input_len() || batch.targets.len() != b {
        return Err(Error::Usage("batch shape does not match model".into()));
    }
    let (activations, _) = model.forward_pass(&batch.inputs);
    let output = activations.last().unwrap().row(0).transpose();
    let err = &output - &batch.targets;
    let sse = err.dot(&err);

    let layers = model.weights.len();
    let mut grad_w = Vec::with_capacity(layers);
    let mut grad_b = Vec::with_capacity(layers);
    // delta holds dSSE/dz for the current layer, one column per sample.
    let mut delta = DMatrix::zeros(1, b);
    for c in 0..b {
        delta[(0, c)] = 2.0 * err[c];
    }
    for l in (0..layers).rev() {
        grad_w.push(&delta * activations[l].transpose());
        grad_b.push(DVector::from_fn(delta.nrows(), |r, _| delta.row(r).sum()));
        if l > 0 {
            let mut back = model.weights[l].transpose() * &delta;
            // activations[l] = tanh(z_l) for hidden layers: d tanh = 1 - a².
            back.zip_apply(&activations[l], |g, a| *g *= 1.0 - a * a);
            delta = back;
        }
    }
    grad_w.reverse();
    grad_b.reverse();
    Ok((sse, Gradients { weights: grad_w, biases: grad_b }))
}

/// Training hyperparameters. Defaults: 70/15/15 split, 2000 epochs max,
/// learning rate 0.01, momentum 0.9, batch 64, patience 50, one hidden
/// layer of 20 units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub split: (f64, f64, f64),
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split: (0.70, 0.15, 0.15),
            max_epochs: 2000,
            learning_rate: 0.01,
            patience: 50,
            seed: 42,
            batch_size: 64,
            hidden: vec![20],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split;
        if (a + b + c - 1.0).abs() > 1e-9 || a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(Error::Usage(format!(
                "split fractions must be positive and sum to 1, got {:?}",
                self.split
            )));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::Usage(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Usage("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Usage("batch size must be at least 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|h| *h == 0) {
            return Err(Error::Usage(format!(
                "hidden layer sizes must be nonempty and positive, got {:?}",
                self.hidden
            )));
        }
        Ok(())
    }
}

/// Per-epoch loss record and final held-out evaluation of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// `(train_sse, validation_sse)` per epoch, scaled space.
    pub epochs: Vec<(f64, f64)>,
    /// Epoch whose parameters were returned (best validation SSE).
    pub best_epoch: usize,
    pub train_count: usize,
    pub validation_count: usize,
    pub test_count: usize,
    /// SSE of the returned model on the test split, scaled space.
    pub test_sse: f64,
    /// Correlation of physical predictions vs targets on the test split.
    pub test_correlation: f64,
}

impl TrainHistory {
    /// CSV lines `epoch,train_sse,validation_sse`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_sse,validation_sse\n");
        for (i, (tr, va)) in self.epochs.iter().enumerate() {
            out.push_str(&format!("{i},{tr:.9e},{va:.9e}\n"));
        }
        out
    }
}

struct PreparedData {
    model: MlpModel,
    /// Column-major samples, scaled, for each split.
    train_x: DMatrix<f64>,
    train_y: DVector<f64>,
    val_x: DMatrix<f64>,
    val_y: DVector<f64>,
    test_x: DMatrix<f64>,
    test_y: DVector<f64>,
    /// Physical targets of the test split, for correlation reporting.
    test_y_raw: Vec<f64>,
}

fn prepare(ts: &TrainingSet, config: &TrainConfig) -> Result<PreparedData> {
    let m = ts.len();
    let names = ts.feature_names().to_vec();
    let n_all = names.len();

    // Deterministic shuffled split.
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = SplitMix64::new(config.seed);
    rng.shuffle(&mut order);
    let n_train = ((config.split.0 * m as f64).round() as usize).clamp(1, m - 2);
    let n_val = ((config.split.1 * m as f64).round() as usize).clamp(1, m - n_train - 1);
    let train_idx = &order[..n_train];
    let val_idx = &order[n_train..n_train + n_val];
    let test_idx = &order[n_train + n_val..];

    // Input scaling from the training split only; zero-variance features
    // are dropped and recorded so degenerate columns cannot poison scaling.
    let mut means = vec![0.0f64; n_all];
    let mut stds = vec![0.0f64; n_all];
    for j in 0..n_all {
        let mut sum = 0.0;
        for &i in train_idx {
            sum += ts.features.row(i)[j];
        }
        let mean = sum / n_train as f64;
        let mut var = 0.0;
        for &i in train_idx {
            let d = ts.features.row(i)[j] - mean;
            var += d * d;
        }
        means[j] = mean;
        stds[j] = (var / n_train as f64).sqrt();
    }
    let active: Vec<usize> = (0..n_all).filter(|j| stds[*j] > 1e-12).collect();
    let dropped: Vec<String> = (0..n_all)
        .filter(|j| stds[*j] <= 1e-12)
        .map(|j| names[j].clone())
        .collect();
    if active.is_empty() {
        return Err(Error::Degenerate("every feature has zero variance on the training split".into()));
    }

    let t_mean = train_idx.iter().map(|&i| ts.targets[i]).sum::<f64>() / n_train as f64;
    let t_var = train_idx
        .iter()
        .map(|&i| {
            let d = ts.targets[i] - t_mean;
            d * d
        })
        .sum::<f64>()
        / n_train as f64;
    let t_std = t_var.sqrt();
    if !(t_std > 1e-12) {
        return Err(Error::Degenerate(
            "targets have zero variance on the training split; nothing to learn".into(),
        ));
    }

    let pack = |idx: &[usize]| -> (DMatrix<f64>, DVector<f64>) {
        let mut x = DMatrix::zeros(active.len(), idx.len());
        let mut y = DVector::zeros(idx.len());
        for (col, &i) in idx.iter().enumerate() {
            let row = ts.features.row(i);
            for (r, &j) in active.iter().enumerate() {
                x[(r, col)] = (row[j] - means[j]) / stds[j];
            }
            y[col] = (ts.targets[i] - t_mean) / t_std;
        }
        (x, y)
    };
    let (train_x, train_y) = pack(train_idx);
    let (val_x, val_y) = pack(val_idx);
    let (test_x, test_y) = pack(test_idx);
    let test_y_raw: Vec<f64> = test_idx.iter().map(|&i| ts.targets[i]).collect();

    let mut layer_sizes = vec![active.len()];
    layer_sizes.extend_from_slice(&config.hidden);
    layer_sizes.push(1);
    let mut model = MlpModel::init(&layer_sizes, config.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    model.feature_names = active.iter().map(|&j| names[j].clone()).collect();
    model.dropped_features = dropped;
    model.set_scaling(
        active.iter().map(|&j| means[j]).collect(),
        active.iter().map(|&j| stds[j]).collect(),
        t_mean,
        t_std,
    )?;

    Ok(PreparedData { model, train_x, train_y, val_x, val_y, test_x, test_y, test_y_raw })
}

fn split_sse(model: &MlpModel, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let out = model.forward_scaled(x);
    let err = out - y;
    err.dot(&err)
}

/// Trains on the set with mini-batch gradient descent (momentum 0.9),
/// stopping when validation SSE fails to improve for `patience` epochs, and
/// returns the parameters from the best-validation epoch.
pub fn train(ts: &TrainingSet, config: &TrainConfig) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    if ts.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 100 samples, got {}",
            ts.len()
        )));
    }
    let PreparedData { mut model, train_x, train_y, val_x, val_y, test_x, test_y, test_y_raw } =
        prepare(ts, config)?;

    let n_train = train_x.ncols();
    let momentum = 0.9;
    let mut vel_w: Vec<DMatrix<f64>> =
        model.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
    let mut vel_b: Vec<DVector<f64>> =
        model.biases.iter().map(|b| DVector::zeros(b.len())).collect();

    let mut rng = SplitMix64::new(config.seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(1));
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut best_model = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut epochs = Vec::new();

    for epoch in 0..config.max_epochs {
        rng.shuffle(&mut order);
        let mut train_sse_accum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut x = DMatrix::zeros(model.input_len(), chunk.len());
            let mut y = DVector::zeros(chunk.len());
            for (col, &i) in chunk.iter().enumerate() {
                x.set_column(col, &train_x.column(i));
                y[col] = train_y[i];
            }
            let batch = Batch { inputs: x, targets: y };
            let (sse, grads) = loss_and_gradients(&model, &batch)?;
            if !sse.is_finite() {
                return Err(Error::Divergence(format!("non-finite loss at epoch {epoch}")));
            }
            train_sse_accum += sse;
            let scale = config.learning_rate / chunk.len() as f64;
            for l in 0..model.weights.len() {
                vel_w[l] = &vel_w[l] * momentum - &grads.weights[l] * scale;
                vel_b[l] = &vel_b[l] * momentum - &grads.biases[l] * scale;
                model.weights[l] += &vel_w[l];
                model.biases[l] += &vel_b[l];
            }
        }
        let val_sse = split_sse(&model, &val_x, &val_y);
        if !val_sse.is_finite() {
            return Err(Error::Divergence(format!("non-finite validation loss at epoch {epoch}")));
        }
        epochs.push((train_sse_accum, val_sse));

        if val_sse < best_val {
            best_val = val_sse;
            best_model = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    let test_sse = split_sse(&best_model, &test_x, &test_y);
    // Correlation in physical units: de-standardized clamped predictions
    // against raw targets.
    let preds: Vec<f64> = best_model
        .forward_scaled(&test_x)
        .iter()
        .map(|o| (o * best_model.target_std + best_model.target_mean).max(0.0))
        .collect();
    let test_correlation =
        crate::metrics::pearson_correlation(&preds, &test_y_raw).unwrap_or(0.0);

    let history = TrainHistory {
        epochs,
        best_epoch,
        train_count: train_x.ncols(),
        validation_count: val_x.ncols(),
        test_count: test_x.ncols(),
        test_sse,
        test_correlation,
    };
    Ok((best_model, history))
}

/// Predicts an absolute-error grid at the table's pixels (nodata
/// elsewhere). The table must contain every feature column the model was
/// trained on; columns are matched by name, so extra columns are fine.
pub fn predict_error_map(
    model: &MlpModel,
    table: &FeatureTable,
    geometry: &GridHeader,
) -> Result<Grid> {
    let selected = table.select_columns(&model.feature_names)?;
    let mut grid = Grid::constant(geometry.clone(), f64::NAN);
    for i in 0..selected.len() {
        let value = model.forward(selected.row(i))?;
        let idx = selected.pixel_indices()[i];
        if idx >= geometry.cell_count() {
            return Err(Error::Structure(format!("pixel index {idx} outside target geometry")));
        }
        grid.values_mut()[idx] = value;
    }
    Ok(grid)
}

/// Serializes a model as text: a version line, layer sizes, feature names,
/// scaling parameters, then per-layer biases and row-major weights, floats
/// with 17 significant digits so reloading is bit-faithful.
pub fn save_model(model: &MlpModel) -> String {
    let mut out = String::from("demfuse-mlp v1\n");
    out.push_str("layers");
    for s in &model.layer_sizes {
        out.push_str(&format!(" {s}"));
    }
    out.push('\n');
    out.push_str("features");
    for n in &model.feature_names {
        out.push_str(&format!(" {n}"));
    }
    out.push('\n');
    out.push_str("dropped");
    for n in &model.dropped_features {
        out.push_str(&format!(" {n}"));
    }
    out.push('\n');
    let fmt_line = |label: &str, values: &mut dyn Iterator<Item = f64>| -> String {
        let mut line = String::from(label);
        for v in values {
            line.push_str(&format!(" {v:.16e}"));
        }
        line.push('\n');
        line
    };
    out.push_str(&fmt_line("input_mean", &mut model.input_mean.iter().copied()));
    out.push_str(&fmt_line("input_std", &mut model.input_std.iter().copied()));
    out.push_str(&fmt_line(
        "target_scale",
        &mut [model.target_mean, model.target_std].into_iter(),
    ));
    for l in 0..model.weights.len() {
        out.push_str(&fmt_line(
            &format!("bias{l}"),
            &mut model.biases[l].iter().copied(),
        ));
        let w = &model.weights[l];
        let mut row_major = Vec::with_capacity(w.nrows() * w.ncols());
        for r in 0..w.nrows() {
            for c in 0..w.ncols() {
                row_major.push(w[(r, c)]);
            }
        }
        out.push_str(&fmt_line(&format!("weights{l}"), &mut row_major.into_iter()));
    }
    out
}

/// Parses the text form produced by [`save_model`], validating version,
/// dimensions and scaling before returning a usable model.
pub fn load_model(text: &str) -> Result<MlpModel> {
    let mut lines = text.lines();
    let version = lines
        .next()
        .ok_or_else(|| Error::Parse("empty model file".into()))?;
    if version.trim() != "demfuse-mlp v1" {
        return Err(Error::Parse(format!("unsupported model header `{version}`")));
    }

    let mut labeled = |expect: &str| -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("model file truncated before `{expect}`")))?;
        let mut parts = line.split_whitespace();
        let label = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("blank line where `{expect}` expected")))?;
        if label != expect {
            return Err(Error::Parse(format!("expected `{expect}` line, found `{label}`")));
        }
        Ok(parts.map(|s| s.to_string()).collect())
    };

    let parse_floats = |tokens: &[String], what: &str| -> Result<Vec<f64>> {
        tokens
            .iter()
            .map(|t| {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad float `{t}` in {what}")))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("non-finite value in {what}")));
                }
                Ok(v)
            })
            .collect()
    };

    let layer_tokens = labeled("layers")?;
    let layer_sizes: Vec<usize> = layer_tokens
        .iter()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad layer size `{t}`")))
        })
        .collect::<Result<_>>()?;
    if layer_sizes.len() < 2 || *layer_sizes.last().unwrap() != 1 || layer_sizes.contains(&0) {
        return Err(Error::Structure(format!("invalid layer chain {layer_sizes:?}")));
    }

    let feature_names = labeled("features")?;
    if feature_names.len() != layer_sizes[0] {
        return Err(Error::Structure(format!(
            "{} feature names for {} inputs",
            feature_names.len(),
            layer_sizes[0]
        )));
    }
    let dropped_features = labeled("dropped")?;

    let input_mean = parse_floats(&labeled("input_mean")?, "input_mean")?;
    let input_std = parse_floats(&labeled("input_std")?, "input_std")?;
    let target = parse_floats(&labeled("target_scale")?, "target_scale")?;
    if input_mean.len() != layer_sizes[0] || input_std.len() != layer_sizes[0] {
        return Err(Error::Structure("scaling length does not match input layer".into()));
    }
    if target.len() != 2 {
        return Err(Error::Structure("target_scale needs exactly mean and std".into()));
    }
    if input_std.iter().any(|s| !(*s > 0.0)) || !(target[1] > 0.0) {
        return Err(Error::Structure("scaling stds must be positive".into()));
    }

    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..layer_sizes.len() - 1 {
        let (rows, cols) = (layer_sizes[l + 1], layer_sizes[l]);
        let b = parse_floats(&labeled(&format!("bias{l}"))?, "bias")?;
        if b.len() != rows {
            return Err(Error::Structure(format!(
                "bias{l} has {} entries, expected {rows}",
                b.len()
            )));
        }
        let w = parse_floats(&labeled(&format!("weights{l}"))?, "weights")?;
        if w.len() != rows * cols {
            return Err(Error::Structure(format!(
                "weights{l} has {} entries, expected {rows}x{cols}",
                w.len()
            )));
        }
        biases.push(DVector::from_vec(b));
        weights.push(DMatrix::from_row_slice(rows, cols, &w));
    }
    if lines.next().is_some_and(|l| !l.trim().is_empty()) {
        return Err(Error::Parse("trailing content after model data".into()));
    }

    Ok(MlpModel {
        layer_sizes,
        weights,
        biases,
        input_mean,
        input_std,
        target_mean: target[0],
        target_std: target[1],
        feature_names,
        dropped_features,
    })
}

pub fn save_model_file(model: &MlpModel, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, save_model(model))?;
    Ok(())
}

pub fn load_model_file(path: &std::path::Path) -> Result<MlpModel> {
    let text = std::fs::read_to_string(path)?;
    load_model(&text)
}

//! Pipeline configuration: which terrain features to use, how errors
//! become weights, and the network training hyperparameters, readable
//! from a `key=value` text file so a whole run is reproducible from one
//! artifact.

use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::fusion::{WeightScheme, DEFAULT_ERROR_FLOOR};
use crate::mlp::TrainConfig;

/// Everything the pipeline commands need beyond their input paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Terrain features used for training and prediction.
    pub kinds: Vec<FeatureKind>,
    /// How per-pixel error estimates become raw fusion weights.
    pub scheme: WeightScheme,
    /// Error floor for inverse-square weighting, meters.
    pub floor: f64,
    /// Minimum residual-bin occupancy; `None` chooses automatically.
    pub min_count: Option<usize>,
    /// Network training hyperparameters.
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kinds: FeatureKind::COMPUTED.to_vec(),
            scheme: WeightScheme::InverseSquare,
            floor: DEFAULT_ERROR_FLOOR,
            min_count: None,
            train: TrainConfig::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value `{value}` for config key `{key}`")))
}

impl PipelineConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kinds" => {
                let kinds: Vec<FeatureKind> = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?;
                self.kinds = kinds;
            }
            "scheme" => self.scheme = value.trim().parse()?,
            "floor" => self.floor = parse_num(key, value)?,
            "min_count" => self.min_count = Some(parse_num(key, value)?),
            "hidden" => {
                let hidden: Vec<usize> = value
                    .split(',')
                    .map(|s| parse_num::<usize>(key, s))
                    .collect::<Result<_>>()?;
                self.train.hidden = hidden;
            }
            "split" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|s| parse_num::<f64>(key, s))
                    .collect::<Result<_>>()?;
                if parts.len() != 3 {
                    return Err(Error::Parse(format!(
                        "config key `split` needs three comma-separated fractions, got `{value}`"
                    )));
                }
                self.train.split = (parts[0], parts[1], parts[2]);
            }
            "learning_rate" => self.train.learning_rate = parse_num(key, value)?,
            "max_epochs" => self.train.max_epochs = parse_num(key, value)?,
            "patience" => self.train.patience = parse_num(key, value)?,
            "batch_size" => self.train.batch_size = parse_num(key, value)?,
            "seed" => self.train.seed = parse_num(key, value)?,
            other => {
                return Err(Error::Usage(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Checks cross-field validity; called after all settings are applied.
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::Usage("config needs at least one feature kind".into()));
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if self.kinds[..i].contains(k) {
                return Err(Error::Usage(format!("duplicate feature kind `{k}` in config")));
            }
        }
        if !(self.floor > 0.0) || !self.floor.is_finite() {
            return Err(Error::Usage(format!(
                "error floor must be a positive real, got {}",
                self.floor
            )));
        }
        if self.min_count == Some(0) {
            return Err(Error::Usage("min_count must be at least 1".into()));
        }
        self.train.validate()
    }

    /// Parses a config file: `key = value` lines, `#` comments and blank
    /// lines ignored, later keys override earlier ones, starting from the
    /// defaults.
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "config line {} is not `key=value`: `{raw}`",
                    lineno + 1
                )));
            };
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn parse_file(path: &std::path::Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// The full configuration as `key=value` text; parsing it back yields
    /// an equal configuration.
    pub fn to_text(&self) -> String {
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.name()).collect();
        let hidden: Vec<String> = self.train.hidden.iter().map(|h| h.to_string()).collect();
        let mut out = String::new();
        out.push_str(&format!("kinds = {}\n", kinds.join(",")));
        out.push_str(&format!("scheme = {}\n", self.scheme));
        out.push_str(&format!("floor = {}\n", self.floor));
        if let Some(mc) = self.min_count {
            out.push_str(&format!("min_count = {mc}\n"));
        }
        out.push_str(&format!("hidden = {}\n", hidden.join(",")));
        out.push_str(&format!(
            "split = {},{},{}\n",
            self.train.split.0, self.train.split.1, self.train.split.2
        ));
        out.push_str(&format!("learning_rate = {}\n", self.train.learning_rate));
        out.push_str(&format!("max_epochs = {}\n", self.train.max_epochs));
        out.push_str(&format!("patience = {}\n", self.train.patience));
        out.push_str(&format!("batch_size = {}\n", self.train.batch_size));
        out.push_str(&format!("seed = {}\n", self.train.seed));
        out
    }
}

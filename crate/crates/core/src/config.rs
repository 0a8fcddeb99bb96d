//! Pipeline configuration: a flat-key TOML document plus `key=value`
//! overrides from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::predictor::RemoteConfig;
use crate::pseudogen::{GenConfig, UnitRanges, DEFAULT_UNIT_RANGES};
use crate::units::DurationUnit;
use crate::voting::DEFAULT_NEIGHBOR_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    Remote,
    Pattern,
    Mock,
}

impl PredictorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictorMode::Remote => "remote",
            PredictorMode::Pattern => "pattern",
            PredictorMode::Mock => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub k_sentences: usize,
    pub min_sentences: usize,
    pub max_gap: usize,
    pub neighbor_threshold: f64,
    pub negative_distance: usize,
    pub quantifier_prob: f64,
    pub quantifiers: Vec<String>,
    /// Inclusive number range per unit, seconds first.
    pub unit_ranges: UnitRanges,

    pub predictor_mode: PredictorMode,
    pub predictor_endpoint: String,
    pub predictor_path: String,
    pub predictor_batch_size: usize,
    pub predictor_max_in_flight: usize,
    pub predictor_retries: u32,
    pub predictor_backoff_ms: u64,
    pub predictor_timeout_ms: u64,

    /// Mock predictor: probability a sentence's label is the true unit.
    pub mock_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mock_default_unit: Option<DurationUnit>,

    pub corpus_dir: PathBuf,
    pub phrase_list: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irregular_verbs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abbreviations: Option<PathBuf>,
    pub out_dir: PathBuf,

    /// Mock predictor: true unit per event id.
    pub mock_truths: BTreeMap<String, DurationUnit>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let gen = GenConfig::default();
        let remote = RemoteConfig::default();
        Self {
            seed: 0,
            k_sentences: 50,
            min_sentences: 10,
            max_gap: 1,
            neighbor_threshold: DEFAULT_NEIGHBOR_THRESHOLD,
            negative_distance: gen.negative_distance,
            quantifier_prob: gen.quantifier_prob,
            quantifiers: gen.quantifiers,
            unit_ranges: DEFAULT_UNIT_RANGES,
            predictor_mode: PredictorMode::Pattern,
            predictor_endpoint: remote.endpoint,
            predictor_path: remote.path,
            predictor_batch_size: remote.batch_size,
            predictor_max_in_flight: remote.max_in_flight,
            predictor_retries: remote.retries,
            predictor_backoff_ms: remote.backoff_ms,
            predictor_timeout_ms: remote.timeout_ms,
            mock_accuracy: 0.6,
            mock_default_unit: None,
            corpus_dir: PathBuf::from("corpus"),
            phrase_list: PathBuf::from("phrases.txt"),
            verbs: None,
            irregular_verbs: None,
            abbreviations: None,
            out_dir: PathBuf::from("out"),
            mock_truths: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("missing config file {}", .0.display())]
    Missing(PathBuf),
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("override {0:?} is not key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Parses an override value as a TOML value, falling back to a bare string
/// so `out_dir=runs/a` works without quoting.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_table(toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?)
    }

    fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if any), then applies `key=value` overrides in order.
    pub fn load<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => ConfigError::Missing(p.to_path_buf()),
                    _ => ConfigError::Io { path: p.to_path_buf(), source: e },
                })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", p.display())))?
            }
        };
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.to_string()))?;
            table.insert(key.trim().to_string(), override_value(value.trim()));
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if !(self.neighbor_threshold > 0.0 && self.neighbor_threshold <= 1.0) {
            return fail(format!("neighbor_threshold must lie in (0, 1], got {}", self.neighbor_threshold));
        }
        if self.negative_distance < 1 {
            return fail("negative_distance must be at least 1".into());
        }
        if self.k_sentences < 1 {
            return fail("k_sentences must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.quantifier_prob) {
            return fail(format!("quantifier_prob must lie in [0, 1], got {}", self.quantifier_prob));
        }
        if !(0.0..=1.0).contains(&self.mock_accuracy) {
            return fail(format!("mock_accuracy must lie in [0, 1], got {}", self.mock_accuracy));
        }
        for (u, (lo, hi)) in DurationUnit::ALL.into_iter().zip(self.unit_ranges) {
            if lo < 1 || lo > hi {
                return fail(format!("unit_ranges for {u}: need 1 <= low <= high, got [{lo}, {hi}]"));
            }
        }
        if self.predictor_batch_size < 1 || self.predictor_max_in_flight < 1 {
            return fail("predictor_batch_size and predictor_max_in_flight must be at least 1".into());
        }
        Ok(())
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            unit_ranges: self.unit_ranges,
            quantifiers: self.quantifiers.clone(),
            quantifier_prob: self.quantifier_prob,
            negative_distance: self.negative_distance,
        }
    }

    pub fn remote_config(&self) -> RemoteConfig {
        RemoteConfig {
            endpoint: self.predictor_endpoint.clone(),
            path: self.predictor_path.clone(),
            batch_size: self.predictor_batch_size,
            max_in_flight: self.predictor_max_in_flight,
            retries: self.predictor_retries,
            backoff_ms: self.predictor_backoff_ms,
            timeout_ms: self.predictor_timeout_ms,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

//! Run configuration and its fingerprint.

use std::path::PathBuf;

use reqa_core::bm25::{DEFAULT_B, DEFAULT_K1};
use reqa_core::encode::{DEFAULT_ALPHA, DEFAULT_DIM, DEFAULT_SEED};
use reqa_core::ivf::{DEFAULT_LISTS, DEFAULT_MAX_ITERS, DEFAULT_PROBES};
use reqa_core::metrics::DEFAULT_CUTOFFS;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::sha256_hex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    #[default]
    Squad,
    NqSimplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    #[default]
    HashTfidf,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSettings {
    pub kind: EncoderKind,
    pub dim: usize,
    pub alpha: f32,
    /// Pre-computed answer vectors, for `external`.
    pub answers: Option<PathBuf>,
    /// Pre-computed question vectors, for `external`.
    pub questions: Option<PathBuf>,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self { kind: EncoderKind::HashTfidf, dim: DEFAULT_DIM, alpha: DEFAULT_ALPHA, answers: None, questions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Settings {
    pub enabled: bool,
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Settings {
    fn default() -> Self {
        Self { enabled: true, k1: DEFAULT_K1, b: DEFAULT_B }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnSettings {
    pub enabled: bool,
    pub lists: usize,
    pub probes: usize,
    pub max_iters: usize,
}

impl Default for AnnSettings {
    fn default() -> Self {
        Self { enabled: false, lists: DEFAULT_LISTS, probes: DEFAULT_PROBES, max_iters: DEFAULT_MAX_ITERS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Drives the feature hash and k-means seeding.
    pub seed: u64,
    pub encoder: EncoderSettings,
    pub bm25: Bm25Settings,
    pub ann: AnnSettings,
    pub cutoffs: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: InputFormat::Squad,
            out_dir: None,
            threads: 0,
            seed: DEFAULT_SEED,
            encoder: EncoderSettings::default(),
            bm25: Bm25Settings::default(),
            ann: AnnSettings::default(),
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
        }
    }
}

impl RunConfig {
    /// Applies a JSON document on top of `self`; keys present in `overrides` win.
    pub fn overlay(&self, overrides: &Value) -> Result<RunConfig> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        merge(&mut base, overrides);
        serde_path_to_error::deserialize(base)
            .map_err(|e| Error::Schema { path: format!("config: {}", e.path()), message: e.into_inner().to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(Error::Config("cutoffs must be non-empty and positive".into()));
        }
        if self.ann.lists == 0 || self.ann.probes == 0 {
            return Err(Error::Config("ann.lists and ann.probes must be positive".into()));
        }
        if self.encoder.kind == EncoderKind::External && (self.encoder.answers.is_none() || self.encoder.questions.is_none()) {
            return Err(Error::Config("the external encoder needs encoder.answers and encoder.questions".into()));
        }
        Ok(())
    }

    /// Parameters that affect results. Paths and thread count are left out
    /// so relocating a run or changing parallelism keeps its fingerprint.
    pub fn settings(&self) -> Value {
        serde_json::json!({
            "seed": self.seed,
            "format": self.format,
            "encoder": { "kind": self.encoder.kind, "dim": self.encoder.dim, "alpha": self.encoder.alpha },
            "bm25": { "enabled": self.bm25.enabled, "k1": self.bm25.k1, "b": self.bm25.b },
            "ann": { "enabled": self.ann.enabled, "lists": self.ann.lists, "probes": self.ann.probes, "max_iters": self.ann.max_iters },
            "cutoffs": self.cutoffs,
        })
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(&serde_json::to_vec(&self.settings()).expect("settings serialize"))
    }
}

fn merge(base: &mut Value, overrides: &Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

//! Pipeline configuration: every threshold and seed, read from flat TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backtrans::{DEFAULT_K, DEFAULT_MIN_COSINE, DEFAULT_MIN_INVERSION, DEFAULT_TARGET_FRACTION};
use crate::corpus::SplitFractions;
use crate::judgment::{DEFAULT_AGREEMENT_MIN, RATERS_PER_PAIR};
use crate::lm::DEFAULT_ORDER;
use crate::swap::{DEFAULT_BEAM_SIZE, DEFAULT_LIST_KEEP_FRACTION, DEFAULT_THRESHOLD};
use crate::tagging::DEFAULT_NER_THRESHOLD;
use crate::text::{Casing, FeatureOrder};

pub const CONFIG_ENV: &str = "PAIRFORGE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("{key} = {value} is outside {range}")]
    OutOfRange {
        key: &'static str,
        value: String,
        range: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ner_threshold: f64,
    pub beam: usize,
    pub t: f64,
    pub lm_order: usize,
    pub list_keep_fraction: f64,
    pub k: usize,
    pub min_cosine: f64,
    pub min_inversion: f64,
    pub target_fraction: f64,
    pub agreement_min: usize,
    pub seed: u64,
    /// Casing applied at tokenization, for similarity, alignment and the LM.
    pub casing: Casing,
    /// Features for the back-translation cosine filter.
    pub bt_features: FeatureOrder,
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    /// Put labeled swap pairs in the dataset next to back-translation and
    /// recombined pairs.
    pub include_swap_pairs: bool,
    pub corpus: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub provider: Option<String>,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let splits = SplitFractions::default();
        PipelineConfig {
            ner_threshold: DEFAULT_NER_THRESHOLD,
            beam: DEFAULT_BEAM_SIZE,
            t: DEFAULT_THRESHOLD,
            lm_order: DEFAULT_ORDER,
            list_keep_fraction: DEFAULT_LIST_KEEP_FRACTION,
            k: DEFAULT_K,
            min_cosine: DEFAULT_MIN_COSINE,
            min_inversion: DEFAULT_MIN_INVERSION,
            target_fraction: DEFAULT_TARGET_FRACTION,
            agreement_min: DEFAULT_AGREEMENT_MIN,
            seed: 0,
            casing: Casing::Lower,
            bt_features: FeatureOrder::Unigram,
            train_fraction: splits.train,
            dev_fraction: splits.dev,
            test_fraction: splits.test,
            include_swap_pairs: true,
            corpus: None,
            tags: None,
            lm: None,
            provider: None,
            output_dir: None,
        }
    }
}

fn check_unit(key: &'static str, v: f64, lo_open: bool) -> Result<(), ConfigError> {
    let ok = v.is_finite() && v <= 1.0 && if lo_open { v > 0.0 } else { v >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            key,
            value: v.to_string(),
            range: if lo_open { "(0, 1]" } else { "[0, 1]" },
        })
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Explicit path, else `PAIRFORGE_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_unit("ner_threshold", self.ner_threshold, false)?;
        check_unit("list_keep_fraction", self.list_keep_fraction, false)?;
        check_unit("min_cosine", self.min_cosine, false)?;
        check_unit("min_inversion", self.min_inversion, false)?;
        check_unit("target_fraction", self.target_fraction, true)?;
        check_unit("train_fraction", self.train_fraction, false)?;
        check_unit("dev_fraction", self.dev_fraction, false)?;
        check_unit("test_fraction", self.test_fraction, false)?;
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(ConfigError::OutOfRange {
                key: "t",
                value: self.t.to_string(),
                range: "[0, inf)",
            });
        }
        let ints: [(&'static str, usize, usize, usize, &'static str); 4] = [
            ("beam", self.beam, 1, 100_000, "[1, 100000]"),
            ("lm_order", self.lm_order, 1, 10, "[1, 10]"),
            ("k", self.k, 1, 100, "[1, 100]"),
            ("agreement_min", self.agreement_min, 3, RATERS_PER_PAIR, "[3, 5]"),
        ];
        for (key, v, lo, hi, range) in ints {
            if v < lo || v > hi {
                return Err(ConfigError::OutOfRange {
                    key,
                    value: v.to_string(),
                    range,
                });
            }
        }
        self.split_fractions()
            .validate()
            .map_err(|_| ConfigError::OutOfRange {
                key: "train_fraction + dev_fraction + test_fraction",
                value: (self.train_fraction + self.dev_fraction + self.test_fraction).to_string(),
                range: "{1}",
            })
    }

    pub fn split_fractions(&self) -> SplitFractions {
        SplitFractions {
            train: self.train_fraction,
            dev: self.dev_fraction,
            test: self.test_fraction,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = PipelineConfig::default();
        assert_eq!((d.ner_threshold, d.beam, d.t, d.k), (0.95, 100, 3.0, 5));
        assert_eq!((d.min_cosine, d.min_inversion, d.target_fraction, d.agreement_min), (0.9, 0.02, 0.5, 4));
        d.validate().unwrap();
        assert_eq!(PipelineConfig::from_toml(&d.to_toml()).unwrap(), d);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), d);
        assert_eq!(d.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn overrides_and_rejections() {
        let c = PipelineConfig::from_toml("beam = 10\nseed = 7\nt = 2.5\n").unwrap();
        assert_eq!((c.beam, c.seed, c.t), (10, 7, 2.5));
        assert_ne!(c.hash(), PipelineConfig::default().hash());
        let c = PipelineConfig::from_toml("casing = \"preserve\"\nbt_features = \"unigram_bigram\"\n").unwrap();
        assert_eq!((c.casing, c.bt_features), (Casing::Preserve, FeatureOrder::UnigramBigram));
        assert!(matches!(PipelineConfig::from_toml("casing = \"upper\""), Err(ConfigError::Parse(_))));
        assert!(matches!(PipelineConfig::from_toml("beem = 10"), Err(ConfigError::Parse(_))));
        assert!(matches!(
            PipelineConfig::from_toml("min_cosine = 1.5"),
            Err(ConfigError::OutOfRange { key: "min_cosine", .. })
        ));
        assert!(matches!(PipelineConfig::from_toml("beam = 0"), Err(ConfigError::OutOfRange { key: "beam", .. })));
        assert!(matches!(PipelineConfig::from_toml("target_fraction = 0.0"), Err(ConfigError::OutOfRange { .. })));
        assert!(matches!(PipelineConfig::from_toml("dev_fraction = 0.3"), Err(ConfigError::OutOfRange { .. })));
        assert!(matches!(
            PipelineConfig::load(Path::new("/nonexistent/pairforge.toml")),
            Err(ConfigError::Io { .. })
        ));
    }
}

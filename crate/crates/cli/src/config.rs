//! Pipeline configuration, read from a TOML file with one table per stage.
//!
//! ```toml
//! [data]
//! corpus = "corpus.conll"
//! gazetteer = "entities.tsv"
//!
//! [sampler]
//! p = 0.9
//!
//! [model]
//! features = "word+pos+dep+ne"
//! dim_lstm = 450
//!
//! [train.argument]
//! epochs = 10
//!
//! [extract]
//! threshold = 0.75
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use oie_core::augment::LinearityRule;
use oie_core::extractor::DEFAULT_THRESHOLD;
use oie_core::neural::{FeatureSet, ModelConfig, Task, TrainConfig};
use oie_core::sampler::SamplerConfig;
use oie_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub bootstrap: BootstrapConfig,
    pub augment: AugmentConfig,
    pub sampler: SamplerConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub extract: ExtractConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CoNLL corpus used for bootstrapping.
    pub corpus: Option<PathBuf>,
    /// Corpus searched for seed matches; defaults to `corpus`.
    pub augment_corpus: Option<PathBuf>,
    /// Noun pattern file; the built-in inventory when absent.
    pub patterns: Option<PathBuf>,
    /// Surface-to-entity TSV.
    pub gazetteer: Option<PathBuf>,
    /// Annotation endpoint of a remote entity linker.
    pub linker_endpoint: Option<String>,
    pub linker_confidence: f64,
    /// Pretrained word vectors in word2vec text format.
    pub word_vectors: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            corpus: None,
            augment_corpus: None,
            patterns: None,
            gazetteer: None,
            linker_endpoint: None,
            linker_confidence: 0.5,
            word_vectors: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Build verb tuples from SRL frames.
    pub verb: bool,
    /// Build noun tuples from the noun patterns.
    pub noun: bool,
    /// Keep only the most confident sentences for each kind of tuple.
    pub top_k: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            verb: true,
            noun: true,
            top_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enabled: bool,
    pub linearity: LinearityRule,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            enabled: true,
            linearity: LinearityRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Active input features, e.g. `word+pos`.
    pub features: String,
    pub dim_word: usize,
    pub dim_pos: usize,
    pub dim_dep: usize,
    pub dim_ne: usize,
    pub dim_lstm: usize,
    pub dim_higher: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        ModelSection {
            features: d.features.to_string(),
            dim_word: d.dim_word,
            dim_pos: d.dim_pos,
            dim_dep: d.dim_dep,
            dim_ne: d.dim_ne,
            dim_lstm: d.dim_lstm,
            dim_higher: d.dim_higher,
        }
    }
}

impl ModelSection {
    pub fn feature_set(&self) -> Result<FeatureSet> {
        self.features.parse().map_err(Error::Config)
    }

    pub fn model_config(&self, task: Task) -> Result<ModelConfig> {
        Ok(ModelConfig {
            task,
            features: self.feature_set()?,
            dim_word: self.dim_word,
            dim_pos: self.dim_pos,
            dim_dep: self.dim_dep,
            dim_ne: self.dim_ne,
            dim_lstm: self.dim_lstm,
            dim_higher: self.dim_higher,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub argument: TrainConfig,
    pub preposition: TrainConfig,
}

impl TrainSection {
    pub fn for_task(&self, task: Task) -> &TrainConfig {
        match task {
            Task::Argument => &self.argument,
            Task::Preposition => &self.preposition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub threshold: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

fn resolve(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {}", path.display(), e)))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let d = &mut config.data;
        for p in [&mut d.corpus, &mut d.augment_corpus, &mut d.patterns, &mut d.gazetteer, &mut d.word_vectors] {
            resolve(base, p);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.extract.threshold) {
            return Err(Error::Config(format!(
                "threshold {} must lie in [0, 1]",
                self.extract.threshold
            )));
        }
        self.sampler.validate()?;
        self.model.feature_set()?;
        self.train.argument.validate()?;
        self.train.preposition.validate()?;
        Ok(())
    }

    /// Overrides every seed in the configuration.
    pub fn set_seed(&mut self, seed: u64) {
        self.sampler.seed = seed;
        self.train.argument.seed = seed;
        self.train.preposition.seed = seed;
    }
}

/// Fails with a configuration error unless `path` is an existing file.
pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} {} does not exist", what, path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_settings() {
        let c = PipelineConfig::parse("").unwrap();
        assert_eq!(c.sampler.p, 0.9);
        assert_eq!(c.extract.threshold, 0.75);
        assert_eq!(c.model.dim_lstm, 450);
        assert_eq!(c.train.argument.dropout, 0.5);
        assert_eq!(c.train.argument.adam.beta2, 0.999);
        assert!(c.augment.enabled);
    }

    #[test]
    fn sections_override_defaults() {
        let c = PipelineConfig::parse(
            "[sampler]\np = 0.5\n[model]\nfeatures = \"word\"\ndim_lstm = 8\n[train.preposition]\nepochs = 3\n[augment]\nlinearity = \"ancestor-chain\"\n",
        )
        .unwrap();
        assert_eq!(c.sampler.p, 0.5);
        assert_eq!(c.model.feature_set().unwrap(), FeatureSet::word_only());
        assert_eq!(c.model.model_config(Task::Argument).unwrap().dim_lstm, 8);
        assert_eq!(c.train.preposition.epochs, 3);
        assert_eq!(c.augment.linearity, LinearityRule::AncestorChain);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        for text in [
            "[extract]\nthreshold = 1.5\n",
            "[sampler]\np = 1.0\n",
            "[model]\nfeatures = \"lemma\"\n",
            "[train.argument]\ndropout = 1.0\n",
            "[unknown]\nx = 1\n",
            "[data]\ncorpus = 3\n",
        ] {
            assert!(matches!(PipelineConfig::parse(text), Err(Error::Config(_))), "{}", text);
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "[data]\ncorpus = \"c.conll\"\ngazetteer = \"/abs/g.tsv\"\n").unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.data.corpus.unwrap(), dir.path().join("c.conll"));
        assert_eq!(c.data.gazetteer.unwrap(), PathBuf::from("/abs/g.tsv"));
    }
}

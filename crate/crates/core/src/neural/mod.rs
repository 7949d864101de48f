//! Path classifiers: embeddings, a bi-directional peephole LSTM,
//! max-over-time pooling and a softmax head, trained with ADAM.
//!
//! Two heads share the recurrent part. The argument head adds a tanh layer
//! before the softmax; the preposition head connects the pooled vector
//! directly to the softmax.

mod checkpoint;
mod embedding;
mod lstm;
mod network;
mod optim;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use self::embedding::{
    embed_node, feature_value, read_word2vec_text, EmbeddingTable, EmbeddingTables, Vocabulary, WordVectors,
    INIT_RANGE, UNK,
};
pub use self::lstm::{bi_sum, lstm_backward_dir, lstm_forward, max_over_time, Gate, LstmDirectionParams};
pub use self::network::{
    cross_entropy, head_forward, softmax, ForwardCache, Gradients, NetworkParams, PathClassifier,
};
pub use self::optim::{adam_update, apply_dropout, Adam, AdamConfig};
pub use self::train::{batch_gradients, build_vocabularies, evaluate, train, EpochStats, Example, TrainConfig, TrainLog};

/// Which classifier a network implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// arg1 / arg2 / argN / null over path(rel, arg).
    Argument,
    /// Preposition lemma (or NONE) between rel and an argument.
    Preposition,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Argument => "argument",
            Task::Preposition => "preposition",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "argument" => Ok(Task::Argument),
            "preposition" => Ok(Task::Preposition),
            _ => Err(format!("unknown task '{}' (expected argument or preposition)", s)),
        }
    }
}

/// Input feature types, in concatenation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Feature {
    Word = 0,
    Pos = 1,
    Dep = 2,
    Ne = 3,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Word, Feature::Pos, Feature::Dep, Feature::Ne];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Word => "word",
            Feature::Pos => "pos",
            Feature::Dep => "dep",
            Feature::Ne => "ne",
        }
    }
}

/// Switches for feature ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet {
    pub word: bool,
    pub pos: bool,
    pub dep: bool,
    pub ne: bool,
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet {
            word: true,
            pos: true,
            dep: true,
            ne: true,
        }
    }
}

impl FeatureSet {
    pub fn word_only() -> Self {
        FeatureSet {
            word: true,
            pos: false,
            dep: false,
            ne: false,
        }
    }

    pub fn contains(&self, feature: Feature) -> bool {
        match feature {
            Feature::Word => self.word,
            Feature::Pos => self.pos,
            Feature::Dep => self.dep,
            Feature::Ne => self.ne,
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Feature::ALL
            .iter()
            .filter(|&&feat| self.contains(feat))
            .map(|feat| feat.name())
            .collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    /// Parses `word+pos+dep+ne` style lists.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = FeatureSet {
            word: false,
            pos: false,
            dep: false,
            ne: false,
        };
        for part in s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "word" => set.word = true,
                "pos" => set.pos = true,
                "dep" => set.dep = true,
                "ne" => set.ne = true,
                _ => return Err(format!("unknown feature '{}'", part)),
            }
        }
        if set == (FeatureSet { word: false, pos: false, dep: false, ne: false }) {
            return Err("at least one feature must be enabled".into());
        }
        Ok(set)
    }
}

/// Shape of a network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub task: Task,
    pub features: FeatureSet,
    pub dim_word: usize,
    pub dim_pos: usize,
    pub dim_dep: usize,
    pub dim_ne: usize,
    /// Hidden size of each LSTM direction.
    pub dim_lstm: usize,
    /// Width of the tanh layer of the argument head.
    pub dim_higher: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            task: Task::Argument,
            features: FeatureSet::default(),
            dim_word: 300,
            dim_pos: 50,
            dim_dep: 50,
            dim_ne: 50,
            dim_lstm: 450,
            dim_higher: 50,
        }
    }
}

impl ModelConfig {
    /// Embedding width of a feature, 0 when the feature is switched off.
    pub fn feature_dim(&self, feature: Feature) -> usize {
        if !self.features.contains(feature) {
            return 0;
        }
        match feature {
            Feature::Word => self.dim_word,
            Feature::Pos => self.dim_pos,
            Feature::Dep => self.dim_dep,
            Feature::Ne => self.dim_ne,
        }
    }

    pub fn input_dim(&self) -> usize {
        Feature::ALL.iter().map(|&f| self.feature_dim(f)).sum()
    }
}

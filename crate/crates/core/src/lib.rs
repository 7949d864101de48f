//! Open information extraction over shortest dependency paths.
//!
//! The crate covers both halves of the pipeline:
//!
//! * building a labeled training set without manual annotation, from SRL
//!   frames and noun patterns ([`bootstrap`]), distant supervision over linked
//!   entities ([`augment`]) and feedback negative sampling ([`sampler`]);
//! * training bi-directional peephole-LSTM classifiers over dependency paths
//!   ([`neural`]) and turning their predictions into scored triples
//!   ([`extractor`]).

pub mod augment;
pub mod bootstrap;
pub mod corpus;
pub mod dpath;
pub mod error;
pub mod extractor;
pub mod neural;
pub mod sampler;

pub use crate::corpus::{build_tree, read_corpus, AnnotatedSentence, DependencyTree, Token};
pub use crate::dpath::{shortest_path, DepPath, PathNode};
pub use crate::error::{Error, Result};

//! Labelled training paths: positives from tuples and seed matches, and
//! negatives chosen by feedback negative sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{ArgRole, SeedMatch, MAX_VERB_PATH_NODES};
use crate::bootstrap::{ExtractionTuple, RelKind, DEFAULT_NOUN_PREPOSITION};
use crate::corpus::{build_tree, AnnotatedSentence, DependencyTree};
use crate::dpath::{shortest_path, DepPath};
use crate::error::{Error, Result};
use crate::neural::{Example, PathClassifier, Task};

/// Label of negative argument paths.
pub const NULL_LABEL: &str = "null";
/// Preposition label of paths without a preposition.
pub const NO_PREPOSITION: &str = "NONE";
/// Output classes of the final argument classifier.
pub const ARGUMENT_CLASSES: [&str; 4] = [NULL_LABEL, "arg1", "arg2", "argN"];
/// Output classes of the positives-only model used for negative sampling.
pub const POSITIVE_CLASSES: [&str; 3] = ["arg1", "arg2", "argN"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Bootstrap,
    Augmented,
    Negative,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Bootstrap => "bootstrap",
            Provenance::Augmented => "augmented",
            Provenance::Negative => "negative",
        })
    }
}

/// One labelled path, serialized as a JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub sentence_id: String,
    pub task: Task,
    pub path: DepPath,
    pub label: String,
    pub provenance: Provenance,
    /// Score of the positives-only model, for negatives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl TrainingSample {
    pub fn rel_index(&self) -> usize {
        self.path.rel_index
    }

    pub fn arg_index(&self) -> usize {
        self.path.arg_index
    }

    pub fn to_example(&self) -> Example {
        Example {
            path: self.path.clone(),
            class: self.label.clone(),
        }
    }
}

/// How negatives are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Score a pool path must exceed to become a negative.
    pub p: f64,
    /// Keep at most this many negatives per positive; `None` keeps all.
    pub negative_ratio: Option<f64>,
    /// Node limit (exclusive) for pool paths from verbal endpoints.
    pub max_verb_path_nodes: usize,
    /// Seed for training the positives-only model.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            p: 0.9,
            negative_ratio: Some(2.0),
            max_verb_path_nodes: MAX_VERB_PATH_NODES,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold(self.p)?;
        if let Some(r) = self.negative_ratio {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("negative ratio {} must be a non-negative number", r)));
            }
        }
        Ok(())
    }
}

fn check_threshold(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold p = {} must lie in (0, 1)", p)))
    }
}

/// Keyed collection that keeps the first sample per (sentence, task, rel, arg).
#[derive(Default)]
struct SampleSet {
    samples: Vec<TrainingSample>,
    seen: BTreeSet<(String, Task, usize, usize)>,
}

impl SampleSet {
    fn push(&mut self, tree: &DependencyTree<'_>, task: Task, rel: usize, arg: usize, label: &str, provenance: Provenance) {
        let id = &tree.sentence().id;
        let key = (id.clone(), task, rel, arg);
        if self.seen.contains(&key) {
            return;
        }
        match shortest_path(tree, rel, arg) {
            Ok(path) if rel != arg => {
                self.seen.insert(key);
                self.samples.push(TrainingSample {
                    sentence_id: id.clone(),
                    task,
                    path,
                    label: label.to_string(),
                    provenance,
                    score: None,
                });
            }
            _ => warn!("sentence {}: cannot label path({}, {}), skipped", id, rel, arg),
        }
    }
}

fn prep_label(prep: Option<&str>) -> &str {
    prep.unwrap_or(NO_PREPOSITION)
}

/// Positive samples for both tasks.
///
/// Tuples label path(rel, arg1), path(rel, arg2) and path(rel, argN) with
/// their role. Preposition samples come from argN paths and from the arg2
/// paths of noun tuples. Seed matches label the paths to their two
/// headwords with the roles the arguments had in the seed. Records whose
/// sentence is missing or whose indices do not resolve are logged and
/// skipped; the first label given to a path wins.
pub fn label_positives(
    sentences: &BTreeMap<String, AnnotatedSentence>,
    tuples: &[ExtractionTuple],
    augmented: &[SeedMatch],
) -> Vec<TrainingSample> {
    let mut set = SampleSet::default();
    for tuple in tuples {
        let tree = match sentences.get(&tuple.sentence_id).map(build_tree) {
            Some(Ok(t)) => t,
            _ => {
                warn!("tuple for unknown or invalid sentence {} skipped", tuple.sentence_id);
                continue;
            }
        };
        let bootstrap = Provenance::Bootstrap;
        if let Some(a1) = tuple.arg1 {
            set.push(&tree, Task::Argument, tuple.rel, a1, "arg1", bootstrap);
        }
        if let Some(a2) = &tuple.arg2 {
            set.push(&tree, Task::Argument, tuple.rel, a2.index, "arg2", bootstrap);
            if tuple.rel_kind == RelKind::Noun {
                let prep = a2.prep.as_deref().unwrap_or(DEFAULT_NOUN_PREPOSITION);
                set.push(&tree, Task::Preposition, tuple.rel, a2.index, prep, bootstrap);
            }
        }
        if tuple.rel_kind == RelKind::Verb {
            for an in &tuple.arg_ns {
                set.push(&tree, Task::Argument, tuple.rel, an.index, "argN", bootstrap);
                set.push(&tree, Task::Preposition, tuple.rel, an.index, prep_label(an.prep.as_deref()), bootstrap);
            }
        }
    }
    for m in augmented {
        let tree = match sentences.get(&m.sentence_id).map(build_tree) {
            Some(Ok(t)) => t,
            _ => {
                warn!("seed match for unknown or invalid sentence {} skipped", m.sentence_id);
                continue;
            }
        };
        let augmented = Provenance::Augmented;
        for (arg, role) in [(m.arg1, m.seed.arg1.role), (m.arg2, m.seed.arg2.role)] {
            set.push(&tree, Task::Argument, m.rel, arg, &role.to_string(), augmented);
        }
        let second = m.seed.arg2.role;
        let prep_task = second == ArgRole::ArgN || (second == ArgRole::Arg2 && m.seed.rel.kind == RelKind::Noun);
        if prep_task {
            let prep = match (m.seed.rel.kind, m.seed.rel.prep.as_deref()) {
                (RelKind::Noun, None) => DEFAULT_NOUN_PREPOSITION,
                (_, p) => prep_label(p),
            };
            set.push(&tree, Task::Preposition, m.rel, m.arg2, prep, augmented);
        }
    }
    set.samples
}

/// Candidate pool of one sentence for negative sampling.
///
/// Relation endpoints are the verbs of the sentence, the relation headwords
/// of its positive argument samples and the non-punctuation tree neighbours
/// of those headwords. Argument endpoints are content words. Paths from
/// verbal endpoints must have fewer than `max_verb_nodes` nodes; pairs that
/// are already positive are left out. Paths come out ordered by endpoint
/// indices.
pub fn enumerate_non_positive(
    sentence: &AnnotatedSentence,
    positives: &[TrainingSample],
    max_verb_nodes: usize,
) -> Result<Vec<DepPath>> {
    let tree = build_tree(sentence)?;
    let mine: Vec<&TrainingSample> = positives
        .iter()
        .filter(|s| s.sentence_id == sentence.id && s.task == Task::Argument)
        .collect();
    if mine.is_empty() {
        return Ok(Vec::new());
    }
    let positive_pairs: BTreeSet<(usize, usize)> = mine.iter().map(|s| (s.rel_index(), s.arg_index())).collect();

    let mut rels: BTreeSet<usize> = (1..=tree.len()).filter(|&i| tree.token(i).is_verbal()).collect();
    for s in &mine {
        let r = s.rel_index();
        rels.insert(r);
        let neighbours = tree.parent(r).into_iter().chain(tree.children(r).iter().copied());
        rels.extend(neighbours.filter(|&n| !tree.token(n).is_punctuation()));
    }

    let mut pool = Vec::new();
    for &r in &rels {
        let verbal = tree.token(r).is_verbal();
        for w in 1..=tree.len() {
            if w == r || !tree.token(w).is_content_word() || positive_pairs.contains(&(r, w)) {
                continue;
            }
            let path = shortest_path(&tree, r, w)?;
            if verbal && path.len() >= max_verb_nodes {
                continue;
            }
            pool.push(path);
        }
    }
    Ok(pool)
}

/// A pool path together with its sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub sentence_id: String,
    pub path: DepPath,
}

/// Pools of all sentences that have positive samples, in corpus order.
pub fn build_pool(
    sentences: &[AnnotatedSentence],
    positives: &[TrainingSample],
    max_verb_nodes: usize,
) -> Result<Vec<PoolEntry>> {
    let mut by_sentence: BTreeMap<&str, Vec<TrainingSample>> = BTreeMap::new();
    for s in positives {
        by_sentence.entry(s.sentence_id.as_str()).or_default().push(s.clone());
    }
    let pools: Vec<Result<Vec<PoolEntry>>> = sentences
        .par_iter()
        .map(|sentence| match by_sentence.get(sentence.id.as_str()) {
            None => Ok(Vec::new()),
            Some(pos) => Ok(enumerate_non_positive(sentence, pos, max_verb_nodes)?
                .into_iter()
                .map(|path| PoolEntry {
                    sentence_id: sentence.id.clone(),
                    path,
                })
                .collect()),
        })
        .collect();
    let mut out = Vec::new();
    for p in pools {
        out.extend(p?);
    }
    Ok(out)
}

/// Feedback negative sampling: every pool path whose highest class score
/// under the positives-only model is strictly greater than `p` becomes a
/// `null` sample, in pool order.
pub fn feedback_negative_sampling<M>(model: &M, pool: &[PoolEntry], p: f64) -> Result<Vec<TrainingSample>>
where
    M: PathClassifier + Sync + ?Sized,
{
    check_threshold(p)?;
    let classes: BTreeSet<&str> = model.classes().iter().map(String::as_str).collect();
    let expected: BTreeSet<&str> = POSITIVE_CLASSES.into_iter().collect();
    if classes != expected {
        return Err(Error::Config(format!(
            "negative sampling needs a model over {:?}, got {:?}",
            POSITIVE_CLASSES,
            model.classes()
        )));
    }
    let scores: Vec<f64> = pool
        .par_iter()
        .map(|entry| model.predict(&entry.path).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(pool
        .iter()
        .zip(scores)
        .filter(|(_, score)| *score > p)
        .map(|(entry, score)| TrainingSample {
            sentence_id: entry.sentence_id.clone(),
            task: Task::Argument,
            path: entry.path.clone(),
            label: NULL_LABEL.to_string(),
            provenance: Provenance::Negative,
            score: Some(score),
        })
        .collect())
}

/// Keeps at most `ratio × positives` negatives, highest scores first and
/// earlier samples on ties. The survivors keep their original order.
pub fn cap_negatives(negatives: Vec<TrainingSample>, positives: usize, ratio: f64) -> Vec<TrainingSample> {
    let cap = (ratio * positives as f64).floor() as usize;
    if negatives.len() <= cap {
        return negatives;
    }
    let mut ranked: Vec<usize> = (0..negatives.len()).collect();
    ranked.sort_by(|&a, &b| {
        let sa = negatives[a].score.unwrap_or(0.0);
        let sb = negatives[b].score.unwrap_or(0.0);
        sb.total_cmp(&sa).then(a.cmp(&b))
    });
    let keep: BTreeSet<usize> = ranked.into_iter().take(cap).collect();
    negatives
        .into_iter()
        .enumerate()
        .filter(|(k, _)| keep.contains(k))
        .map(|(_, s)| s)
        .collect()
}

/// Preposition classes present in `samples`: `NONE` first, then the rest
/// sorted.
pub fn preposition_classes(samples: &[TrainingSample]) -> Vec<String> {
    let preps: BTreeSet<&str> = samples
        .iter()
        .filter(|s| s.task == Task::Preposition && s.label != NO_PREPOSITION)
        .map(|s| s.label.as_str())
        .collect();
    std::iter::once(NO_PREPOSITION)
        .chain(preps)
        .map(str::to_string)
        .collect()
}

pub fn write_samples<W: Write>(writer: &mut W, samples: &[TrainingSample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut *writer, s)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<Vec<TrainingSample>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TrainingSample =
            serde_json::from_str(&line).map_err(|e| Error::parse(k + 1, format!("invalid sample: {}", e)))?;
        if sample.path.is_empty() {
            return Err(Error::parse(k + 1, "sample with an empty path"));
        }
        out.push(sample);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpath::{Edge, PathNode};

    struct Fixed {
        classes: Vec<String>,
        scores: BTreeMap<usize, f64>,
    }

    impl Fixed {
        fn new(scores: &[(usize, f64)]) -> Self {
            Fixed {
                classes: POSITIVE_CLASSES.iter().map(|c| c.to_string()).collect(),
                scores: scores.iter().copied().collect(),
            }
        }
    }

    impl PathClassifier for Fixed {
        fn classes(&self) -> &[String] {
            &self.classes
        }

        fn predict(&self, path: &DepPath) -> Vec<f64> {
            let top = self.scores.get(&path.arg_index).copied().unwrap_or(0.4);
            vec![top, (1.0 - top) / 2.0, (1.0 - top) / 2.0]
        }
    }

    fn entry(arg: usize) -> PoolEntry {
        PoolEntry {
            sentence_id: "s".into(),
            path: DepPath {
                rel_index: 1,
                arg_index: arg,
                nodes: vec![PathNode {
                    index: arg,
                    form: "w".into(),
                    lemma: "w".into(),
                    pos: "NN".into(),
                    ne: "O".into(),
                    edge: Edge::Start,
                }],
            },
        }
    }

    #[test]
    fn empty_pool_gives_nothing() {
        assert!(feedback_negative_sampling(&Fixed::new(&[]), &[], 0.9).unwrap().is_empty());
    }

    #[test]
    fn selection_is_strict() {
        let model = Fixed::new(&[(2, 0.95), (3, 0.90)]);
        let pool = vec![entry(2), entry(3)];
        let out = feedback_negative_sampling(&model, &pool, 0.9).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].arg_index(), 2);
        assert_eq!(out[0].label, NULL_LABEL);
        assert_eq!(out[0].provenance, Provenance::Negative);
    }

    #[test]
    fn wrong_class_set_is_a_config_error() {
        let mut model = Fixed::new(&[]);
        model.classes.insert(0, NULL_LABEL.into());
        assert!(matches!(
            feedback_negative_sampling(&model, &[entry(2)], 0.9),
            Err(Error::Config(_))
        ));
        assert!(feedback_negative_sampling(&Fixed::new(&[]), &[entry(2)], 1.0).is_err());
        assert!(feedback_negative_sampling(&Fixed::new(&[]), &[entry(2)], 0.0).is_err());
    }

    #[test]
    fn cap_prefers_high_scores_and_keeps_order() {
        let model = Fixed::new(&[(2, 0.91), (3, 0.99), (4, 0.95), (5, 0.99)]);
        let pool: Vec<PoolEntry> = (2..=5).map(entry).collect();
        let neg = feedback_negative_sampling(&model, &pool, 0.9).unwrap();
        let kept = cap_negatives(neg.clone(), 1, 2.0);
        let args: Vec<usize> = kept.iter().map(|s| s.arg_index()).collect();
        assert_eq!(args, vec![3, 5]);
        assert_eq!(cap_negatives(neg.clone(), 10, 2.0), neg);
        assert!(cap_negatives(neg, 0, 2.0).is_empty());
    }

    #[test]
    fn preposition_classes_start_with_none() {
        let mk = |label: &str, task| TrainingSample {
            sentence_id: "s".into(),
            task,
            path: entry(2).path,
            label: label.into(),
            provenance: Provenance::Bootstrap,
            score: None,
        };
        let samples = vec![
            mk("of", Task::Preposition),
            mk("arg1", Task::Argument),
            mk("NONE", Task::Preposition),
            mk("in", Task::Preposition),
            mk("of", Task::Preposition),
        ];
        assert_eq!(preposition_classes(&samples), ["NONE", "in", "of"]);
        assert_eq!(preposition_classes(&[]), ["NONE"]);
    }

    #[test]
    fn samples_round_trip_as_json_lines() {
        let model = Fixed::new(&[(2, 0.97)]);
        let neg = feedback_negative_sampling(&model, &[entry(2)], 0.5).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &neg).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), neg);
        assert!(matches!(
            read_samples("{}\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_positive_input() {
        assert!(label_positives(&BTreeMap::new(), &[], &[]).is_empty());
    }
}

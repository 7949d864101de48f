//! Training-set augmentation by seed-based distant supervision.
//!
//! Tuples are split into binary candidates, filtered down to seeds whose
//! arguments are linked proper nouns or cardinals, and every seed is then
//! looked up in an entity index over the corpus to find new sentences that
//! mention both arguments and the relation lemma.

mod linker;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

pub use self::linker::{parse_annotate_response, EntityLinker, GazetteerLinker, LinkedMention, RemoteLinker};
use crate::bootstrap::{ExtractionTuple, RelKind};
use crate::corpus::{build_tree, AnnotatedSentence, DependencyTree, Token};
use crate::dpath::shortest_path;
use crate::error::Result;

/// Relation lemmas never accepted as seeds.
pub const STOP_RELATIONS: [&str; 2] = ["be", "do"];

/// Verb-mediated matches need rel-argument paths shorter than this many nodes.
pub const MAX_VERB_PATH_NODES: usize = 7;

/// Position an argument held in its source tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgRole {
    Arg1,
    Arg2,
    #[serde(rename = "argN")]
    ArgN,
}

impl fmt::Display for ArgRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArgRole::Arg1 => "arg1",
            ArgRole::Arg2 => "arg2",
            ArgRole::ArgN => "argN",
        })
    }
}

/// A binary ⟨first; rel; second⟩ candidate cut out of a tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTriple {
    pub sentence_id: String,
    pub rel: usize,
    pub rel_lemma: String,
    pub rel_kind: RelKind,
    /// Preposition attached to the second argument.
    pub prep: Option<String>,
    pub first: (ArgRole, usize),
    pub second: (ArgRole, usize),
}

/// Splits a tuple into binary candidates: ⟨arg1; rel; arg2⟩ plus, for verb
/// tuples, ⟨arg1; rel; argN⟩ and ⟨arg2; rel; argN⟩ for every argN.
pub fn to_binary_triples(tuple: &ExtractionTuple) -> Vec<CandidateTriple> {
    let make = |first: (ArgRole, usize), second: (ArgRole, usize), prep: &Option<String>| CandidateTriple {
        sentence_id: tuple.sentence_id.clone(),
        rel: tuple.rel,
        rel_lemma: tuple.rel_lemma.clone(),
        rel_kind: tuple.rel_kind,
        prep: prep.clone(),
        first,
        second,
    };
    let mut out = Vec::new();
    if let (Some(a1), Some(a2)) = (tuple.arg1, &tuple.arg2) {
        out.push(make((ArgRole::Arg1, a1), (ArgRole::Arg2, a2.index), &a2.prep));
    }
    if tuple.rel_kind == RelKind::Verb {
        for an in &tuple.arg_ns {
            if let Some(a1) = tuple.arg1 {
                out.push(make((ArgRole::Arg1, a1), (ArgRole::ArgN, an.index), &an.prep));
            }
            if let Some(a2) = &tuple.arg2 {
                out.push(make((ArgRole::Arg2, a2.index), (ArgRole::ArgN, an.index), &an.prep));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgKind {
    ProperNoun,
    Cardinal,
}

impl ArgKind {
    pub fn of(token: &Token) -> Option<ArgKind> {
        if token.is_proper_noun() {
            Some(ArgKind::ProperNoun)
        } else if token.is_cardinal() {
            Some(ArgKind::Cardinal)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedArg {
    pub surface: String,
    pub head_lemma: String,
    pub kind: ArgKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
    /// Role of this argument in the source tuple.
    pub role: ArgRole,
}

impl SeedArg {
    fn key(&self) -> IndexKey {
        match self.kind {
            ArgKind::ProperNoun => IndexKey::Entity(self.entity.clone().unwrap_or_default()),
            ArgKind::Cardinal => IndexKey::Cardinal(self.surface.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRel {
    pub lemma: String,
    pub kind: RelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<String>,
}

/// A binary seed whose arguments are linked proper nouns or cardinals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTriple {
    pub arg1: SeedArg,
    pub rel: SeedRel,
    pub arg2: SeedArg,
    /// Id of the sentence the seed was extracted from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl fmt::Display for SeedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rel.prep {
            Some(p) => write!(f, "⟨{}; {} {}; {}⟩", self.arg1.surface, self.rel.lemma, p, self.arg2.surface),
            None => write!(f, "⟨{}; {}; {}⟩", self.arg1.surface, self.rel.lemma, self.arg2.surface),
        }
    }
}

/// Headword of a mention span: the token whose head lies outside the span
/// (the rightmost one if there are several).
fn mention_head(tree: &DependencyTree<'_>, mention: &LinkedMention) -> usize {
    (mention.start..=mention.end)
        .rev()
        .find(|&i| match tree.parent(i) {
            Some(p) => !mention.contains(p),
            None => true,
        })
        .unwrap_or(mention.end)
}

fn seed_arg(
    tree: &DependencyTree<'_>,
    mentions: &[LinkedMention],
    role: ArgRole,
    index: usize,
) -> std::result::Result<SeedArg, String> {
    let token = tree.token(index);
    match ArgKind::of(token) {
        Some(ArgKind::Cardinal) => Ok(SeedArg {
            surface: token.form.clone(),
            head_lemma: token.lemma.to_lowercase(),
            kind: ArgKind::Cardinal,
            entity: None,
            role,
        }),
        Some(ArgKind::ProperNoun) => {
            let mention = mentions
                .iter()
                .find(|m| m.contains(index))
                .ok_or_else(|| format!("proper noun '{}' is not linked", token.form))?;
            let surface: Vec<&str> = (mention.start..=mention.end)
                .map(|i| tree.token(i).form.as_str())
                .collect();
            Ok(SeedArg {
                surface: surface.join(" "),
                head_lemma: token.lemma.to_lowercase(),
                kind: ArgKind::ProperNoun,
                entity: Some(mention.entity.clone()),
                role,
            })
        }
        None => Err(format!(
            "'{}' ({}) is neither a proper noun nor a cardinal",
            token.form, token.pos
        )),
    }
}

/// Keeps candidates whose arguments are linked proper nouns or cardinals
/// and whose relation lemma is not `be` or `do`.
pub fn filter_seeds(
    candidates: &[CandidateTriple],
    sentence: &AnnotatedSentence,
    linker: &dyn EntityLinker,
) -> Vec<SeedTriple> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let tree = match build_tree(sentence) {
        Ok(t) => t,
        Err(e) => {
            warn!("sentence {}: dropping {} candidates: {}", sentence.id, candidates.len(), e);
            return Vec::new();
        }
    };
    let mentions = match linker.link(sentence) {
        Ok(m) => m,
        Err(e) => {
            warn!(
                "sentence {}: dropping {} candidates, entity linking failed: {}",
                sentence.id,
                candidates.len(),
                e
            );
            return Vec::new();
        }
    };

    let mut seeds = Vec::new();
    for c in candidates {
        let valid = [c.rel, c.first.1, c.second.1]
            .iter()
            .all(|&i| sentence.is_valid_index(i));
        if c.sentence_id != sentence.id || !valid {
            warn!("candidate for sentence {} does not belong to {}", c.sentence_id, sentence.id);
            continue;
        }
        if STOP_RELATIONS.contains(&c.rel_lemma.as_str()) {
            log::debug!("sentence {}: dropping candidate with relation '{}'", sentence.id, c.rel_lemma);
            continue;
        }
        let args = seed_arg(&tree, &mentions, c.first.0, c.first.1)
            .and_then(|a1| seed_arg(&tree, &mentions, c.second.0, c.second.1).map(|a2| (a1, a2)));
        match args {
            Ok((arg1, arg2)) => seeds.push(SeedTriple {
                arg1,
                rel: SeedRel {
                    lemma: c.rel_lemma.clone(),
                    kind: c.rel_kind,
                    prep: c.prep.clone(),
                },
                arg2,
                origin: Some(sentence.id.clone()),
            }),
            Err(reason) => log::debug!("sentence {}: dropping candidate: {}", sentence.id, reason),
        }
    }
    seeds
}

/// Reading of "connected via a linear dependency path".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearityRule {
    /// The relation headword lies on the path between the two argument
    /// headwords, so argument, relation and argument form one line.
    #[default]
    ThroughRelation,
    /// Each rel-argument path runs along a single ancestor chain.
    AncestorChain,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum IndexKey {
    Entity(String),
    Cardinal(String),
}

struct IndexedSentence {
    sentence: AnnotatedSentence,
    mentions: Vec<LinkedMention>,
}

/// Inverted index from linked entities and cardinal surfaces to sentences.
pub struct CorpusIndex {
    sentences: Vec<IndexedSentence>,
    postings: BTreeMap<IndexKey, BTreeSet<usize>>,
}

impl CorpusIndex {
    /// Links every sentence and indexes its entities and cardinals.
    pub fn build<I>(sentences: I, linker: &dyn EntityLinker) -> Result<Self>
    where
        I: IntoIterator<Item = AnnotatedSentence>,
    {
        let mut linked = Vec::new();
        for sentence in sentences {
            let mentions = linker.link(&sentence)?;
            linked.push((sentence, mentions));
        }
        Ok(Self::from_linked(linked))
    }

    /// Indexes sentences whose mentions are already known.
    pub fn from_linked(linked: Vec<(AnnotatedSentence, Vec<LinkedMention>)>) -> Self {
        let mut postings: BTreeMap<IndexKey, BTreeSet<usize>> = BTreeMap::new();
        let mut sentences = Vec::with_capacity(linked.len());
        for (pos, (sentence, mentions)) in linked.into_iter().enumerate() {
            for m in &mentions {
                postings
                    .entry(IndexKey::Entity(m.entity.clone()))
                    .or_default()
                    .insert(pos);
            }
            for t in sentence.tokens.iter().filter(|t| t.is_cardinal()) {
                postings
                    .entry(IndexKey::Cardinal(t.form.clone()))
                    .or_default()
                    .insert(pos);
            }
            sentences.push(IndexedSentence { sentence, mentions });
        }
        CorpusIndex { sentences, postings }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, id: &str) -> Option<&AnnotatedSentence> {
        self.sentences.iter().map(|s| &s.sentence).find(|s| s.id == id)
    }

    pub fn mentions(&self, id: &str) -> Option<&[LinkedMention]> {
        self.sentences
            .iter()
            .find(|s| s.sentence.id == id)
            .map(|s| s.mentions.as_slice())
    }

    fn candidates(&self, seed: &SeedTriple) -> Vec<usize> {
        let empty = BTreeSet::new();
        let a = self.postings.get(&seed.arg1.key()).unwrap_or(&empty);
        let b = self.postings.get(&seed.arg2.key()).unwrap_or(&empty);
        a.intersection(b).copied().collect()
    }
}

/// A sentence found for a seed, with the headwords that realise it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMatch {
    pub sentence_id: String,
    pub seed: SeedTriple,
    pub rel: usize,
    pub arg1: usize,
    pub arg2: usize,
}

fn argument_occurrences(tree: &DependencyTree<'_>, mentions: &[LinkedMention], arg: &SeedArg) -> Vec<usize> {
    let mut out: Vec<usize> = match arg.kind {
        ArgKind::ProperNoun => mentions
            .iter()
            .filter(|m| Some(&m.entity) == arg.entity.as_ref())
            .map(|m| mention_head(tree, m))
            .collect(),
        ArgKind::Cardinal => (1..=tree.len())
            .filter(|&i| {
                let t = tree.token(i);
                t.is_cardinal() && t.form == arg.surface
            })
            .collect(),
    };
    out.sort_unstable();
    out.dedup();
    out
}

fn rel_occurrences(tree: &DependencyTree<'_>, rel: &SeedRel) -> Vec<usize> {
    (1..=tree.len())
        .filter(|&i| {
            let t = tree.token(i);
            let kind_ok = match rel.kind {
                RelKind::Verb => t.is_verbal(),
                RelKind::Noun => t.is_common_noun(),
            };
            kind_ok && t.lemma.to_lowercase() == rel.lemma
        })
        .collect()
}

/// Checks the structural constraints for one (rel, arg1, arg2) placement and
/// returns the summed rel-argument path lengths when they hold.
pub fn placement_cost(
    tree: &DependencyTree<'_>,
    rel: usize,
    arg1: usize,
    arg2: usize,
    kind: RelKind,
    rule: LinearityRule,
) -> Option<usize> {
    if rel == arg1 || rel == arg2 || arg1 == arg2 {
        return None;
    }
    let p1 = shortest_path(tree, rel, arg1).ok()?;
    let p2 = shortest_path(tree, rel, arg2).ok()?;
    let linear = match rule {
        LinearityRule::AncestorChain => p1.is_linear() && p2.is_linear(),
        LinearityRule::ThroughRelation => shortest_path(tree, arg1, arg2)
            .map(|p| p.nodes.iter().any(|n| n.index == rel))
            .unwrap_or(false),
    };
    if !linear {
        return None;
    }
    if kind == RelKind::Verb && (p1.len() >= MAX_VERB_PATH_NODES || p2.len() >= MAX_VERB_PATH_NODES) {
        return None;
    }
    Some(p1.len() + p2.len())
}

/// Finds sentences expressing `seed`.
///
/// A sentence qualifies when it mentions both arguments (same entity for
/// proper nouns, same surface for cardinals), contains the relation lemma,
/// the placement passes [`placement_cost`], and it is not the seed's own
/// sentence. Among several placements the one with the shortest total path
/// wins, ties going to the leftmost relation, then the leftmost arguments.
pub fn match_sentences(seed: &SeedTriple, index: &CorpusIndex, rule: LinearityRule) -> Vec<SeedMatch> {
    let mut out = Vec::new();
    for pos in index.candidates(seed) {
        let entry = &index.sentences[pos];
        if seed.origin.as_deref() == Some(entry.sentence.id.as_str()) {
            continue;
        }
        let tree = match build_tree(&entry.sentence) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let rels = rel_occurrences(&tree, &seed.rel);
        if rels.is_empty() {
            continue;
        }
        let firsts = argument_occurrences(&tree, &entry.mentions, &seed.arg1);
        let seconds = argument_occurrences(&tree, &entry.mentions, &seed.arg2);
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for &r in &rels {
            for &a1 in &firsts {
                for &a2 in &seconds {
                    if let Some(cost) = placement_cost(&tree, r, a1, a2, seed.rel.kind, rule) {
                        let key = (cost, r, a1, a2);
                        if best.map(|b| key < b).unwrap_or(true) {
                            best = Some(key);
                        }
                    }
                }
            }
        }
        if let Some((_, rel, arg1, arg2)) = best {
            out.push(SeedMatch {
                sentence_id: entry.sentence.id.clone(),
                seed: seed.clone(),
                rel,
                arg1,
                arg2,
            });
        }
    }
    out
}

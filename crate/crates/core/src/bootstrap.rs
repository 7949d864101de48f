//! Highly precise tuple extraction.
//!
//! Verb-mediated tuples come from SRL frames, noun-mediated tuples from a
//! small inventory of dependency patterns. Both are only run on the most
//! confidently annotated part of a corpus (see [`select_confident`]).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_tree, AnnotatedSentence, DependencyTree, Role, SrlFrame};
use crate::error::{Error, Result};

/// Shipped pattern inventory, in the format parsed by [`parse_patterns`].
pub const DEFAULT_PATTERNS: &str = include_str!("../data/noun_patterns.txt");

/// Preposition recorded when a matching pattern has no preposition node.
pub const DEFAULT_NOUN_PREPOSITION: &str = "of";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelKind {
    Verb,
    Noun,
}

impl fmt::Display for RelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelKind::Verb => "verb",
            RelKind::Noun => "noun",
        })
    }
}

/// An argument headword, optionally introduced by a preposition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TupleArg {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<String>,
}

impl TupleArg {
    pub fn new(index: usize) -> Self {
        TupleArg { index, prep: None }
    }

    pub fn with_prep(index: usize, prep: impl Into<String>) -> Self {
        TupleArg {
            index,
            prep: Some(prep.into()),
        }
    }
}

/// An n-ary tuple over headword indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionTuple {
    pub sentence_id: String,
    pub rel: usize,
    pub rel_lemma: String,
    pub rel_kind: RelKind,
    #[serde(default)]
    pub arg1: Option<usize>,
    #[serde(default)]
    pub arg2: Option<TupleArg>,
    #[serde(default)]
    pub arg_ns: Vec<TupleArg>,
    /// Id of the noun pattern that produced the tuple.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<u32>,
}

impl ExtractionTuple {
    /// Renders the tuple as `rel: win, arg1: Nadal, argN (in): 2005`, with the
    /// relation lemma and argument surface forms.
    pub fn describe(&self, sentence: &AnnotatedSentence) -> String {
        let form = |i: usize| {
            sentence
                .token(i)
                .map(|t| t.form.as_str())
                .unwrap_or("?")
                .to_owned()
        };
        let slot = |name: &str, arg: &TupleArg| match &arg.prep {
            Some(p) => format!("{} ({}): {}", name, p, form(arg.index)),
            None => format!("{}: {}", name, form(arg.index)),
        };
        let mut parts = vec![format!("rel: {}", self.rel_lemma)];
        if let Some(a1) = self.arg1 {
            parts.push(format!("arg1: {}", form(a1)));
        }
        if let Some(a2) = &self.arg2 {
            parts.push(slot("arg2", a2));
        }
        for an in &self.arg_ns {
            parts.push(slot("argN", an));
        }
        parts.join(", ")
    }

    /// Every argument index of the tuple.
    pub fn argument_indices(&self) -> Vec<usize> {
        self.arg1
            .into_iter()
            .chain(self.arg2.iter().map(|a| a.index))
            .chain(self.arg_ns.iter().map(|a| a.index))
            .collect()
    }
}

fn is_preposition_like(tree: &DependencyTree<'_>, index: usize) -> bool {
    let token = tree.token(index);
    token.pos == "IN" || (token.pos == "TO" && !tree.children(index).is_empty())
}

/// Resolves a role-labeled word to an argument headword. Prepositions are
/// replaced by their first non-punctuation dependent to the right (falling
/// back to the first one on the left) and their lemma is kept.
fn resolve_role_word(tree: &DependencyTree<'_>, index: usize) -> Option<TupleArg> {
    if tree.token(index).is_punctuation() {
        return None;
    }
    if !is_preposition_like(tree, index) {
        return Some(TupleArg::new(index));
    }
    let children: Vec<usize> = tree
        .children(index)
        .iter()
        .copied()
        .filter(|&c| !tree.token(c).is_punctuation())
        .collect();
    let child = children
        .iter()
        .copied()
        .find(|&c| c > index)
        .or_else(|| children.first().copied())?;
    Some(TupleArg::with_prep(
        child,
        tree.token(index).lemma.to_lowercase(),
    ))
}

/// Converts an SRL frame into a verb-mediated tuple: the predicate becomes
/// rel, A0 arg1, A1 arg2 and every AM-* word an argN.
pub fn srl_to_tuple(sentence: &AnnotatedSentence, frame: &SrlFrame) -> Result<ExtractionTuple> {
    let tree = build_tree(sentence)?;
    srl_frame_tuple(&tree, frame)
}

pub(crate) fn srl_frame_tuple(tree: &DependencyTree<'_>, frame: &SrlFrame) -> Result<ExtractionTuple> {
    let sentence = tree.sentence();
    if !sentence.is_valid_index(frame.predicate) {
        return Err(Error::Argument(format!(
            "frame predicate {} does not belong to sentence {}",
            frame.predicate, sentence.id
        )));
    }
    let predicate = tree.token(frame.predicate);
    let mut tuple = ExtractionTuple {
        sentence_id: sentence.id.clone(),
        rel: frame.predicate,
        rel_lemma: predicate.lemma.to_lowercase(),
        rel_kind: RelKind::Verb,
        arg1: None,
        arg2: None,
        arg_ns: Vec::new(),
        pattern: None,
    };

    let mut roles = frame.roles.clone();
    roles.sort_by_key(|(_, i)| *i);
    for (role, index) in roles {
        if !sentence.is_valid_index(index) {
            return Err(Error::Argument(format!(
                "role {} points outside sentence {}",
                role, sentence.id
            )));
        }
        if index == frame.predicate {
            continue;
        }
        let resolved = match resolve_role_word(tree, index) {
            Some(r) => r,
            None => {
                warn!(
                    "sentence {}: skipping role {} at token {}: no usable headword",
                    sentence.id, role, index
                );
                continue;
            }
        };
        match role {
            Role::A0 if tuple.arg1.is_none() => tuple.arg1 = Some(resolved.index),
            Role::A1 if tuple.arg2.is_none() => tuple.arg2 = Some(resolved),
            Role::Modifier(_) => tuple.arg_ns.push(resolved),
            Role::A0 | Role::A1 => warn!(
                "sentence {}: repeated role {} at token {} ignored",
                sentence.id, role, index
            ),
            Role::Numbered(_) | Role::Linked(_) => {}
        }
    }
    Ok(tuple)
}

/// Verb-mediated tuples for every frame whose predicate is a verb.
///
/// Fails with a configuration error when the sentence carries no SRL columns.
pub fn verb_tuples(sentence: &AnnotatedSentence) -> Result<Vec<ExtractionTuple>> {
    if !sentence.has_srl {
        return Err(Error::Config(format!(
            "sentence {} has no SRL columns; verb-mediated bootstrapping needs them",
            sentence.id
        )));
    }
    let tree = build_tree(sentence)?;
    let mut out = Vec::new();
    for frame in &sentence.frames {
        if !tree.token(frame.predicate).is_verbal() {
            continue;
        }
        out.push(srl_frame_tuple(&tree, frame)?);
    }
    Ok(out)
}

/// Slot a pattern node fills.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternRole {
    Rel,
    Arg1,
    Arg2,
    Prep,
}

impl FromStr for PatternRole {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rel" => Ok(PatternRole::Rel),
            "arg1" => Ok(PatternRole::Arg1),
            "arg2" => Ok(PatternRole::Arg2),
            "prep" => Ok(PatternRole::Prep),
            _ => Err(format!("unknown role '{}'", s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternNode {
    pub name: String,
    /// Allowed POS tags; empty means unconstrained.
    pub pos: Vec<String>,
    /// Allowed lemmas; empty means unconstrained.
    pub lemma: Vec<String>,
    pub role: Option<PatternRole>,
    /// Index of the parent node within the pattern, `None` for the root.
    pub parent: Option<usize>,
    /// Allowed labels of the edge from the parent; empty means any.
    pub labels: Vec<String>,
}

/// A rooted tree template over dependency subgraphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NounPattern {
    pub id: u32,
    pub name: String,
    pub nodes: Vec<PatternNode>,
    root: usize,
    children: Vec<Vec<usize>>,
}

impl NounPattern {
    fn slot(&self, role: PatternRole) -> Option<usize> {
        self.nodes.iter().position(|n| n.role == Some(role))
    }

    fn build(id: u32, name: String, nodes: Vec<PatternNode>, line: usize) -> Result<Self> {
        let count = |role| nodes.iter().filter(|n| n.role == Some(role)).count();
        for (role, label) in [
            (PatternRole::Rel, "rel"),
            (PatternRole::Arg1, "arg1"),
            (PatternRole::Arg2, "arg2"),
        ] {
            if count(role) != 1 {
                return Err(Error::parse(
                    line,
                    format!("pattern {} needs exactly one {} node", id, label),
                ));
            }
        }
        if count(PatternRole::Prep) > 1 {
            return Err(Error::parse(line, format!("pattern {} has several prep nodes", id)));
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::parse(
                line,
                format!("pattern {} must form a single tree ({} roots)", id, roots.len()),
            ));
        }
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p].push(i);
            }
        }
        // Reject cycles: every node must be reachable from the root.
        let mut seen = 0;
        let mut stack = vec![roots[0]];
        while let Some(n) = stack.pop() {
            seen += 1;
            if seen > nodes.len() {
                break;
            }
            stack.extend(&children[n]);
        }
        if seen != nodes.len() {
            return Err(Error::parse(line, format!("pattern {} edges do not form a tree", id)));
        }
        Ok(NounPattern {
            id,
            name,
            nodes,
            root: roots[0],
            children,
        })
    }
}

fn alternatives(value: &str) -> Vec<String> {
    if value == "*" {
        Vec::new()
    } else {
        value.split('|').map(str::to_owned).collect()
    }
}

/// Parses a pattern file. See `data/noun_patterns.txt` for the format.
pub fn parse_patterns(text: &str) -> Result<Vec<NounPattern>> {
    struct Stanza {
        id: u32,
        name: String,
        nodes: Vec<PatternNode>,
        line: usize,
    }

    let mut patterns = Vec::new();
    let mut current: Option<Stanza> = None;
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "pattern" => {
                if current.is_some() {
                    return Err(Error::parse(line_no, "pattern started before previous 'end'"));
                }
                let id = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, "pattern needs a numeric id"))?;
                current = Some(Stanza {
                    id,
                    name: fields.get(2).unwrap_or(&"").to_string(),
                    nodes: Vec::new(),
                    line: line_no,
                });
            }
            "node" => {
                let stanza = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, "node outside a pattern"))?;
                let name = fields
                    .get(1)
                    .ok_or_else(|| Error::parse(line_no, "node needs a name"))?
                    .to_string();
                if stanza.nodes.iter().any(|n| n.name == name) {
                    return Err(Error::parse(line_no, format!("duplicate node '{}'", name)));
                }
                let mut node = PatternNode {
                    name,
                    pos: Vec::new(),
                    lemma: Vec::new(),
                    role: None,
                    parent: None,
                    labels: Vec::new(),
                };
                for constraint in &fields[2..] {
                    let (key, value) = constraint
                        .split_once('=')
                        .ok_or_else(|| Error::parse(line_no, format!("bad constraint '{}'", constraint)))?;
                    match key {
                        "pos" => node.pos = alternatives(value),
                        "lemma" => node.lemma = alternatives(value),
                        "role" => {
                            node.role = Some(value.parse().map_err(|m| Error::parse(line_no, m))?)
                        }
                        _ => return Err(Error::parse(line_no, format!("unknown constraint '{}'", key))),
                    }
                }
                stanza.nodes.push(node);
            }
            "edge" => {
                let stanza = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, "edge outside a pattern"))?;
                if fields.len() != 4 {
                    return Err(Error::parse(line_no, "edge needs head, dependent and label"));
                }
                let find = |name: &str| {
                    stanza
                        .nodes
                        .iter()
                        .position(|n| n.name == name)
                        .ok_or_else(|| Error::parse(line_no, format!("unknown node '{}'", name)))
                };
                let head = find(fields[1])?;
                let dep = find(fields[2])?;
                if head == dep || stanza.nodes[dep].parent.is_some() {
                    return Err(Error::parse(line_no, "node has more than one head"));
                }
                stanza.nodes[dep].parent = Some(head);
                stanza.nodes[dep].labels = alternatives(fields[3]);
            }
            "end" => {
                let stanza = current
                    .take()
                    .ok_or_else(|| Error::parse(line_no, "'end' without pattern"))?;
                patterns.push(NounPattern::build(stanza.id, stanza.name, stanza.nodes, stanza.line)?);
            }
            other => return Err(Error::parse(line_no, format!("unknown directive '{}'", other))),
        }
    }
    if let Some(stanza) = current {
        return Err(Error::parse(stanza.line, format!("pattern {} is not closed", stanza.id)));
    }
    Ok(patterns)
}

/// The shipped ten-pattern inventory.
pub fn default_patterns() -> Vec<NounPattern> {
    parse_patterns(DEFAULT_PATTERNS).expect("shipped pattern file is valid")
}

fn node_matches(node: &PatternNode, tree: &DependencyTree<'_>, index: usize) -> bool {
    let token = tree.token(index);
    if token.is_punctuation() {
        return false;
    }
    (node.pos.is_empty() || node.pos.iter().any(|p| *p == token.pos))
        && (node.lemma.is_empty() || node.lemma.iter().any(|l| l.eq_ignore_ascii_case(&token.lemma)))
}

fn label_matches(node: &PatternNode, deprel: &str) -> bool {
    node.labels.is_empty() || node.labels.iter().any(|l| l == deprel)
}

/// Backtracking embedding of pattern nodes (in `order`) into the tree.
fn embed(
    pattern: &NounPattern,
    tree: &DependencyTree<'_>,
    order: &[usize],
    pos: usize,
    assignment: &mut Vec<Option<usize>>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == order.len() {
        out.push(assignment.iter().map(|a| a.expect("complete assignment")).collect());
        return;
    }
    let node_idx = order[pos];
    let node = &pattern.nodes[node_idx];
    let parent_token = assignment[node.parent.expect("non-root nodes have parents")]
        .expect("parents precede children in the order");
    for &child in tree.children(parent_token) {
        if assignment.contains(&Some(child)) {
            continue;
        }
        if !label_matches(node, &tree.token(child).deprel) || !node_matches(node, tree, child) {
            continue;
        }
        assignment[node_idx] = Some(child);
        embed(pattern, tree, order, pos + 1, assignment, out);
        assignment[node_idx] = None;
    }
}

fn pattern_embeddings(pattern: &NounPattern, tree: &DependencyTree<'_>) -> Vec<Vec<usize>> {
    let mut order = vec![pattern.root];
    let mut k = 0;
    while k < order.len() {
        order.extend(&pattern.children[order[k]]);
        k += 1;
    }
    let mut out = Vec::new();
    for index in 1..=tree.len() {
        if !node_matches(&pattern.nodes[pattern.root], tree, index) {
            continue;
        }
        let mut assignment = vec![None; pattern.nodes.len()];
        assignment[pattern.root] = Some(index);
        embed(pattern, tree, &order, 1, &mut assignment, &mut out);
    }
    out
}

/// Noun-mediated tuples for every embedding of every pattern.
///
/// Matches that agree on (rel, arg1, arg2) are reported once, with the
/// lowest pattern id; the result is sorted by headword indices, so it does not
/// depend on the order of `patterns`.
pub fn match_noun_patterns(tree: &DependencyTree<'_>, patterns: &[NounPattern]) -> Vec<ExtractionTuple> {
    let mut found: BTreeMap<(usize, usize, usize), ExtractionTuple> = BTreeMap::new();
    for pattern in patterns {
        let rel_slot = pattern.slot(PatternRole::Rel).expect("validated pattern");
        let arg1_slot = pattern.slot(PatternRole::Arg1).expect("validated pattern");
        let arg2_slot = pattern.slot(PatternRole::Arg2).expect("validated pattern");
        let prep_slot = pattern.slot(PatternRole::Prep);
        for embedding in pattern_embeddings(pattern, tree) {
            let rel = embedding[rel_slot];
            let prep = match prep_slot {
                Some(p) => tree.token(embedding[p]).lemma.to_lowercase(),
                None => DEFAULT_NOUN_PREPOSITION.to_owned(),
            };
            let tuple = ExtractionTuple {
                sentence_id: tree.sentence().id.clone(),
                rel,
                rel_lemma: tree.token(rel).lemma.to_lowercase(),
                rel_kind: RelKind::Noun,
                arg1: Some(embedding[arg1_slot]),
                arg2: Some(TupleArg::with_prep(embedding[arg2_slot], prep)),
                arg_ns: Vec::new(),
                pattern: Some(pattern.id),
            };
            let key = (rel, embedding[arg1_slot], embedding[arg2_slot]);
            match found.get(&key) {
                Some(existing) if existing.pattern <= tuple.pattern => {}
                _ => {
                    found.insert(key, tuple);
                }
            }
        }
    }
    found.into_values().collect()
}

/// Which per-sentence confidence [`select_confident`] ranks by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceKey {
    Dep,
    Srl,
}

impl ConfidenceKey {
    pub fn of(self, sentence: &AnnotatedSentence) -> f64 {
        match self {
            ConfidenceKey::Dep => sentence.dep_confidence,
            ConfidenceKey::Srl => sentence.srl_confidence,
        }
    }
}

struct Ranked<T> {
    confidence: f64,
    order: usize,
    item: T,
}

impl<T> Ranked<T> {
    /// `Less` means ranked higher: more confident, then earlier.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .confidence
            .total_cmp(&self.confidence)
            .then(self.order.cmp(&other.order))
    }
}

impl<T> PartialEq for Ranked<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Ranked<T> {}

impl<T> PartialOrd for Ranked<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Ranked<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Keeps the `k` most confident sentences of a stream, ties broken by
/// position. The result is ordered best first.
pub fn select_confident<I>(sentences: I, key: ConfidenceKey, k: usize) -> Vec<AnnotatedSentence>
where
    I: IntoIterator<Item = AnnotatedSentence>,
{
    if k == 0 {
        return Vec::new();
    }
    // Max-heap on rank, so the top is the worst kept sentence.
    let mut heap: BinaryHeap<Ranked<AnnotatedSentence>> = BinaryHeap::with_capacity(k + 1);
    for (order, sentence) in sentences.into_iter().enumerate() {
        let entry = Ranked {
            confidence: key.of(&sentence),
            order,
            item: sentence,
        };
        if heap.len() < k {
            heap.push(entry);
        } else if heap.peek().map(|worst| entry < *worst).unwrap_or(false) {
            heap.pop();
            heap.push(entry);
        }
    }
    heap.into_sorted_vec().into_iter().map(|r| r.item).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn sentence_with_conf(id: &str, dep: f64, srl: f64) -> AnnotatedSentence {
        let mut s = AnnotatedSentence::new(
            id,
            vec![Token {
                index: 1,
                form: "x".into(),
                lemma: "x".into(),
                pos: "NN".into(),
                head: 0,
                deprel: "root".into(),
                ne: "O".into(),
            }],
        );
        s.dep_confidence = dep;
        s.srl_confidence = srl;
        s
    }

    fn ids(v: &[AnnotatedSentence]) -> Vec<&str> {
        v.iter().map(|s| s.id.as_str()).collect()
    }

    #[test]
    fn select_zero_is_empty() {
        let s = vec![sentence_with_conf("a", 0.5, 0.5)];
        assert!(select_confident(s, ConfidenceKey::Dep, 0).is_empty());
    }

    #[test]
    fn select_top_two() {
        let confs = [0.3, 0.9, 0.1, 0.7, 0.5];
        let s: Vec<_> = confs
            .iter()
            .enumerate()
            .map(|(i, &c)| sentence_with_conf(&format!("s{}", i), 0.0, c))
            .collect();
        // sort oracle
        let mut order: Vec<usize> = (0..confs.len()).collect();
        order.sort_by(|&a, &b| confs[b].total_cmp(&confs[a]));
        let expected: Vec<String> = order[..2].iter().map(|i| format!("s{}", i)).collect();
        let got = select_confident(s, ConfidenceKey::Srl, 2);
        assert_eq!(ids(&got), expected);
        assert_eq!(ids(&got), ["s1", "s3"]);
    }

    #[test]
    fn select_ties_keep_corpus_order() {
        let s: Vec<_> = (0..6)
            .map(|i| sentence_with_conf(&format!("s{}", i), 0.4, 0.0))
            .collect();
        assert_eq!(ids(&select_confident(s, ConfidenceKey::Dep, 3)), ["s0", "s1", "s2"]);
    }

    #[test]
    fn select_more_than_available() {
        let s = vec![sentence_with_conf("a", 0.2, 0.0), sentence_with_conf("b", 0.8, 0.0)];
        assert_eq!(ids(&select_confident(s, ConfidenceKey::Dep, 5)), ["b", "a"]);
    }

    #[test]
    fn default_inventory_has_ten_patterns() {
        let patterns = default_patterns();
        assert_eq!(patterns.len(), 10);
        let ids: Vec<u32> = patterns.iter().map(|p| p.id).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());
        for p in &patterns {
            assert!(p.slot(PatternRole::Rel).is_some());
            let rel = &p.nodes[p.slot(PatternRole::Rel).unwrap()];
            assert_eq!(rel.pos, ["NN", "NNS"]);
        }
    }

    #[test]
    fn pattern_file_errors() {
        assert!(parse_patterns("pattern 1 x\nnode a role=rel\nend\n").is_err());
        assert!(parse_patterns("node a\n").is_err());
        assert!(parse_patterns("pattern 1 x\nnode a role=rel\n").is_err());
        let two_roots = "pattern 1 x\nnode a role=rel\nnode b role=arg1\nnode c role=arg2\nedge a b *\nend\n";
        assert!(parse_patterns(two_roots).is_err());
        let bad_key = "pattern 1 x\nnode a colour=red\nend\n";
        assert!(matches!(parse_patterns(bad_key), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn wildcard_labels_parse() {
        let text = "pattern 3 any\nnode r role=rel\nnode a role=arg1\nnode b role=arg2\nedge r a *\nedge r b x|y\nend\n";
        let p = &parse_patterns(text).unwrap()[0];
        assert!(p.nodes[1].labels.is_empty());
        assert_eq!(p.nodes[2].labels, ["x", "y"]);
    }
}

//! Triple extraction from classifier predictions.
//!
//! For every candidate relation word the argument classifier labels the
//! paths to the content words of the sentence. Predictions are aligned into
//! the templates below, slots are widened to phrases over their dependents,
//! and each triple is scored by the parse confidence times the mean argument
//! probability.
//!
//! | template | shape |
//! |---|---|
//! | 1 | ⟨arg1; rel; arg2⟩ |
//! | 2 | ⟨arg2; be rel [prep]; argN⟩ |
//! | 3 | ⟨arg1; rel [arg2] [prep]; argN⟩ |
//! | 4 | ⟨arg1; be rel [prep]; arg2⟩ (noun relations) |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::ArgRole;
use crate::bootstrap::RelKind;
use crate::corpus::{build_tree, AnnotatedSentence, DependencyTree};
use crate::dpath::{shortest_path, DepPath};
use crate::error::{Error, Result};
use crate::neural::PathClassifier;
use crate::sampler::{ARGUMENT_CLASSES, NO_PREPOSITION};

/// Default score threshold for reported triples.
pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// Predicted preposition between a relation and an argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepPrediction {
    pub lemma: String,
    pub prob: f64,
}

impl PrepPrediction {
    /// The preposition to render, `None` for the NONE class.
    pub fn slot(&self) -> Option<&str> {
        (self.lemma != NO_PREPOSITION).then_some(self.lemma.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedArg {
    pub index: usize,
    pub role: ArgRole,
    /// Probability of the predicted class.
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<PrepPrediction>,
}

/// Non-null predictions for one relation word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub sentence_id: String,
    pub rel: usize,
    pub rel_kind: RelKind,
    pub args: Vec<DetectedArg>,
}

impl DetectionResult {
    /// Most probable argument with `role`, the leftmost on ties.
    pub fn best(&self, role: ArgRole) -> Option<&DetectedArg> {
        let mut best: Option<&DetectedArg> = None;
        for a in self.args.iter().filter(|a| a.role == role) {
            if best.map(|b| a.prob > b.prob).unwrap_or(true) {
                best = Some(a);
            }
        }
        best
    }

    pub fn arg_ns(&self) -> impl Iterator<Item = &DetectedArg> {
        self.args.iter().filter(|a| a.role == ArgRole::ArgN)
    }
}

fn role_of_label(label: &str) -> Option<ArgRole> {
    match label {
        "arg1" => Some(ArgRole::Arg1),
        "arg2" => Some(ArgRole::Arg2),
        "argN" => Some(ArgRole::ArgN),
        _ => None,
    }
}

/// Index of the largest probability; the first class wins ties.
fn top_class(probs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = k;
        }
    }
    best
}

fn check_argument_model(model: &(dyn PathClassifier + Sync)) -> Result<()> {
    let classes = model.classes();
    if classes.is_empty() || classes.iter().any(|c| !ARGUMENT_CLASSES.contains(&c.as_str())) {
        return Err(Error::Config(format!(
            "argument model classes {:?} are not a subset of {:?}",
            classes, ARGUMENT_CLASSES
        )));
    }
    Ok(())
}

fn detect_in_tree(tree: &DependencyTree<'_>, model: &(dyn PathClassifier + Sync)) -> Result<Vec<DetectionResult>> {
    let classes = model.classes();
    let mut out = Vec::new();
    for rel in 1..=tree.len() {
        let token = tree.token(rel);
        if !token.is_relation_candidate() {
            continue;
        }
        let rel_kind = if token.is_verbal() { RelKind::Verb } else { RelKind::Noun };
        let mut args = Vec::new();
        for w in 1..=tree.len() {
            if w == rel || !tree.token(w).is_content_word() {
                continue;
            }
            let path = shortest_path(tree, rel, w)?;
            let probs = model.predict(&path);
            let k = top_class(&probs);
            let role = match classes.get(k).and_then(|c| role_of_label(c)) {
                Some(r) => r,
                None => continue,
            };
            if rel_kind == RelKind::Noun && role == ArgRole::ArgN {
                continue;
            }
            args.push(DetectedArg {
                index: w,
                role,
                prob: probs[k],
                prep: None,
            });
        }
        if !args.is_empty() {
            out.push(DetectionResult {
                sentence_id: tree.sentence().id.clone(),
                rel,
                rel_kind,
                args,
            });
        }
    }
    Ok(out)
}

/// Labels path(rel, w) for every relation candidate (verbs, NN, NNS) and
/// content word `w`, keeping the relations with at least one non-null
/// prediction. argN predictions are dropped for noun relations.
pub fn detect_arguments(sentence: &AnnotatedSentence, model: &(dyn PathClassifier + Sync)) -> Result<Vec<DetectionResult>> {
    check_argument_model(model)?;
    let tree = build_tree(sentence)?;
    detect_in_tree(&tree, model)
}

/// Most probable preposition class for a path; the first class wins ties.
pub fn classify_preposition(path: &DepPath, model: &(dyn PathClassifier + Sync)) -> PrepPrediction {
    let probs = model.predict(path);
    let k = top_class(&probs);
    PrepPrediction {
        lemma: model.classes().get(k).cloned().unwrap_or_else(|| NO_PREPOSITION.to_string()),
        prob: probs.get(k).copied().unwrap_or(0.0),
    }
}

/// Predicts prepositions for argN of verb relations and arg2 of noun relations.
pub fn attach_prepositions(
    tree: &DependencyTree<'_>,
    detections: &mut [DetectionResult],
    model: &(dyn PathClassifier + Sync),
) -> Result<()> {
    for d in detections.iter_mut() {
        let wanted = match d.rel_kind {
            RelKind::Verb => ArgRole::ArgN,
            RelKind::Noun => ArgRole::Arg2,
        };
        for a in d.args.iter_mut().filter(|a| a.role == wanted) {
            let path = shortest_path(tree, d.rel, a.index)?;
            a.prep = Some(classify_preposition(&path, model));
        }
    }
    Ok(())
}

/// Row of the template table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Template {
    VerbBinary = 1,
    VerbPassive = 2,
    VerbNary = 3,
    Noun = 4,
}

impl From<Template> for u8 {
    fn from(t: Template) -> u8 {
        t as u8
    }
}

impl TryFrom<u8> for Template {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Template::VerbBinary),
            2 => Ok(Template::VerbPassive),
            3 => Ok(Template::VerbNary),
            4 => Ok(Template::Noun),
            _ => Err(format!("unknown template {}", v)),
        }
    }
}

/// A slot filled by a detected argument headword.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArgSlot {
    pub index: usize,
    pub role: ArgRole,
    pub prob: f64,
}

impl From<&DetectedArg> for ArgSlot {
    fn from(a: &DetectedArg) -> Self {
        ArgSlot {
            index: a.index,
            role: a.role,
            prob: a.prob,
        }
    }
}

/// Template instance over headwords, before spanning.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompleteTriple {
    pub template: Template,
    pub rel: usize,
    pub first: ArgSlot,
    pub second: ArgSlot,
    /// arg2 rendered inside the relation phrase (template 3).
    pub inner: Option<ArgSlot>,
    pub prep: Option<String>,
    pub be: bool,
}

impl IncompleteTriple {
    /// Arguments whose probabilities enter the score.
    pub fn scored_args(&self) -> Vec<ArgSlot> {
        let mut args = vec![self.first, self.second];
        args.extend(self.inner);
        args
    }
}

/// Aligns a detection into the template table.
pub fn assemble_triples(detection: &DetectionResult) -> Vec<IncompleteTriple> {
    let arg1 = detection.best(ArgRole::Arg1).map(ArgSlot::from);
    let arg2_detected = detection.best(ArgRole::Arg2);
    let arg2 = arg2_detected.map(ArgSlot::from);
    let mut out = Vec::new();
    let make = |template, first, second, inner, prep: Option<&str>, be| IncompleteTriple {
        template,
        rel: detection.rel,
        first,
        second,
        inner,
        prep: prep.map(str::to_lowercase),
        be,
    };
    match detection.rel_kind {
        RelKind::Noun => {
            if let (Some(a1), Some(a2)) = (arg1, arg2) {
                let prep = arg2_detected.and_then(|a| a.prep.as_ref()).and_then(|p| p.slot());
                out.push(make(Template::Noun, a1, a2, None, prep, true));
            }
        }
        RelKind::Verb => {
            if let (Some(a1), Some(a2)) = (arg1, arg2) {
                out.push(make(Template::VerbBinary, a1, a2, None, None, false));
            }
            for an in detection.arg_ns() {
                let prep = an.prep.as_ref().and_then(|p| p.slot());
                if let Some(a2) = arg2 {
                    out.push(make(Template::VerbPassive, a2, an.into(), None, prep, true));
                }
                if let Some(a1) = arg1 {
                    out.push(make(Template::VerbNary, a1, an.into(), arg2, prep, false));
                }
            }
        }
    }
    out
}

/// Scored triple with its rendered phrases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub id: String,
    pub sentence_id: String,
    pub arg1: String,
    pub rel: String,
    pub arg2: String,
    pub score: f64,
    pub template: Template,
    /// `be` inserted before a verb relation.
    pub passive_be: bool,
    /// `be` inserted before a noun relation.
    pub noun_be: bool,
    pub arg1_tokens: Vec<usize>,
    /// Relation tokens, including an embedded arg2.
    pub rel_tokens: Vec<usize>,
    pub arg2_tokens: Vec<usize>,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}; {}; {}⟩ ({:.2})", self.arg1, self.rel, self.arg2, self.score)
    }
}

/// Maximal contiguous run of allowed tokens around `head`, with punctuation
/// trimmed from both ends.
fn contiguous_span(tree: &DependencyTree<'_>, head: usize, allowed: &BTreeSet<usize>) -> Vec<usize> {
    let ok = |t: usize| t == head || allowed.contains(&t);
    let mut lo = head;
    while lo > 1 && ok(lo - 1) {
        lo -= 1;
    }
    let mut hi = head;
    while hi < tree.len() && ok(hi + 1) {
        hi += 1;
    }
    while lo < head && tree.token(lo).is_punctuation() {
        lo += 1;
    }
    while hi > head && tree.token(hi).is_punctuation() {
        hi -= 1;
    }
    (lo..=hi).collect()
}

/// Tokens of `head`'s subtree that may belong to its slot: those outside the
/// subtrees of other headwords below it and outside `claimed`.
fn slot_tokens(
    tree: &DependencyTree<'_>,
    head: usize,
    headwords: &BTreeSet<usize>,
    claimed: &BTreeSet<usize>,
) -> Vec<usize> {
    let mut blocked: BTreeSet<usize> = claimed.clone();
    for &o in headwords {
        if o != head && tree.is_ancestor(head, o) {
            blocked.extend(tree.subtree(o));
        }
    }
    blocked.remove(&head);
    let allowed: BTreeSet<usize> = tree.subtree(head).into_iter().filter(|t| !blocked.contains(t)).collect();
    contiguous_span(tree, head, &allowed)
}

fn render(tree: &DependencyTree<'_>, tokens: &[usize]) -> String {
    tokens
        .iter()
        .map(|&t| tree.token(t).form.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Phrases of a spanned triple, before scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct SpannedTriple {
    pub arg1_tokens: Vec<usize>,
    pub rel_tokens: Vec<usize>,
    pub arg2_tokens: Vec<usize>,
    pub arg1: String,
    pub rel: String,
    pub arg2: String,
}

/// Widens each slot to the contiguous part of its headword's subtree that
/// avoids the subtrees of the triple's other headwords. The relation slot
/// also avoids every detected argument and the nodes between it and them.
/// Slots are filled in the order rel, arg1, arg2, argN and never share
/// tokens.
pub fn span_dependents(tree: &DependencyTree<'_>, detection: &DetectionResult, triple: &IncompleteTriple) -> Result<SpannedTriple> {
    let mut own: BTreeSet<usize> = triple.scored_args().iter().map(|slot| slot.index).collect();
    own.insert(triple.rel);
    let mut headwords: BTreeSet<usize> = detection.args.iter().map(|a| a.index).collect();
    headwords.extend(own.iter().copied());

    let mut interior = BTreeSet::new();
    for a in &detection.args {
        let path = shortest_path(tree, triple.rel, a.index)?;
        let n = path.nodes.len();
        if n > 2 {
            interior.extend(path.nodes[1..n - 1].iter().map(|node| node.index));
        }
    }
    let mut claimed = interior;
    let rel_tokens = slot_tokens(tree, triple.rel, &headwords, &claimed);
    claimed = rel_tokens.iter().copied().collect();

    let mut slots: Vec<(ArgSlot, usize)> = vec![(triple.first, 0), (triple.second, 1)];
    if let Some(inner) = triple.inner {
        slots.push((inner, 2));
    }
    slots.sort_by_key(|(slot, _)| slot.role);
    let mut spans: [Vec<usize>; 3] = Default::default();
    for (slot, position) in slots {
        let tokens = slot_tokens(tree, slot.index, &own, &claimed);
        claimed.extend(tokens.iter().copied());
        spans[position] = tokens;
    }
    let [arg1_tokens, arg2_tokens, inner_tokens] = spans;

    let mut rel_words: Vec<String> = Vec::new();
    if triple.be {
        rel_words.push("be".into());
    }
    rel_words.push(render(tree, &rel_tokens));
    if !inner_tokens.is_empty() {
        rel_words.push(render(tree, &inner_tokens));
    }
    if let Some(p) = &triple.prep {
        rel_words.push(p.clone());
    }
    let mut all_rel = rel_tokens;
    all_rel.extend(inner_tokens);

    Ok(SpannedTriple {
        arg1: render(tree, &arg1_tokens),
        rel: rel_words.join(" "),
        arg2: render(tree, &arg2_tokens),
        arg1_tokens,
        rel_tokens: all_rel,
        arg2_tokens,
    })
}

/// `dep(s)` times the mean of the argument probabilities; 0 without arguments.
pub fn score_triple(dep_confidence: f64, probs: &[f64]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    dep_confidence * probs.iter().sum::<f64>() / probs.len() as f64
}

/// Triples scoring strictly above `threshold`, best first. Equal scores keep
/// their input order.
pub fn filter_by_score(triples: Vec<Triple>, threshold: f64) -> Vec<Triple> {
    let mut kept: Vec<Triple> = triples.into_iter().filter(|t| t.score > threshold).collect();
    kept.sort_by(|a, b| b.score.total_cmp(&a.score));
    kept
}

/// All triples of one sentence, duplicates of the same (arg1, rel, arg2)
/// strings reduced to their best-scoring instance. Ids are
/// `{sentence_id}/{n}` counting from 1.
pub fn extract_sentence(
    sentence: &AnnotatedSentence,
    argument_model: &(dyn PathClassifier + Sync),
    preposition_model: Option<&(dyn PathClassifier + Sync)>,
) -> Result<Vec<Triple>> {
    check_argument_model(argument_model)?;
    let tree = build_tree(sentence)?;
    let mut detections = detect_in_tree(&tree, argument_model)?;
    if let Some(model) = preposition_model {
        attach_prepositions(&tree, &mut detections, model)?;
    }

    let mut triples: Vec<Triple> = Vec::new();
    let mut seen: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    for d in &detections {
        for incomplete in assemble_triples(d) {
            let spanned = span_dependents(&tree, d, &incomplete)?;
            let probs: Vec<f64> = incomplete.scored_args().iter().map(|a| a.prob).collect();
            let score = score_triple(sentence.dep_confidence, &probs);
            let key = (spanned.arg1.clone(), spanned.rel.clone(), spanned.arg2.clone());
            let triple = Triple {
                id: String::new(),
                sentence_id: sentence.id.clone(),
                arg1: spanned.arg1,
                rel: spanned.rel,
                arg2: spanned.arg2,
                score,
                template: incomplete.template,
                passive_be: incomplete.be && d.rel_kind == RelKind::Verb,
                noun_be: incomplete.be && d.rel_kind == RelKind::Noun,
                arg1_tokens: spanned.arg1_tokens,
                rel_tokens: spanned.rel_tokens,
                arg2_tokens: spanned.arg2_tokens,
            };
            match seen.get(&key) {
                Some(&k) if triples[k].score >= score => {}
                Some(&k) => triples[k] = triple,
                None => {
                    seen.insert(key, triples.len());
                    triples.push(triple);
                }
            }
        }
    }
    for (n, t) in triples.iter_mut().enumerate() {
        t.id = format!("{}/{}", sentence.id, n + 1);
    }
    Ok(triples)
}

/// Extracts from every sentence in parallel, keeping corpus order. Sentences
/// that fail are logged and skipped; a model with the wrong classes is an
/// error.
pub fn extract_corpus(
    sentences: &[AnnotatedSentence],
    argument_model: &(dyn PathClassifier + Sync),
    preposition_model: Option<&(dyn PathClassifier + Sync)>,
) -> Result<Vec<Triple>> {
    check_argument_model(argument_model)?;
    let results: Vec<Result<Vec<Triple>>> = sentences
        .par_iter()
        .map(|s| extract_sentence(s, argument_model, preposition_model))
        .collect();
    let mut out = Vec::new();
    for (sentence, r) in sentences.iter().zip(results) {
        match r {
            Ok(t) => out.extend(t),
            Err(e) => warn!("sentence {} skipped: {}", sentence.id, e),
        }
    }
    Ok(out)
}

pub fn write_triples_jsonl<W: Write>(writer: &mut W, triples: &[Triple]) -> Result<()> {
    for t in triples {
        serde_json::to_writer(&mut *writer, t)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_triples_text<W: Write>(writer: &mut W, triples: &[Triple]) -> Result<()> {
    for t in triples {
        writeln!(writer, "{}", t)?;
    }
    Ok(())
}

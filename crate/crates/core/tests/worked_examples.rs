//! Golden tests on the annotated fixture corpus.

mod common;

use std::collections::BTreeMap;

use common::{corpus, gazetteer, sentence, Oracle};
use oie_core::augment::{filter_seeds, match_sentences, to_binary_triples, CorpusIndex, LinearityRule};
use oie_core::bootstrap::{default_patterns, match_noun_patterns, verb_tuples, RelKind};
use oie_core::extractor::{extract_sentence, filter_by_score, score_triple, DEFAULT_THRESHOLD};
use oie_core::neural::PathClassifier;
use oie_core::sampler::{
    build_pool, feedback_negative_sampling, label_positives, PoolEntry, TrainingSample, ARGUMENT_CLASSES,
    POSITIVE_CLASSES,
};
use oie_core::{build_tree, shortest_path, AnnotatedSentence, DepPath};

fn word(s: &AnnotatedSentence, form: &str) -> usize {
    s.tokens.iter().find(|t| t.form == form).unwrap().index
}

#[test]
fn corpus_reads_cleanly() {
    let c = corpus();
    assert_eq!(c.len(), 10);
    for s in &c {
        build_tree(s).unwrap();
        assert!(s.has_srl);
    }
}

#[test]
fn nadal_srl_tuple() {
    let s = sentence("nadal");
    let tuples = verb_tuples(&s).unwrap();
    assert_eq!(tuples.len(), 1);
    assert_eq!(
        tuples[0].describe(&s),
        "rel: win, arg1: Nadal, arg2: titles, argN (in): addition, argN (in): 2005"
    );
}

#[test]
fn gaborone_noun_tuple() {
    let s = sentence("gaborone");
    let tree = build_tree(&s).unwrap();
    let tuples = match_noun_patterns(&tree, &default_patterns());
    assert_eq!(tuples.len(), 1);
    assert_eq!(tuples[0].pattern, Some(7));
    assert_eq!(tuples[0].rel_kind, RelKind::Noun);
    assert_eq!(tuples[0].describe(&s), "rel: capital, arg1: Gaborone, arg2 (of): Botswana");
}

#[test]
fn meadows_noun_tuple() {
    let s = sentence("meadows");
    let tuples = match_noun_patterns(&build_tree(&s).unwrap(), &default_patterns());
    assert_eq!(tuples.len(), 1);
    assert_eq!(tuples[0].describe(&s), "rel: bank, arg1: Bank, arg2 (in): Nevada");
}

#[test]
fn vilnius_explicit_relations() {
    let patterns = default_patterns();
    for id in ["vilnius-war", "vilnius-midpoint", "vilnius-residence"] {
        let s = sentence(id);
        let tuples = match_noun_patterns(&build_tree(&s).unwrap(), &patterns);
        let shown: Vec<String> = tuples.iter().map(|t| t.describe(&s)).collect();
        assert!(
            shown.contains(&"rel: capital, arg1: Vilnius, arg2 (of): Lithuania".to_string()),
            "{}: {:?}",
            id,
            shown
        );
    }
    let implicit = sentence("vilnius-implicit");
    assert!(match_noun_patterns(&build_tree(&implicit).unwrap(), &patterns).is_empty());
}

#[test]
fn gaborone_distant_supervision_match() {
    let linker = gazetteer();
    let source = sentence("gaborone");
    let tuple = match_noun_patterns(&build_tree(&source).unwrap(), &default_patterns()).remove(0);
    let seeds = filter_seeds(&to_binary_triples(&tuple), &source, &linker);
    assert_eq!(seeds.len(), 1);
    let seed = &seeds[0];
    assert_eq!(seed.to_string(), "⟨Gaborone; capital of; Botswana⟩");
    assert_eq!(seed.arg1.entity.as_deref(), Some("dbr:Gaborone"));
    assert_eq!(seed.arg2.entity.as_deref(), Some("dbr:Botswana"));

    let index = CorpusIndex::build(corpus(), &linker).unwrap();
    let matches = match_sentences(seed, &index, LinearityRule::ThroughRelation);
    let khama = matches.iter().find(|m| m.sentence_id == "khama").expect("Khama sentence matched");
    let s = sentence("khama");
    assert_eq!(s.tokens[khama.rel - 1].form, "capital");
    assert_eq!(s.tokens[khama.arg1 - 1].form, "Gaborone");
    assert_eq!(s.tokens[khama.arg2 - 1].form, "Botswana");
}

#[test]
fn implicit_capital_is_found_by_distant_supervision() {
    let linker = gazetteer();
    let source = sentence("vilnius-war");
    let tuple = match_noun_patterns(&build_tree(&source).unwrap(), &default_patterns()).remove(0);
    let seed = filter_seeds(&to_binary_triples(&tuple), &source, &linker).remove(0);
    let index = CorpusIndex::build(corpus(), &linker).unwrap();
    let matches = match_sentences(&seed, &index, LinearityRule::ThroughRelation);
    assert!(matches.iter().any(|m| m.sentence_id == "vilnius-implicit"));
}

#[test]
fn gaborone_preposition_sample() {
    let s = sentence("gaborone");
    let tuples = match_noun_patterns(&build_tree(&s).unwrap(), &default_patterns());
    let sentences = BTreeMap::from([(s.id.clone(), s.clone())]);
    let samples = label_positives(&sentences, &tuples, &[]);
    let prep: Vec<&TrainingSample> = samples.iter().filter(|x| x.task.to_string() == "preposition").collect();
    assert_eq!(prep.len(), 1);
    assert_eq!((prep[0].rel_index(), prep[0].arg_index()), (word(&s, "capital"), word(&s, "Botswana")));
    assert_eq!(prep[0].label, "of");
}

#[test]
fn boeing_argument_samples() {
    let s = sentence("boeing");
    let tuples = verb_tuples(&s).unwrap();
    let sentences = BTreeMap::from([(s.id.clone(), s.clone())]);
    let samples = label_positives(&sentences, &tuples, &[]);
    let args: Vec<(usize, &str)> = samples
        .iter()
        .filter(|x| x.task.to_string() == "argument")
        .map(|x| (x.arg_index(), x.label.as_str()))
        .collect();
    assert_eq!(args, vec![(1, "arg1"), (5, "arg2"), (7, "argN")]);
    let prep = samples.iter().find(|x| x.task.to_string() == "preposition").unwrap();
    assert_eq!(prep.label, "in");
}

#[test]
fn boeing_path_skips_irrelevant_words() {
    let s = sentence("boeing");
    let tree = build_tree(&s).unwrap();
    let path = shortest_path(&tree, 2, 7).unwrap();
    let forms: Vec<&str> = path.nodes.iter().map(|n| n.form.as_str()).collect();
    assert_eq!(forms, ["announced", "in", "1986"]);
}

fn boeing_models() -> (Oracle, Oracle) {
    (
        Oracle::new(
            &ARGUMENT_CLASSES,
            &[((2, 1), "arg1", 0.95), ((2, 5), "arg2", 0.9), ((2, 7), "argN", 0.9)],
        ),
        Oracle::new(&["NONE", "in", "of"], &[((2, 7), "in", 0.95)]),
    )
}

#[test]
fn boeing_triples() {
    let s = sentence("boeing");
    let (args, preps) = boeing_models();
    let triples = filter_by_score(extract_sentence(&s, &args, Some(&preps)).unwrap(), DEFAULT_THRESHOLD);
    let mut shown: Vec<String> = triples.iter().map(|t| format!("⟨{}; {}; {}⟩", t.arg1, t.rel, t.arg2)).collect();
    shown.sort();
    assert_eq!(
        shown,
        [
            "⟨Boeing; announced the 747 ASB in; 1986⟩",
            "⟨Boeing; announced; the 747 ASB⟩",
            "⟨the 747 ASB; be announced in; 1986⟩",
        ]
    );
}

#[test]
fn meadows_triple() {
    let s = sentence("meadows");
    let (bank, nevada, head) = (word(&s, "bank"), word(&s, "Nevada"), word(&s, "Bank"));
    let args = Oracle::new(&ARGUMENT_CLASSES, &[((bank, head), "arg1", 0.9), ((bank, nevada), "arg2", 0.9)]);
    let preps = Oracle::new(&["NONE", "in", "of"], &[((bank, nevada), "in", 0.9)]);
    let triples = extract_sentence(&s, &args, Some(&preps)).unwrap();
    let shown: Vec<String> = triples.iter().map(|t| format!("⟨{}; {}; {}⟩", t.arg1, t.rel, t.arg2)).collect();
    assert_eq!(shown, ["⟨Meadows Bank; be an independent bank in; Nevada⟩"]);
}

#[test]
fn score_example_and_strict_boundary() {
    assert!((score_triple(0.9, &[0.8, 0.6]) - 0.63).abs() < 1e-12);
    let s = sentence("boeing");
    let (args, preps) = boeing_models();
    let triples = extract_sentence(&s, &args, Some(&preps)).unwrap();
    let top = triples.iter().map(|t| t.score).fold(0.0, f64::max);
    assert!(filter_by_score(triples.clone(), top).is_empty());
    assert!(!filter_by_score(triples, top - 1e-9).is_empty());
}

fn presumption_positives(s: &AnnotatedSentence) -> Vec<TrainingSample> {
    let sentences = BTreeMap::from([(s.id.clone(), s.clone())]);
    label_positives(&sentences, &verb_tuples(s).unwrap(), &[])
        .into_iter()
        .filter(|x| x.task.to_string() == "argument")
        .collect()
}

fn pool_pair(pool: &[PoolEntry], s: &AnnotatedSentence, rel: &str, arg: &str) -> Option<DepPath> {
    let (r, a) = (word(s, rel), word(s, arg));
    pool.iter()
        .find(|e| e.path.rel_index == r && e.path.arg_index == a)
        .map(|e| e.path.clone())
}

#[test]
fn presumption_pool_contents() {
    let s = sentence("presumption");
    let positives = presumption_positives(&s);
    let pool = build_pool(std::slice::from_ref(&s), &positives, 7).unwrap();
    for (rel, arg) in [("rebuffed", "Their"), ("was", "presumption"), ("by", "presumption"), ("spoke", "Moses")] {
        assert!(pool_pair(&pool, &s, rel, arg).is_some(), "path({}, {}) missing", rel, arg);
    }
    assert!(pool_pair(&pool, &s, "rebuffed", "presumption").is_none());
}

/// Scores a path by how closely it overlaps a known positive path: one-node
/// extensions and contractions of a positive get that positive's label with
/// high confidence, anything else is uncertain.
struct Containment {
    classes: Vec<String>,
    positives: Vec<(Vec<usize>, usize)>,
}

impl PathClassifier for Containment {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, path: &DepPath) -> Vec<f64> {
        let mut q = path.indices();
        q.sort_unstable();
        for (p, k) in &self.positives {
            let (small, big) = if p.len() <= q.len() { (p, &q) } else { (&q, p) };
            if big.len() - small.len() <= 1 && small.iter().all(|i| big.contains(i)) {
                let mut v = vec![0.025; 3];
                v[*k] = 0.95;
                return v;
            }
        }
        vec![1.0 / 3.0; 3]
    }
}

#[test]
fn presumption_feedback_sampling() {
    let s = sentence("presumption");
    let positives = presumption_positives(&s);
    let model = Containment {
        classes: POSITIVE_CLASSES.iter().map(|c| c.to_string()).collect(),
        positives: positives
            .iter()
            .map(|x| {
                let mut idx = x.path.indices();
                idx.sort_unstable();
                (idx, POSITIVE_CLASSES.iter().position(|c| *c == x.label).unwrap())
            })
            .collect(),
    };
    let pool = build_pool(std::slice::from_ref(&s), &positives, 7).unwrap();
    let negatives = feedback_negative_sampling(&model, &pool, 0.9).unwrap();
    let picked = |rel: &str, arg: &str| {
        let (r, a) = (word(&s, rel), word(&s, arg));
        negatives.iter().any(|n| n.rel_index() == r && n.arg_index() == a)
    };
    assert!(picked("rebuffed", "Their"));
    assert!(picked("was", "presumption"));
    assert!(picked("by", "presumption"));
    assert!(!picked("spoke", "Moses"));
    assert!(negatives.iter().all(|n| n.label == "null" && n.score.unwrap() > 0.9));
}

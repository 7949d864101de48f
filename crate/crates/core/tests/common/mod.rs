#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use oie_core::augment::GazetteerLinker;
use oie_core::neural::PathClassifier;
use oie_core::{read_corpus, AnnotatedSentence, DepPath};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn corpus() -> Vec<AnnotatedSentence> {
    let file = File::open(fixture("corpus.conll")).unwrap();
    read_corpus(BufReader::new(file)).map(|s| s.unwrap()).collect()
}

pub fn sentence(id: &str) -> AnnotatedSentence {
    corpus().into_iter().find(|s| s.id == id).unwrap()
}

pub fn gazetteer() -> GazetteerLinker {
    GazetteerLinker::from_tsv(BufReader::new(File::open(fixture("gazetteer.tsv")).unwrap())).unwrap()
}

/// Fixed labels for (rel, arg) pairs; the first class for everything else.
pub struct Oracle {
    pub classes: Vec<String>,
    pub labels: BTreeMap<(usize, usize), (String, f64)>,
}

impl Oracle {
    pub fn new(classes: &[&str], labels: &[((usize, usize), &str, f64)]) -> Self {
        Oracle {
            classes: classes.iter().map(|c| c.to_string()).collect(),
            labels: labels.iter().map(|(k, l, p)| (*k, (l.to_string(), *p))).collect(),
        }
    }
}

impl PathClassifier for Oracle {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, path: &DepPath) -> Vec<f64> {
        let n = self.classes.len();
        match self.labels.get(&(path.rel_index, path.arg_index)) {
            Some((label, p)) => {
                let k = self.classes.iter().position(|c| c == label).unwrap();
                let rest = (1.0 - p) / (n - 1) as f64;
                (0..n).map(|i| if i == k { *p } else { rest }).collect()
            }
            None => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            }
        }
    }
}

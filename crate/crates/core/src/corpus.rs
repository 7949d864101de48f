//! Annotated sentences and their dependency trees.
//!
//! Input is a tab-separated column format with one token per line and blank
//! lines between sentences:
//!
//! ```text
//! # sent_id=boeing
//! # dep_conf=0.98
//! 1	Boeing	Boeing	NNP	2	nsubj	ORG	_	A0
//! 2	announced	announce	VBD	0	root	O	announce.01	_
//! ```
//!
//! The first seven columns are `ID FORM LEMMA POS HEAD DEPREL NE`. When more
//! columns are present the eighth is a predicate marker (`_` or a sense label)
//! and it is followed by one role column per predicate, in token order.
//! Comment lines start with `#`; `sent_id`, `dep_conf` and `srl_conf` are read
//! from `key=value` comments, everything else is kept verbatim.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single token of an annotated sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// Index of the syntactic head, 0 for the root.
    pub head: usize,
    pub deprel: String,
    /// Named-entity tag, `O` outside entities.
    pub ne: String,
}

impl Token {
    pub fn is_punctuation(&self) -> bool {
        is_punctuation_tag(&self.pos)
    }

    pub fn is_verbal(&self) -> bool {
        self.pos.starts_with("VB")
    }

    /// NN or NNS, the tags admitted for noun-mediated relations.
    pub fn is_common_noun(&self) -> bool {
        self.pos == "NN" || self.pos == "NNS"
    }

    pub fn is_proper_noun(&self) -> bool {
        self.pos == "NNP" || self.pos == "NNPS"
    }

    pub fn is_cardinal(&self) -> bool {
        self.pos == "CD"
    }

    pub fn is_preposition(&self) -> bool {
        self.pos == "IN"
    }

    /// Nouns and pronouns.
    pub fn is_nominal(&self) -> bool {
        self.pos.starts_with("NN") || matches!(self.pos.as_str(), "PRP" | "PRP$" | "WP" | "WP$")
    }

    pub fn is_adjectival(&self) -> bool {
        self.pos.starts_with("JJ")
    }

    /// Nominal, verbal, adjectival or cardinal tokens.
    pub fn is_content_word(&self) -> bool {
        !self.is_punctuation()
            && (self.is_nominal() || self.is_verbal() || self.is_adjectival() || self.is_cardinal())
    }

    /// Candidate relation headword: verbal, NN or NNS.
    pub fn is_relation_candidate(&self) -> bool {
        !self.is_punctuation() && (self.is_verbal() || self.is_common_noun())
    }
}

/// Penn Treebank punctuation tags, plus the universal `PUNCT`.
pub fn is_punctuation_tag(pos: &str) -> bool {
    matches!(
        pos,
        "." | "," | ":" | "``" | "''" | "-LRB-" | "-RRB-" | "HYPH" | "NFP" | "PUNCT"
    )
}

/// Semantic role label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Agent.
    A0,
    /// Patient.
    A1,
    /// Numbered core roles A2 to A5.
    Numbered(u8),
    /// Modifier roles `AM-*`, e.g. `AM-TMP` is stored as `TMP`.
    Modifier(String),
    /// Continuation (`C-*`) and reference (`R-*`) roles.
    Linked(String),
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "A0" => Ok(Role::A0),
            "A1" => Ok(Role::A1),
            "A2" | "A3" | "A4" | "A5" => Ok(Role::Numbered(s.as_bytes()[1] - b'0')),
            _ => {
                if let Some(suffix) = s.strip_prefix("AM-") {
                    if !suffix.is_empty() {
                        return Ok(Role::Modifier(suffix.to_owned()));
                    }
                }
                if let Some(rest) = s.strip_prefix("C-").or_else(|| s.strip_prefix("R-")) {
                    if rest.parse::<Role>().is_ok() {
                        return Ok(Role::Linked(s.to_owned()));
                    }
                }
                Err(format!("unknown semantic role label '{}'", s))
            }
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::A0 => write!(f, "A0"),
            Role::A1 => write!(f, "A1"),
            Role::Numbered(n) => write!(f, "A{}", n),
            Role::Modifier(m) => write!(f, "AM-{}", m),
            Role::Linked(l) => write!(f, "{}", l),
        }
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One predicate with its labeled arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrlFrame {
    /// Token index of the predicate.
    pub predicate: usize,
    /// Content of the predicate marker column, e.g. `win.01`.
    pub sense: String,
    pub roles: Vec<(Role, usize)>,
    pub confidence: f64,
}

/// A sentence with dependency, named-entity and (optionally) SRL annotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub frames: Vec<SrlFrame>,
    /// Whether SRL columns were present at all.
    pub has_srl: bool,
    pub dep_confidence: f64,
    pub srl_confidence: f64,
    /// Comment lines as read, without the trailing newline.
    pub comments: Vec<String>,
}

impl AnnotatedSentence {
    /// Creates a sentence without SRL annotation and with full confidence.
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Self {
        AnnotatedSentence {
            id: id.into(),
            tokens,
            frames: Vec::new(),
            has_srl: false,
            dep_confidence: 1.0,
            srl_confidence: 1.0,
            comments: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token with the given 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn is_valid_index(&self, index: usize) -> bool {
        index >= 1 && index <= self.tokens.len()
    }

    /// Surface forms joined by single spaces.
    pub fn text(&self) -> String {
        let forms: Vec<&str> = self.tokens.iter().map(|t| t.form.as_str()).collect();
        forms.join(" ")
    }

    /// Checks every token, frame and confidence invariant, including the tree
    /// property of the head links.
    pub fn validate(&self) -> Result<()> {
        build_tree(self).map(|_| ())
    }
}

/// Parent/children view over the head links of a sentence.
#[derive(Clone, Debug)]
pub struct DependencyTree<'a> {
    sentence: &'a AnnotatedSentence,
    parents: Vec<usize>,
    children: Vec<Vec<usize>>,
    depths: Vec<usize>,
    root: usize,
}

impl<'a> DependencyTree<'a> {
    pub fn sentence(&self) -> &'a AnnotatedSentence {
        self.sentence
    }

    pub fn len(&self) -> usize {
        self.sentence.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn token(&self, index: usize) -> &'a Token {
        &self.sentence.tokens[index - 1]
    }

    pub fn contains(&self, index: usize) -> bool {
        self.sentence.is_valid_index(index)
    }

    /// Parent of a token, `None` for the root.
    pub fn parent(&self, index: usize) -> Option<usize> {
        match self.parents[index] {
            0 => None,
            p => Some(p),
        }
    }

    /// Dependents of a token in surface order.
    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Distance to the root; the root has depth 0.
    pub fn depth(&self, index: usize) -> usize {
        self.depths[index]
    }

    pub fn edge_count(&self) -> usize {
        self.parents[1..].iter().filter(|&&p| p != 0).count()
    }

    /// Whether `ancestor` lies on the path from `node` to the root
    /// (a node is its own ancestor).
    pub fn is_ancestor(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.parent(node) {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    /// All tokens of the subtree rooted at `index`, sorted by position.
    pub fn subtree(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![index];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend_from_slice(&self.children[n]);
        }
        out.sort_unstable();
        out
    }
}

/// Validates the sentence and builds its tree view.
pub fn build_tree(sentence: &AnnotatedSentence) -> Result<DependencyTree<'_>> {
    let n = sentence.tokens.len();
    let fail = |message: String| Error::structure(sentence.id.clone(), message);

    for (name, value) in [
        ("dep_conf", sentence.dep_confidence),
        ("srl_conf", sentence.srl_confidence),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(fail(format!("{} {} outside [0, 1]", name, value)));
        }
    }

    let mut parents = vec![0; n + 1];
    let mut children = vec![Vec::new(); n + 1];
    let mut root = None;
    for (i, token) in sentence.tokens.iter().enumerate() {
        if token.index != i + 1 {
            return Err(fail(format!(
                "token at position {} has index {}",
                i + 1,
                token.index
            )));
        }
        if token.pos.is_empty() || token.deprel.is_empty() {
            return Err(fail(format!("token {} has an empty POS or label", token.index)));
        }
        if token.head == token.index {
            return Err(fail(format!("token {} is its own head", token.index)));
        }
        if token.head > n {
            return Err(fail(format!(
                "token {} has head {} outside the sentence",
                token.index, token.head
            )));
        }
        if token.head == 0 {
            if let Some(r) = root {
                return Err(fail(format!("tokens {} and {} are both roots", r, token.index)));
            }
            root = Some(token.index);
        } else {
            children[token.head].push(token.index);
        }
        parents[token.index] = token.head;
    }

    let root = match root {
        Some(r) => r,
        None if n == 0 => 0,
        None => return Err(fail("no root token".to_owned())),
    };

    // Breadth-first from the root; every token must be reached exactly once.
    let mut depths = vec![usize::MAX; n + 1];
    if n > 0 {
        depths[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        let mut seen = 1;
        while let Some(node) = queue.pop_front() {
            for &c in &children[node] {
                depths[c] = depths[node] + 1;
                seen += 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            let stray = (1..=n).find(|&i| depths[i] == usize::MAX).unwrap_or(0);
            return Err(fail(format!(
                "head links contain a cycle (token {} is not connected to the root)",
                stray
            )));
        }
    }

    for frame in &sentence.frames {
        if !sentence.is_valid_index(frame.predicate) {
            return Err(fail(format!("frame predicate {} out of range", frame.predicate)));
        }
        if !(0.0..=1.0).contains(&frame.confidence) {
            return Err(fail(format!("frame confidence {} outside [0, 1]", frame.confidence)));
        }
        if let Some((role, idx)) = frame.roles.iter().find(|(_, i)| !sentence.is_valid_index(*i)) {
            return Err(fail(format!("role {} points at invalid token {}", role, idx)));
        }
    }

    Ok(DependencyTree {
        sentence,
        parents,
        children,
        depths,
        root,
    })
}

/// Streaming reader over sentence blocks.
///
/// Each block yields either a validated sentence or the error that rejected
/// it; reading continues with the next block after an error.
pub struct CorpusReader<R> {
    reader: R,
    line_no: usize,
    block_no: usize,
    done: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            reader,
            line_no: 0,
            block_no: 0,
            done: false,
        }
    }

    fn next_block(&mut self) -> Result<Option<Vec<(usize, String)>>> {
        let mut block = Vec::new();
        let mut buf = String::new();
        loop {
            buf.clear();
            if self.reader.read_line(&mut buf)? == 0 {
                self.done = true;
                break;
            }
            self.line_no += 1;
            let line = buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                if block.is_empty() {
                    continue;
                }
                break;
            }
            block.push((self.line_no, line.to_owned()));
        }
        Ok(if block.is_empty() { None } else { Some(block) })
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<AnnotatedSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_block() {
            Ok(Some(block)) => {
                self.block_no += 1;
                Some(parse_block(&block, self.block_no))
            }
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Reads all sentence blocks from `reader`.
pub fn read_corpus<R: BufRead>(reader: R) -> CorpusReader<R> {
    CorpusReader::new(reader)
}

fn parse_confidence(value: &str, line: usize) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid confidence '{}'", value.trim())))
}

fn parse_block(block: &[(usize, String)], block_no: usize) -> Result<AnnotatedSentence> {
    let mut id = None;
    let mut dep_confidence = 1.0;
    let mut srl_confidence = 1.0;
    let mut comments = Vec::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();

    for (line_no, line) in block {
        if let Some(body) = line.strip_prefix('#') {
            if let Some((key, value)) = body.split_once('=') {
                match key.trim() {
                    "sent_id" => id = Some(value.trim().to_owned()),
                    "dep_conf" => dep_confidence = parse_confidence(value, *line_no)?,
                    "srl_conf" => srl_confidence = parse_confidence(value, *line_no)?,
                    _ => {}
                }
            }
            comments.push(line.clone());
            continue;
        }
        rows.push((*line_no, line.split('\t').collect()));
    }
    let id = id.unwrap_or_else(|| format!("s{}", block_no));

    let width = rows.first().map(|(_, cols)| cols.len()).unwrap_or(7);
    let has_srl = width > 7;
    let predicate_count = rows
        .iter()
        .filter(|(_, cols)| cols.len() > 7 && cols[7] != "_")
        .count();
    let expected = if has_srl { 8 + predicate_count } else { 7 };

    let mut tokens = Vec::with_capacity(rows.len());
    let mut frames: Vec<SrlFrame> = Vec::new();
    for (line_no, cols) in &rows {
        let line_no = *line_no;
        if cols.len() != expected {
            return Err(Error::parse(
                line_no,
                format!("expected {} columns, found {}", expected, cols.len()),
            ));
        }
        let index = cols[0]
            .parse::<usize>()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| Error::parse(line_no, format!("invalid token id '{}'", cols[0])))?;
        let head = cols[4]
            .parse::<usize>()
            .map_err(|_| Error::parse(line_no, format!("invalid head '{}'", cols[4])))?;
        if cols[3].is_empty() || cols[5].is_empty() {
            return Err(Error::parse(line_no, "empty POS or dependency label"));
        }
        tokens.push(Token {
            index,
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            pos: cols[3].to_owned(),
            head,
            deprel: cols[5].to_owned(),
            ne: cols[6].to_owned(),
        });
        if has_srl && cols[7] != "_" {
            frames.push(SrlFrame {
                predicate: index,
                sense: cols[7].to_owned(),
                roles: Vec::new(),
                confidence: srl_confidence,
            });
        }
    }
    if has_srl {
        for ((line_no, cols), token) in rows.iter().zip(&tokens) {
            let index = token.index;
            for (frame, cell) in frames.iter_mut().zip(&cols[8..]) {
                if *cell == "_" {
                    continue;
                }
                let role = cell
                    .parse::<Role>()
                    .map_err(|message| Error::parse(*line_no, message))?;
                frame.roles.push((role, index));
            }
        }
    }

    let sentence = AnnotatedSentence {
        id,
        tokens,
        frames,
        has_srl,
        dep_confidence,
        srl_confidence,
        comments,
    };
    sentence.validate()?;
    Ok(sentence)
}

/// Writes a sentence in the column format, followed by a blank line.
pub fn write_sentence<W: Write>(writer: &mut W, sentence: &AnnotatedSentence) -> Result<()> {
    for comment in &sentence.comments {
        writeln!(writer, "{}", comment)?;
    }
    for token in &sentence.tokens {
        write!(
            writer,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            token.index, token.form, token.lemma, token.pos, token.head, token.deprel, token.ne
        )?;
        if sentence.has_srl {
            let sense = sentence
                .frames
                .iter()
                .find(|f| f.predicate == token.index)
                .map(|f| f.sense.as_str())
                .unwrap_or("_");
            write!(writer, "\t{}", sense)?;
            for frame in &sentence.frames {
                match frame.roles.iter().find(|(_, i)| *i == token.index) {
                    Some((role, _)) => write!(writer, "\t{}", role)?,
                    None => write!(writer, "\t_")?,
                }
            }
        }
        writeln!(writer)?;
    }
    writeln!(writer)?;
    Ok(())
}

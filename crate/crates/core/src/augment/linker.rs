//! Entity linking behind a small trait, with an offline gazetteer and a
//! client for Spotlight-style annotate endpoints.

use std::collections::HashMap;
use std::io::BufRead;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::AnnotatedSentence;
use crate::error::{Error, Result};

/// An entity mention over a token span.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkedMention {
    pub sentence_id: String,
    /// First token of the span (1-based).
    pub start: usize,
    /// Last token of the span, inclusive.
    pub end: usize,
    pub entity: String,
    pub confidence: f64,
}

impl LinkedMention {
    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn overlaps(&self, other: &LinkedMention) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

pub trait EntityLinker {
    /// Non-overlapping mentions in the sentence, sorted by position.
    fn link(&self, sentence: &AnnotatedSentence) -> Result<Vec<LinkedMention>>;
}

/// Longest spans win; among equally long spans the leftmost wins.
fn resolve_overlaps(mut candidates: Vec<LinkedMention>) -> Vec<LinkedMention> {
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then(a.start.cmp(&b.start)));
    let mut kept: Vec<LinkedMention> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| !k.overlaps(&c)) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|m| m.start);
    kept
}

/// Exact-surface linker over an entity dump.
#[derive(Clone, Debug, Default)]
pub struct GazetteerLinker {
    entries: HashMap<String, String>,
    max_tokens: usize,
}

impl GazetteerLinker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a surface form; multi-token surfaces are space-separated.
    pub fn insert(&mut self, surface: &str, entity: &str) {
        let normalized: Vec<&str> = surface.split_whitespace().collect();
        if normalized.is_empty() {
            return;
        }
        self.max_tokens = self.max_tokens.max(normalized.len());
        self.entries.insert(normalized.join(" "), entity.to_owned());
    }

    /// Reads `surface<TAB>entity` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut linker = Self::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, entity) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n + 1, "expected surface<TAB>entity"))?;
            if entity.trim().is_empty() || entity.contains('\t') {
                return Err(Error::parse(n + 1, "expected exactly two columns"));
            }
            linker.insert(surface, entity.trim());
        }
        Ok(linker)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EntityLinker for GazetteerLinker {
    fn link(&self, sentence: &AnnotatedSentence) -> Result<Vec<LinkedMention>> {
        let n = sentence.len();
        let mut candidates = Vec::new();
        for start in 0..n {
            for len in 1..=self.max_tokens.min(n - start) {
                let surface: Vec<&str> = sentence.tokens[start..start + len]
                    .iter()
                    .map(|t| t.form.as_str())
                    .collect();
                if let Some(entity) = self.entries.get(&surface.join(" ")) {
                    candidates.push(LinkedMention {
                        sentence_id: sentence.id.clone(),
                        start: start + 1,
                        end: start + len,
                        entity: entity.clone(),
                        confidence: 1.0,
                    });
                }
            }
        }
        Ok(resolve_overlaps(candidates))
    }
}

/// Client for an HTTP annotate endpoint with the DBpedia Spotlight request and
/// response shape.
///
/// The sentence text (tokens joined by single spaces) is posted as the form
/// field `text` together with `confidence`; the JSON answer lists resources
/// with `@URI`, `@surfaceForm`, `@offset` (in characters) and
/// `@similarityScore`.
#[derive(Clone, Debug)]
pub struct RemoteLinker {
    endpoint: String,
    min_confidence: f64,
    client: reqwest::blocking::Client,
}

impl RemoteLinker {
    pub fn new(endpoint: impl Into<String>, min_confidence: f64) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client: {}", e)))?;
        Ok(RemoteLinker {
            endpoint: endpoint.into(),
            min_confidence,
            client,
        })
    }

    fn request(&self, text: &str) -> Result<String> {
        let confidence = self.min_confidence.to_string();
        let response = self
            .client
            .post(&self.endpoint)
            .header("Accept", "application/json")
            .form(&[("text", text), ("confidence", confidence.as_str())])
            .send()
            .map_err(|e| Error::Retryable(format!("{}: {}", self.endpoint, e)))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(Error::Retryable(format!("{} answered {}", self.endpoint, status)));
        }
        if !status.is_success() {
            return Err(Error::Protocol(format!("{} answered {}", self.endpoint, status)));
        }
        response
            .text()
            .map_err(|e| Error::Retryable(format!("{}: {}", self.endpoint, e)))
    }
}

/// Character offsets `[start, end)` of each token in the space-joined text.
fn token_offsets(sentence: &AnnotatedSentence) -> Vec<(usize, usize)> {
    let mut offsets = Vec::with_capacity(sentence.len());
    let mut pos = 0;
    for token in &sentence.tokens {
        let len = token.form.chars().count();
        offsets.push((pos, pos + len));
        pos += len + 1;
    }
    offsets
}

fn string_or_number(value: &Value, field: &str) -> Result<String> {
    match value.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(Error::Protocol(format!("resource without '{}'", field))),
    }
}

/// Maps an annotate response onto token spans.
pub fn parse_annotate_response(
    sentence: &AnnotatedSentence,
    body: &str,
    min_confidence: f64,
) -> Result<Vec<LinkedMention>> {
    let json: Value =
        serde_json::from_str(body).map_err(|e| Error::Protocol(format!("invalid JSON: {}", e)))?;
    if !json.is_object() {
        return Err(Error::Protocol("response is not a JSON object".into()));
    }
    let resources = match json.get("Resources") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(Error::Protocol("'Resources' is not an array".into())),
    };

    let offsets = token_offsets(sentence);
    let mut candidates = Vec::new();
    for resource in resources {
        let entity = string_or_number(resource, "@URI")?;
        let surface = string_or_number(resource, "@surfaceForm")?;
        let offset: usize = string_or_number(resource, "@offset")?
            .parse()
            .map_err(|_| Error::Protocol("'@offset' is not an integer".into()))?;
        let confidence: f64 = string_or_number(resource, "@similarityScore")?
            .parse()
            .map_err(|_| Error::Protocol("'@similarityScore' is not a number".into()))?;
        if confidence < min_confidence {
            continue;
        }
        let end_offset = offset + surface.chars().count();
        let start = offsets.iter().position(|&(s, _)| s == offset);
        let end = offsets.iter().position(|&(_, e)| e == end_offset);
        match (start, end) {
            (Some(s), Some(e)) if s <= e => candidates.push(LinkedMention {
                sentence_id: sentence.id.clone(),
                start: s + 1,
                end: e + 1,
                entity,
                confidence: confidence.clamp(0.0, 1.0),
            }),
            _ => warn!(
                "sentence {}: mention '{}' at offset {} does not align with tokens",
                sentence.id, surface, offset
            ),
        }
    }
    Ok(resolve_overlaps(candidates))
}

impl EntityLinker for RemoteLinker {
    fn link(&self, sentence: &AnnotatedSentence) -> Result<Vec<LinkedMention>> {
        if sentence.is_empty() {
            return Ok(Vec::new());
        }
        let body = self.request(&sentence.text())?;
        parse_annotate_response(sentence, &body, self.min_confidence)
    }
}

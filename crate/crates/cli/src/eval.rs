//! Precision over yield from manually annotated triples.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use oie_core::extractor::Triple;
use oie_core::{Error, Result};

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

/// Reads `id<TAB>C|I` lines; `#` starts a comment.
pub fn read_annotations<R: BufRead>(reader: R) -> Result<BTreeMap<String, bool>> {
    let mut out = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, mark) = trimmed
            .split_once('\t')
            .ok_or_else(|| parse_error(n + 1, "expected id<TAB>C|I".into()))?;
        let correct = match mark.trim() {
            "C" | "c" => true,
            "I" | "i" => false,
            other => return Err(parse_error(n + 1, format!("unknown mark '{}'", other))),
        };
        out.insert(id.trim().to_string(), correct);
    }
    Ok(out)
}

/// One row of the precision/yield table.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub yield_count: usize,
    pub correct: usize,
    pub precision: f64,
    pub score: f64,
}

/// Cumulative precision over the annotated triples in descending score
/// order. Returns the table and the ids that had no annotation.
pub fn precision_yield(triples: &[Triple], annotations: &BTreeMap<String, bool>) -> (Vec<EvalRow>, Vec<String>) {
    let mut order: Vec<&Triple> = triples.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    let mut correct = 0;
    for t in order {
        match annotations.get(&t.id) {
            Some(&ok) => {
                correct += ok as usize;
                let n = rows.len() + 1;
                rows.push(EvalRow {
                    yield_count: n,
                    correct,
                    precision: correct as f64 / n as f64,
                    score: t.score,
                });
            }
            None => missing.push(t.id.clone()),
        }
    }
    (rows, missing)
}

pub fn write_table<W: Write>(writer: &mut W, rows: &[EvalRow]) -> Result<()> {
    writeln!(writer, "yield\tcorrect\tprecision\tscore")?;
    for r in rows {
        writeln!(writer, "{}\t{}\t{:.4}\t{:.6}", r.yield_count, r.correct, r.precision, r.score)?;
    }
    Ok(())
}

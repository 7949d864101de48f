//! Feature vocabularies, embedding tables and word2vec text loading.

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Feature, ModelConfig};
use crate::dpath::PathNode;
use crate::error::{Error, Result};

/// Entry reserved for unknown feature values; always index 0.
pub const UNK: &str = "<unk>";

/// Bounds of the uniform distribution used for random initialization.
pub const INIT_RANGE: f64 = 0.05;

/// Ordered string-to-index map with `UNK` at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            items: Vec::new(),
            index: HashMap::new(),
        };
        v.insert(UNK);
        v
    }

    /// Adds an entry if missing and returns its index.
    pub fn insert(&mut self, item: &str) -> usize {
        if let Some(&i) = self.index.get(item) {
            return i;
        }
        self.items.push(item.to_owned());
        self.index.insert(item.to_owned(), self.items.len() - 1);
        self.items.len() - 1
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    /// Index of `item`, or of `UNK` when absent.
    pub fn lookup(&self, item: &str) -> usize {
        self.get(item).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(items: Vec<String>) -> Self {
        let mut v = Vocabulary {
            items: Vec::new(),
            index: HashMap::new(),
        };
        if items.first().map(|s| s.as_str()) != Some(UNK) {
            v.insert(UNK);
        }
        for item in &items {
            v.insert(item);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.items
    }
}

/// Raw feature value of a path node for one feature type.
pub fn feature_value(node: &PathNode, feature: Feature) -> String {
    match feature {
        Feature::Word => node.form.clone(),
        Feature::Pos => node.pos.clone(),
        Feature::Dep => node.edge.feature(),
        Feature::Ne => node.ne.clone(),
    }
}

/// One embedding matrix. Row `k` holds the vector of vocabulary entry `k`,
/// i.e. the matrix is stored transposed with respect to `dim × |V|`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub matrix: Array2<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Row index for a feature value. Words fall back to their lowercase form
    /// before mapping to `UNK`.
    pub fn row(&self, feature: Feature, value: &str) -> usize {
        match self.vocab.get(value) {
            Some(i) => i,
            None if feature == Feature::Word => self.vocab.lookup(&value.to_lowercase()),
            None => 0,
        }
    }
}

/// Embedding matrices for word, POS, dependency-edge and named-entity features.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTables {
    pub tables: [EmbeddingTable; 4],
}

impl EmbeddingTables {
    pub fn table(&self, feature: Feature) -> &EmbeddingTable {
        &self.tables[feature as usize]
    }

    pub fn table_mut(&mut self, feature: Feature) -> &mut EmbeddingTable {
        &mut self.tables[feature as usize]
    }

    /// Length of the concatenated input vector.
    pub fn input_dim(&self) -> usize {
        self.tables.iter().map(|t| t.dim()).sum()
    }

    /// Vocabulary rows selected by a node, one per feature.
    pub fn rows(&self, node: &PathNode) -> [usize; 4] {
        Feature::ALL.map(|f| self.table(f).row(f, &feature_value(node, f)))
    }

    /// Builds randomly initialized tables over the given vocabularies.
    /// Inactive features get zero-width tables.
    pub fn random<R: Rng>(config: &ModelConfig, vocabs: [Vocabulary; 4], rng: &mut R) -> Self {
        let tables = Feature::ALL.map(|f| {
            let vocab = vocabs[f as usize].clone();
            let dim = config.feature_dim(f);
            let matrix = Array2::from_shape_simple_fn((vocab.len(), dim), || {
                rng.gen_range(-INIT_RANGE..=INIT_RANGE)
            });
            EmbeddingTable { vocab, matrix }
        });
        EmbeddingTables { tables }
    }

    /// Overwrites rows of words found in `vectors`, adding entries for words
    /// that are not yet in the vocabulary.
    pub fn load_word_vectors(&mut self, vectors: &WordVectors) -> Result<()> {
        let table = self.table_mut(Feature::Word);
        if table.dim() == 0 {
            return Ok(());
        }
        if vectors.dim != table.dim() {
            return Err(Error::Config(format!(
                "word vectors have dimension {}, model expects {}",
                vectors.dim,
                table.dim()
            )));
        }
        let mut extra = Vec::new();
        for (k, word) in vectors.words.iter().enumerate() {
            match table.vocab.get(word) {
                Some(row) => table.matrix.row_mut(row).assign(&vectors.vectors.row(k)),
                None => {
                    table.vocab.insert(word);
                    extra.push(k);
                }
            }
        }
        if !extra.is_empty() {
            let old_rows = table.matrix.nrows();
            let mut grown = Array2::zeros((old_rows + extra.len(), table.dim()));
            grown
                .slice_mut(ndarray::s![..old_rows, ..])
                .assign(&table.matrix);
            for (offset, &k) in extra.iter().enumerate() {
                grown.row_mut(old_rows + offset).assign(&vectors.vectors.row(k));
            }
            table.matrix = grown;
        }
        Ok(())
    }
}

/// Concatenated input vector `[word, pos, dep, ne]` for a node.
pub fn embed_node(node: &PathNode, tables: &EmbeddingTables) -> Array1<f64> {
    embed_rows(&tables.rows(node), tables)
}

pub(crate) fn embed_rows(rows: &[usize; 4], tables: &EmbeddingTables) -> Array1<f64> {
    let mut x = Array1::zeros(tables.input_dim());
    let mut offset = 0;
    for (table, &row) in tables.tables.iter().zip(rows) {
        let dim = table.dim();
        x.slice_mut(ndarray::s![offset..offset + dim])
            .assign(&table.matrix.row(row));
        offset += dim;
    }
    x
}

/// Pretrained vectors in word2vec text format.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    pub words: Vec<String>,
    /// One row per word.
    pub vectors: Array2<f64>,
}

/// Reads the word2vec text format.
///
/// The first line is `<count> <dim>`. Each following line holds a token and
/// `dim` decimal numbers, separated by ASCII whitespace; numbers are parsed
/// with Rust's correctly rounded `f64` parser. Exactly `count` vector lines
/// must follow (blank lines are ignored). A repeated token keeps its first
/// vector.
pub fn read_word2vec_text<R: BufRead>(reader: R) -> Result<WordVectors> {
    let mut lines = reader.lines().enumerate();
    let (count, dim) = loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing word2vec header"))?;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let parsed = match fields.as_slice() {
            [c, d] => c.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
            _ => None,
        };
        break parsed.ok_or_else(|| Error::parse(n + 1, "header must be '<count> <dim>'"))?;
    };

    let mut words = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut seen = HashMap::new();
    let mut read = 0;
    let mut last_line = 1;
    for (n, line) in lines {
        let line = line?;
        last_line = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        read += 1;
        if read > count {
            return Err(Error::parse(n + 1, format!("more than {} vectors", count)));
        }
        let mut fields = line.split_ascii_whitespace();
        let word = fields.next().expect("non-blank line has a field").to_owned();
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(n + 1, format!("invalid number '{}'", f)))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                n + 1,
                format!("expected {} values, found {}", dim, values.len()),
            ));
        }
        if seen.insert(word.clone(), words.len()).is_some() {
            continue;
        }
        words.push(word);
        data.extend(values);
    }
    if read < count {
        return Err(Error::parse(
            last_line,
            format!("expected {} vectors, found {}", count, read),
        ));
    }
    let rows = words.len();
    let vectors = Array2::from_shape_vec((rows, dim), data).expect("rows * dim values");
    Ok(WordVectors { dim, words, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpath::Edge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(form: &str, pos: &str, edge: Edge, ne: &str) -> PathNode {
        PathNode {
            index: 1,
            form: form.into(),
            lemma: form.to_lowercase(),
            pos: pos.into(),
            ne: ne.into(),
            edge,
        }
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            dim_word: 3,
            dim_pos: 2,
            dim_dep: 2,
            dim_ne: 1,
            ..ModelConfig::default()
        }
    }

    fn vocabs() -> [Vocabulary; 4] {
        let mut w = Vocabulary::new();
        w.insert("Boeing");
        w.insert("announced");
        let mut p = Vocabulary::new();
        p.insert("NNP");
        let mut d = Vocabulary::new();
        d.insert("START");
        let mut n = Vocabulary::new();
        n.insert("ORG");
        [w, p, d, n]
    }

    #[test]
    fn unknown_features_map_to_unk_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tables = EmbeddingTables::random(&small_config(), vocabs(), &mut rng);
        let n = node("Airbus", "VBZ", Edge::Up("xcomp".into()), "GPE");
        assert_eq!(tables.rows(&n), [0, 0, 0, 0]);
        let x = embed_node(&n, &tables);
        let expected: Vec<f64> = tables
            .tables
            .iter()
            .flat_map(|t| t.matrix.row(0).to_vec())
            .collect();
        assert_eq!(x.to_vec(), expected);
    }

    #[test]
    fn known_features_select_their_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tables = EmbeddingTables::random(&small_config(), vocabs(), &mut rng);
        let n = node("Boeing", "NNP", Edge::Start, "ORG");
        let x = embed_node(&n, &tables);
        assert_eq!(x.len(), 8);
        assert_eq!(x.slice(ndarray::s![0..3]).to_vec(), tables.tables[0].matrix.row(1).to_vec());
        assert_eq!(x.slice(ndarray::s![3..5]).to_vec(), tables.tables[1].matrix.row(1).to_vec());
        assert_eq!(x.slice(ndarray::s![5..7]).to_vec(), tables.tables[2].matrix.row(1).to_vec());
        assert_eq!(x[7], tables.tables[3].matrix[[1, 0]]);
    }

    #[test]
    fn default_input_is_450_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tables = EmbeddingTables::random(&ModelConfig::default(), vocabs(), &mut rng);
        assert_eq!(tables.input_dim(), 450);
        let x = embed_node(&node("x", "NN", Edge::Start, "O"), &tables);
        assert_eq!(x.len(), 450);
    }

    #[test]
    fn lowercase_fallback_for_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut v = vocabs();
        v[0].insert("the");
        let tables = EmbeddingTables::random(&small_config(), v, &mut rng);
        assert_eq!(tables.rows(&node("The", "DT", Edge::Start, "O"))[0], 3);
    }

    #[test]
    fn word2vec_text_parsing() {
        let text = "3 2\nthe 0.1 -0.2\nBoeing 1e-3 4\n  \nthe 9 9\n";
        let v = read_word2vec_text(text.as_bytes()).unwrap();
        assert_eq!(v.dim, 2);
        assert_eq!(v.words, ["the", "Boeing"]);
        assert_eq!(v.vectors.row(0).to_vec(), [0.1, -0.2]);
        assert_eq!(v.vectors.row(1).to_vec(), [0.001, 4.0]);
    }

    #[test]
    fn word2vec_errors_carry_line_numbers() {
        assert!(matches!(read_word2vec_text("x\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_word2vec_text("1 2\nthe 0.1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_word2vec_text("1 1\na 1\nb 2\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_word2vec_text("1 1\na x\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn pretrained_vectors_override_and_extend() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tables = EmbeddingTables::random(&small_config(), vocabs(), &mut rng);
        let vectors = read_word2vec_text("2 3\nBoeing 1 2 3\nAirbus 4 5 6\n".as_bytes()).unwrap();
        tables.load_word_vectors(&vectors).unwrap();
        let words = tables.table(Feature::Word);
        assert_eq!(words.matrix.row(1).to_vec(), [1.0, 2.0, 3.0]);
        let airbus = words.vocab.get("Airbus").unwrap();
        assert_eq!(words.matrix.row(airbus).to_vec(), [4.0, 5.0, 6.0]);
        let wrong = read_word2vec_text("1 2\nx 1 2\n".as_bytes()).unwrap();
        assert!(matches!(tables.load_word_vectors(&wrong), Err(Error::Config(_))));
    }
}

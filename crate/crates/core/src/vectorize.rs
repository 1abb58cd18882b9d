//! Bag-of-words and bag-of-characters n-gram features.
//!
//! Word n-grams are taken over semantically preprocessed tokens, character
//! n-grams over the raw tweet text. Counts can be binarized and re-weighted
//! with smooth IDF, `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, followed by L2
//! normalization.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Term multiset. Ordered so iteration never depends on hashing.
pub type TermCounts = BTreeMap<String, u32>;

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unordered `(index, value)` pairs: sorts, sums duplicates,
    /// drops zeros.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::InvalidInput(format!("index {i} out of bounds for dim {dim}")));
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = SparseVector { dim, indices, values };
        out.prune_zeros();
        Ok(out)
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        SparseVector {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let (indices, values) = self.iter().filter(|(_, v)| *v != 0.0).unzip();
        self.indices = indices;
        self.values = values;
    }
}

/// One block of a concatenated feature vector.
#[derive(Clone, Copy, Debug)]
pub enum Block<'a> {
    Sparse(&'a SparseVector),
    Dense(&'a [f64]),
}

impl Block<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Block::Sparse(v) => v.dim(),
            Block::Dense(v) => v.len(),
        }
    }
}

/// Index-shifted concatenation. When `expected_dims` is given, each block
/// must match the corresponding fit-time dimension.
pub fn concat_features(blocks: &[Block<'_>], expected_dims: Option<&[usize]>) -> Result<SparseVector> {
    if let Some(expected) = expected_dims {
        if expected.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: expected.len(),
                actual: blocks.len(),
            });
        }
        for (block, &dim) in blocks.iter().zip(expected) {
            if block.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: block.dim(),
                });
            }
        }
    }
    let mut out = SparseVector::zeros(0);
    for block in blocks {
        let offset = out.dim;
        match block {
            Block::Sparse(v) => {
                for (i, x) in v.iter() {
                    out.indices.push(offset + i);
                    out.values.push(x);
                }
            }
            Block::Dense(v) => {
                for (i, &x) in v.iter().enumerate() {
                    if x != 0.0 {
                        out.indices.push(offset + i);
                        out.values.push(x);
                    }
                }
            }
        }
        out.dim += block.dim();
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub n_max: usize,
    #[serde(default)]
    pub binarize: bool,
    #[serde(default = "default_true")]
    pub tfidf: bool,
}

fn default_true() -> bool {
    true
}

impl NgramConfig {
    pub const WORD_DEFAULT: NgramConfig = NgramConfig {
        n_max: 5,
        binarize: false,
        tfidf: true,
    };
    pub const CHAR_DEFAULT: NgramConfig = NgramConfig {
        n_max: 6,
        binarize: false,
        tfidf: true,
    };

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::Config("n-gram n_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// All contiguous token runs of length `1..=n_max`, joined by one space.
pub fn extract_word_ngrams<S: AsRef<str>>(tokens: &[S], n_max: usize) -> TermCounts {
    let mut counts = TermCounts::new();
    for n in 1..=n_max.min(tokens.len()) {
        for window in tokens.windows(n) {
            let term = window.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
            *counts.entry(term).or_default() += 1;
        }
    }
    counts
}

/// All contiguous substrings of `1..=n_max` Unicode scalar values.
pub fn extract_char_ngrams(text: &str, n_max: usize) -> TermCounts {
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = boundaries.len() - 1;
    let mut counts = TermCounts::new();
    for n in 1..=n_max.min(chars) {
        for start in 0..=chars - n {
            let term = &text[boundaries[start]..boundaries[start + n]];
            *counts.entry(term.to_string()).or_default() += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_count: usize,
    config: NgramConfig,
}

#[derive(Serialize, Deserialize)]
struct VocabHeader {
    doc_count: usize,
    size: usize,
    config: NgramConfig,
}

impl Vocabulary {
    /// Fits terms and smooth IDF over a corpus. Indices follow the
    /// lexicographic order of terms.
    pub fn fit(corpus: &[TermCounts], config: NgramConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot fit a vocabulary on an empty corpus".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            for term in doc.keys() {
                *df.entry(term.as_str()).or_default() += 1;
            }
        }
        let n = corpus.len() as f64;
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let idf = df.values().map(|&d| smooth_idf(n, d as f64)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            terms,
            index,
            idf,
            doc_count: corpus.len(),
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn config(&self) -> NgramConfig {
        self.config
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Counts (or 1 when binarized), times IDF and L2-normalized when TF-IDF
    /// is on. Unseen terms are dropped.
    pub fn transform(&self, counts: &TermCounts) -> SparseVector {
        let mut pairs: Vec<(usize, f64)> = counts
            .iter()
            .filter_map(|(term, &c)| {
                let i = self.index_of(term)?;
                let mut v = if self.config.binarize { 1.0 } else { c as f64 };
                if self.config.tfidf {
                    v *= self.idf[i];
                }
                Some((i, v))
            })
            .collect();
        pairs.sort_by_key(|&(i, _)| i);
        let mut out = SparseVector::from_pairs(self.len(), pairs).expect("indices come from the vocabulary");
        if self.config.tfidf {
            let norm = out.norm();
            if norm > 0.0 {
                for v in &mut out.values {
                    *v /= norm;
                }
            }
        }
        out
    }

    /// TSV form: a JSON header line, then `term<TAB>index<TAB>idf` per term.
    /// Tabs, newlines and backslashes in terms are escaped.
    pub fn to_tsv(&self) -> String {
        let header = VocabHeader {
            doc_count: self.doc_count,
            size: self.len(),
            config: self.config,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (i, term) in self.terms.iter().enumerate() {
            out.push_str(&escape_term(term));
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\t');
            out.push_str(&format!("{:?}", self.idf[i]));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(content: &str, origin: &Path) -> Result<Self> {
        let mut lines = content.lines();
        let header: VocabHeader = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::parse(origin, 1, format!("bad vocabulary header: {e}")))?;
        let mut terms = Vec::with_capacity(header.size);
        let mut idf = Vec::with_capacity(header.size);
        for (lineno, line) in lines.enumerate() {
            let lineno = lineno + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            let [term, index, value] = fields.as_slice() else {
                return Err(Error::parse(origin, lineno, "expected term<TAB>index<TAB>idf"));
            };
            let index: usize = index.parse().map_err(|_| Error::parse(origin, lineno, "bad index"))?;
            if index != terms.len() {
                return Err(Error::parse(origin, lineno, "indices must be dense and ordered"));
            }
            let value: f64 = value.parse().map_err(|_| Error::parse(origin, lineno, "bad idf"))?;
            terms.push(unescape_term(term));
            idf.push(value);
        }
        if terms.len() != header.size {
            return Err(Error::parse(
                origin,
                1,
                format!("header declares {} terms, found {}", header.size, terms.len()),
            ));
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            terms,
            index,
            idf,
            doc_count: header.doc_count,
            config: header.config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&content, path)
    }
}

fn smooth_idf(doc_count: f64, df: f64) -> f64 {
    ((1.0 + doc_count) / (1.0 + df)).ln() + 1.0
}

fn escape_term(term: &str) -> String {
    let mut out = String::with_capacity(term.len());
    for ch in term.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_term(term: &str) -> String {
    let mut out = String::with_capacity(term.len());
    let mut chars = term.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(c) => out.push(c),
            None => out.push('\\'),
        }
    }
    out
}

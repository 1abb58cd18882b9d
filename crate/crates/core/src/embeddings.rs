//! Word vectors with subword fallback and SIF tweet embeddings.
//!
//! Vectors load from the word2vec text format. An optional sidecar holds
//! subword bucket vectors: an out-of-vocabulary word gets the mean of the
//! buckets of its character n-grams, with the word wrapped as `<word>` and
//! each n-gram hashed with 32-bit FNV-1a modulo the bucket count.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_N: usize = 3;
pub const DEFAULT_MAX_N: usize = 6;
pub const DEFAULT_BUCKET_COUNT: usize = 2_000_000;

/// 32-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a_32(s: &str) -> u32 {
    let mut hash: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        hash ^= u32::from(b);
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

/// Character n-grams of `<word>` for every `n` in `min_n..=max_n`, in order
/// of length then position.
pub fn subword_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = format!("<{word}>").chars().collect();
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        if n > wrapped.len() {
            break;
        }
        for window in wrapped.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subwords {
    pub min_n: usize,
    pub max_n: usize,
    pub bucket_count: usize,
    /// Buckets absent from the map are zero vectors.
    pub buckets: HashMap<usize, Vec<f64>>,
}

impl Subwords {
    pub fn bucket_of(&self, ngram: &str) -> usize {
        fnv1a_32(ngram) as usize % self.bucket_count
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: HashMap<String, Vec<f64>>,
    subwords: Option<Subwords>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, words: HashMap<String, Vec<f64>>, subwords: Option<Subwords>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        let wrong = words
            .values()
            .chain(subwords.iter().flat_map(|s| s.buckets.values()))
            .find(|v| v.len() != dim);
        if let Some(v) = wrong {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if let Some(s) = &subwords {
            if s.bucket_count == 0 || s.min_n == 0 || s.min_n > s.max_n {
                return Err(Error::InvalidInput("invalid subword parameters".into()));
            }
            if let Some(b) = s.buckets.keys().find(|&&b| b >= s.bucket_count) {
                return Err(Error::InvalidInput(format!("bucket {b} out of range")));
            }
        }
        Ok(EmbeddingTable { dim, words, subwords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn subwords(&self) -> Option<&Subwords> {
        self.subwords.as_ref()
    }

    /// Stored vector, else subword mean, else zeros.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        if let Some(v) = self.words.get(word) {
            return v.clone();
        }
        let mut out = vec![0.0; self.dim];
        let Some(sub) = &self.subwords else {
            return out;
        };
        let ngrams = subword_ngrams(word, sub.min_n, sub.max_n);
        if ngrams.is_empty() {
            return out;
        }
        for g in &ngrams {
            if let Some(v) = sub.buckets.get(&sub.bucket_of(g)) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x;
                }
            }
        }
        let n = ngrams.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    pub fn with_subwords(mut self, subwords: Subwords) -> Result<Self> {
        self.subwords = Some(subwords);
        Self::new(self.dim, self.words, self.subwords)
    }
}

fn parse_vector(fields: &[&str], dim: usize, path: &Path, line: usize) -> Result<Vec<f64>> {
    if fields.len() != dim {
        return Err(Error::parse(
            path,
            line,
            format!("expected {dim} components, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("non-numeric component {f:?}")))
        })
        .collect()
}

fn parse_header(line: Option<&str>, path: &Path, arity: usize) -> Result<Vec<usize>> {
    let line = line.ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let fields: Vec<usize> = line
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, "non-integer header field"))?;
    if fields.len() != arity {
        return Err(Error::parse(path, 1, format!("expected {arity} header fields")));
    }
    Ok(fields)
}

/// Loads `vocab_size dim` followed by `word v1 .. v_dim` lines.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines();
    let header = parse_header(lines.next(), path, 2)?;
    let (size, dim) = (header[0], header[1]);
    let mut words = HashMap::with_capacity(size);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let vector = parse_vector(&fields[1..], dim, path, i + 2)?;
        if words.insert(fields[0].to_string(), vector).is_some() {
            return Err(Error::parse(path, i + 2, format!("duplicate word {:?}", fields[0])));
        }
    }
    if words.len() != size {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {size} words, found {}", words.len()),
        ));
    }
    EmbeddingTable::new(dim, words, None)
}

/// Loads a subword sidecar: `min_n max_n bucket_count`, then
/// `bucket_index v1 .. v_dim` lines.
pub fn load_subwords(path: impl AsRef<Path>, dim: usize) -> Result<Subwords> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines();
    let header = parse_header(lines.next(), path, 3)?;
    let mut buckets = HashMap::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bucket: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, i + 2, "non-integer bucket index"))?;
        if bucket >= header[2] {
            return Err(Error::parse(path, i + 2, format!("bucket {bucket} out of range")));
        }
        buckets.insert(bucket, parse_vector(&fields[1..], dim, path, i + 2)?);
    }
    Ok(Subwords {
        min_n: header[0],
        max_n: header[1],
        bucket_count: header[2],
        buckets,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnigramModel {
    counts: HashMap<String, u64>,
    total: u64,
}

impl UnigramModel {
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut model = UnigramModel::default();
        for (w, c) in counts {
            *model.counts.entry(w).or_default() += c;
            model.total += c;
        }
        model
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn probability(&self, word: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(word) as f64 / self.total as f64
        }
    }
}

/// Loads `token<TAB>count` lines; repeated tokens are summed.
pub fn load_unigram_counts(path: impl AsRef<Path>) -> Result<UnigramModel> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (token, count) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected token<TAB>count"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("non-integer count {count:?}")))?;
        if count == 0 {
            return Err(Error::parse(path, i + 1, "counts must be positive"));
        }
        pairs.push((token.to_string(), count));
    }
    Ok(UnigramModel::from_counts(pairs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SifConfig {
    pub a: f64,
    #[serde(default)]
    pub remove_common_component: bool,
}

impl Default for SifConfig {
    fn default() -> Self {
        SifConfig {
            a: 0.1,
            remove_common_component: false,
        }
    }
}

impl SifConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Config(format!("SIF a must be positive, got {}", self.a)));
        }
        Ok(())
    }
}

/// `a / (a + p(w))`.
pub fn sif_weight(a: f64, p: f64) -> f64 {
    a / (a + p)
}

/// Mean of SIF-weighted word vectors; the zero vector for an empty tweet.
pub fn sif_embed<S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable,
    unigram: &UnigramModel,
    config: &SifConfig,
) -> Vec<f64> {
    let mut out = vec![0.0; table.dim()];
    if tokens.is_empty() {
        return out;
    }
    for t in tokens {
        let t = t.as_ref();
        let w = sif_weight(config.a, unigram.probability(t));
        for (o, x) in out.iter_mut().zip(table.word_vector(t)) {
            *o += w * x;
        }
    }
    let n = tokens.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Leading right singular vector of the row matrix, i.e. the top eigenvector
/// of `XᵀX`, with its first nonzero coordinate made positive. `None` for an
/// all-zero matrix.
pub fn common_component(rows: &[Vec<f64>]) -> Result<Option<Vec<f64>>> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput("common component needs at least 2 rows".into()));
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: r.len(),
        });
    }
    let mut gram = vec![vec![0.0; dim]; dim];
    for r in rows {
        for i in 0..dim {
            if r[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                gram[i][j] += r[i] * r[j];
            }
        }
    }
    if gram.iter().flatten().all(|&g| g == 0.0) {
        return Ok(None);
    }
    let (values, vectors) = jacobi_eigen(gram);
    let top = (0..dim)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .expect("dim > 0");
    let mut u: Vec<f64> = (0..dim).map(|i| vectors[i][top]).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(Some(u))
}

/// Replaces each row `v` by `v - (u·v) u`.
pub fn project_out(rows: &mut [Vec<f64>], u: &[f64]) {
    for r in rows {
        let dot: f64 = r.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, ui) in r.iter_mut().zip(u) {
            *x -= dot * ui;
        }
    }
}

/// Subtracts the projection on the common component from every row; an
/// all-zero matrix is returned unchanged.
pub fn remove_common_component(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out = rows.to_vec();
    if let Some(u) = common_component(rows)? {
        project_out(&mut out, &u);
    }
    Ok(out)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and a matrix whose columns are the eigenvectors.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (a[p].clone(), a[q].clone());
                for (k, (apk, aqk)) in row_p.into_iter().zip(row_q).enumerate() {
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn table(entries: &[(&str, &[f64])]) -> EmbeddingTable {
        let dim = entries[0].1.len();
        let words = entries.iter().map(|(w, v)| (w.to_string(), v.to_vec())).collect();
        EmbeddingTable::new(dim, words, None).unwrap()
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a_32(""), 0x811c9dc5);
        assert_eq!(fnv1a_32("a"), 0xe40c292c);
        assert_eq!(fnv1a_32("foobar"), 0xbf9cf968);
    }

    #[test]
    fn ngrams_of_short_word() {
        assert_eq!(subword_ngrams("ab", 3, 3), vec!["<ab", "ab>"]);
        assert_eq!(subword_ngrams("ab", 5, 6), Vec::<String>::new());
    }

    #[test]
    fn loads_text_vectors() {
        let f = write_tmp("1 2\nhola 0.5 -0.5\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.word_vector("hola"), vec![0.5, -0.5]);
        assert_eq!(t.word_vector("chau"), vec![0.0, 0.0]);
        assert!(load_embeddings(write_tmp("2 2\nhola 0.5 -0.5\n").path()).is_err());
        assert!(load_embeddings(write_tmp("1 2\nhola 0.5\n").path()).is_err());
        assert!(load_embeddings(write_tmp("1 2\nhola 0.5 x\n").path()).is_err());
    }

    #[test]
    fn oov_uses_subword_mean() {
        let sub = Subwords {
            min_n: 3,
            max_n: 3,
            bucket_count: 7,
            buckets: (0..7).map(|b| (b, vec![b as f64, 1.0])).collect(),
        };
        let t = table(&[("x", &[9.0, 9.0])]).with_subwords(sub).unwrap();
        let b1 = (fnv1a_32("<ab") % 7) as f64;
        let b2 = (fnv1a_32("ab>") % 7) as f64;
        assert_eq!(t.word_vector("ab"), vec![(b1 + b2) / 2.0, 1.0]);
        assert_eq!(t.word_vector("x"), vec![9.0, 9.0]);
    }

    #[test]
    fn subword_sidecar_parsing() {
        let f = write_tmp("3 6 10\n4 1 2\n");
        let s = load_subwords(f.path(), 2).unwrap();
        assert_eq!((s.min_n, s.max_n, s.bucket_count), (3, 6, 10));
        assert_eq!(s.buckets[&4], vec![1.0, 2.0]);
        assert!(load_subwords(write_tmp("3 6 10\n12 1 2\n").path(), 2).is_err());
    }

    #[test]
    fn unigram_counts() {
        let m = load_unigram_counts(write_tmp("a\t3\nb\t1\n").path()).unwrap();
        assert_eq!(m.probability("a"), 0.75);
        assert_eq!(m.probability("b"), 0.25);
        assert_eq!(m.probability("zz"), 0.0);
        let m = load_unigram_counts(write_tmp("a\t2\na\t3\n").path()).unwrap();
        assert_eq!(m.count("a"), 5);
        assert!(load_unigram_counts(write_tmp("a\t2.5\n").path()).is_err());
    }

    #[test]
    fn sif_weighting() {
        assert_eq!(sif_weight(0.1, 0.0), 1.0);
        assert_eq!(sif_weight(0.1, 0.1), 0.5);
        let t = table(&[("w1", &[1.0, 0.0]), ("w2", &[0.0, 2.0])]);
        let uni = UnigramModel::from_counts([("w1".to_string(), 1), ("other".to_string(), 9)]);
        let cfg = SifConfig::default();
        // weights 0.5 and 1.0, averaged over two tokens
        assert_eq!(sif_embed(&["w1", "w2"], &t, &uni, &cfg), vec![0.25, 1.0]);
        assert_eq!(sif_embed(&["w2"], &t, &uni, &cfg), vec![0.0, 2.0]);
        assert_eq!(sif_embed::<&str>(&[], &t, &uni, &cfg), vec![0.0, 0.0]);
    }

    #[test]
    fn common_component_removal() {
        let rows = vec![vec![1.0, 2.0, 3.0]; 4];
        let out = remove_common_component(&rows).unwrap();
        assert!(out.iter().flatten().all(|x| x.abs() < 1e-12));
        let zeros = vec![vec![0.0; 3]; 3];
        assert_eq!(remove_common_component(&zeros).unwrap(), zeros);
        assert!(remove_common_component(&[vec![1.0]]).is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], vec![2.0, 0.5, 1.0]];
        let (vals, vecs) = jacobi_eigen(a.clone());
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * vecs[j][k]).sum();
                assert!((av - vals[k] * vecs[i][k]).abs() < 1e-10);
            }
        }
    }
}

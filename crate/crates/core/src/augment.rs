//! Training-data augmentation.
//!
//! Instance crossover builds new tweets from the first half of one tweet and
//! the second half of another tweet with the same label. Two-way translation
//! sends a tweet to a pivot language and back through a [`Translator`],
//! caching every round trip on disk.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label, Tweet};
use crate::error::{Error, Result};

/// Splits at `⌈n/2⌉`; the first half takes the extra token.
pub fn split_halves<T>(tokens: &[T]) -> (&[T], &[T]) {
    tokens.split_at(tokens.len().div_ceil(2))
}

/// First half of `first` followed by the second half of `second`.
pub fn crossover_pair<T: Clone>(first: &[T], second: &[T]) -> Vec<T> {
    let (head, _) = split_halves(first);
    let (_, tail) = split_halves(second);
    head.iter().chain(tail).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossoverConfig {
    pub factor: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CrossoverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factor < 1 {
            return Err(Error::Config("crossover factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adds `(factor - 1) * n_c` crossover instances per class `c`.
///
/// Tweet texts are basic-preprocessed token sequences joined by single
/// spaces. Parents are ordered pairs `(i, j)`, `i != j`, drawn uniformly with
/// replacement inside the class. A class with a single tweet is padded by
/// duplicating it.
pub fn crossover_augment(dataset: &Dataset, config: &CrossoverConfig) -> Result<Dataset> {
    config.validate()?;
    let mut out = dataset.clone();
    if config.factor == 1 {
        return Ok(out);
    }
    let mut by_class: BTreeMap<Label, Vec<&Tweet>> = BTreeMap::new();
    for t in &dataset.tweets {
        let label = t.label.ok_or_else(|| Error::MissingLabel(t.id.clone()))?;
        by_class.entry(label).or_default().push(t);
    }
    let mut rng = crate::seed::rng_for(config.seed, "crossover", 0);
    let extra = config.factor - 1;
    for (label, members) in &by_class {
        let n = members.len();
        let wanted = extra * n;
        if n == 1 {
            log::warn!(
                "class {label} has a single instance in {}; padding by duplication",
                dataset.name
            );
            let t = members[0];
            for k in 0..wanted {
                out.tweets.push(Tweet::new(
                    format!("{}#dup{}", t.id, k + 1),
                    t.text.clone(),
                    Some(*label),
                ));
            }
            continue;
        }
        for k in 0..wanted {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = (members[i], members[j]);
            let ta: Vec<&str> = a.text.split_whitespace().collect();
            let tb: Vec<&str> = b.text.split_whitespace().collect();
            let text = crossover_pair(&ta, &tb).join(" ");
            out.tweets
                .push(Tweet::new(format!("{}+{}#x{}", a.id, b.id, k + 1), text, Some(*label)));
        }
    }
    Dataset::from_tweets(out.name, out.split, out.tweets)
}

/// A machine translation backend.
pub trait Translator {
    fn translate(&self, text: &str, src: &str, dst: &str) -> std::result::Result<String, String>;
}

#[derive(Debug, Deserialize, Serialize)]
struct FixtureTable {
    src_lang: String,
    dst_lang: String,
    entries: BTreeMap<String, String>,
}

/// Offline translator backed by lookup tables; missing entries translate to
/// themselves.
#[derive(Clone, Debug, Default)]
pub struct FixtureTranslator {
    tables: HashMap<(String, String), HashMap<String, String>>,
}

impl FixtureTranslator {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, src: &str, dst: &str, text: &str, translation: &str) {
        self.tables
            .entry((src.to_string(), dst.to_string()))
            .or_default()
            .insert(text.to_string(), translation.to_string());
    }

    /// Parses a JSON array of `{src_lang, dst_lang, entries}` tables.
    pub fn from_json(json: &str) -> Result<Self> {
        let tables: Vec<FixtureTable> = serde_json::from_str(json)?;
        let mut out = Self::default();
        for table in tables {
            let slot = out.tables.entry((table.src_lang, table.dst_lang)).or_default();
            slot.extend(table.entries);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

impl Translator for FixtureTranslator {
    fn translate(&self, text: &str, src: &str, dst: &str) -> std::result::Result<String, String> {
        Ok(self
            .tables
            .get(&(src.to_string(), dst.to_string()))
            .and_then(|t| t.get(text))
            .cloned()
            .unwrap_or_else(|| text.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationConfig {
    pub pivots: Vec<String>,
    #[serde(default = "default_source")]
    pub source: String,
    /// Defaults to `translation_cache.jsonl` in the run's output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
}

fn default_source() -> String {
    "es".to_string()
}

impl TranslationConfig {
    pub fn new(pivots: &[&str]) -> Self {
        TranslationConfig {
            pivots: pivots.iter().map(|p| p.to_string()).collect(),
            source: default_source(),
            cache_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pivots.is_empty() {
            return Err(Error::Config("translation needs at least one pivot language".into()));
        }
        for (i, p) in self.pivots.iter().enumerate() {
            if self.pivots[..i].contains(p) {
                return Err(Error::Config(format!("pivot {p:?} listed twice")));
            }
            if p.eq_ignore_ascii_case(&self.source) {
                return Err(Error::Config(format!("pivot {p:?} equals the source language")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    text: String,
    pivot: String,
    result: String,
}

/// Append-only JSON-lines cache of round-trip translations keyed by
/// `(text, pivot)`.
pub struct TranslationCache {
    path: Option<PathBuf>,
    entries: HashMap<(String, String), String>,
    writer: Option<BufWriter<File>>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        TranslationCache {
            path: None,
            entries: HashMap::new(),
            writer: None,
        }
    }

    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (i, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord =
                    serde_json::from_str(line).map_err(|e| Error::parse(&path, i + 1, e.to_string()))?;
                entries.insert((rec.text, rec.pivot), rec.result);
            }
        }
        Ok(TranslationCache {
            path: Some(path),
            entries,
            writer: None,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, text: &str, pivot: &str) -> Option<&str> {
        self.entries
            .get(&(text.to_string(), pivot.to_string()))
            .map(String::as_str)
    }

    pub fn insert(&mut self, text: &str, pivot: &str, result: &str) -> Result<()> {
        if let Some(path) = &self.path {
            if self.writer.is_none() {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                self.writer = Some(BufWriter::new(file));
            }
            let rec = CacheRecord {
                text: text.to_string(),
                pivot: pivot.to_string(),
                result: result.to_string(),
            };
            let writer = self.writer.as_mut().expect("opened above");
            let line = serde_json::to_string(&rec)?;
            writeln!(writer, "{line}")
                .and_then(|_| writer.flush())
                .map_err(|e| Error::io(path, e))?;
        }
        self.entries
            .insert((text.to_string(), pivot.to_string()), result.to_string());
        Ok(())
    }
}

/// Source → pivot → source, served from the cache when possible.
/// `id` only labels errors.
pub fn two_way_translate(
    client: &dyn Translator,
    cache: &mut TranslationCache,
    id: &str,
    text: &str,
    pivot: &str,
    config: &TranslationConfig,
) -> Result<String> {
    if !config.pivots.iter().any(|p| p == pivot) {
        return Err(Error::Config(format!("pivot {pivot:?} is not configured")));
    }
    if let Some(hit) = cache.get(text, pivot) {
        return Ok(hit.to_string());
    }
    let fail = |message: String| Error::Translation {
        id: id.to_string(),
        pivot: pivot.to_string(),
        message,
    };
    let there = client.translate(text, &config.source, pivot).map_err(fail)?;
    let back = client.translate(&there, pivot, &config.source).map_err(fail)?;
    cache.insert(text, pivot, &back)?;
    Ok(back)
}

/// Originals followed by one translated copy per `(tweet, pivot)`, pivots in
/// configured order.
pub fn translation_augment(
    dataset: &Dataset,
    client: &dyn Translator,
    cache: &mut TranslationCache,
    config: &TranslationConfig,
) -> Result<Dataset> {
    config.validate()?;
    let mut tweets = dataset.tweets.clone();
    for pivot in &config.pivots {
        for t in &dataset.tweets {
            let text = two_way_translate(client, cache, &t.id, &t.text, pivot, config)?;
            tweets.push(Tweet::new(format!("{}@{}", t.id, pivot), text, t.label));
        }
    }
    Dataset::from_tweets(dataset.name.clone(), dataset.split, tweets)
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use super::*;
    use crate::corpus::{label_distribution, Split};

    struct Counting<'a> {
        inner: &'a FixtureTranslator,
        calls: Cell<usize>,
    }

    impl Translator for Counting<'_> {
        fn translate(&self, text: &str, src: &str, dst: &str) -> std::result::Result<String, String> {
            self.calls.set(self.calls.get() + 1);
            self.inner.translate(text, src, dst)
        }
    }

    struct Failing;

    impl Translator for Failing {
        fn translate(&self, _: &str, _: &str, _: &str) -> std::result::Result<String, String> {
            Err("quota exceeded".into())
        }
    }

    fn dataset(spec: &[(Label, usize)]) -> Dataset {
        let mut tweets = Vec::new();
        for (label, n) in spec {
            for i in 0..*n {
                tweets.push(Tweet::new(
                    format!("{label}{i}"),
                    format!("w{i} a b c {label}"),
                    Some(*label),
                ));
            }
        }
        Dataset::from_tweets("T", Split::Train, tweets).unwrap()
    }

    #[test]
    fn halves() {
        assert_eq!(split_halves(&["a", "b", "c", "d"]), (&["a", "b"][..], &["c", "d"][..]));
        assert_eq!(split_halves(&["a", "b", "c"]), (&["a", "b"][..], &["c"][..]));
        assert_eq!(split_halves::<&str>(&[]), (&[][..], &[][..]));
    }

    #[test]
    fn pair_lengths_and_identity() {
        let t1 = ["a", "b", "c"];
        let t2 = ["d", "e", "f", "g", "h"];
        assert_eq!(crossover_pair(&t1, &t2), vec!["a", "b", "g", "h"]);
        assert_eq!(crossover_pair(&t1, &t1), t1.to_vec());
    }

    #[test]
    fn factor_one_is_noop() {
        let d = dataset(&[(Label::P, 3)]);
        assert_eq!(
            crossover_augment(&d, &CrossoverConfig { factor: 1, seed: 0 }).unwrap(),
            d
        );
        assert!(crossover_augment(&d, &CrossoverConfig { factor: 0, seed: 0 }).is_err());
    }

    #[test]
    fn crossover_sizes() {
        let d = dataset(&[(Label::P, 10), (Label::N, 30)]);
        let out = crossover_augment(&d, &CrossoverConfig { factor: 8, seed: 3 }).unwrap();
        let counts = label_distribution(&out).unwrap();
        assert_eq!((counts[&Label::P], counts[&Label::N]), (80, 240));
        let again = crossover_augment(&d, &CrossoverConfig { factor: 8, seed: 3 }).unwrap();
        assert_eq!(out.to_tsv(), again.to_tsv());
    }

    #[test]
    fn singleton_class_is_duplicated() {
        let d = dataset(&[(Label::P, 3), (Label::NEU, 1)]);
        let out = crossover_augment(&d, &CrossoverConfig { factor: 4, seed: 1 }).unwrap();
        let counts = label_distribution(&out).unwrap();
        assert_eq!((counts[&Label::P], counts[&Label::NEU]), (12, 4));
        let neu: Vec<_> = out.tweets.iter().filter(|t| t.label == Some(Label::NEU)).collect();
        assert!(neu.iter().all(|t| t.text == neu[0].text));
    }

    #[test]
    fn fixture_composition() {
        let mut f = FixtureTranslator::identity();
        f.insert("es", "en", "fue genial", "it was great");
        f.insert("en", "es", "it was great", "estuvo genial");
        let cfg = TranslationConfig::new(&["en"]);
        let mut cache = TranslationCache::in_memory();
        assert_eq!(
            two_way_translate(&f, &mut cache, "t", "fue genial", "en", &cfg).unwrap(),
            "estuvo genial"
        );
        let id = FixtureTranslator::identity();
        let mut cache = TranslationCache::in_memory();
        assert_eq!(
            two_way_translate(&id, &mut cache, "t", "hola", "en", &cfg).unwrap(),
            "hola"
        );
        assert!(two_way_translate(&id, &mut cache, "t", "hola", "fr", &cfg).is_err());
    }

    #[test]
    fn cache_hits_skip_client() {
        let fixture = FixtureTranslator::identity();
        let client = Counting {
            inner: &fixture,
            calls: Cell::new(0),
        };
        let cfg = TranslationConfig::new(&["en"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let mut cache = TranslationCache::open(&path).unwrap();
        two_way_translate(&client, &mut cache, "t", "hola", "en", &cfg).unwrap();
        assert_eq!(client.calls.get(), 2);
        two_way_translate(&client, &mut cache, "t", "hola", "en", &cfg).unwrap();
        assert_eq!(client.calls.get(), 2);
        drop(cache);
        let mut reopened = TranslationCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        two_way_translate(&client, &mut reopened, "t", "hola", "en", &cfg).unwrap();
        assert_eq!(client.calls.get(), 2);
    }

    #[test]
    fn failures_carry_pivot_and_id() {
        let cfg = TranslationConfig::new(&["en", "fr"]);
        let d = dataset(&[(Label::P, 2)]);
        let mut cache = TranslationCache::in_memory();
        match translation_augment(&d, &Failing, &mut cache, &cfg) {
            Err(Error::Translation { id, pivot, .. }) => assert_eq!((id.as_str(), pivot.as_str()), ("P0", "en")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn translation_sizes_and_validation() {
        let d = dataset(&[(Label::P, 4), (Label::N, 6)]);
        let cfg = TranslationConfig::new(&["en", "fr", "pt", "ar"]);
        let mut cache = TranslationCache::in_memory();
        let out = translation_augment(&d, &FixtureTranslator::identity(), &mut cache, &cfg).unwrap();
        assert_eq!(out.len(), 50);
        assert!(TranslationConfig::new(&[]).validate().is_err());
        assert!(TranslationConfig::new(&["en", "en"]).validate().is_err());
        assert!(TranslationConfig::new(&["es"]).validate().is_err());
    }

    #[test]
    fn fixture_json_tables() {
        let json = r#"[{"src_lang":"es","dst_lang":"fr","entries":{"hola":"salut"}},
                       {"src_lang":"fr","dst_lang":"es","entries":{"salut":"buenas"}}]"#;
        let f = FixtureTranslator::from_json(json).unwrap();
        assert_eq!(f.translate("hola", "es", "fr").unwrap(), "salut");
        assert_eq!(f.translate("chau", "es", "fr").unwrap(), "chau");
    }
}

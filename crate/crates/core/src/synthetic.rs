//! Deterministic generator for the bundled synthetic corpus.
//!
//! Labels are planted through small Spanish lexicons: positive and negative
//! cue words, negated positive cues for some negative tweets, mixed cues for
//! neutral tweets and cue-free topical chatter for NONE. Handles, URLs,
//! emoji, elongations and inflected forms exercise the preprocessing. A
//! fraction of labels is flipped so the task is not trivially separable.
//!
//! Besides the three splits the generator emits every resource a full run
//! needs: 50-d word vectors, a subword sidecar, unigram counts, word lists,
//! a lemma table, a translation fixture, an experiment config and a grid.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, Label, Split, Tweet};
use crate::embeddings::{fnv1a_32, subword_ngrams};
use crate::error::{Error, Result};
use crate::preprocess::{basic_tokens, join_surfaces, PreprocessConfig, TokenKind};
use crate::seed::rng_for;

type Lexicon = [(&'static str, &'static str)];

const POSITIVE: [(&str, &str); 15] = [
    ("genial", "great"),
    ("feliz", "happy"),
    ("excelente", "excellent"),
    ("encanta", "love"),
    ("maravilloso", "wonderful"),
    ("bueno", "good"),
    ("hermoso", "beautiful"),
    ("gracias", "thanks"),
    ("increíble", "amazing"),
    ("alegría", "joy"),
    ("mejor", "better"),
    ("amor", "darling"),
    ("bonito", "pretty"),
    ("divertido", "fun"),
    ("orgullo", "pride"),
];

const NEGATIVE: [(&str, &str); 15] = [
    ("horrible", "horrible"),
    ("odio", "hate"),
    ("triste", "sad"),
    ("malo", "bad"),
    ("pésimo", "awful"),
    ("asco", "disgust"),
    ("terrible", "terrible"),
    ("peor", "worse"),
    ("furioso", "furious"),
    ("desastre", "disaster"),
    ("lamentable", "regrettable"),
    ("miedo", "fear"),
    ("injusto", "unfair"),
    ("harto", "fed-up"),
    ("vergüenza", "shame"),
];

const TOPICS: [(&str, &str); 20] = [
    ("partido", "match"),
    ("reunión", "meeting"),
    ("ciudad", "city"),
    ("tren", "train"),
    ("clima", "weather"),
    ("gobierno", "government"),
    ("película", "movie"),
    ("concierto", "concert"),
    ("trabajo", "work"),
    ("escuela", "school"),
    ("examen", "exam"),
    ("lunes", "monday"),
    ("fútbol", "football"),
    ("serie", "series"),
    ("libro", "book"),
    ("música", "music"),
    ("comida", "food"),
    ("viaje", "trip"),
    ("noticia", "news"),
    ("equipo", "team"),
];

const FILLERS: [(&str, &str); 24] = [
    ("el", "the"),
    ("la", "the"),
    ("de", "of"),
    ("que", "that"),
    ("en", "in"),
    ("y", "and"),
    ("los", "the"),
    ("un", "a"),
    ("una", "a"),
    ("por", "for"),
    ("con", "with"),
    ("para", "to"),
    ("es", "is"),
    ("muy", "very"),
    ("me", "me"),
    ("lo", "it"),
    ("hoy", "today"),
    ("este", "this"),
    ("esta", "this"),
    ("se", "itself"),
    ("al", "at"),
    ("del", "of"),
    ("las", "the"),
    ("su", "its"),
];

const INFLECTIONS: [(&str, &str); 12] = [
    ("geniales", "genial"),
    ("felices", "feliz"),
    ("buena", "bueno"),
    ("buenos", "bueno"),
    ("hermosa", "hermoso"),
    ("encantó", "encanta"),
    ("mala", "malo"),
    ("malos", "malo"),
    ("tristes", "triste"),
    ("odiamos", "odio"),
    ("pésima", "pésimo"),
    ("partidos", "partido"),
];

const NEGATIONS: [&str; 5] = ["no", "nunca", "jamás", "ni", "tampoco"];
const POSITIVE_EMOJI: [&str; 4] = ["😀", "❤️", "👏", "😍"];
const NEGATIVE_EMOJI: [&str; 4] = ["😡", "😢", "👎", "💔"];
const OTHER_EMOJI: [&str; 3] = ["🤔", "⚽", "📺"];
const HANDLES: [&str; 6] = ["@maria", "@juan_p", "@equipo10", "@diario_ok", "@lucia88", "@radio_sur"];
const CONTRAST: [&str; 2] = ["pero", "aunque"];

pub const FILE_NAMES: [&str; 12] = [
    "config.json",
    "dev.tsv",
    "grid.json",
    "lemmas.tsv",
    "negation.txt",
    "stopwords.txt",
    "subwords.txt",
    "test.tsv",
    "train.tsv",
    "translations.json",
    "unigrams.tsv",
    "vectors.vec",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub dim: usize,
    /// Probability that a tweet's label is replaced by a random one.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_train: 350,
            n_dev: 100,
            n_test: 50,
            dim: 50,
            label_noise: 0.08,
            seed: 2019,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    /// File name to content, for every name in [`FILE_NAMES`].
    pub files: BTreeMap<&'static str, String>,
}

impl SyntheticCorpus {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty list")
}

fn draw_label(rng: &mut ChaCha8Rng) -> Label {
    match rng.gen_range(0..100) {
        0..=34 => Label::P,
        35..=64 => Label::N,
        65..=79 => Label::NEU,
        _ => Label::NONE,
    }
}

fn inflect(rng: &mut ChaCha8Rng, word: &str) -> String {
    let forms: Vec<&str> = INFLECTIONS
        .iter()
        .filter(|(_, l)| *l == word)
        .map(|(f, _)| *f)
        .collect();
    if !forms.is_empty() && rng.gen_bool(0.25) {
        return pick(rng, &forms).to_string();
    }
    if rng.gen_bool(0.08) {
        // Elongate the last vowel.
        if let Some((i, c)) = word.char_indices().rev().find(|(_, c)| "aeiou".contains(*c)) {
            let mut out = word[..i].to_string();
            for _ in 0..rng.gen_range(3..6) {
                out.push(c);
            }
            out.push_str(&word[i + c.len_utf8()..]);
            return out;
        }
    }
    word.to_string()
}

fn tweet_text(rng: &mut ChaCha8Rng, label: Label) -> String {
    let mut words: Vec<String> = Vec::new();
    let n_topic = rng.gen_range(1..3);
    for _ in 0..n_topic {
        words.push(pick(rng, &TOPICS).0.to_string());
    }
    for _ in 0..rng.gen_range(2..6) {
        words.push(pick(rng, &FILLERS).0.to_string());
    }
    words.shuffle(rng);
    let cue = |rng: &mut ChaCha8Rng, lex: &[(&str, &str)]| {
        let word = pick(rng, lex).0;
        inflect(rng, word)
    };
    let mut signal: Vec<String> = Vec::new();
    match label {
        Label::P => {
            for _ in 0..rng.gen_range(1..3) {
                signal.push(cue(rng, &POSITIVE));
            }
        }
        Label::N => {
            if rng.gen_bool(0.3) {
                signal.push(pick(rng, &NEGATIONS[..2]).to_string());
                signal.push(cue(rng, &POSITIVE));
            } else {
                for _ in 0..rng.gen_range(1..3) {
                    signal.push(cue(rng, &NEGATIVE));
                }
            }
        }
        Label::NEU => {
            let (first, second) = if rng.gen_bool(0.5) {
                (cue(rng, &POSITIVE), cue(rng, &NEGATIVE))
            } else {
                (cue(rng, &NEGATIVE), cue(rng, &POSITIVE))
            };
            signal.extend([first, pick(rng, &CONTRAST).to_string(), second]);
        }
        Label::NONE => {}
    }
    let at = rng.gen_range(0..=words.len());
    words.splice(at..at, signal);

    if rng.gen_bool(0.3) {
        words.insert(0, pick(rng, &HANDLES).to_string());
    }
    if let Some(first) = words.first_mut().filter(|w| !w.starts_with('@')) {
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            *first = c.to_uppercase().chain(chars).collect();
        }
    }
    let end = match (label, rng.gen_range(0..4)) {
        (Label::NONE, 0) => "?",
        (Label::P, 0) => "!",
        (_, 1) => ".",
        _ => "",
    };
    if !end.is_empty() {
        words.last_mut().expect("non-empty tweet").push_str(end);
    }
    if rng.gen_bool(0.3) {
        let emoji = match label {
            Label::P if rng.gen_bool(0.7) => pick(rng, &POSITIVE_EMOJI),
            Label::N if rng.gen_bool(0.7) => pick(rng, &NEGATIVE_EMOJI),
            _ => pick(rng, &OTHER_EMOJI),
        };
        words.push(emoji.to_string());
    }
    if rng.gen_bool(0.2) {
        let code: String = (0..6)
            .map(|_| *pick(rng, b"abcdefghijkmnpqrstuvwxyzABCDEFGH23456789") as char)
            .collect();
        words.push(format!("https://t.co/{code}"));
    }
    words.join(" ")
}

fn split(rng: &mut ChaCha8Rng, prefix: &str, split: Split, n: usize, noise: f64) -> Dataset {
    let tweets = (0..n)
        .map(|i| {
            let label = draw_label(rng);
            let text = tweet_text(rng, label);
            let label = if rng.gen_bool(noise) {
                *pick(rng, &Label::ALL)
            } else {
                label
            };
            Tweet::new(format!("{prefix}{i:04}"), text, Some(label))
        })
        .collect();
    Dataset::from_tweets("synthetic", split, tweets).expect("generated ids are unique")
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn fmt_vec(out: &mut String, v: &[f64]) {
    for x in v {
        let _ = write!(out, " {x:.4}");
    }
    out.push('\n');
}

/// Word vectors clustered by sentiment class, plus a subword sidecar built
/// from the cue words' n-grams.
fn vectors(rng: &mut ChaCha8Rng, dim: usize) -> (String, String) {
    let pos_center = unit(rng, dim);
    let neg_center = unit(rng, dim);
    let topic_center = unit(rng, dim);
    let mut words: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let groups: [(&Lexicon, &[f64], f64); 4] = [
        (&POSITIVE, &pos_center, 0.8),
        (&NEGATIVE, &neg_center, 0.8),
        (&TOPICS, &topic_center, 0.5),
        (&FILLERS, &topic_center, 0.1),
    ];
    for (lexicon, center, weight) in groups {
        for (word, _) in lexicon {
            let noise = unit(rng, dim);
            let v = center.iter().zip(&noise).map(|(c, e)| weight * c + 0.5 * e).collect();
            words.insert(word, v);
        }
    }
    for word in NEGATIONS.iter().chain(&CONTRAST) {
        words.insert(word, unit(rng, dim));
    }
    let mut vec_file = format!("{} {}\n", words.len(), dim);
    for (word, v) in &words {
        vec_file.push_str(word);
        fmt_vec(&mut vec_file, v);
    }

    let (min_n, max_n, buckets) = (3usize, 5usize, 100_003usize);
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for (word, _) in POSITIVE.iter().chain(&NEGATIVE) {
        let v = &words[word];
        for gram in subword_ngrams(word, min_n, max_n) {
            let slot = sums
                .entry(fnv1a_32(&gram) as usize % buckets)
                .or_insert((vec![0.0; dim], 0));
            slot.0.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            slot.1 += 1;
        }
    }
    let mut sub_file = format!("{min_n} {max_n} {buckets}\n");
    for (bucket, (sum, n)) in sums {
        let _ = write!(sub_file, "{bucket}");
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        fmt_vec(&mut sub_file, &mean);
    }
    (vec_file, sub_file)
}

fn unigrams(rng: &mut ChaCha8Rng, config: &PreprocessConfig) -> String {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for _ in 0..3000 {
        let label = draw_label(rng);
        for t in basic_tokens(&tweet_text(rng, label), config) {
            if t.kind == TokenKind::Word {
                *counts.entry(t.surface.to_lowercase()).or_default() += 1;
            }
        }
    }
    counts.iter().map(|(w, c)| format!("{w}\t{c}\n")).collect()
}

fn translation_fixture(train: &Dataset, config: &PreprocessConfig) -> String {
    let mut to_en: HashMap<&str, &str> = HashMap::new();
    let mut back: HashMap<&str, &str> = HashMap::new();
    for lexicon in [&POSITIVE[..], &NEGATIVE[..], &TOPICS[..], &FILLERS[..]] {
        for (i, (es, en)) in lexicon.iter().enumerate() {
            to_en.insert(es, en);
            // Cue words come back as a neighbouring cue of the same class.
            let returned = if lexicon.len() == 15 {
                lexicon[(i + 1) % 15].0
            } else {
                es
            };
            back.entry(en).or_insert(returned);
        }
    }
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    for t in &train.tweets {
        let basic = join_surfaces(&basic_tokens(&t.text, config));
        let pivot: Vec<&str> = basic
            .split(' ')
            .map(|w| to_en.get(w.to_lowercase().as_str()).copied().unwrap_or(w))
            .collect();
        let pivot = pivot.join(" ");
        let returned: Vec<&str> = pivot.split(' ').map(|w| back.get(w).copied().unwrap_or(w)).collect();
        backward.insert(pivot.clone(), returned.join(" "));
        forward.insert(basic, pivot);
    }
    let tables = serde_json::json!([
        {"src_lang": "es", "dst_lang": "en", "entries": forward},
        {"src_lang": "en", "dst_lang": "es", "entries": backward},
    ]);
    serde_json::to_string_pretty(&tables).expect("json values serialize") + "\n"
}

const CONFIG: &str = r#"{
  "name": "synthetic",
  "data": {
    "train": "train.tsv",
    "dev": "dev.tsv",
    "test": "test.tsv"
  },
  "preprocess": {
    "negation_words": {"file": "negation.txt"},
    "negation_scope": 3,
    "stopwords": {"file": "stopwords.txt"},
    "lemmas": "lemmas.tsv",
    "repeat_cap": 2
  },
  "features": {
    "bow": {"n_max": 5},
    "boc": {"n_max": 6},
    "embedding": {
      "vectors": "vectors.vec",
      "subwords": "subwords.txt",
      "unigrams": "unigrams.tsv",
      "sif": {"a": 0.1, "remove_common_component": true}
    }
  },
  "augment": {
    "translation": {"pivots": ["en"], "source": "es", "fixture": "translations.json"},
    "crossover": {"factor": 4}
  },
  "model": {"C": 0.2, "class_weight": "none"},
  "bagging": {"n_estimators": 5},
  "seed": 42
}
"#;

const GRID: &str = r#"{
  "C": [0.2, 1.0],
  "crossover_factor": [2, 4]
}
"#;

pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    let config = PreprocessConfig::spanish_default();
    let mut rng = rng_for(spec.seed, "synthetic-corpus", 0);
    let train = split(&mut rng, "tr", Split::Train, spec.n_train, spec.label_noise);
    let dev = split(&mut rng, "dv", Split::Dev, spec.n_dev, spec.label_noise);
    let test = split(&mut rng, "ts", Split::Test, spec.n_test, spec.label_noise);
    let (vec_file, sub_file) = vectors(&mut rng_for(spec.seed, "synthetic-vectors", 0), spec.dim);
    let unigram_file = unigrams(&mut rng_for(spec.seed, "synthetic-unigrams", 0), &config);

    let stopwords: BTreeSet<&str> = FILLERS.iter().map(|(w, _)| *w).collect();
    let mut files = BTreeMap::new();
    files.insert("config.json", CONFIG.to_string());
    files.insert("grid.json", GRID.to_string());
    files.insert("train.tsv", train.to_tsv());
    files.insert("dev.tsv", dev.to_tsv());
    files.insert("test.tsv", test.to_tsv());
    files.insert("vectors.vec", vec_file);
    files.insert("subwords.txt", sub_file);
    files.insert("unigrams.tsv", unigram_file);
    files.insert("stopwords.txt", stopwords.iter().map(|w| format!("{w}\n")).collect());
    files.insert("negation.txt", NEGATIONS.iter().map(|w| format!("{w}\n")).collect());
    files.insert(
        "lemmas.tsv",
        INFLECTIONS.iter().map(|(f, l)| format!("{f}\t{l}\n")).collect(),
    );
    files.insert("translations.json", translation_fixture(&train, &config));
    SyntheticCorpus {
        train,
        dev,
        test,
        files,
    }
}

//! Tweet tokenization and the two preprocessing levels.
//!
//! The basic level replaces handles, URLs and e-mails with placeholders and
//! shortens elongated words. The semantic level lowercases, lemmatizes,
//! marks negation scope with a `NOT_` prefix and drops punctuation, numbers
//! and stopwords. Hashtags and emoji are never altered.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const USER_PLACEHOLDER: &str = "@USER";
pub const URL_PLACEHOLDER: &str = "URL";
pub const EMAIL_PLACEHOLDER: &str = "EMAIL";
pub const NEGATION_PREFIX: &str = "NOT_";

/// Spanish negation cues used when a configuration does not provide its own.
pub const DEFAULT_NEGATION_WORDS: &[&str] = &[
    "no", "ni", "nunca", "jamás", "tampoco", "nadie", "nada", "ningún", "ninguna", "ninguno", "sin",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punctuation,
    Number,
    Handle,
    Url,
    Email,
    EmojiOrOther,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    /// Builds a token whose kind is derived from the surface form.
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let kind = classify(&surface);
        Token { surface, kind }
    }

    pub fn with_kind(surface: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            surface: surface.into(),
            kind,
        }
    }
}

const URL_RE: &str = r"(?:https?://|www\.)\S+";
const EMAIL_RE: &str = r"[\w.%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)+";
const HANDLE_RE: &str = r"@\w+";
const HASHTAG_RE: &str = r"#\w+";
const ALNUM_RE: &str = r"[\p{L}\p{N}\p{M}]+";
const EMOJI_RE: &str =
    r"\p{Extended_Pictographic}(?:\x{FE0F}|\p{Emoji_Modifier}|\x{200D}\p{Extended_Pictographic}\x{FE0F}?)*";
const PUNCT_RE: &str = r"\p{P}";
const OTHER_RE: &str = r"\S";

fn scanner() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let pattern = format!(
            "(?P<url>{URL_RE})|(?P<email>{EMAIL_RE})|(?P<handle>{HANDLE_RE})|(?P<hashtag>{HASHTAG_RE})|\
             (?P<alnum>{ALNUM_RE})|(?P<emoji>{EMOJI_RE})|(?P<punct>{PUNCT_RE})|(?P<other>{OTHER_RE})"
        );
        Regex::new(&pattern).expect("tokenizer pattern")
    })
}

fn full(pattern: &str) -> Regex {
    Regex::new(&format!("^(?:{pattern})$")).expect("classifier pattern")
}

struct Classifier {
    url: Regex,
    email: Regex,
    handle: Regex,
    punct: Regex,
}

fn classifier() -> &'static Classifier {
    static C: OnceLock<Classifier> = OnceLock::new();
    C.get_or_init(|| Classifier {
        url: full(URL_RE),
        email: full(EMAIL_RE),
        handle: full(HANDLE_RE),
        punct: full(PUNCT_RE),
    })
}

/// Token kind as a pure function of the surface.
pub fn classify(surface: &str) -> TokenKind {
    let c = classifier();
    if surface == URL_PLACEHOLDER || c.url.is_match(surface) {
        TokenKind::Url
    } else if surface == EMAIL_PLACEHOLDER || c.email.is_match(surface) {
        TokenKind::Email
    } else if c.handle.is_match(surface) {
        TokenKind::Handle
    } else if !surface.is_empty() && surface.chars().all(|ch| ch.is_numeric()) {
        TokenKind::Number
    } else if !surface.is_empty() && surface.chars().all(is_word_char) {
        TokenKind::Word
    } else if c.punct.is_match(surface) {
        TokenKind::Punctuation
    } else {
        TokenKind::EmojiOrOther
    }
}

fn is_word_char(ch: char) -> bool {
    ch.is_alphanumeric() || is_mark(ch)
}

fn is_mark(ch: char) -> bool {
    matches!(ch as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\''];

/// Splits raw text into tokens. Total and deterministic.
pub fn tokenize(text: &str) -> Vec<Token> {
    let re = scanner();
    let mut tokens = Vec::new();
    for caps in re.captures_iter(text) {
        if let Some(m) = caps.name("url") {
            // Trailing sentence punctuation is not part of the link.
            let url = m.as_str();
            let trimmed = url.trim_end_matches(URL_TRAILING);
            let trimmed = if trimmed.is_empty() || trimmed == "www." {
                url
            } else {
                trimmed
            };
            tokens.push(Token::with_kind(trimmed, TokenKind::Url));
            for ch in url[trimmed.len()..].chars() {
                tokens.push(Token::new(ch.to_string()));
            }
        } else if let Some(m) = caps.name("email") {
            tokens.push(Token::with_kind(m.as_str(), TokenKind::Email));
        } else if let Some(m) = caps.name("handle") {
            tokens.push(Token::with_kind(m.as_str(), TokenKind::Handle));
        } else if let Some(m) = caps.name("hashtag") {
            tokens.push(Token::with_kind(m.as_str(), TokenKind::EmojiOrOther));
        } else if let Some(m) = caps.get(0) {
            tokens.push(Token::new(m.as_str()));
        }
    }
    tokens
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PreprocessConfig {
    pub negation_words: HashSet<String>,
    pub negation_scope: usize,
    pub stopwords: HashSet<String>,
    pub lemma_table: HashMap<String, String>,
    pub repeat_cap: usize,
}

impl PreprocessConfig {
    pub fn new(negation_words: impl IntoIterator<Item = impl Into<String>>) -> Self {
        PreprocessConfig {
            negation_words: negation_words.into_iter().map(Into::into).collect(),
            negation_scope: 3,
            stopwords: HashSet::new(),
            lemma_table: HashMap::new(),
            repeat_cap: 2,
        }
    }

    pub fn spanish_default() -> Self {
        Self::new(DEFAULT_NEGATION_WORDS.iter().copied())
    }

    pub fn with_stopwords(mut self, stopwords: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.stopwords = stopwords.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeat_cap < 1 {
            return Err(Error::Config("repeat_cap must be at least 1".into()));
        }
        if let Some(k) = self.lemma_table.keys().find(|k| k.to_lowercase() != **k) {
            return Err(Error::Config(format!("lemma table key {k:?} is not lowercase")));
        }
        Ok(())
    }
}

/// Placeholder replacement and letter-repeat shortening.
pub fn basic_preprocess(tokens: &[Token], config: &PreprocessConfig) -> Vec<Token> {
    tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Handle => Token::with_kind(USER_PLACEHOLDER, TokenKind::Handle),
            TokenKind::Url => Token::with_kind(URL_PLACEHOLDER, TokenKind::Url),
            TokenKind::Email => Token::with_kind(EMAIL_PLACEHOLDER, TokenKind::Email),
            TokenKind::Word => Token::with_kind(collapse_repeats(&t.surface, config.repeat_cap), TokenKind::Word),
            _ => t.clone(),
        })
        .collect()
}

/// Collapses every run of more than `cap` identical letters to exactly `cap`.
pub fn collapse_repeats(word: &str, cap: usize) -> String {
    let mut out = String::with_capacity(word.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for ch in word.chars() {
        if Some(ch) == prev {
            run += 1;
        } else {
            prev = Some(ch);
            run = 1;
        }
        if !ch.is_alphabetic() || run <= cap {
            out.push(ch);
        }
    }
    out
}

/// Tokenizes and applies the basic level; the usual entry point for raw tweets.
pub fn basic_tokens(text: &str, config: &PreprocessConfig) -> Vec<Token> {
    basic_preprocess(&tokenize(text), config)
}

/// Prefixes up to `negation_scope` word tokens after each negation cue with
/// `NOT_`, stopping early at the first non-word token.
pub fn handle_negation(tokens: &[Token], config: &PreprocessConfig) -> Vec<Token> {
    let mut out: Vec<Token> = tokens.to_vec();
    let mut i = 0;
    while i < out.len() {
        let is_cue = out[i].kind == TokenKind::Word && config.negation_words.contains(&out[i].surface);
        i += 1;
        if !is_cue {
            continue;
        }
        let mut negated = 0;
        while negated < config.negation_scope && i < out.len() && out[i].kind == TokenKind::Word {
            out[i].surface = format!("{NEGATION_PREFIX}{}", out[i].surface);
            negated += 1;
            i += 1;
        }
    }
    out
}

fn is_negated(t: &Token) -> bool {
    t.surface.starts_with(NEGATION_PREFIX)
}

/// Lowercase, lemmatize, negation scoping, then removal of punctuation,
/// numbers and stopwords. Input is the output of [`basic_preprocess`].
pub fn semantic_preprocess(tokens: &[Token], config: &PreprocessConfig) -> Vec<Token> {
    // Lowercased pre-lemma forms, kept for the stopword check.
    let mut lowered = Vec::with_capacity(tokens.len());
    let normalized: Vec<Token> = tokens
        .iter()
        .map(|t| {
            if t.kind != TokenKind::Word {
                lowered.push(None);
                return t.clone();
            }
            let lower = t.surface.to_lowercase();
            let lemma = config.lemma_table.get(&lower).cloned().unwrap_or_else(|| lower.clone());
            lowered.push(Some(lower));
            Token::with_kind(lemma, TokenKind::Word)
        })
        .collect();
    let negated = handle_negation(&normalized, config);
    negated
        .into_iter()
        .zip(lowered)
        .filter(|(t, lower)| match t.kind {
            TokenKind::Punctuation | TokenKind::Number => false,
            TokenKind::Word if !is_negated(t) => {
                !(config.stopwords.contains(&t.surface) || lower.as_ref().is_some_and(|l| config.stopwords.contains(l)))
            }
            _ => true,
        })
        .map(|(t, _)| t)
        .collect()
}

/// Raw text to semantic tokens in one call.
pub fn full_preprocess(text: &str, config: &PreprocessConfig) -> Vec<Token> {
    semantic_preprocess(&basic_tokens(text, config), config)
}

pub fn surfaces(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.surface.clone()).collect()
}

pub fn join_surfaces(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

/// Reads a one-entry-per-line word list, ignoring blank lines and `#` comments.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Reads a `word<TAB>lemma` table. Keys are lowercased.
pub fn load_lemma_table(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = HashMap::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match line.split('\t').collect::<Vec<_>>().as_slice() {
            [word, lemma] if !word.is_empty() && !lemma.is_empty() => {
                table.insert(word.to_lowercase(), lemma.to_string());
            }
            _ => return Err(Error::parse(path, lineno + 1, "expected word<TAB>lemma")),
        }
    }
    Ok(table)
}

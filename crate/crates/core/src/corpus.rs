//! Labeled tweet datasets and their TSV on-disk form.
//!
//! One tweet per line: `id<TAB>text[<TAB>label]`, UTF-8, LF endings, no header.
//! Training and development splits must carry a label on every line.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentiment polarity. The declaration order is the canonical row/column
/// order of every matrix and report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    P,
    N,
    NEU,
    NONE,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::P, Label::N, Label::NEU, Label::NONE];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::P => "P",
            Label::N => "N",
            Label::NEU => "NEU",
            Label::NONE => "NONE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P" => Ok(Label::P),
            "N" => Ok(Label::N),
            "NEU" => Ok(Label::NEU),
            "NONE" => Ok(Label::NONE),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    fn requires_labels(self) -> bool {
        !matches!(self, Split::Test)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>) -> Self {
        Tweet {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

/// Counts per label, always holding all four labels.
pub type LabelCounts = BTreeMap<Label, usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    pub tweets: Vec<Tweet>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, split: Split) -> Self {
        Dataset {
            name: name.into(),
            split,
            tweets: Vec::new(),
        }
    }

    /// Builds a dataset, checking id uniqueness and the label requirement of
    /// the split.
    pub fn from_tweets(name: impl Into<String>, split: Split, tweets: Vec<Tweet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for t in &tweets {
            if t.id.is_empty() {
                return Err(Error::InvalidInput("empty tweet id".into()));
            }
            if !seen.insert(t.id.as_str()) {
                return Err(Error::DuplicateId(t.id.clone()));
            }
            if split.requires_labels() && t.label.is_none() {
                return Err(Error::MissingLabel(t.id.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            split,
            tweets,
        })
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Gold labels in order; fails on the first unlabeled tweet.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.tweets
            .iter()
            .map(|t| t.label.ok_or_else(|| Error::MissingLabel(t.id.clone())))
            .collect()
    }

    /// Writes the dataset back in the TSV layout accepted by [`load_tsv`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.tweets {
            out.push_str(&t.id);
            out.push('\t');
            out.push_str(&t.text);
            if let Some(label) = t.label {
                out.push('\t');
                out.push_str(label.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_tsv(path: impl AsRef<Path>, name: &str, split: Split) -> Result<Dataset> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&content, path, name, split)
}

/// Parses TSV content; `origin` is only used in error messages.
pub fn parse_tsv(content: &str, origin: &Path, name: &str, split: Split) -> Result<Dataset> {
    let mut tweets = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, text, label) = match fields.as_slice() {
            [id, text] => (*id, *text, None),
            [id, text, label] => {
                let label = label
                    .parse::<Label>()
                    .map_err(|_| Error::parse(origin, lineno, format!("unknown label {label:?}")))?;
                (*id, *text, Some(label))
            }
            _ => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        if id.is_empty() {
            return Err(Error::parse(origin, lineno, "empty id"));
        }
        if label.is_none() && split.requires_labels() {
            return Err(Error::parse(origin, lineno, "missing label"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(origin, lineno, format!("duplicate id {id:?}")));
        }
        tweets.push(Tweet::new(id, text, label));
    }
    Ok(Dataset {
        name: name.to_string(),
        split,
        tweets,
    })
}

pub fn label_distribution(dataset: &Dataset) -> Result<LabelCounts> {
    let mut counts = empty_counts();
    for t in &dataset.tweets {
        let label = t.label.ok_or_else(|| Error::MissingLabel(t.id.clone()))?;
        *counts.entry(label).or_default() += 1;
    }
    Ok(counts)
}

pub fn empty_counts() -> LabelCounts {
    Label::ALL.iter().map(|&l| (l, 0)).collect()
}

pub fn count_labels(labels: &[Label]) -> LabelCounts {
    let mut counts = empty_counts();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
}

/// Concatenates datasets in argument order. Ids become `<dataset>/<id>`.
/// The result takes the split of the first input and the names joined by `+`.
pub fn merge(datasets: &[Dataset]) -> Result<Dataset> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidInput("merge of zero datasets".into()))?;
    let mut names = HashSet::new();
    for d in datasets {
        if !names.insert(d.name.as_str()) {
            return Err(Error::InvalidInput(format!("dataset {:?} given twice", d.name)));
        }
    }
    let tweets = datasets
        .iter()
        .flat_map(|d| {
            d.tweets
                .iter()
                .map(move |t| Tweet::new(format!("{}/{}", d.name, t.id), t.text.clone(), t.label))
        })
        .collect();
    let name = datasets.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join("+");
    Dataset::from_tweets(name, first.split, tweets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(content: &str, split: Split) -> Result<Dataset> {
        parse_tsv(content, Path::new("mem.tsv"), "X", split)
    }

    #[test]
    fn parses_labeled_line() {
        let d = parse("t1\thola mundo\tP\n", Split::Train).unwrap();
        assert_eq!(d.tweets, vec![Tweet::new("t1", "hola mundo", Some(Label::P))]);
    }

    #[test]
    fn empty_file_gives_empty_dataset() {
        assert!(parse("", Split::Train).unwrap().is_empty());
    }

    #[test]
    fn test_split_allows_missing_label() {
        let d = parse("t2\tsolo texto\n", Split::Test).unwrap();
        assert_eq!(d.tweets[0].label, None);
        assert!(parse("t2\tsolo texto\n", Split::Dev).is_err());
    }

    #[test]
    fn labels_are_case_insensitive() {
        let d = parse("a\tx\tneu\nb\ty\tNone\n", Split::Dev).unwrap();
        assert_eq!(d.labels().unwrap(), vec![Label::NEU, Label::NONE]);
    }

    #[test]
    fn rejects_bad_lines_with_line_numbers() {
        match parse("a\tx\tP\nb\ty\tQ\n", Split::Train) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("a\tx\ty\tP\n", Split::Train) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse("a\tx\tP\na\ty\tN\n", Split::Train).is_err());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let src = "t1\thola 😀 mundo\tP\nt2\tchau\tNONE\n";
        assert_eq!(parse(src, Split::Train).unwrap().to_tsv(), src);
    }

    #[test]
    fn distribution_counts() {
        let d = parse("a\tx\tP\nb\tx\tP\nc\tx\tN\n", Split::Train).unwrap();
        let counts = label_distribution(&d).unwrap();
        assert_eq!(counts[&Label::P], 2);
        assert_eq!(counts[&Label::N], 1);
        assert_eq!(counts[&Label::NEU], 0);
        assert_eq!(counts[&Label::NONE], 0);
        let empty = Dataset::new("E", Split::Train);
        assert!(label_distribution(&empty).unwrap().values().all(|&c| c == 0));
        let unlabeled = parse("a\tx\n", Split::Test).unwrap();
        assert!(label_distribution(&unlabeled).is_err());
    }

    #[test]
    fn table_one_gold_distribution() {
        // Row sums of the baseline confusion matrix on the ES dev set.
        let rows = [[114, 36, 5, 13], [28, 215, 8, 15], [29, 43, 4, 7], [17, 23, 2, 22]];
        let mut labels = Vec::new();
        for (label, row) in Label::ALL.iter().zip(rows) {
            labels.extend(std::iter::repeat_n(*label, row.iter().sum::<usize>()));
        }
        let counts = count_labels(&labels);
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![168, 266, 83, 64]);
    }

    #[test]
    fn merge_prefixes_and_concatenates() {
        let a = parse("1\tx\tP\n2\ty\tN\n", Split::Train).map(|mut d| {
            d.name = "A".into();
            d
        });
        let b = parse("1\tz\tP\n2\tw\tNEU\n3\tv\tNONE\n", Split::Train).map(|mut d| {
            d.name = "B".into();
            d
        });
        let (a, b) = (a.unwrap(), b.unwrap());
        let m = merge(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m.tweets[0].id, "A/1");
        assert_eq!(m.tweets[2].id, "B/1");
        let single = merge(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.tweets[1].id, "A/2");
        assert!(merge(&[a.clone(), a]).is_err());
    }
}

//! Experiment configuration: one JSON document with a section per stage.
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{CrossoverConfig, TranslationConfig};
use crate::embeddings::SifConfig;
use crate::error::{Error, Result};
use crate::model::{BaggingConfig, LrConfig};
use crate::preprocess::{load_lemma_table, load_word_list, PreprocessConfig};
use crate::vectorize::NgramConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataConfig,
    pub preprocess: PreprocessSection,
    pub features: FeaturesSection,
    #[serde(default)]
    pub augment: AugmentSection,
    pub model: LrConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bagging: Option<BaggingSection>,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

/// Either a single `train` file or, for cross-dataset training, a list of
/// `train_sets` that get merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub train_sets: Vec<NamedPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordList {
    Inline(Vec<String>),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub negation_words: WordList,
    #[serde(default = "default_scope")]
    pub negation_scope: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<WordList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<PathBuf>,
    #[serde(default = "default_repeat_cap")]
    pub repeat_cap: usize,
}

fn default_scope() -> usize {
    3
}

fn default_repeat_cap() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub vectors: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subwords: Option<PathBuf>,
    pub unigrams: PathBuf,
    #[serde(default)]
    pub sif: SifConfig,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bow: Option<NgramConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boc: Option<NgramConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationSection {
    #[serde(flatten)]
    pub config: TranslationConfig,
    /// Lookup tables for the offline translator.
    pub fixture: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverSection {
    pub factor: usize,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<TranslationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<CrossoverSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaggingSection {
    pub n_estimators: usize,
}

impl ExperimentConfig {
    pub fn from_json(json: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: ExperimentConfig = serde_json::from_str(json)?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&json, base)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn crossover(&self) -> Option<CrossoverConfig> {
        self.augment.crossover.map(|c| CrossoverConfig {
            factor: c.factor,
            seed: self.seed,
        })
    }

    pub fn bagging(&self) -> Option<BaggingConfig> {
        self.bagging.map(|b| BaggingConfig {
            n_estimators: b.n_estimators,
            seed: self.seed,
        })
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        match (&self.data.train, self.data.train_sets.is_empty()) {
            (Some(_), true) | (None, false) => {}
            _ => {
                return Err(Error::Config(
                    "give exactly one of data.train and data.train_sets".into(),
                ))
            }
        }
        if let WordList::Inline(words) = &self.preprocess.negation_words {
            if words.is_empty() {
                return Err(Error::Config("negation_words must not be empty".into()));
            }
        }
        if self.preprocess.repeat_cap < 1 {
            return Err(Error::Config("repeat_cap must be at least 1".into()));
        }
        let f = &self.features;
        if f.bow.is_none() && f.boc.is_none() && f.embedding.is_none() {
            return Err(Error::Config("at least one feature block must be enabled".into()));
        }
        for ngram in [f.bow, f.boc].into_iter().flatten() {
            ngram.validate()?;
        }
        if let Some(e) = &f.embedding {
            e.sif.validate()?;
        }
        if let Some(t) = &self.augment.translation {
            t.config.validate()?;
        }
        if let Some(c) = self.crossover() {
            c.validate()?;
        }
        if let Some(b) = self.bagging() {
            b.validate()?;
        }
        self.model.validate()
    }

    /// Every input file the config names, resolved.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = Vec::new();
        files.extend(self.data.train.iter().cloned());
        files.extend(self.data.train_sets.iter().map(|n| n.path.clone()));
        files.extend(self.data.dev.iter().cloned());
        files.extend(self.data.test.iter().cloned());
        for list in [
            Some(&self.preprocess.negation_words),
            self.preprocess.stopwords.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            if let WordList::File { file } = list {
                files.push(file.clone());
            }
        }
        files.extend(self.preprocess.lemmas.iter().cloned());
        if let Some(e) = &self.features.embedding {
            files.push(e.vectors.clone());
            files.extend(e.subwords.iter().cloned());
            files.push(e.unigrams.clone());
        }
        if let Some(t) = &self.augment.translation {
            files.push(t.fixture.clone());
        }
        files.iter().map(|p| self.resolve(p)).collect()
    }

    /// [`validate`](Self::validate) plus existence of every referenced file.
    pub fn validate_files(&self) -> Result<()> {
        self.validate()?;
        for path in self.input_files() {
            if !path.is_file() {
                return Err(Error::Config(format!("missing input file {}", path.display())));
            }
        }
        Ok(())
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        let section = &self.preprocess;
        let load = |list: &WordList| -> Result<_> {
            Ok(match list {
                WordList::Inline(words) => words.iter().cloned().collect(),
                WordList::File { file } => load_word_list(self.resolve(file))?,
            })
        };
        let config = PreprocessConfig {
            negation_words: load(&section.negation_words)?,
            negation_scope: section.negation_scope,
            stopwords: section.stopwords.as_ref().map(load).transpose()?.unwrap_or_default(),
            lemma_table: match &section.lemmas {
                Some(p) => load_lemma_table(self.resolve(p))?,
                None => Default::default(),
            },
            repeat_cap: section.repeat_cap,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "X",
        "data": {"train": "train.tsv", "dev": "dev.tsv"},
        "preprocess": {"negation_words": ["no"]},
        "features": {"bow": {"n_max": 2}},
        "model": {"C": 0.5}
    }"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL, "/cfg").unwrap();
        c.validate().unwrap();
        assert_eq!(c.preprocess.negation_scope, 3);
        assert_eq!(c.model.tol, 1e-6);
        assert!(c.features.bow.unwrap().tfidf);
        assert_eq!(c.resolve(Path::new("train.tsv")), PathBuf::from("/cfg/train.tsv"));
        assert!(c.validate_files().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let bad = MINIMAL.replace("\"name\": \"X\",", "\"name\": \"X\", \"sed\": 1,");
        assert!(ExperimentConfig::from_json(&bad, "").is_err());
        let bad = MINIMAL.replace("0.5", "-1");
        assert!(ExperimentConfig::from_json(&bad, "").unwrap().validate().is_err());
        let bad = MINIMAL.replace("{\"bow\": {\"n_max\": 2}}", "{}");
        assert!(ExperimentConfig::from_json(&bad, "").unwrap().validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let c = ExperimentConfig::from_json(MINIMAL, "/cfg").unwrap();
        let back = ExperimentConfig::from_json(&c.to_json(), "/cfg").unwrap();
        assert_eq!(back, c);
    }
}

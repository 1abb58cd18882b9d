//! End-to-end experiment driver.
//!
//! Stage order: load → basic preprocessing → translation and crossover
//! augmentation of the training split → semantic preprocessing and feature
//! fitting → training → evaluation on dev/test. Both augmentations draw from
//! the original training tweets only; dev and test are never augmented.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::augment::{crossover_augment, translation_augment, FixtureTranslator, TranslationCache};
use crate::config::{BaggingSection, CrossoverSection, EmbeddingSection, ExperimentConfig};
use crate::corpus::{load_tsv, merge, Dataset, Label, Split, Tweet};
use crate::embeddings::{load_embeddings, load_subwords, load_unigram_counts, EmbeddingTable, UnigramModel};
use crate::error::{Error, Result, StageExt};
use crate::eval::{evaluate_features, Evaluation};
use crate::features::{
    EmbeddingFeatures, EmbeddingPaths, FeatureLayout, FeaturePipeline, FeatureSpec, Instance, PipelineManifest,
    MANIFEST_VERSION,
};
use crate::model::{train_bagging, train_lr, BaggingConfig, ClassWeight, Classifier, LrConfig, Model};
use crate::preprocess::{basic_tokens, full_preprocess, join_surfaces, surfaces, PreprocessConfig};
use crate::vectorize::Vocabulary;

pub const MODEL_FILE: &str = "model.json";
pub const PIPELINE_FILE: &str = "pipeline.json";
pub const BOW_VOCAB_FILE: &str = "bow_vocab.tsv";
pub const BOC_VOCAB_FILE: &str = "boc_vocab.tsv";
pub const AUGMENTED_FILE: &str = "augmented_train.tsv";
pub const CACHE_FILE: &str = "translation_cache.jsonl";
pub const MODEL_VERSION: u32 = 1;

type TableKey = (PathBuf, Option<PathBuf>);

/// Loaded embedding tables and unigram models, shared across runs that
/// name the same files.
#[derive(Default)]
pub struct Resources {
    tables: Mutex<HashMap<TableKey, Arc<EmbeddingTable>>>,
    unigrams: Mutex<HashMap<PathBuf, Arc<UnigramModel>>>,
}

impl Resources {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self, vectors: &Path, subwords: Option<&Path>) -> Result<Arc<EmbeddingTable>> {
        let key = (vectors.to_path_buf(), subwords.map(Path::to_path_buf));
        if let Some(t) = self.tables.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let mut table = load_embeddings(vectors)?;
        if let Some(path) = subwords {
            let sub = load_subwords(path, table.dim())?;
            table = table.with_subwords(sub)?;
        }
        let table = Arc::new(table);
        self.tables.lock().unwrap().insert(key, table.clone());
        Ok(table)
    }

    pub fn unigrams(&self, path: &Path) -> Result<Arc<UnigramModel>> {
        if let Some(u) = self.unigrams.lock().unwrap().get(path) {
            return Ok(u.clone());
        }
        let model = Arc::new(load_unigram_counts(path)?);
        self.unigrams.lock().unwrap().insert(path.to_path_buf(), model.clone());
        Ok(model)
    }

    fn embedding(&self, paths: &EmbeddingPaths, sif: crate::embeddings::SifConfig) -> Result<EmbeddingFeatures> {
        Ok(EmbeddingFeatures {
            table: self.table(&paths.vectors, paths.subwords.as_deref())?,
            unigram: self.unigrams(&paths.unigrams)?,
            sif,
        })
    }
}

fn embedding_paths(config: &ExperimentConfig, section: &EmbeddingSection) -> EmbeddingPaths {
    let abs = |p: &Path| {
        let p = config.resolve(p);
        fs::canonicalize(&p).unwrap_or(p)
    };
    EmbeddingPaths {
        vectors: abs(&section.vectors),
        subwords: section.subwords.as_deref().map(abs),
        unigrams: abs(&section.unigrams),
    }
}

#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub dev: Option<Dataset>,
    pub test: Option<Dataset>,
}

pub fn load_splits(config: &ExperimentConfig) -> Result<Splits> {
    let train = match &config.data.train {
        Some(path) => load_tsv(config.resolve(path), &config.name, Split::Train)?,
        None => {
            let sets = config
                .data
                .train_sets
                .iter()
                .map(|n| load_tsv(config.resolve(&n.path), &n.name, Split::Train))
                .collect::<Result<Vec<_>>>()?;
            merge(&sets)?
        }
    };
    let dev = config
        .data
        .dev
        .as_ref()
        .map(|p| load_tsv(config.resolve(p), &config.name, Split::Dev))
        .transpose()?;
    let test = config
        .data
        .test
        .as_ref()
        .map(|p| load_tsv(config.resolve(p), &config.name, Split::Test))
        .transpose()?;
    Ok(Splits { train, dev, test })
}

/// Training split after augmentation: the dataset in basic-preprocessed form
/// and the matching featurization inputs.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub dataset: Dataset,
    pub instances: Vec<Instance>,
}

/// Applies the configured augmentations. `cache_dir` hosts the translation
/// cache when the config does not name one; with neither, the cache lives in
/// memory.
pub fn build_training_set(
    config: &ExperimentConfig,
    train: &Dataset,
    preprocess: &PreprocessConfig,
    cache_dir: Option<&Path>,
) -> Result<TrainingSet> {
    let basic: Vec<Tweet> = train
        .tweets
        .iter()
        .map(|t| Tweet::new(t.id.clone(), join_surfaces(&basic_tokens(&t.text, preprocess)), t.label))
        .collect();
    let basic = Dataset::from_tweets(train.name.clone(), Split::Train, basic).stage("preprocess")?;
    let mut tweets = basic.tweets.clone();
    let mut raw_of: HashMap<&str, &str> = train.tweets.iter().map(|t| (t.id.as_str(), t.text.as_str())).collect();

    if let Some(section) = &config.augment.translation {
        let client = FixtureTranslator::load(config.resolve(&section.fixture)).stage("translate")?;
        let cache_path = section
            .config
            .cache_path
            .as_ref()
            .map(|p| config.resolve(p))
            .or_else(|| cache_dir.map(|d| d.join(CACHE_FILE)));
        let mut cache = match cache_path {
            Some(p) => TranslationCache::open(p).stage("translate")?,
            None => TranslationCache::in_memory(),
        };
        let translated = translation_augment(&basic, &client, &mut cache, &section.config).stage("translate")?;
        tweets.extend(translated.tweets.into_iter().skip(basic.len()));
    }
    if let Some(cross) = config.crossover() {
        let crossed = crossover_augment(&basic, &cross).stage("crossover")?;
        tweets.extend(crossed.tweets.into_iter().skip(basic.len()));
    }
    let dataset = Dataset::from_tweets(train.name.clone(), Split::Train, tweets).stage("augment")?;
    // Originals keep their raw text for character n-grams.
    let originals: HashSet<&str> = basic.tweets.iter().map(|t| t.id.as_str()).collect();
    raw_of.retain(|id, _| originals.contains(id));
    let instances = dataset
        .tweets
        .iter()
        .map(|t| {
            let raw = raw_of.get(t.id.as_str()).copied().unwrap_or(&t.text);
            Instance {
                id: t.id.clone(),
                raw: raw.to_string(),
                basic: basic_tokens(&t.text, preprocess),
                label: t.label,
            }
        })
        .collect();
    Ok(TrainingSet { dataset, instances })
}

#[derive(Serialize, Deserialize)]
struct ModelContainer {
    format_version: u32,
    layout: FeatureLayout,
    lr: LrConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bagging: Option<BaggingConfig>,
    model: Model,
}

/// A fitted feature pipeline together with its classifier.
#[derive(Clone, Debug)]
pub struct TrainedSystem {
    pub pipeline: FeaturePipeline,
    pub model: Model,
    pub lr: LrConfig,
    pub bagging: Option<BaggingConfig>,
    pub embedding_paths: Option<EmbeddingPaths>,
}

impl TrainedSystem {
    pub fn fit(
        config: &ExperimentConfig,
        training: &TrainingSet,
        preprocess: PreprocessConfig,
        resources: &Resources,
    ) -> Result<Self> {
        let embedding_paths = config.features.embedding.as_ref().map(|e| embedding_paths(config, e));
        let embedding = match (&config.features.embedding, &embedding_paths) {
            (Some(section), Some(paths)) => Some(resources.embedding(paths, section.sif).stage("features")?),
            _ => None,
        };
        let spec = FeatureSpec {
            bow: config.features.bow,
            boc: config.features.boc,
            embedding,
        };
        let pipeline = FeaturePipeline::fit(&training.instances, spec, preprocess).stage("features")?;
        let features = pipeline.featurize_all(&training.instances);
        let labels = training.dataset.labels().stage("train")?;
        let model = match config.bagging() {
            Some(bag) => Model::Bagging(train_bagging(&features, &labels, &config.model, &bag).stage("train")?),
            None => Model::Single(train_lr(&features, &labels, &config.model).stage("train")?),
        };
        Ok(TrainedSystem {
            pipeline,
            model,
            lr: config.model,
            bagging: config.bagging(),
            embedding_paths,
        })
    }

    pub fn instances(&self, dataset: &Dataset) -> Vec<Instance> {
        dataset
            .tweets
            .iter()
            .map(|t| Instance::from_tweet(t, &self.pipeline.preprocess))
            .collect()
    }

    pub fn predict(&self, dataset: &Dataset) -> Result<Vec<Label>> {
        let features = self.pipeline.featurize_all(&self.instances(dataset));
        features.iter().map(|x| self.model.predict(x)).collect()
    }

    pub fn evaluate(&self, dataset: &Dataset) -> Result<(Evaluation, Vec<Label>)> {
        let golds = dataset.labels()?;
        let features = self.pipeline.featurize_all(&self.instances(dataset));
        evaluate_features(&self.model, &features, &golds)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = self.pipeline.manifest(self.embedding_paths.clone());
        write(dir.join(PIPELINE_FILE), serde_json::to_string_pretty(&manifest)?)?;
        if let Some(v) = &self.pipeline.bow {
            v.save(dir.join(BOW_VOCAB_FILE))?;
        }
        if let Some(v) = &self.pipeline.boc {
            v.save(dir.join(BOC_VOCAB_FILE))?;
        }
        let container = ModelContainer {
            format_version: MODEL_VERSION,
            layout: self.pipeline.layout().clone(),
            lr: self.lr,
            bagging: self.bagging,
            model: self.model.clone(),
        };
        write(dir.join(MODEL_FILE), serde_json::to_string(&container)?)
    }

    pub fn load(dir: &Path, resources: &Resources) -> Result<Self> {
        let manifest: PipelineManifest = serde_json::from_str(&read(&dir.join(PIPELINE_FILE))?)?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "unsupported pipeline format version {}",
                manifest.format_version
            )));
        }
        let bow = manifest
            .bow
            .map(|_| Vocabulary::load(dir.join(BOW_VOCAB_FILE)))
            .transpose()?;
        let boc = manifest
            .boc
            .map(|_| Vocabulary::load(dir.join(BOC_VOCAB_FILE)))
            .transpose()?;
        let (embedding, common, paths) = match manifest.embedding {
            Some(e) => {
                let paths = e
                    .paths
                    .ok_or_else(|| Error::Config("pipeline lacks embedding file paths".into()))?;
                (
                    Some(resources.embedding(&paths, e.sif)?),
                    e.common_component,
                    Some(paths),
                )
            }
            None => (None, None, None),
        };
        let pipeline =
            FeaturePipeline::from_parts(manifest.preprocess.into(), bow, boc, embedding, common, manifest.layout)?;
        let container: ModelContainer = serde_json::from_str(&read(&dir.join(MODEL_FILE))?)?;
        if container.format_version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                container.format_version
            )));
        }
        pipeline.layout().check(&container.layout)?;
        if container.model.dim() != pipeline.dim() {
            return Err(Error::DimensionMismatch {
                expected: pipeline.dim(),
                actual: container.model.dim(),
            });
        }
        Ok(TrainedSystem {
            pipeline,
            model: container.model,
            lr: container.lr,
            bagging: container.bagging,
            embedding_paths: paths,
        })
    }
}

fn write(path: PathBuf, content: impl AsRef<[u8]>) -> Result<()> {
    fs::write(&path, content).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub train_size: usize,
    pub layout: FeatureLayout,
    pub dev: Option<Evaluation>,
    pub test: Option<Evaluation>,
    pub system: TrainedSystem,
}

pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    run_experiment_with(config, out, &Resources::new())
}

/// Runs the whole pipeline. With `out`, writes the model, vocabularies,
/// augmented corpus, predictions and reports there.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    out: Option<&Path>,
    resources: &Resources,
) -> Result<ExperimentOutcome> {
    config.validate_files().stage("config")?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .map_err(|e| Error::io(dir, e))
            .stage("persist")?;
    }
    let splits = load_splits(config).stage("load")?;
    let preprocess = config.preprocess_config().stage("preprocess")?;
    let training = build_training_set(config, &splits.train, &preprocess, out)?;
    let system = TrainedSystem::fit(config, &training, preprocess, resources)?;

    let mut evaluated = Vec::new();
    for dataset in [&splits.dev, &splits.test].into_iter().flatten() {
        let labeled = dataset.tweets.iter().all(|t| t.label.is_some()) && !dataset.is_empty();
        let result = if labeled {
            let (e, preds) = system.evaluate(dataset).stage("evaluate")?;
            (Some(e), preds)
        } else {
            (None, system.predict(dataset).stage("evaluate")?)
        };
        evaluated.push((dataset.split, result));
    }

    if let Some(dir) = out {
        let persist = || -> Result<()> {
            write(dir.join("config.json"), config.to_json())?;
            training.dataset.save_tsv(dir.join(AUGMENTED_FILE))?;
            system.save(dir)?;
            for (split, (evaluation, preds)) in &evaluated {
                let name = split_name(*split);
                let dataset = if *split == Split::Dev {
                    &splits.dev
                } else {
                    &splits.test
                };
                let dataset = dataset.as_ref().expect("evaluated split exists");
                write(
                    dir.join(format!("predictions_{name}.tsv")),
                    predictions_tsv(dataset, preds),
                )?;
                if let Some(e) = evaluation {
                    write(dir.join(format!("report_{name}.txt")), e.to_text())?;
                    write(dir.join(format!("report_{name}.json")), e.to_json())?;
                }
            }
            Ok(())
        };
        persist().stage("persist")?;
    }

    let mut dev = None;
    let mut test = None;
    for (split, (evaluation, _)) in evaluated {
        match split {
            Split::Dev => dev = evaluation,
            _ => test = evaluation,
        }
    }
    Ok(ExperimentOutcome {
        train_size: training.dataset.len(),
        layout: system.pipeline.layout().clone(),
        dev,
        test,
        system,
    })
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Dev => "dev",
        Split::Test => "test",
    }
}

pub fn predictions_tsv(dataset: &Dataset, preds: &[Label]) -> String {
    let mut out = String::new();
    for (t, p) in dataset.tweets.iter().zip(preds) {
        let _ = writeln!(out, "{}\t{}", t.id, p);
    }
    out
}

/// Labels every tweet of a TSV file with a persisted system; returns the
/// `id<TAB>label` output.
pub fn predict_file(model_dir: &Path, input: &Path) -> Result<String> {
    let resources = Resources::new();
    let system = TrainedSystem::load(model_dir, &resources).stage("load")?;
    let dataset = load_tsv(input, "input", Split::Test).stage("load")?;
    let preds = system.predict(&dataset).stage("predict")?;
    Ok(predictions_tsv(&dataset, &preds))
}

/// Writes the fully preprocessed form of every configured split to `out`.
pub fn write_preprocessed(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate_files().stage("config")?;
    fs::create_dir_all(out)
        .map_err(|e| Error::io(out, e))
        .stage("persist")?;
    let splits = load_splits(config).stage("load")?;
    let preprocess = config.preprocess_config().stage("preprocess")?;
    let mut written = Vec::new();
    for dataset in [Some(&splits.train), splits.dev.as_ref(), splits.test.as_ref()]
        .into_iter()
        .flatten()
    {
        let tweets = dataset
            .tweets
            .iter()
            .map(|t| {
                Tweet::new(
                    t.id.clone(),
                    surfaces(&full_preprocess(&t.text, &preprocess)).join(" "),
                    t.label,
                )
            })
            .collect();
        let processed = Dataset {
            name: dataset.name.clone(),
            split: dataset.split,
            tweets,
        };
        let path = out.join(format!("{}.preprocessed.tsv", split_name(dataset.split)));
        processed.save_tsv(&path).stage("persist")?;
        written.push(path);
    }
    Ok(written)
}

/// Builds the augmented training corpus and writes it to `out`.
pub fn write_augmented(config: &ExperimentConfig, out: &Path) -> Result<TrainingSet> {
    config.validate_files().stage("config")?;
    fs::create_dir_all(out)
        .map_err(|e| Error::io(out, e))
        .stage("persist")?;
    let splits = load_splits(config).stage("load")?;
    let preprocess = config.preprocess_config().stage("preprocess")?;
    let training = build_training_set(config, &splits.train, &preprocess, Some(out))?;
    training.dataset.save_tsv(out.join(AUGMENTED_FILE)).stage("persist")?;
    Ok(training)
}

/// A single-component removal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    NoTranslation,
    NoCrossover,
    NoBow,
    NoBoc,
    #[serde(rename = "no-bow+boc")]
    NoBowBoc,
    NoEmbeddings,
    NoBagging,
}

impl Ablation {
    pub const ALL: [Ablation; 7] = [
        Ablation::NoTranslation,
        Ablation::NoCrossover,
        Ablation::NoBow,
        Ablation::NoBoc,
        Ablation::NoBowBoc,
        Ablation::NoEmbeddings,
        Ablation::NoBagging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::NoTranslation => "no translation",
            Ablation::NoCrossover => "no crossover",
            Ablation::NoBow => "no BoW",
            Ablation::NoBoc => "no BoC",
            Ablation::NoBowBoc => "no BoW+BoC",
            Ablation::NoEmbeddings => "no embeddings",
            Ablation::NoBagging => "no bagging",
        }
    }

    pub fn group(self) -> &'static str {
        match self {
            Ablation::NoTranslation | Ablation::NoCrossover => "augmentation",
            Ablation::NoBagging => "classifier",
            _ => "representation",
        }
    }

    /// The mutated config, or why the removal does not apply.
    pub fn apply(self, config: &ExperimentConfig) -> std::result::Result<ExperimentConfig, String> {
        let mut c = config.clone();
        let missing = |what: &str| Err(format!("{what} not configured"));
        match self {
            Ablation::NoTranslation if c.augment.translation.take().is_none() => return missing("translation"),
            Ablation::NoCrossover if c.augment.crossover.take().is_none() => return missing("crossover"),
            Ablation::NoBow if c.features.bow.take().is_none() => return missing("BoW"),
            Ablation::NoBoc if c.features.boc.take().is_none() => return missing("BoC"),
            Ablation::NoBowBoc => {
                let bow = c.features.bow.take();
                let boc = c.features.boc.take();
                if bow.is_none() && boc.is_none() {
                    return missing("BoW and BoC");
                }
            }
            Ablation::NoEmbeddings if c.features.embedding.take().is_none() => return missing("embeddings"),
            Ablation::NoBagging if c.bagging.take().is_none() => return missing("bagging"),
            _ => {}
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub group: String,
    pub variant: String,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub feature_dim: Option<usize>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn full_system(&self) -> &AblationRow {
        &self.rows[0]
    }

    pub fn row(&self, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16}{:<16}{:>8}{:>8}", "", "", "Acc.", "M-F1");
        let mut last_group = "";
        for r in &self.rows {
            let group = if r.group == last_group { "" } else { r.group.as_str() };
            last_group = &r.group;
            let group = if group == "full" { "" } else { group };
            match (r.accuracy, r.macro_f1) {
                (Some(a), Some(f)) => {
                    let _ = writeln!(out, "{:<16}{:<16}{:>8.2}{:>8.2}", group, r.variant, a, f);
                }
                _ => {
                    let note = r.note.as_deref().unwrap_or("skipped");
                    let _ = writeln!(out, "{:<16}{:<16}  skipped: {}", group, r.variant, note);
                }
            }
        }
        out
    }
}

fn require_dev(outcome: &ExperimentOutcome) -> Result<&Evaluation> {
    outcome
        .dev
        .as_ref()
        .ok_or_else(|| Error::Config("a labeled dev split is required".into()))
}

/// Runs the base config and every requested removal on the dev split.
pub fn run_ablation(config: &ExperimentConfig, spec: &[Ablation], out: Option<&Path>) -> Result<AblationTable> {
    let resources = Resources::new();
    let mut config = config.clone();
    if let (Some(dir), Some(t)) = (out, config.augment.translation.as_mut()) {
        fs::create_dir_all(dir)
            .map_err(|e| Error::io(dir, e))
            .stage("persist")?;
        if t.config.cache_path.is_none() {
            t.config.cache_path = Some(fs::canonicalize(dir).map_err(|e| Error::io(dir, e))?.join(CACHE_FILE));
        }
    }
    let full = run_experiment_with(&config, None, &resources)?;
    let e = require_dev(&full)?;
    let mut rows = vec![AblationRow {
        group: "full".into(),
        variant: "full system".into(),
        accuracy: Some(e.report.accuracy),
        macro_f1: Some(e.report.macro_f1),
        feature_dim: Some(full.layout.dim()),
        note: None,
    }];
    for &ablation in spec {
        let mut row = AblationRow {
            group: ablation.group().into(),
            variant: ablation.name().into(),
            accuracy: None,
            macro_f1: None,
            feature_dim: None,
            note: None,
        };
        match ablation.apply(&config) {
            Err(note) => {
                log::info!("ablation {}: skipped ({note})", ablation.name());
                row.note = Some(note);
            }
            Ok(variant) => {
                let outcome = run_experiment_with(&variant, None, &resources)?;
                let e = require_dev(&outcome)?;
                row.accuracy = Some(e.report.accuracy);
                row.macro_f1 = Some(e.report.macro_f1);
                row.feature_dim = Some(outcome.layout.dim());
            }
        }
        rows.push(row);
    }
    let table = AblationTable { rows };
    if let Some(dir) = out {
        let persist = || -> Result<()> {
            write(dir.join("ablation.txt"), table.to_text())?;
            write(dir.join("ablation.json"), serde_json::to_string_pretty(&table)?)
        };
        persist().stage("persist")?;
    }
    Ok(table)
}

/// Values to try per hyperparameter. Absent keys stay as configured.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bagging_n: Option<Vec<usize>>,
    #[serde(default, rename = "C", alias = "c", skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weight: Option<Vec<ClassWeight>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover_factor: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sif_a: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Count(usize),
    Real(f64),
    Weight(ClassWeight),
}

impl GridValue {
    fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        use GridValue::*;
        match (self, other) {
            (Count(a), Count(b)) => a.cmp(b),
            (Real(a), Real(b)) => a.total_cmp(b),
            (Weight(a), Weight(b)) => weight_name(*a).cmp(weight_name(*b)),
            _ => std::cmp::Ordering::Equal,
        }
    }
}

fn weight_name(w: ClassWeight) -> &'static str {
    match w {
        ClassWeight::None => "none",
        ClassWeight::Balanced => "balanced",
    }
}

impl std::fmt::Display for GridValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridValue::Count(n) => write!(f, "{n}"),
            GridValue::Real(x) => write!(f, "{x}"),
            GridValue::Weight(w) => f.write_str(weight_name(*w)),
        }
    }
}

impl Grid {
    /// Parameter axes in lexicographic name order.
    pub fn axes(&self) -> Vec<(&'static str, Vec<GridValue>)> {
        let mut axes = Vec::new();
        if let Some(v) = &self.bagging_n {
            axes.push(("bagging_n", v.iter().map(|&n| GridValue::Count(n)).collect()));
        }
        if let Some(v) = &self.c {
            axes.push(("C", v.iter().map(|&x| GridValue::Real(x)).collect()));
        }
        if let Some(v) = &self.class_weight {
            axes.push(("class_weight", v.iter().map(|&w| GridValue::Weight(w)).collect()));
        }
        if let Some(v) = &self.crossover_factor {
            axes.push(("crossover_factor", v.iter().map(|&n| GridValue::Count(n)).collect()));
        }
        if let Some(v) = &self.sif_a {
            axes.push(("sif_a", v.iter().map(|&x| GridValue::Real(x)).collect()));
        }
        axes
    }

    /// Cartesian product in axis order, last axis varying fastest.
    pub fn assignments(&self) -> Vec<Vec<(&'static str, GridValue)>> {
        let mut out: Vec<Vec<(&'static str, GridValue)>> = vec![Vec::new()];
        for (name, values) in self.axes() {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((name, *v));
                        next
                    })
                })
                .collect();
        }
        out
    }
}

fn apply_assignment(config: &ExperimentConfig, assignment: &[(&str, GridValue)]) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    for (name, value) in assignment {
        match (*name, *value) {
            ("bagging_n", GridValue::Count(n)) => c.bagging = Some(BaggingSection { n_estimators: n }),
            ("C", GridValue::Real(x)) => c.model.c = x,
            ("class_weight", GridValue::Weight(w)) => c.model.class_weight = w,
            ("crossover_factor", GridValue::Count(n)) => c.augment.crossover = Some(CrossoverSection { factor: n }),
            ("sif_a", GridValue::Real(x)) => match c.features.embedding.as_mut() {
                Some(e) => e.sif.a = x,
                None => return Err(Error::Config("sif_a given but embeddings are disabled".into())),
            },
            (name, value) => return Err(Error::Config(format!("bad grid value {value} for {name}"))),
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: Vec<(String, GridValue)>,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best_index: usize,
    pub best_config: ExperimentConfig,
}

impl GridResult {
    pub fn best(&self) -> &GridRow {
        &self.rows[self.best_index]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(first) = self.rows.first() {
            for (name, _) in &first.params {
                out.push_str(name);
                out.push('\t');
            }
        }
        out.push_str("accuracy\tmacro_f1\n");
        for r in &self.rows {
            for (_, v) in &r.params {
                let _ = write!(out, "{v}\t");
            }
            let _ = writeln!(out, "{:.2}\t{:.2}", r.accuracy, r.macro_f1);
        }
        out
    }
}

/// Exhaustive search on the dev split. Best by macro-F1, then accuracy, then
/// the lexicographically smallest parameter assignment.
pub fn grid_search(config: &ExperimentConfig, grid: &Grid, out: Option<&Path>) -> Result<GridResult> {
    let assignments = grid.assignments();
    if grid.axes().is_empty() || assignments.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let resources = Resources::new();
    let mut base = config.clone();
    if let (Some(dir), Some(t)) = (out, base.augment.translation.as_mut()) {
        fs::create_dir_all(dir)
            .map_err(|e| Error::io(dir, e))
            .stage("persist")?;
        if t.config.cache_path.is_none() {
            t.config.cache_path = Some(fs::canonicalize(dir).map_err(|e| Error::io(dir, e))?.join(CACHE_FILE));
        }
    }
    let mut rows = Vec::with_capacity(assignments.len());
    let mut configs = Vec::with_capacity(assignments.len());
    for assignment in &assignments {
        let variant = apply_assignment(&base, assignment).stage("config")?;
        let outcome = run_experiment_with(&variant, None, &resources)?;
        let e = require_dev(&outcome)?;
        rows.push(GridRow {
            params: assignment.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
            accuracy: e.report.accuracy,
            macro_f1: e.report.macro_f1,
        });
        configs.push(variant);
    }
    let best_index = (0..rows.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&rows[a], &rows[b]);
            rb.macro_f1
                .total_cmp(&ra.macro_f1)
                .then(rb.accuracy.total_cmp(&ra.accuracy))
                .then_with(|| {
                    ra.params
                        .iter()
                        .zip(&rb.params)
                        .map(|((_, x), (_, y))| x.cmp_key(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        })
        .expect("non-empty grid");
    let mut best_config = configs.swap_remove(best_index);
    best_config.augment.translation.clone_from(&config.augment.translation);
    let result = GridResult {
        rows,
        best_index,
        best_config,
    };
    if let Some(dir) = out {
        let persist = || -> Result<()> {
            write(dir.join("grid.tsv"), result.to_tsv())?;
            write(dir.join("best_config.json"), result.best_config.to_json())
        };
        persist().stage("persist")?;
    }
    Ok(result)
}

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use polarity::augment::{translation_augment, FixtureTranslator, TranslationCache, TranslationConfig};
use polarity::config::{ExperimentConfig, NamedPath};
use polarity::corpus::{load_tsv, Label, Split};
use polarity::error::Error;
use polarity::eval::evaluate_features;
use polarity::experiment::{
    grid_search, load_splits, predict_file, run_experiment, Grid, Resources, TrainedSystem, AUGMENTED_FILE, MODEL_FILE,
};
use polarity::features::{FeaturePipeline, FeatureSpec, Instance};
use polarity::model::{train_bagging, train_lr, BaggingConfig, ClassWeight, LrConfig};
use polarity::synthetic::{generate, SyntheticSpec};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

fn fixture_config() -> ExperimentConfig {
    ExperimentConfig::load(fixture_dir().join("config.json")).unwrap()
}

/// The fixture config with the slow parts trimmed.
fn light_config() -> ExperimentConfig {
    let mut c = fixture_config();
    c.bagging = None;
    c.features.boc.as_mut().unwrap().n_max = 3;
    c.features.bow.as_mut().unwrap().n_max = 2;
    c
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn committed_fixture_matches_generator() {
    let corpus = generate(&SyntheticSpec::default());
    for (name, content) in &corpus.files {
        let committed = fs::read_to_string(fixture_dir().join(name)).unwrap();
        assert!(committed == *content, "{name} differs from the generator output");
    }
    assert_eq!(corpus.train.len() + corpus.dev.len() + corpus.test.len(), 500);
}

#[test]
fn presets_parse_and_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets");
    let expect = [
        ("es", 4, 8, 0.2, ClassWeight::None, Some(40)),
        ("pe", 4, 4, 0.22, ClassWeight::Balanced, None),
        ("cr", 0, 8, 1.15, ClassWeight::Balanced, None),
        ("uy", 0, 8, 0.6, ClassWeight::None, None),
        ("mx", 4, 16, 0.125, ClassWeight::Balanced, None),
    ];
    for (name, pivots, factor, c, weight, bagging) in expect {
        let config = ExperimentConfig::load(dir.join(format!("{name}.json"))).unwrap();
        config.validate().unwrap();
        let n_pivots = config.augment.translation.as_ref().map_or(0, |t| t.config.pivots.len());
        assert_eq!(n_pivots, pivots, "{name}");
        if let Some(t) = &config.augment.translation {
            assert_eq!(t.config.pivots, ["en", "fr", "pt", "ar"]);
        }
        assert_eq!(config.augment.crossover.unwrap().factor, factor, "{name}");
        assert_eq!(config.model.c, c, "{name}");
        assert_eq!(config.model.class_weight, weight, "{name}");
        assert_eq!(config.bagging.map(|b| b.n_estimators), bagging, "{name}");
        assert_eq!(config.features.bow.unwrap().n_max, 5);
        assert_eq!(config.features.boc.unwrap().n_max, 6);
        assert_eq!(config.features.embedding.as_ref().unwrap().sif.a, 0.1);
        // The corpora are not bundled.
        assert!(config.validate_files().is_err());
    }
}

#[test]
fn runs_are_byte_identical_and_reload_consistently() {
    let config = light_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let outcome = run_experiment(&config, Some(a.path())).unwrap();
    run_experiment(&config, Some(b.path())).unwrap();
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
    // A rerun into the same directory reuses the translation cache.
    run_experiment(&config, Some(a.path())).unwrap();
    assert_eq!(read_dir(a.path()), read_dir(b.path()));

    let names: BTreeSet<String> = read_dir(a.path()).into_iter().map(|(n, _)| n).collect();
    for f in [
        "model.json",
        "pipeline.json",
        "bow_vocab.tsv",
        "boc_vocab.tsv",
        "report_dev.txt",
        "report_dev.json",
        AUGMENTED_FILE,
    ] {
        assert!(names.contains(f), "missing {f}");
    }

    let predicted = predict_file(a.path(), &fixture_dir().join("dev.tsv")).unwrap();
    assert_eq!(
        predicted,
        fs::read_to_string(a.path().join("predictions_dev.tsv")).unwrap()
    );

    let system = TrainedSystem::load(a.path(), &Resources::new()).unwrap();
    let dev = load_tsv(fixture_dir().join("dev.tsv"), "synthetic", Split::Dev).unwrap();
    let (evaluation, _) = system.evaluate(&dev).unwrap();
    assert_eq!(evaluation.to_json(), outcome.dev.unwrap().to_json());
    assert_eq!(
        evaluation.to_text(),
        fs::read_to_string(a.path().join("report_dev.txt")).unwrap()
    );
}

#[test]
fn augmentation_only_touches_training_data() {
    let config = light_config();
    let out = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&config, Some(out.path())).unwrap();
    let splits = load_splits(&config).unwrap();
    let train_ids: BTreeSet<&str> = splits.train.tweets.iter().map(|t| t.id.as_str()).collect();
    let augmented = load_tsv(out.path().join(AUGMENTED_FILE), "aug", Split::Train).unwrap();
    let n = splits.train.len();
    // Originals + one copy per pivot + (factor - 1) crossover copies.
    assert_eq!(augmented.len(), n + n + 3 * n);
    assert_eq!(outcome.train_size, augmented.len());
    for t in &augmented.tweets {
        let parents = t.id.split(['#', '@']).next().unwrap();
        for p in parents.split('+') {
            assert!(train_ids.contains(p), "{} has non-training parent {p}", t.id);
        }
    }
    for (split, dataset) in [("dev", splits.dev.unwrap()), ("test", splits.test.unwrap())] {
        let lines = fs::read_to_string(out.path().join(format!("predictions_{split}.tsv"))).unwrap();
        let ids: Vec<&str> = lines.lines().map(|l| l.split('\t').next().unwrap()).collect();
        let expected: Vec<&str> = dataset.tweets.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, expected);
    }
}

#[test]
fn four_pivots_give_five_times_the_data() {
    let train = load_tsv(fixture_dir().join("train.tsv"), "synthetic", Split::Train).unwrap();
    let out = translation_augment(
        &train,
        &FixtureTranslator::identity(),
        &mut TranslationCache::in_memory(),
        &TranslationConfig::new(&["en", "fr", "pt", "ar"]),
    )
    .unwrap();
    assert_eq!(out.len(), 5 * train.len());
}

#[test]
fn cross_dataset_training_merges_all_sets() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = light_config();
    config.augment = Default::default();
    config.data.train = None;
    let sizes = [3usize, 5, 2, 4];
    for (k, size) in sizes.iter().enumerate() {
        let body: String = (0..*size)
            .map(|i| format!("t{i}\tgenial partido {i}\t{}\n", Label::ALL[i % 4]))
            .collect();
        let path = dir.path().join(format!("set{k}.tsv"));
        fs::write(&path, body).unwrap();
        config.data.train_sets.push(NamedPath {
            name: format!("set{k}"),
            path,
        });
    }
    let splits = load_splits(&config).unwrap();
    assert_eq!(splits.train.len(), sizes.iter().sum::<usize>());
    assert!(splits.train.tweets.iter().any(|t| t.id == "set3/t0"));
}

#[test]
fn unlabeled_test_split_is_predicted_not_scored() {
    let dir = tempfile::tempdir().unwrap();
    let unlabeled: String = fs::read_to_string(fixture_dir().join("test.tsv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once('\t').unwrap().0.to_string() + "\n")
        .collect();
    let test_path = dir.path().join("test.tsv");
    fs::write(&test_path, unlabeled).unwrap();
    let mut config = light_config();
    config.augment = Default::default();
    config.data.test = Some(test_path);
    let out = dir.path().join("run");
    let outcome = run_experiment(&config, Some(&out)).unwrap();
    assert!(outcome.test.is_none() && outcome.dev.is_some());
    assert_eq!(
        fs::read_to_string(out.join("predictions_test.tsv"))
            .unwrap()
            .lines()
            .count(),
        50
    );
    assert!(!out.join("report_test.txt").exists());
}

#[test]
fn errors_name_their_stage() {
    let mut config = light_config();
    config.data.dev = Some(PathBuf::from("missing.tsv"));
    match run_experiment(&config, None) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "config"),
        other => panic!("unexpected {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("train.tsv");
    fs::write(&bad, "a\ttexto\tMAYBE\n").unwrap();
    let mut config = light_config();
    config.data.train = Some(bad);
    let err = run_experiment(&config, None).unwrap_err();
    assert!(err.to_string().starts_with("[load]"), "{err}");
}

#[test]
fn tampered_layout_is_rejected() {
    let mut config = light_config();
    config.augment = Default::default();
    let out = tempfile::tempdir().unwrap();
    run_experiment(&config, Some(out.path())).unwrap();
    let path = out.path().join(MODEL_FILE);
    let mut model: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    model["layout"]["blocks"][0]["dim"] = serde_json::json!(3);
    fs::write(&path, model.to_string()).unwrap();
    let err = TrainedSystem::load(out.path(), &Resources::new()).unwrap_err();
    assert!(matches!(err, Error::LayoutMismatch { .. }), "{err}");
}

#[test]
fn predict_handles_empty_and_single_inputs() {
    let mut config = light_config();
    config.augment = Default::default();
    let out = tempfile::tempdir().unwrap();
    run_experiment(&config, Some(out.path())).unwrap();
    let empty = out.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    assert_eq!(predict_file(out.path(), &empty).unwrap(), "");
    let single = out.path().join("single.tsv");
    fs::write(&single, "q1\tQué partido tan genial 😀\n").unwrap();
    let line = predict_file(out.path(), &single).unwrap();
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("q1\t"));
    let malformed = out.path().join("bad.tsv");
    fs::write(&malformed, "only-one-column\n").unwrap();
    assert!(predict_file(out.path(), &malformed).is_err());
}

#[test]
fn grid_search_ranks_and_persists() {
    let mut config = light_config();
    config.augment.translation = None;
    let single: Grid = serde_json::from_str(r#"{"C": [0.2]}"#).unwrap();
    let result = grid_search(&config, &single, None).unwrap();
    assert_eq!(result.rows.len(), 1);
    assert_eq!(result.best_config.model.c, 0.2);

    let grid: Grid = serde_json::from_str(r#"{"C": [0.1, 1.0], "crossover_factor": [1, 2]}"#).unwrap();
    let out = tempfile::tempdir().unwrap();
    let result = grid_search(&config, &grid, Some(out.path())).unwrap();
    assert_eq!(result.rows.len(), 4);
    let best = result.best();
    assert!(result
        .rows
        .iter()
        .all(|r| (r.macro_f1, r.accuracy) <= (best.macro_f1, best.accuracy)));
    let table = fs::read_to_string(out.path().join("grid.tsv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let saved = ExperimentConfig::from_json(
        &fs::read_to_string(out.path().join("best_config.json")).unwrap(),
        fixture_dir(),
    )
    .unwrap();
    assert_eq!(saved.model.c, result.best_config.model.c);

    let sweep: Grid = serde_json::from_str(r#"{"crossover_factor": [4, 8, 12, 16, 20]}"#).unwrap();
    assert_eq!(sweep.assignments().len(), 5);
    assert!(grid_search(&config, &Grid::default(), None).is_err());
}

#[test]
fn large_ensemble_is_not_worse_than_single_model() {
    let splits = load_splits(&fixture_config()).unwrap();
    let preprocess = fixture_config().preprocess_config().unwrap();
    let instances = |d: &polarity::corpus::Dataset| -> Vec<Instance> {
        d.tweets.iter().map(|t| Instance::from_tweet(t, &preprocess)).collect()
    };
    let spec = FeatureSpec {
        bow: light_config().features.bow,
        boc: None,
        embedding: None,
    };
    let train = instances(&splits.train);
    let pipeline = FeaturePipeline::fit(&train, spec, preprocess.clone()).unwrap();
    let x = pipeline.featurize_all(&train);
    let y = splits.train.labels().unwrap();
    let dev = splits.dev.unwrap();
    let dev_x = pipeline.featurize_all(&instances(&dev));
    let dev_y = dev.labels().unwrap();
    let lr = LrConfig::new(0.2, ClassWeight::None);
    let single = train_lr(&x, &y, &lr).unwrap();
    let ensemble = train_bagging(
        &x,
        &y,
        &lr,
        &BaggingConfig {
            n_estimators: 40,
            seed: 42,
        },
    )
    .unwrap();
    let (a, _) = evaluate_features(&single, &dev_x, &dev_y).unwrap();
    let (b, _) = evaluate_features(&ensemble, &dev_x, &dev_y).unwrap();
    assert!(
        b.report.accuracy >= a.report.accuracy - 2.0,
        "{} vs {}",
        b.report.accuracy,
        a.report.accuracy
    );
}

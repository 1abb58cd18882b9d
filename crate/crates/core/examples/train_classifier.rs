//! One-vs-rest logistic regression and a bagged ensemble on the synthetic
//! corpus, using hand-assembled features.
//!
//! cargo run --release --example train_classifier

use polarity::corpus::{load_tsv, Split};
use polarity::eval::evaluate_features;
use polarity::features::{FeaturePipeline, FeatureSpec, Instance};
use polarity::model::{compute_class_weights, train_bagging, train_lr_detailed, BaggingConfig, ClassWeight, LrConfig};
use polarity::preprocess::PreprocessConfig;
use polarity::vectorize::NgramConfig;

fn main() -> polarity::error::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic");
    let train = load_tsv(format!("{dir}/train.tsv"), "synthetic", Split::Train)?;
    let dev = load_tsv(format!("{dir}/dev.tsv"), "synthetic", Split::Dev)?;
    let preprocess = PreprocessConfig::spanish_default();
    let instances = |d: &polarity::corpus::Dataset| -> Vec<Instance> {
        d.tweets.iter().map(|t| Instance::from_tweet(t, &preprocess)).collect()
    };
    let (train_x, dev_x) = (instances(&train), instances(&dev));
    let spec = FeatureSpec {
        bow: Some(NgramConfig {
            n_max: 2,
            ..NgramConfig::WORD_DEFAULT
        }),
        boc: Some(NgramConfig {
            n_max: 4,
            ..NgramConfig::CHAR_DEFAULT
        }),
        embedding: None,
    };
    let pipeline = FeaturePipeline::fit(&train_x, spec, preprocess.clone())?;
    println!("layout {}", pipeline.layout());
    let x = pipeline.featurize_all(&train_x);
    let y = train.labels()?;
    let dev_features = pipeline.featurize_all(&dev_x);
    let dev_y = dev.labels()?;

    println!(
        "balanced weights {:?}",
        compute_class_weights(&polarity::corpus::count_labels(&y), ClassWeight::Balanced)?
    );
    for c in [0.05, 0.2, 1.0] {
        let trained = train_lr_detailed(&x, &y, &LrConfig::new(c, ClassWeight::None))?;
        let iterations: Vec<usize> = trained.reports.iter().map(|r| r.iterations).collect();
        let (e, _) = evaluate_features(&trained.model, &dev_features, &dev_y)?;
        println!(
            "C={c:<5} Newton iterations {iterations:?}  dev macro-F1 {:.2} acc {:.2}",
            e.report.macro_f1, e.report.accuracy
        );
    }
    let ensemble = train_bagging(
        &x,
        &y,
        &LrConfig::new(0.2, ClassWeight::None),
        &BaggingConfig {
            n_estimators: 10,
            seed: 1,
        },
    )?;
    let (e, _) = evaluate_features(&ensemble, &dev_features, &dev_y)?;
    println!(
        "bagging x10     dev macro-F1 {:.2} acc {:.2}",
        e.report.macro_f1, e.report.accuracy
    );
    Ok(())
}

//! Polarity classification for Spanish tweets.
//!
//! The pipeline runs raw tweets through tokenization and normalization
//! ([`preprocess`]), optionally grows the training split with crossover and
//! round-trip translation ([`augment`]), builds sparse n-gram and dense SIF
//! features ([`vectorize`], [`embeddings`], [`features`]), trains one-vs-rest
//! logistic regression with optional bagging ([`model`]) and scores the
//! result ([`eval`]). [`experiment`] ties the stages together from a JSON
//! [`config`], and [`synthetic`] generates the bundled demo corpus.
//!
//! ```no_run
//! use polarity::config::ExperimentConfig;
//! use polarity::experiment::run_experiment;
//!
//! let config = ExperimentConfig::load("data/synthetic/config.json")?;
//! let outcome = run_experiment(&config, Some("out".as_ref()))?;
//! println!("{}", outcome.dev.expect("dev split is labeled"));
//! # Ok::<(), polarity::error::Error>(())
//! ```

pub mod augment;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod model;
pub mod preprocess;
pub mod seed;
pub mod synthetic;
pub mod vectorize;

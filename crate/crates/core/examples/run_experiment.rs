//! Full pipeline on a config file, printing dev and test reports.
//!
//! cargo run --release --example run_experiment -- [CONFIG] [OUT_DIR]

use std::path::PathBuf;
use std::time::Instant;

use polarity::config::ExperimentConfig;
use polarity::experiment::run_experiment;

fn main() -> polarity::error::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic/config.json").to_string());
    let out = args.next().map(PathBuf::from);
    let config = ExperimentConfig::load(&config)?;
    let start = Instant::now();
    let outcome = run_experiment(&config, out.as_deref())?;
    println!(
        "{}: {} training instances, layout {}",
        config.name, outcome.train_size, outcome.layout
    );
    if let Some(dev) = &outcome.dev {
        println!("\ndev\n{dev}");
    }
    if let Some(test) = &outcome.test {
        println!("\ntest\n{test}");
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}

//! Component removals on the synthetic corpus, one dev-set row each.
//!
//! cargo run --release --example ablation -- [CONFIG]

use polarity::config::ExperimentConfig;
use polarity::experiment::{run_ablation, Ablation};

fn main() -> polarity::error::Result<()> {
    env_logger::init();
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic/config.json").to_string());
    let config = ExperimentConfig::load(&path)?;
    let table = run_ablation(&config, &Ablation::ALL, None)?;
    print!("{}", table.to_text());
    Ok(())
}

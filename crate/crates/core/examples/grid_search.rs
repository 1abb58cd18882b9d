//! Exhaustive search over C and crossover factor on the dev split.
//!
//! cargo run --release --example grid_search -- [CONFIG] [GRID]

use polarity::config::ExperimentConfig;
use polarity::experiment::{grid_search, Grid};

fn main() -> polarity::error::Result<()> {
    env_logger::init();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic");
    let mut args = std::env::args().skip(1);
    let config = args.next().unwrap_or_else(|| format!("{dir}/config.json"));
    let grid = args.next().unwrap_or_else(|| format!("{dir}/grid.json"));
    let config = ExperimentConfig::load(&config)?;
    let grid: Grid =
        serde_json::from_str(&std::fs::read_to_string(&grid).map_err(|e| polarity::error::Error::io(&grid, e))?)?;
    let result = grid_search(&config, &grid, None)?;
    print!("{}", result.to_tsv());
    let best = result.best();
    println!("best {:?}: macro-F1 {:.2}", best.params, best.macro_f1);
    Ok(())
}

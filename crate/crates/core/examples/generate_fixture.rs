//! Regenerates the bundled synthetic corpus.
//!
//! cargo run --example generate_fixture -- [OUT_DIR]

use polarity::synthetic::{generate, SyntheticSpec};

fn main() -> polarity::error::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic").to_string());
    let corpus = generate(&SyntheticSpec::default());
    corpus.write(&out)?;
    for (name, content) in &corpus.files {
        println!("{name:<18} {:>8} bytes", content.len());
    }
    println!(
        "train {} / dev {} / test {} -> {out}",
        corpus.train.len(),
        corpus.dev.len(),
        corpus.test.len()
    );
    Ok(())
}

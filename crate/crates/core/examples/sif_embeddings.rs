//! SIF tweet embeddings over the bundled vectors, including subword
//! fallback for unseen words and common-component removal.
//!
//! cargo run --example sif_embeddings

use polarity::embeddings::{
    load_embeddings, load_subwords, load_unigram_counts, remove_common_component, sif_embed, sif_weight, SifConfig,
};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b)).max(f64::MIN_POSITIVE)
}

fn main() -> polarity::error::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic");
    let table = load_embeddings(format!("{dir}/vectors.vec"))?;
    let subwords = load_subwords(format!("{dir}/subwords.txt"), table.dim())?;
    let table = table.with_subwords(subwords)?;
    let unigrams = load_unigram_counts(format!("{dir}/unigrams.tsv"))?;
    let config = SifConfig::default();

    for w in ["genial", "el", "partido"] {
        let p = unigrams.probability(w);
        println!("p({w}) = {p:.5}  weight {:.4}", sif_weight(config.a, p));
    }
    // "genialísimo" is not in the table; its vector comes from shared n-grams.
    let oov = table.word_vector("genialísimo");
    println!(
        "cos(genialísimo, genial) = {:.3}",
        cosine(&oov, &table.word_vector("genial"))
    );
    println!(
        "cos(genialísimo, horrible) = {:.3}",
        cosine(&oov, &table.word_vector("horrible"))
    );

    let tweets: [&[&str]; 4] = [
        &["genial", "partido", "hoy"],
        &["excelente", "concierto"],
        &["horrible", "tren", "triste"],
        &[],
    ];
    let rows: Vec<Vec<f64>> = tweets
        .iter()
        .map(|t| sif_embed(t, &table, &unigrams, &config))
        .collect();
    let cleaned = remove_common_component(&rows)?;
    println!(
        "cos(t0, t1) raw {:.3} cleaned {:.3}",
        cosine(&rows[0], &rows[1]),
        cosine(&cleaned[0], &cleaned[1])
    );
    println!(
        "cos(t0, t2) raw {:.3} cleaned {:.3}",
        cosine(&rows[0], &rows[2]),
        cosine(&cleaned[0], &cleaned[2])
    );
    println!("empty tweet is zero: {}", rows[3].iter().all(|&x| x == 0.0));
    Ok(())
}

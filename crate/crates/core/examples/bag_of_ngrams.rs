//! Word and character n-gram vocabularies with TF-IDF weighting.
//!
//! cargo run --example bag_of_ngrams

use polarity::vectorize::{extract_char_ngrams, extract_word_ngrams, NgramConfig, Vocabulary};

fn main() -> polarity::error::Result<()> {
    let docs = ["me gusta el tren", "no me gusta el frío", "el tren llega tarde"];
    let tokenized: Vec<Vec<&str>> = docs.iter().map(|d| d.split(' ').collect()).collect();

    let words: Vec<_> = tokenized.iter().map(|t| extract_word_ngrams(t, 2)).collect();
    let bow = Vocabulary::fit(
        &words,
        NgramConfig {
            n_max: 2,
            ..NgramConfig::WORD_DEFAULT
        },
    )?;
    println!("BoW vocabulary: {} terms", bow.len());
    for i in 0..bow.len() {
        println!("  {:<16} idf {:.4}", bow.term(i).unwrap_or_default(), bow.idf(i));
    }
    for (doc, counts) in docs.iter().zip(&words) {
        let v = bow.transform(counts);
        let terms: Vec<String> = v
            .iter()
            .map(|(i, x)| format!("{}={x:.3}", bow.term(i).unwrap_or_default()))
            .collect();
        println!("{doc:?} (norm {:.6})\n  {}", v.norm(), terms.join(" "));
    }

    let chars: Vec<_> = docs.iter().map(|d| extract_char_ngrams(d, 3)).collect();
    let boc = Vocabulary::fit(
        &chars,
        NgramConfig {
            n_max: 3,
            ..NgramConfig::CHAR_DEFAULT
        },
    )?;
    println!(
        "\nBoC vocabulary (n <= 3): {} terms, nnz of first doc {}",
        boc.len(),
        boc.transform(&chars[0]).nnz()
    );
    Ok(())
}

//! Paraphrases through pivot languages with an offline translator and an
//! on-disk cache.
//!
//! cargo run --example two_way_translation

use polarity::augment::{translation_augment, FixtureTranslator, TranslationCache, TranslationConfig};
use polarity::corpus::{Dataset, Label, Split, Tweet};

fn main() -> polarity::error::Result<()> {
    let mut client = FixtureTranslator::identity();
    client.insert("es", "en", "fue genial", "it was great");
    client.insert("en", "es", "it was great", "estuvo genial");
    client.insert("es", "fr", "fue genial", "c'était génial");
    client.insert("fr", "es", "c'était génial", "era genial");

    let dataset = Dataset::from_tweets(
        "demo",
        Split::Train,
        vec![
            Tweet::new("a", "fue genial", Some(Label::P)),
            Tweet::new("b", "sin traducción disponible", Some(Label::NONE)),
        ],
    )?;
    let dir = std::env::temp_dir().join("polarity-two-way-translation");
    std::fs::create_dir_all(&dir).map_err(|e| polarity::error::Error::io(&dir, e))?;
    let cache_path = dir.join("cache.jsonl");
    let mut cache = TranslationCache::open(&cache_path)?;
    let config = TranslationConfig::new(&["en", "fr"]);
    let out = translation_augment(&dataset, &client, &mut cache, &config)?;
    for t in &out.tweets {
        println!("{:<6} {}", t.id, t.text);
    }
    println!("{} cached translations in {}", cache.len(), cache_path.display());
    Ok(())
}

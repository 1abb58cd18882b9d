//! Basic and semantic preprocessing of a few raw tweets.
//!
//! cargo run --example preprocess_tweets

use polarity::preprocess::{basic_tokens, join_surfaces, semantic_preprocess, tokenize, PreprocessConfig};

fn main() {
    let config = PreprocessConfig::spanish_default().with_stopwords(["el", "la", "de", "que", "me", "es"]);
    let tweets = [
        "@ana_22 no me gustó nada la peli de anoche 😡 https://t.co/xY12ab",
        "Qué partidoooo!!! #VamosEquipo escribe a info@club.es",
        "Nunca había visto algo tan bonito en la ciudad, gracias",
    ];
    for raw in tweets {
        let tokens = tokenize(raw);
        let basic = basic_tokens(raw, &config);
        let semantic = semantic_preprocess(&basic, &config);
        println!("raw       {raw}");
        println!(
            "tokens    {}",
            tokens
                .iter()
                .map(|t| format!("{}/{:?}", t.surface, t.kind))
                .collect::<Vec<_>>()
                .join(" ")
        );
        println!("basic     {}", join_surfaces(&basic));
        println!("semantic  {}\n", join_surfaces(&semantic));
    }
}

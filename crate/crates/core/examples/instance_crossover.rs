//! Half-and-half recombination of same-label tweets.
//!
//! cargo run --example instance_crossover

use polarity::augment::{crossover_augment, crossover_pair, split_halves, CrossoverConfig};
use polarity::corpus::{label_distribution, Dataset, Label, Split, Tweet};

fn main() -> polarity::error::Result<()> {
    let a: Vec<&str> = "@USER fue genial debemos organizar más cosas así sin necesidad de que nadie abandone el país"
        .split(' ')
        .collect();
    let b: Vec<&str> = "@USER me alegro mucho ! ! es importante darnos cuenta del gran valor que podemos aportar y encontrar nuestra misión"
        .split(' ')
        .collect();
    let (head, _) = split_halves(&a);
    let (_, tail) = split_halves(&b);
    println!("first half:  {}", head.join(" "));
    println!("second half: {}", tail.join(" "));
    println!("crossed:     {}\n", crossover_pair(&a, &b).join(" "));

    let tweets = vec![
        Tweet::new("1", "qué buen día para salir", Some(Label::P)),
        Tweet::new("2", "me encanta este lugar tan bonito", Some(Label::P)),
        Tweet::new("3", "todo salió mal otra vez", Some(Label::N)),
        Tweet::new("4", "odio esperar el tren bajo la lluvia", Some(Label::N)),
        Tweet::new("5", "mañana hay reunión a las diez", Some(Label::NONE)),
    ];
    let dataset = Dataset::from_tweets("demo", Split::Train, tweets)?;
    for factor in [4, 8] {
        let out = crossover_augment(&dataset, &CrossoverConfig { factor, seed: 7 })?;
        println!(
            "factor {factor}: {} -> {} tweets, {:?}",
            dataset.len(),
            out.len(),
            label_distribution(&out)?
        );
    }
    let out = crossover_augment(&dataset, &CrossoverConfig { factor: 2, seed: 7 })?;
    for t in out.tweets.iter().skip(dataset.len()) {
        println!(
            "  {:<10} {:<4} {}",
            t.id,
            t.label.map(|l| l.as_str()).unwrap_or("-"),
            t.text
        );
    }
    Ok(())
}

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use polarity::augment::{crossover_augment, split_halves, CrossoverConfig};
use polarity::corpus::{label_distribution, merge, parse_tsv, Dataset, Label, Split, Tweet};
use polarity::embeddings::{remove_common_component, sif_embed, EmbeddingTable, SifConfig, Subwords, UnigramModel};
use polarity::eval::{confusion, percent, report_from_confusion};
use polarity::model::{minimize, BinaryObjective, Classifier, LinearModel};
use polarity::preprocess::{
    basic_preprocess, basic_tokens, full_preprocess, handle_negation, join_surfaces, semantic_preprocess, tokenize,
    PreprocessConfig, TokenKind,
};
use polarity::vectorize::{extract_char_ngrams, extract_word_ngrams, NgramConfig, SparseVector, Vocabulary};

fn tweet_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Záéíóúñ]{1,8}",
        "(no|nunca|ni|sin|No)",
        "@[a-z_0-9]{1,8}",
        "https?://t\\.co/[a-zA-Z0-9]{1,6}",
        "[a-z]{1,5}@[a-z]{1,5}\\.(es|com)",
        "#[A-Za-z]{1,8}",
        "[0-9]{1,4}",
        "(!|\\?|\\.|,|¡|¿|…)",
        "(😀|😡|❤️|👍🏽|👩‍💻)",
        "(holaaaa|siiii|buenooo|jajaja)",
    ];
    prop::collection::vec(piece, 0..14).prop_map(|p| p.join(" "))
}

fn config() -> PreprocessConfig {
    PreprocessConfig::spanish_default().with_stopwords(["la", "el", "me", "de"])
}

fn label() -> impl Strategy<Value = Label> {
    prop::sample::select(Label::ALL.to_vec())
}

proptest! {
    #[test]
    fn tokenize_is_total_and_deterministic(s in any::<String>()) {
        prop_assert_eq!(tokenize(&s), tokenize(&s));
    }

    #[test]
    fn tokens_cover_every_non_space_char(s in tweet_text()) {
        let joined: String = tokenize(&s).iter().map(|t| t.surface.as_str()).collect();
        let expected: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, expected);
    }

    #[test]
    fn basic_preprocess_is_idempotent(s in tweet_text()) {
        let c = config();
        let once = basic_preprocess(&tokenize(&s), &c);
        prop_assert_eq!(basic_preprocess(&once, &c), once.clone());
        prop_assert_eq!(basic_tokens(&join_surfaces(&once), &c), once);
    }

    #[test]
    fn negation_keeps_token_count(s in tweet_text()) {
        let c = config();
        let tokens = basic_tokens(&s, &c);
        let negated = handle_negation(&tokens, &c);
        prop_assert_eq!(negated.len(), tokens.len());
        for (a, b) in tokens.iter().zip(&negated) {
            prop_assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn semantic_output_has_no_punctuation_or_numbers(s in tweet_text()) {
        let out = full_preprocess(&s, &config());
        prop_assert!(out.iter().all(|t| t.kind != TokenKind::Punctuation && t.kind != TokenKind::Number));
    }

    #[test]
    fn hashtags_and_emoji_pass_through(s in tweet_text()) {
        let c = config();
        let untouched = |tokens: &[polarity::preprocess::Token]| -> Vec<String> {
            tokens
                .iter()
                .filter(|t| t.kind == TokenKind::EmojiOrOther || t.surface.starts_with('#'))
                .map(|t| t.surface.clone())
                .collect()
        };
        let before = untouched(&tokenize(&s));
        let after = untouched(&semantic_preprocess(&basic_tokens(&s, &c), &c));
        prop_assert_eq!(before, after);
    }

    #[test]
    fn halves_concatenate_back(tokens in prop::collection::vec(any::<u16>(), 0..64)) {
        let (a, b) = split_halves(&tokens);
        prop_assert_eq!(a.len(), tokens.len().div_ceil(2));
        prop_assert_eq!([a, b].concat(), tokens);
    }

    #[test]
    fn char_ngram_total_matches_formula(s in "\\PC{0,30}", n_max in 1usize..8) {
        let total: u32 = extract_char_ngrams(&s, n_max).values().sum();
        let len = s.chars().count();
        let expected: usize = (1..=n_max).map(|n| (len + 1).saturating_sub(n)).sum();
        prop_assert_eq!(total as usize, expected);
    }

    #[test]
    fn sparse_vectors_are_sorted_unique_and_zero_free(
        pairs in prop::collection::vec((0usize..20, prop_oneof![Just(0.0), -5.0f64..5.0]), 0..40)
    ) {
        let v = SparseVector::from_pairs(20, pairs.clone()).unwrap();
        prop_assert!(v.indices().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(v.values().iter().all(|&x| x != 0.0));
        let mut dense = [0.0; 20];
        for (i, x) in pairs {
            dense[i] += x;
        }
        for (i, d) in dense.iter().enumerate() {
            prop_assert!((v.get(i) - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn tfidf_rows_have_unit_norm(
        docs in prop::collection::vec(prop::collection::vec("[a-d]", 0..8), 1..12),
        n_max in 1usize..4,
    ) {
        let counts: Vec<_> = docs.iter().map(|d| extract_word_ngrams(d, n_max)).collect();
        let vocab = Vocabulary::fit(&counts, NgramConfig { n_max, binarize: false, tfidf: true }).unwrap();
        for c in &counts {
            let v = vocab.transform(c);
            prop_assert!(v.indices().windows(2).all(|w| w[0] < w[1]));
            if v.nnz() > 0 {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sif_is_homogeneous_in_the_table(
        vectors in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 3),
        scale in 0.1f64..10.0,
        tokens in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "oov"]), 0..8),
    ) {
        let words = ["a", "b", "c"];
        let build = |k: f64| {
            let map: HashMap<String, Vec<f64>> = words
                .iter()
                .zip(&vectors)
                .map(|(w, v)| (w.to_string(), v.iter().map(|x| x * k).collect()))
                .collect();
            EmbeddingTable::new(4, map, None).unwrap()
        };
        let unigram = UnigramModel::from_counts([("a".to_string(), 5u64), ("b".to_string(), 1)]);
        let config = SifConfig::default();
        let base = sif_embed(&tokens, &build(1.0), &unigram, &config);
        let scaled = sif_embed(&tokens, &build(scale), &unigram, &config);
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!((x * scale - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn word_vectors_have_table_dimension(word in "\\PC{0,12}", buckets in 1usize..50) {
        let map = HashMap::from([("casa".to_string(), vec![1.0, 2.0, 3.0])]);
        let table = EmbeddingTable::new(3, map, None).unwrap();
        let sub = Subwords { min_n: 2, max_n: 4, bucket_count: buckets, buckets: HashMap::from([(0, vec![1.0, 1.0, 1.0])]) };
        let table = table.with_subwords(sub).unwrap();
        let v = table.word_vector(&word);
        prop_assert_eq!(v.len(), 3);
        prop_assert_eq!(v, table.word_vector(&word));
    }

    #[test]
    fn common_component_removal_leaves_orthogonal_rows(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 2..8)
    ) {
        let out = remove_common_component(&rows).unwrap();
        if let Some(u) = polarity::embeddings::common_component(&rows).unwrap() {
            for row in out {
                let dot: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn crossover_preserves_proportions_and_vocabulary(
        labels in prop::collection::vec(label(), 2..20),
        factor in 1usize..6,
        seed in any::<u64>(),
    ) {
        let tweets: Vec<Tweet> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Tweet::new(i.to_string(), format!("w{i}a w{i}b w{i}c x{}", i % 3), Some(*l)))
            .collect();
        let dataset = Dataset::from_tweets("p", Split::Train, tweets).unwrap();
        let out = crossover_augment(&dataset, &CrossoverConfig { factor, seed }).unwrap();
        prop_assert_eq!(out.len(), factor * dataset.len());
        let before = label_distribution(&dataset).unwrap();
        let after = label_distribution(&out).unwrap();
        for l in Label::ALL {
            prop_assert_eq!(after[&l], factor * before[&l]);
        }
        let text_of: HashMap<&str, &str> = dataset.tweets.iter().map(|t| (t.id.as_str(), t.text.as_str())).collect();
        for t in out.tweets.iter().skip(dataset.len()) {
            let base = t.id.split('#').next().unwrap();
            let parents: BTreeSet<&str> = base.split('+').flat_map(|p| text_of[p].split(' ')).collect();
            prop_assert!(t.text.split(' ').all(|w| parents.contains(w)), "{} not from {:?}", t.text, parents);
        }
    }

    #[test]
    fn objective_never_increases(
        seed_rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 4..16),
        c in 0.01f64..100.0,
    ) {
        let rows: Vec<SparseVector> = seed_rows.iter().map(|r| SparseVector::from_dense(r)).collect();
        let y: Vec<f64> = (0..rows.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let obj = BinaryObjective::new(&rows, y, vec![1.0; rows.len()], c).unwrap();
        let (_, report) = minimize(&obj, 1e-6, 1000);
        prop_assert!(report.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn weight_scaling_matches_c_scaling(
        seed_rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..10),
        params in prop::collection::vec(-2.0f64..2.0, 4),
        lambda in 0.05f64..20.0,
    ) {
        let rows: Vec<SparseVector> = seed_rows.iter().map(|r| SparseVector::from_dense(r)).collect();
        let y: Vec<f64> = (0..rows.len()).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let n = rows.len();
        let a = BinaryObjective::new(&rows, y.clone(), vec![lambda; n], 0.7).unwrap();
        let b = BinaryObjective::new(&rows, y, vec![1.0; n], 0.7 * lambda).unwrap();
        prop_assert!((a.value(&params) - b.value(&params)).abs() <= 1e-9 * (1.0 + a.value(&params).abs()));
    }

    #[test]
    fn predictions_follow_score_argmax(
        weights in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 4),
        biases in prop::collection::vec(-3.0f64..3.0, 4),
        x in prop::collection::vec(-3.0f64..3.0, 3),
        k in 0.1f64..10.0,
    ) {
        let model = LinearModel { classes: Label::ALL.to_vec(), dim: 3, weights: weights.clone(), biases: biases.clone() };
        let scaled = LinearModel {
            classes: Label::ALL.to_vec(),
            dim: 3,
            weights: weights.iter().map(|w| w.iter().map(|v| v * k).collect()).collect(),
            biases: biases.iter().map(|b| b * k).collect(),
        };
        let x = SparseVector::from_dense(&x);
        let scores = model.scores(&x).unwrap();
        let best = (0..4).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        let pred = model.predict(&x).unwrap();
        prop_assert_eq!(pred, Label::ALL[best]);
        prop_assert_eq!(scaled.predict(&x).unwrap(), pred);
    }

    #[test]
    fn accuracy_times_total_is_trace(
        pairs in prop::collection::vec((label(), label()), 1..200)
    ) {
        let (golds, preds): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
        let cm = confusion(&golds, &preds).unwrap();
        let hits = golds.iter().zip(&preds).filter(|(g, p)| g == p).count() as u64;
        prop_assert_eq!(cm.trace(), hits);
        let report = report_from_confusion(&cm).unwrap();
        prop_assert_eq!(report.accuracy, percent(hits as f64 / golds.len() as f64));
    }

    #[test]
    fn tsv_round_trip_is_byte_identical(
        rows in prop::collection::vec(("[a-z0-9]{1,6}", "[^\\t\\n\\r]{1,30}", label()), 0..20)
    ) {
        let mut seen = BTreeSet::new();
        let tweets: Vec<Tweet> = rows
            .into_iter()
            .filter(|(id, _, _)| seen.insert(id.clone()))
            .filter(|(_, text, _)| !text.trim().is_empty() && text.trim() == text)
            .map(|(id, text, l)| Tweet::new(id, text, Some(l)))
            .collect();
        let dataset = Dataset::from_tweets("rt", Split::Train, tweets).unwrap();
        let tsv = dataset.to_tsv();
        let back = parse_tsv(&tsv, std::path::Path::new("mem"), "rt", Split::Train).unwrap();
        prop_assert_eq!(back.to_tsv(), tsv);
    }

    #[test]
    fn merge_adds_distributions(
        sets in prop::collection::vec(prop::collection::vec(label(), 0..15), 1..5)
    ) {
        let datasets: Vec<Dataset> = sets
            .iter()
            .enumerate()
            .map(|(k, labels)| {
                let tweets = labels.iter().enumerate().map(|(i, l)| Tweet::new(i.to_string(), "x", Some(*l))).collect();
                Dataset::from_tweets(format!("d{k}"), Split::Train, tweets).unwrap()
            })
            .collect();
        let merged = merge(&datasets).unwrap();
        prop_assert_eq!(merged.len(), sets.iter().map(Vec::len).sum::<usize>());
        let total = label_distribution(&merged).unwrap();
        for l in Label::ALL {
            let sum: usize = datasets.iter().map(|d| label_distribution(d).unwrap()[&l]).sum();
            prop_assert_eq!(total[&l], sum);
        }
    }
}

//! Retrieval is checked against a brute-force oracle: score every article,
//! filter by the floor, sort by (score desc, id asc), truncate to k. The
//! index must reproduce that list bit for bit, and shrinking k or raising
//! the floor must only ever shorten it.

use credigraph_core::embed::{self, EmbedderConfig, Embedding};
use credigraph_core::news::{CredibilityTable, NewsArticle, NewsIndex, ScoredEntry};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const VOCAB: [&str; 24] = [
    "river", "delta", "market", "tariff", "engine", "glacier", "sensor", "ballot", "harvest",
    "signal", "cement", "archive", "lantern", "orbit", "quarry", "badge", "timber", "monsoon",
    "ledger", "vaccine", "gasket", "meadow", "turbine", "canal",
];

fn random_text(rng: &mut ChaCha8Rng, min_words: usize, max_words: usize) -> String {
    let n = rng.random_range(min_words..=max_words);
    (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> (Vec<NewsArticle>, CredibilityTable) {
    let sources = ["alpha-desk", "beta-wire", "gamma-post"];
    let mut credibility = CredibilityTable::new();
    for (i, s) in sources.iter().enumerate() {
        credibility.insert(s, (i as f64) * 20.0 + 10.0).unwrap();
    }
    let articles = (0..n)
        .map(|i| NewsArticle {
            id: format!("a{i:04}"),
            title: random_text(rng, 2, 6),
            body: random_text(rng, 3, 12),
            source: sources[rng.random_range(0..sources.len())].to_string(),
            published_at: 1_700_000_000 + i as i64,
        })
        .collect();
    (articles, credibility)
}

/// Brute-force reference: exhaustive cosine scan with the documented
/// ordering, written independently of the index internals.
fn oracle_top_k(
    articles: &[NewsArticle],
    embeddings: &[Embedding],
    query: &Embedding,
    k: usize,
    floor: f64,
) -> Vec<ScoredEntry> {
    let mut scored: Vec<(f64, &str)> = articles
        .iter()
        .zip(embeddings)
        .map(|(a, e)| (embed::dot(query, e).unwrap(), a.id.as_str()))
        .filter(|(s, _)| *s >= floor)
        .collect();
    scored.sort_by(|(sa, ia), (sb, ib)| sb.total_cmp(sa).then_with(|| ia.cmp(ib)));
    scored.truncate(k);
    scored
        .into_iter()
        .map(|(score, id)| ScoredEntry {
            article_id: id.to_string(),
            score,
        })
        .collect()
}

#[test]
fn top_k_matches_brute_force_on_random_corpora() {
    let cfg = EmbedderConfig {
        dimension: 32,
        ..EmbedderConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..40 {
        let n = rng.random_range(1..120);
        let (articles, credibility) = random_corpus(&mut rng, n);
        let index = NewsIndex::build(articles.clone(), credibility, &cfg).unwrap();
        for _ in 0..8 {
            let query = embed::embed(&random_text(&mut rng, 2, 10), &cfg).unwrap();
            let k = rng.random_range(0..=n + 2);
            // Low floors keep the filter from emptying every result.
            let floor = rng.random_range(-0.2..0.6);
            let got = index.top_k(&query, k, floor);
            let want = oracle_top_k(articles.as_slice(), index.embeddings(), &query, k, floor);
            assert_eq!(got.len(), want.len(), "round {round}: result length");
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.article_id, w.article_id, "round {round}: order");
                assert_eq!(
                    g.score.to_bits(),
                    w.score.to_bits(),
                    "round {round}: score must match the oracle exactly"
                );
            }
        }
    }
}

#[test]
fn shrinking_k_yields_a_prefix() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (articles, credibility) = random_corpus(&mut rng, 60);
    let index = NewsIndex::build(articles, credibility, &cfg).unwrap();
    for _ in 0..20 {
        let query = embed::embed(&random_text(&mut rng, 3, 8), &cfg).unwrap();
        let wide = index.top_k(&query, 40, 0.0);
        for k in 0..wide.len() {
            let narrow = index.top_k(&query, k, 0.0);
            assert_eq!(narrow.as_slice(), &wide[..k]);
        }
    }
}

#[test]
fn raising_the_floor_yields_a_prefix() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (articles, credibility) = random_corpus(&mut rng, 60);
    let index = NewsIndex::build(articles, credibility, &cfg).unwrap();
    for _ in 0..20 {
        let query = embed::embed(&random_text(&mut rng, 3, 8), &cfg).unwrap();
        let all = index.top_k(&query, usize::MAX, -1.0);
        for floor in [-0.5, -0.1, 0.0, 0.05, 0.2, 0.5, 0.9] {
            let filtered = index.top_k(&query, usize::MAX, floor);
            // Scores are sorted descending, so the floor keeps a prefix.
            let keep = all.iter().take_while(|e| e.score >= floor).count();
            assert_eq!(filtered.as_slice(), &all[..keep], "floor {floor}");
        }
    }
}

#[test]
fn estimate_is_stable_under_entry_permutation() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let (articles, credibility) = random_corpus(&mut rng, 40);
    let index = NewsIndex::build(articles, credibility, &cfg).unwrap();
    let query = embed::embed(&random_text(&mut rng, 3, 8), &cfg).unwrap();
    let mut entries = index.top_k(&query, 20, 0.0);
    assert!(
        entries.len() >= 3,
        "need a few hits for the shuffle to matter"
    );
    let base = index.credibility_estimate(&entries).unwrap();
    for _ in 0..10 {
        entries.shuffle(&mut rng);
        let shuffled = index.credibility_estimate(&entries).unwrap();
        assert!(
            (shuffled - base).abs() <= 1e-12,
            "estimate moved under permutation: {base} vs {shuffled}"
        );
    }
}

#[test]
fn retrieve_combines_hits_and_estimate() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let (articles, credibility) = random_corpus(&mut rng, 40);
    let index = NewsIndex::build(articles, credibility, &cfg).unwrap();

    // A query made of the corpus vocabulary hits something at floor 0.
    let query = embed::embed(&random_text(&mut rng, 4, 8), &cfg).unwrap();
    let result = index.retrieve(&query, 20, 0.0);
    assert!(!result.entries.is_empty());
    let expect = index.credibility_estimate(&result.entries).unwrap();
    assert_eq!(result.y_hat, Some(expect));

    // A disjoint-vocabulary query abstains at a high floor.
    let off = embed::embed("zyx wvu tsr qpo", &cfg).unwrap();
    let miss = index.retrieve(&off, 20, 0.95);
    assert!(miss.entries.is_empty());
    assert_eq!(miss.y_hat, None);
}

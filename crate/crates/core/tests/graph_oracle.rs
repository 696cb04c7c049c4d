//! The inverted-index graph builder is checked pair by pair against the
//! naive definition: enumerate every post pair, find shared commenters by
//! scanning the comment list, compute both stances per shared commenter,
//! and average the stance products.

use std::collections::BTreeSet;

use credigraph_core::embed::{tokenize, EmbedderConfig};
use credigraph_core::graph::{
    build_graph, shared_commenters, stance, weight_edge, Comment, GraphOptions, Post, Stance,
    WeightedEdge,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const TOPICS: [&str; 12] = [
    "budget", "stadium", "outage", "ferry", "drought", "recall", "merger", "strike", "permit",
    "curfew", "subsidy", "landfill",
];

const CONTRA: [&str; 8] = [
    "hoax",
    "debunked",
    "fabricated",
    "retracted",
    "bogus",
    "doctored",
    "baseless",
    "disproved",
];

fn random_post(rng: &mut ChaCha8Rng, i: usize) -> Post {
    let mut title_words = Vec::new();
    for _ in 0..rng.random_range(3..6) {
        title_words.push(TOPICS[rng.random_range(0..TOPICS.len())]);
    }
    Post {
        id: format!("p{i:03}"),
        title: title_words.join(" "),
        body: TOPICS[rng.random_range(0..TOPICS.len())].to_string(),
        author: format!("op{i:03}"),
        created_at: 1_700_000_000 + i as i64 * 60,
        community: "c0".to_string(),
    }
}

/// Comment text drawn to hit each stance band: echoes agree, disjoint
/// contradiction vocabulary disagrees, and an empty-ish text exercises the
/// untokenizable fallback.
fn random_comment_text(rng: &mut ChaCha8Rng, post: &Post) -> String {
    match rng.random_range(0..4u8) {
        0 => post.full_text(),
        1 => {
            let mut w = Vec::new();
            for _ in 0..5 {
                w.push(CONTRA[rng.random_range(0..CONTRA.len())]);
            }
            w.join(" ")
        }
        2 => "?!".to_string(),
        _ => {
            let mut w: Vec<String> = tokenize(&post.title).into_iter().take(2).collect();
            for _ in 0..4 {
                w.push(TOPICS[rng.random_range(0..TOPICS.len())].to_string());
            }
            w.join(" ")
        }
    }
}

struct Instance {
    posts: Vec<Post>,
    comments: Vec<Comment>,
    options: GraphOptions,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n_posts = rng.random_range(2..14);
    let n_authors = rng.random_range(1..10);
    let n_comments = rng.random_range(0..60);
    let posts: Vec<Post> = (0..n_posts).map(|i| random_post(rng, i)).collect();
    let comments: Vec<Comment> = (0..n_comments)
        .map(|k| {
            let post = &posts[rng.random_range(0..n_posts)];
            Comment {
                id: format!("c{k:03}"),
                post_id: post.id.clone(),
                author: format!("u{:02}", rng.random_range(0..n_authors)),
                text: random_comment_text(rng, post),
            }
        })
        .collect();
    let mut options = GraphOptions::default();
    if rng.random::<f64>() < 0.3 {
        options
            .ignore_authors
            .insert(format!("u{:02}", rng.random_range(0..n_authors)));
    }
    Instance {
        posts,
        comments,
        options,
    }
}

/// Stance of one author on one post, replicating the builder's documented
/// fallback: concatenated comment texts that tokenize to nothing count as
/// neutral rather than erroring.
fn oracle_stance(texts: &[&str], post: &Post, cfg: &EmbedderConfig) -> Stance {
    let joined = texts.join(" ");
    if tokenize(&joined).is_empty() || tokenize(&post.full_text()).is_empty() {
        return Stance::Neutral;
    }
    stance(texts, post, cfg).expect("tokenizable by construction")
}

fn oracle_edges(inst: &Instance, cfg: &EmbedderConfig) -> Vec<WeightedEdge> {
    let kept: Vec<Comment> = inst
        .comments
        .iter()
        .filter(|c| !inst.options.ignore_authors.contains(&c.author))
        .cloned()
        .collect();
    let mut edges = Vec::new();
    for i in 0..inst.posts.len() {
        for j in i + 1..inst.posts.len() {
            let shared: BTreeSet<String> = shared_commenters(&inst.posts[i], &inst.posts[j], &kept);
            if shared.is_empty() {
                continue;
            }
            let mut pairs = Vec::new();
            for author in &shared {
                let texts_on = |post: &Post| -> Vec<&str> {
                    kept.iter()
                        .filter(|c| &c.author == author && c.post_id == post.id)
                        .map(|c| c.text.as_str())
                        .collect()
                };
                let si = oracle_stance(&texts_on(&inst.posts[i]), &inst.posts[i], cfg);
                let sj = oracle_stance(&texts_on(&inst.posts[j]), &inst.posts[j], cfg);
                pairs.push((si, sj));
            }
            let weight = weight_edge(&pairs).expect("shared set is non-empty");
            edges.push(WeightedEdge { a: i, b: j, weight });
        }
    }
    edges
}

#[test]
fn builder_matches_naive_pairwise_definition() {
    let cfg = EmbedderConfig {
        dimension: 64,
        ..EmbedderConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..60 {
        let inst = random_instance(&mut rng);
        let graph = build_graph(&inst.posts, &inst.comments, &cfg, &inst.options).unwrap();
        let want = oracle_edges(&inst, &cfg);

        assert_eq!(
            graph.node_ids(),
            inst.posts
                .iter()
                .map(|p| p.id.clone())
                .collect::<Vec<_>>()
                .as_slice(),
            "round {round}: nodes must mirror post order"
        );
        let got = graph.edges();
        assert_eq!(got.len(), want.len(), "round {round}: edge count");
        for (g, w) in got.iter().zip(&want) {
            assert_eq!((g.a, g.b), (w.a, w.b), "round {round}: endpoints");
            assert!(
                (g.weight - w.weight).abs() <= 1e-12,
                "round {round}: weight {} vs oracle {}",
                g.weight,
                w.weight
            );
        }
    }
}

#[test]
fn edge_weights_always_stay_in_band() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(211);
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let graph = build_graph(&inst.posts, &inst.comments, &cfg, &inst.options).unwrap();
        for e in graph.edges() {
            assert!(e.a < e.b, "edges are stored with ordered endpoints");
            assert!((-1.0..=1.0).contains(&e.weight), "weight {}", e.weight);
        }
    }
}

#[test]
fn adjacency_lists_start_with_the_self_loop() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(307);
    let inst = random_instance(&mut rng);
    let graph = build_graph(&inst.posts, &inst.comments, &cfg, &inst.options).unwrap();
    let adjacency = graph.adjacency_with_self_loops();
    assert_eq!(adjacency.len(), graph.node_count());
    let mut seen_edges = 0usize;
    for (i, neighbors) in adjacency.iter().enumerate() {
        assert_eq!(neighbors[0], (i, 1.0), "self-loop must come first");
        seen_edges += neighbors.len() - 1;
    }
    // Every stored edge appears once per endpoint.
    assert_eq!(seen_edges, 2 * graph.edges().len());
}

#[test]
fn ignored_authors_cannot_create_edges() {
    let cfg = EmbedderConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let posts: Vec<Post> = (0..4).map(|i| random_post(&mut rng, i)).collect();
    // One busy account comments everywhere; one regular pair links 0 and 1.
    let mut comments: Vec<Comment> = posts
        .iter()
        .enumerate()
        .map(|(k, p)| Comment {
            id: format!("bot{k}"),
            post_id: p.id.clone(),
            author: "megaphone".to_string(),
            text: p.full_text(),
        })
        .collect();
    for (k, p) in posts.iter().take(2).enumerate() {
        comments.push(Comment {
            id: format!("real{k}"),
            post_id: p.id.clone(),
            author: "steady".to_string(),
            text: p.full_text(),
        });
    }

    let all = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
    assert_eq!(all.edges().len(), 6, "busy account links every pair");

    let mut options = GraphOptions::default();
    options.ignore_authors.insert("megaphone".to_string());
    let filtered = build_graph(&posts, &comments, &cfg, &options).unwrap();
    assert_eq!(filtered.edges().len(), 1);
    assert_eq!((filtered.edges()[0].a, filtered.edges()[0].b), (0, 1));
    assert!(
        (filtered.edges()[0].weight - 1.0).abs() <= 1e-12,
        "echoes agree on both ends"
    );
}

//! Ground-truth labeling of posts by matching them against a labeled
//! article list (timestamp window + title similarity).
//!
//! A post inherits an article's label when the pair published within the
//! configured window (inclusive) and their titles' embeddings reach the
//! similarity threshold (inclusive). Among several qualifying articles the
//! most similar wins; similarity ties prefer the earliest published
//! article, then the lowest article index. Posts with no qualifying
//! article are reported unmatched, never guessed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embed::{self, EmbedderConfig};
use crate::graph::Post;
use crate::label::Label;

pub const SECONDS_PER_DAY: i64 = 86_400;
/// Default timestamp window, in days on either side.
pub const DEFAULT_WINDOW_DAYS: u32 = 2;
/// Default minimum title similarity.
pub const DEFAULT_TITLE_SIMILARITY: f64 = 0.7;

/// Labeled reference article (title, verdict, publication time).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruthArticle {
    pub title: String,
    pub label: Label,
    /// Seconds since the Unix epoch.
    pub published_at: i64,
}

/// Matching thresholds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchConfig {
    pub window_days: u32,
    pub min_title_similarity: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            window_days: DEFAULT_WINDOW_DAYS,
            min_title_similarity: DEFAULT_TITLE_SIMILARITY,
        }
    }
}

/// The qualification predicate, exposed so boundary behavior is testable
/// in isolation: both the window and the similarity threshold are
/// inclusive.
pub fn qualifies(similarity: f64, delta_seconds: i64, cfg: &MatchConfig) -> bool {
    delta_seconds.abs() <= i64::from(cfg.window_days) * SECONDS_PER_DAY
        && similarity >= cfg.min_title_similarity
}

/// One successfully labeled post.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchedPost {
    pub post_id: String,
    pub label: Label,
    pub similarity: f64,
    /// Index into the article slice the label came from.
    pub article_index: usize,
}

/// Matching outcome: labeled posts and the ids that found no article,
/// both in input post order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    pub matched: Vec<MatchedPost>,
    pub unmatched: Vec<String>,
}

/// Labels `posts` from `articles` under `cfg`. Titles that tokenize to
/// nothing are unmatchable: such posts land in `unmatched` and such
/// articles are skipped as candidates.
pub fn match_posts(
    posts: &[Post],
    articles: &[GroundTruthArticle],
    cfg: &MatchConfig,
    embedder: &EmbedderConfig,
) -> MatchReport {
    let article_vecs: Vec<Option<embed::Embedding>> = articles
        .iter()
        .map(|a| embed::embed(&a.title, embedder).ok())
        .collect();
    let mut report = MatchReport::default();
    for post in posts {
        let Ok(post_vec) = embed::embed(&post.title, embedder) else {
            report.unmatched.push(post.id.clone());
            continue;
        };
        // (similarity desc, published_at asc, index asc) picks the winner.
        let mut best: Option<(f64, i64, usize)> = None;
        for (idx, (article, vec)) in articles.iter().zip(&article_vecs).enumerate() {
            let Some(vec) = vec else { continue };
            let similarity = embed::cosine(&post_vec, vec).expect("equal dimensions");
            if !qualifies(similarity, post.created_at - article.published_at, cfg) {
                continue;
            }
            let candidate = (similarity, article.published_at, idx);
            let better = match best {
                None => true,
                Some((s, t, _)) => similarity > s || (similarity == s && article.published_at < t),
            };
            if better {
                best = Some(candidate);
            }
        }
        match best {
            Some((similarity, _, idx)) => report.matched.push(MatchedPost {
                post_id: post.id.clone(),
                label: articles[idx].label,
                similarity,
                article_index: idx,
            }),
            None => report.unmatched.push(post.id.clone()),
        }
    }
    report
}

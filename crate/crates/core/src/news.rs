//! News article index: exact inner-product retrieval plus source-credibility
//! scoring.
//!
//! Articles are embedded once at build time. A query retrieves the top-k
//! most similar articles above a similarity floor (exhaustive scan, so
//! results are exact), and the mean normalized credibility of the retrieved
//! articles' sources becomes the post's score `y_hat`. Posts with a score
//! at or above a threshold are labeled [`Label::Real`]; retrieval returning
//! nothing yields no score (the caller treats the post as abstained).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::embed::{self, EmbedderConfig, Embedding};
use crate::label::Label;

/// Maximum raw credibility score on the source-rating scale.
pub const CREDIBILITY_SCALE_MAX: f64 = 64.0;
/// Default number of articles retrieved per query.
pub const DEFAULT_TOP_K: usize = 20;
/// Default minimum similarity for an article to count as evidence.
pub const DEFAULT_SIMILARITY_FLOOR: f64 = 0.8;
/// Default decision threshold on `y_hat` (inclusive: at the threshold the
/// label is Real).
pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.5;

/// One news article in the reference corpus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NewsArticle {
    pub id: String,
    pub title: String,
    pub body: String,
    /// Source outlet name; must have a credibility rating.
    pub source: String,
    /// Publication time, seconds since the Unix epoch.
    pub published_at: i64,
}

impl NewsArticle {
    /// Text embedded for retrieval: title and body, space-joined.
    pub fn full_text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.body.len() + 1);
        s.push_str(&self.title);
        if !self.body.is_empty() {
            s.push(' ');
            s.push_str(&self.body);
        }
        s
    }
}

/// Raw credibility ratings per source outlet, each in `[0, 64]`.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CredibilityTable {
    scores: BTreeMap<String, f64>,
}

impl CredibilityTable {
    pub fn new() -> CredibilityTable {
        CredibilityTable::default()
    }

    /// Inserts or replaces a source rating; rejects scores outside the scale.
    pub fn insert(&mut self, source: &str, raw_score: f64) -> Result<(), NewsError> {
        if !(0.0..=CREDIBILITY_SCALE_MAX).contains(&raw_score) {
            return Err(NewsError::ScoreOutOfRange {
                outlet: source.into(),
                raw_score,
            });
        }
        self.scores.insert(source.into(), raw_score);
        Ok(())
    }

    pub fn raw_score(&self, source: &str) -> Option<f64> {
        self.scores.get(source).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(s, &v)| (s.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NewsError {
    #[error("credibility score {raw_score} for {outlet} outside [0, 64]")]
    ScoreOutOfRange { outlet: String, raw_score: f64 },
    #[error("article {article_id} cites source {outlet} with no credibility rating")]
    UnknownSource { article_id: String, outlet: String },
    #[error("duplicate article id {id}")]
    DuplicateArticleId { id: String },
    #[error("article {article_id}: {source}")]
    Embed {
        article_id: String,
        source: embed::EmbedError,
    },
    /// Credibility estimation requires at least one retrieved article.
    #[error("no retrieved articles to estimate credibility from")]
    NoEvidence,
    #[error("imported vector for {id} has dimension {got}, index expects {want}")]
    ImportDimension { id: String, got: usize, want: usize },
    #[error("imported vector for {id} has zero norm")]
    ImportZeroNorm { id: String },
}

/// Maps a raw rating on `[0, 64]` to a credibility in `[0, 1]`.
pub fn normalize_credibility(raw_score: f64) -> Result<f64, NewsError> {
    if !(0.0..=CREDIBILITY_SCALE_MAX).contains(&raw_score) {
        return Err(NewsError::ScoreOutOfRange {
            outlet: String::new(),
            raw_score,
        });
    }
    Ok(raw_score / CREDIBILITY_SCALE_MAX)
}

/// Decision rule on the credibility estimate: Real iff `y_hat >= threshold`.
pub fn initial_label(y_hat: f64, threshold: f64) -> Label {
    if y_hat >= threshold {
        Label::Real
    } else {
        Label::Fake
    }
}

/// One retrieval hit: article id plus its inner-product similarity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredEntry {
    pub article_id: String,
    pub score: f64,
}

/// Retrieval outcome for one query: hits ordered by descending score, and
/// the mean normalized source credibility (`None` when nothing qualified).
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub entries: Vec<ScoredEntry>,
    pub y_hat: Option<f64>,
}

/// Embedded article corpus with credibility ratings attached.
#[derive(Debug, Clone)]
pub struct NewsIndex {
    articles: Vec<NewsArticle>,
    embeddings: Vec<Embedding>,
    by_id: BTreeMap<String, usize>,
    credibility: CredibilityTable,
    config: EmbedderConfig,
}

impl NewsIndex {
    /// Embeds every article and validates ids and source coverage.
    ///
    /// An empty corpus builds an empty (always-abstaining) index.
    pub fn build(
        articles: Vec<NewsArticle>,
        credibility: CredibilityTable,
        config: &EmbedderConfig,
    ) -> Result<NewsIndex, NewsError> {
        let mut embeddings = Vec::with_capacity(articles.len());
        for article in &articles {
            let e =
                embed::embed(&article.full_text(), config).map_err(|source| NewsError::Embed {
                    article_id: article.id.clone(),
                    source,
                })?;
            embeddings.push(e);
        }
        NewsIndex::assemble(articles, embeddings, credibility, config.clone())
    }

    /// Builds from externally supplied vectors (one per article, same order).
    /// Vectors are re-normalized to unit norm on load.
    pub fn from_embeddings(
        articles: Vec<NewsArticle>,
        vectors: Vec<Vec<f64>>,
        credibility: CredibilityTable,
        config: &EmbedderConfig,
    ) -> Result<NewsIndex, NewsError> {
        assert_eq!(
            articles.len(),
            vectors.len(),
            "one vector per article required"
        );
        let mut embeddings = Vec::with_capacity(vectors.len());
        for (article, v) in articles.iter().zip(vectors) {
            if v.len() != config.dimension {
                return Err(NewsError::ImportDimension {
                    id: article.id.clone(),
                    got: v.len(),
                    want: config.dimension,
                });
            }
            let e = Embedding::normalized(v).map_err(|_| NewsError::ImportZeroNorm {
                id: article.id.clone(),
            })?;
            embeddings.push(e);
        }
        NewsIndex::assemble(articles, embeddings, credibility, config.clone())
    }

    fn assemble(
        articles: Vec<NewsArticle>,
        embeddings: Vec<Embedding>,
        credibility: CredibilityTable,
        config: EmbedderConfig,
    ) -> Result<NewsIndex, NewsError> {
        let mut by_id = BTreeMap::new();
        for (i, article) in articles.iter().enumerate() {
            if credibility.raw_score(&article.source).is_none() {
                return Err(NewsError::UnknownSource {
                    article_id: article.id.clone(),
                    outlet: article.source.clone(),
                });
            }
            if by_id.insert(article.id.clone(), i).is_some() {
                return Err(NewsError::DuplicateArticleId {
                    id: article.id.clone(),
                });
            }
        }
        Ok(NewsIndex {
            articles,
            embeddings,
            by_id,
            credibility,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[NewsArticle] {
        &self.articles
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn credibility(&self) -> &CredibilityTable {
        &self.credibility
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.config
    }

    pub fn article_by_id(&self, id: &str) -> Option<&NewsArticle> {
        self.by_id.get(id).map(|&i| &self.articles[i])
    }

    /// Exhaustive top-k retrieval: all articles scoring at least `floor`
    /// by inner product, sorted by descending score (ties by ascending id),
    /// truncated to `k`.
    pub fn top_k(&self, query: &Embedding, k: usize, floor: f64) -> Vec<ScoredEntry> {
        let mut hits: Vec<(usize, f64)> = Vec::new();
        for (i, e) in self.embeddings.iter().enumerate() {
            let score = embed::dot(query, e).expect("index vectors share query dimension");
            if score >= floor {
                hits.push((i, score));
            }
        }
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.articles[a.0].id.cmp(&self.articles[b.0].id))
        });
        hits.truncate(k);
        hits.into_iter()
            .map(|(i, score)| ScoredEntry {
                article_id: self.articles[i].id.clone(),
                score,
            })
            .collect()
    }

    /// Mean normalized credibility of the entries' sources.
    pub fn credibility_estimate(&self, entries: &[ScoredEntry]) -> Result<f64, NewsError> {
        if entries.is_empty() {
            return Err(NewsError::NoEvidence);
        }
        let mut sum = 0.0;
        for entry in entries {
            let article = self
                .article_by_id(&entry.article_id)
                .expect("entries reference indexed articles");
            let raw = self
                .credibility
                .raw_score(&article.source)
                .expect("indexed sources are rated");
            sum += normalize_credibility(raw)?;
        }
        Ok(sum / entries.len() as f64)
    }

    /// Retrieval plus credibility estimation in one step. `y_hat` is `None`
    /// exactly when no article met the floor.
    pub fn retrieve(&self, query: &Embedding, k: usize, floor: f64) -> RetrievalResult {
        let entries = self.top_k(query, k, floor);
        let y_hat = if entries.is_empty() {
            None
        } else {
            Some(
                self.credibility_estimate(&entries)
                    .expect("non-empty entries"),
            )
        };
        RetrievalResult { entries, y_hat }
    }
}

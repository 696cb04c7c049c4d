//! Seeded synthetic corpus generator for end-to-end evaluation.
//!
//! The generator plants a known community structure and veracity labels,
//! then renders them as text so every upstream component (embedding,
//! retrieval, stance detection, graph construction, refinement) faces
//! realistic inputs with a recoverable ground truth:
//!
//! * posts are assigned round-robin to communities with per-community
//!   vocabularies, and the fake quota is filled community by community;
//! * most posts receive 2-3 news articles echoing their text, cited to
//!   trusted or dubious sources aligned with the post's label;
//! * commenters have a home community and mostly comment there
//!   (`homophily`); a comment's planted stance is agreement at home and
//!   disagreement elsewhere, and its text realizes that stance with
//!   probability `stance_fidelity` (otherwise it reads as neutral).
//!
//! All randomness flows through one ChaCha8 stream in a fixed draw order,
//! so equal configs reproduce the dataset byte for byte. The manifest
//! records what was planted, which is what evaluation compares against.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Comment, Post, Stance};
use crate::label::Label;
use crate::math;
use crate::news::{CredibilityTable, NewsArticle};

/// Fraction of posts that receive news articles.
const ARTICLE_COVERAGE: f64 = 0.9;
/// Probability an article's source credibility aligns with the post label.
const SOURCE_ALIGNMENT: f64 = 0.95;
/// Words drawn into a post title (plus one unique tag token).
const TITLE_WORDS: usize = 5;
/// Words drawn into a post body.
const BODY_WORDS: usize = 4;

const TRUSTED_SOURCES: [(&str, f64); 3] = [
    ("wire-desk", 60.0),
    ("city-ledger", 56.0),
    ("plain-record", 52.0),
];
const DUBIOUS_SOURCES: [(&str, f64); 3] = [
    ("daily-rumor", 8.0),
    ("viral-scoop", 4.0),
    ("shock-wire", 12.0),
];

/// Per-community vocabularies; communities beyond the table synthesize
/// their own tokens.
const COMMUNITY_POOLS: [[&str; 12]; 8] = [
    [
        "solar", "grid", "panels", "storage", "inverter", "rooftop", "wattage", "battery",
        "utility", "meter", "output", "circuits",
    ],
    [
        "vaccine", "trial", "dosage", "immunity", "booster", "clinic", "antibody", "placebo",
        "cohort", "efficacy", "strain", "virus",
    ],
    [
        "transit",
        "rail",
        "station",
        "corridor",
        "fares",
        "commuters",
        "schedule",
        "platform",
        "tunnel",
        "depot",
        "line",
        "service",
    ],
    [
        "harvest",
        "drought",
        "irrigation",
        "soil",
        "yield",
        "orchard",
        "livestock",
        "grain",
        "acreage",
        "rainfall",
        "crops",
        "farmland",
    ],
    [
        "budget",
        "council",
        "audit",
        "levy",
        "surplus",
        "treasury",
        "allocation",
        "deficit",
        "bond",
        "revenue",
        "spending",
        "fiscal",
    ],
    [
        "wildfire",
        "evacuation",
        "containment",
        "acres",
        "blaze",
        "firefighters",
        "smoke",
        "perimeter",
        "embers",
        "terrain",
        "winds",
        "crews",
    ],
    [
        "lithium", "mining", "refinery", "export", "tariff", "smelter", "ore", "cobalt", "freight",
        "shipment", "quarry", "minerals",
    ],
    [
        "stadium",
        "playoffs",
        "roster",
        "transfer",
        "coach",
        "league",
        "fixture",
        "championship",
        "injury",
        "goalkeeper",
        "draft",
        "season",
    ],
];

/// Vocabulary for disagreeing comments; disjoint from every community pool.
const CONTRA_WORDS: [&str; 12] = [
    "nonsense",
    "debunked",
    "hoax",
    "false",
    "misleading",
    "propaganda",
    "garbage",
    "wrong",
    "fabricated",
    "laughable",
    "bogus",
    "myth",
];
/// Filler for neutral comments; disjoint from every other pool.
const NEUTRAL_WORDS: [&str; 12] = [
    "hmm",
    "maybe",
    "source",
    "unsure",
    "context",
    "depends",
    "wondering",
    "asking",
    "thread",
    "links",
    "curious",
    "genuinely",
];

const BASE_TIMESTAMP: i64 = 1_700_000_000;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub n_posts: usize,
    pub n_authors: usize,
    pub n_communities: usize,
    /// Probability a comment targets the author's home community.
    pub homophily: f64,
    /// Fraction of posts labeled Fake (rounded to a count).
    pub fake_fraction: f64,
    /// Mean comments written per author.
    pub comment_rate: f64,
    /// Probability a comment's text realizes its planted stance; misses
    /// read as neutral.
    pub stance_fidelity: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_posts: 200,
            n_authors: 100,
            n_communities: 2,
            homophily: 0.9,
            fake_fraction: 0.5,
            comment_rate: 6.0,
            stance_fidelity: 0.9,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_communities == 0 {
            return Err(SynthError::ConfigError {
                reason: "n_communities must be at least 1",
            });
        }
        for (value, name) in [
            (self.homophily, "homophily"),
            (self.fake_fraction, "fake_fraction"),
            (self.stance_fidelity, "stance_fidelity"),
        ] {
            if !(0.0..=1.0).contains(&value) {
                let _ = name;
                return Err(SynthError::ConfigError {
                    reason: "probabilities must lie in [0, 1]",
                });
            }
        }
        if !(self.comment_rate >= 0.0 && self.comment_rate.is_finite()) {
            return Err(SynthError::ConfigError {
                reason: "comment_rate must be non-negative and finite",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator config: {reason}")]
    ConfigError { reason: &'static str },
}

/// What the generator planted for one post.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedPost {
    pub post_id: String,
    pub community: usize,
    pub label: Label,
}

/// What the generator planted for one comment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedComment {
    pub comment_id: String,
    pub post_id: String,
    pub author: String,
    /// Stance the comment was meant to express.
    pub planted: Stance,
    /// Stance the text actually encodes (neutral on a fidelity miss).
    pub realized: Stance,
}

/// Ground-truth record of everything the generator decided.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub n_fake: usize,
    pub posts: Vec<PlantedPost>,
    pub comments: Vec<PlantedComment>,
}

/// A generated corpus plus its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub posts: Vec<Post>,
    pub comments: Vec<Comment>,
    pub articles: Vec<NewsArticle>,
    pub credibility: CredibilityTable,
    /// Planted label per post, parallel to `posts`.
    pub truth: Vec<Label>,
    pub manifest: SynthManifest,
}

fn pool_word(community: usize, idx: usize) -> String {
    if community < COMMUNITY_POOLS.len() {
        COMMUNITY_POOLS[community][idx].to_string()
    } else {
        format!("zone{community}term{idx}")
    }
}

/// Posts in community `c` are the indices congruent to `c` modulo the
/// community count.
fn community_size(n_posts: usize, community: usize, n_communities: usize) -> usize {
    if community >= n_posts {
        0
    } else {
        (n_posts - community - 1) / n_communities + 1
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.n_communities;

    // Labels: fake quota filled community by community, post order within.
    let n_fake = math::round(cfg.fake_fraction * cfg.n_posts as f64) as usize;
    let mut truth = alloc::vec![Label::Real; cfg.n_posts];
    let mut remaining = n_fake;
    'outer: for c in 0..k {
        let mut i = c;
        while i < cfg.n_posts {
            if remaining == 0 {
                break 'outer;
            }
            truth[i] = Label::Fake;
            remaining -= 1;
            i += k;
        }
    }

    // Posts.
    let mut posts = Vec::with_capacity(cfg.n_posts);
    let mut title_words: Vec<Vec<String>> = Vec::with_capacity(cfg.n_posts);
    let mut planted_posts = Vec::with_capacity(cfg.n_posts);
    for (i, &label) in truth.iter().enumerate() {
        let community = i % k;
        let mut words = Vec::with_capacity(TITLE_WORDS);
        for _ in 0..TITLE_WORDS {
            words.push(pool_word(community, rng.random_range(0..12)));
        }
        let mut title = words.join(" ");
        title.push_str(&format!(" item{i}"));
        let mut body_words = Vec::with_capacity(BODY_WORDS);
        for _ in 0..BODY_WORDS {
            body_words.push(pool_word(community, rng.random_range(0..12)));
        }
        let id = format!("p{i:04}");
        posts.push(Post {
            id: id.clone(),
            title,
            body: body_words.join(" "),
            author: format!("op{i:04}"),
            created_at: BASE_TIMESTAMP + (i as i64) * 3600,
            community: format!("community{community}"),
        });
        title_words.push(words);
        planted_posts.push(PlantedPost {
            post_id: id,
            community,
            label,
        });
    }

    // Articles: echo the post text, cite a source aligned with the label.
    let mut articles = Vec::new();
    let mut article_counter = 0usize;
    for (i, post) in posts.iter().enumerate() {
        if rng.random::<f64>() >= ARTICLE_COVERAGE {
            continue;
        }
        let n_articles = 2 + usize::from(rng.random::<f64>() < 0.5);
        for _ in 0..n_articles {
            let aligned = rng.random::<f64>() < SOURCE_ALIGNMENT;
            let effective = if aligned {
                truth[i]
            } else {
                truth[i].flipped()
            };
            let pool = match effective {
                Label::Real => &TRUSTED_SOURCES,
                Label::Fake => &DUBIOUS_SOURCES,
            };
            let (source, _) = pool[rng.random_range(0..pool.len())];
            let hours_before = 1 + rng.random_range(0..48) as i64;
            articles.push(NewsArticle {
                id: format!("a{article_counter:05}"),
                title: post.title.clone(),
                body: format!("{} ref{article_counter}", post.body),
                source: source.to_string(),
                published_at: post.created_at - hours_before * 3600,
            });
            article_counter += 1;
        }
    }

    let mut credibility = CredibilityTable::new();
    for (source, score) in TRUSTED_SOURCES.iter().chain(&DUBIOUS_SOURCES) {
        credibility
            .insert(source, *score)
            .expect("constant scores are in range");
    }

    // Comments: home-community agreement, away disagreement, fidelity
    // misses rendered as neutral text.
    let mut comments = Vec::new();
    let mut planted_comments = Vec::new();
    let mut seen: alloc::collections::BTreeSet<(usize, usize)> =
        alloc::collections::BTreeSet::new();
    let mut comment_counter = 0usize;
    let base_count = math::floor(cfg.comment_rate) as usize;
    let extra_prob = cfg.comment_rate - math::floor(cfg.comment_rate);
    for a in 0..cfg.n_authors {
        let home = a % k;
        let count = base_count + usize::from(rng.random::<f64>() < extra_prob);
        for _ in 0..count {
            let stays_home = rng.random::<f64>() < cfg.homophily;
            let community = if stays_home || k == 1 {
                home
            } else {
                let other = rng.random_range(0..k - 1);
                if other >= home {
                    other + 1
                } else {
                    other
                }
            };
            let size = community_size(cfg.n_posts, community, k);
            if size == 0 {
                continue;
            }
            let post_idx = community + rng.random_range(0..size) * k;
            let planted = if community == home {
                Stance::Agree
            } else {
                Stance::Disagree
            };
            let hit = rng.random::<f64>() < cfg.stance_fidelity;
            let realized = if hit { planted } else { Stance::Neutral };
            let text = match realized {
                Stance::Agree => posts[post_idx].full_text(),
                Stance::Disagree => {
                    let mut words = Vec::with_capacity(6);
                    for _ in 0..6 {
                        words.push(CONTRA_WORDS[rng.random_range(0..CONTRA_WORDS.len())]);
                    }
                    words.join(" ")
                }
                Stance::Neutral => {
                    // A few scrambled title words (no shared bigrams with
                    // the post) diluted by neutral filler: cosine lands in
                    // the neutral band.
                    let tw = &title_words[post_idx];
                    let mut words =
                        alloc::vec![tw[2].clone(), tw[0].clone(), tw[4].clone(), tw[1].clone(),];
                    for _ in 0..4 {
                        words.push(
                            NEUTRAL_WORDS[rng.random_range(0..NEUTRAL_WORDS.len())].to_string(),
                        );
                    }
                    words.join(" ")
                }
            };
            if !seen.insert((a, post_idx)) {
                continue;
            }
            let comment_id = format!("c{comment_counter:05}");
            comments.push(Comment {
                id: comment_id.clone(),
                post_id: posts[post_idx].id.clone(),
                author: format!("u{a:04}"),
                text,
            });
            planted_comments.push(PlantedComment {
                comment_id,
                post_id: posts[post_idx].id.clone(),
                author: format!("u{a:04}"),
                planted,
                realized,
            });
            comment_counter += 1;
        }
    }

    let manifest = SynthManifest {
        config: cfg.clone(),
        n_fake,
        posts: planted_posts,
        comments: planted_comments,
    };
    Ok(SynthDataset {
        posts,
        comments,
        articles,
        credibility,
        truth,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = SynthConfig {
            n_posts: 30,
            n_authors: 20,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fake_quota_is_rounded_fraction() {
        for (n, frac, expect) in [(10, 0.5, 5), (10, 0.0, 0), (10, 1.0, 10), (9, 0.5, 5)] {
            let cfg = SynthConfig {
                n_posts: n,
                n_authors: 4,
                fake_fraction: frac,
                ..SynthConfig::default()
            };
            let d = generate(&cfg).unwrap();
            let fakes = d.truth.iter().filter(|&&l| l == Label::Fake).count();
            assert_eq!(fakes, expect);
            assert_eq!(d.manifest.n_fake, expect);
        }
    }

    #[test]
    fn half_fake_two_communities_separates_by_community() {
        let cfg = SynthConfig {
            n_posts: 20,
            n_authors: 10,
            n_communities: 2,
            fake_fraction: 0.5,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        for p in &d.manifest.posts {
            let expect = if p.community == 0 {
                Label::Fake
            } else {
                Label::Real
            };
            assert_eq!(p.label, expect, "post {}", p.post_id);
        }
    }

    #[test]
    fn manifest_mirrors_dataset() {
        let cfg = SynthConfig {
            n_posts: 25,
            n_authors: 12,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        assert_eq!(d.posts.len(), d.manifest.posts.len());
        assert_eq!(d.comments.len(), d.manifest.comments.len());
        for (c, pc) in d.comments.iter().zip(&d.manifest.comments) {
            assert_eq!(c.id, pc.comment_id);
            assert_eq!(c.post_id, pc.post_id);
            assert_eq!(c.author, pc.author);
        }
        for (p, t) in d.manifest.posts.iter().zip(&d.truth) {
            assert_eq!(p.label, *t);
        }
    }

    #[test]
    fn articles_cover_most_posts_and_cite_rated_sources() {
        let cfg = SynthConfig {
            n_posts: 100,
            n_authors: 10,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        // Coverage is 0.9 with 2-3 articles per covered post.
        assert!(d.articles.len() > 150 && d.articles.len() < 300);
        for a in &d.articles {
            assert!(d.credibility.raw_score(&a.source).is_some());
        }
    }

    #[test]
    fn comments_are_unique_per_author_post_pair() {
        let cfg = SynthConfig {
            n_posts: 10,
            n_authors: 10,
            comment_rate: 20.0,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let mut pairs = alloc::collections::BTreeSet::new();
        for c in &d.comments {
            assert!(pairs.insert((c.author.clone(), c.post_id.clone())));
        }
    }

    #[test]
    fn full_homophily_keeps_comments_in_home_community() {
        let cfg = SynthConfig {
            n_posts: 20,
            n_authors: 10,
            n_communities: 2,
            homophily: 1.0,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let community_of: alloc::collections::BTreeMap<&str, usize> = d
            .manifest
            .posts
            .iter()
            .map(|p| (p.post_id.as_str(), p.community))
            .collect();
        for c in &d.comments {
            // Author "u0007" has home 7 % 2 = 1.
            let author_idx: usize = c.author[1..].parse().unwrap();
            assert_eq!(community_of[c.post_id.as_str()], author_idx % 2);
        }
        for pc in &d.manifest.comments {
            assert_eq!(pc.planted, Stance::Agree);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig {
                n_communities: 0,
                ..base.clone()
            },
            SynthConfig {
                homophily: 1.5,
                ..base.clone()
            },
            SynthConfig {
                fake_fraction: -0.1,
                ..base.clone()
            },
            SynthConfig {
                stance_fidelity: 2.0,
                ..base.clone()
            },
            SynthConfig {
                comment_rate: -1.0,
                ..base.clone()
            },
        ] {
            assert!(generate(&cfg).is_err());
        }
    }

    #[test]
    fn empty_corpus_is_allowed() {
        let cfg = SynthConfig {
            n_posts: 0,
            n_authors: 0,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        assert!(d.posts.is_empty() && d.comments.is_empty() && d.articles.is_empty());
    }
}

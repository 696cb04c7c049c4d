//! Post-to-post graph built from shared commenters, with stance-weighted
//! edges.
//!
//! Two posts are connected exactly when at least one commenter wrote on
//! both. The edge weight averages, over those shared commenters, the
//! product of the commenter's stance toward each post: +1 when they agree
//! with both or reject both, -1 when they split, 0 when either stance is
//! neutral. Weights therefore live in `[-1, 1]` and capture audience
//! consistency rather than raw co-commenting volume.
//!
//! Stance itself is derived from text: a commenter's comments on a post are
//! concatenated, embedded, and compared to the post's own text by cosine
//! similarity, then thresholded into agree / neutral / disagree.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::embed::{self, EmbedError, EmbedderConfig};

/// Cosine above this is agreement.
pub const STANCE_AGREE_THRESHOLD: f64 = 0.5;
/// Cosine below this is disagreement; between the two (inclusive) is neutral.
pub const STANCE_DISAGREE_THRESHOLD: f64 = 0.1;

/// One social-media post.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Post {
    pub id: String,
    pub title: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub body: String,
    pub author: String,
    /// Creation time, seconds since the Unix epoch.
    pub created_at: i64,
    /// Community / forum the post appeared in.
    #[cfg_attr(feature = "serde", serde(default))]
    pub community: String,
}

impl Post {
    /// Text used for retrieval queries, node features, and stance targets:
    /// title and body, space-joined.
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

/// One comment under a post.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub author: String,
    pub text: String,
}

/// Commenter's stance toward a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Stance {
    Disagree,
    Neutral,
    Agree,
}

impl Stance {
    /// Signed value entering edge-weight products: -1, 0, +1.
    pub fn value(self) -> f64 {
        match self {
            Stance::Disagree => -1.0,
            Stance::Neutral => 0.0,
            Stance::Agree => 1.0,
        }
    }
}

/// Thresholds a comment-vs-post cosine similarity into a stance. Both
/// boundaries fall to neutral.
pub fn stance_from_similarity(similarity: f64) -> Stance {
    if similarity > STANCE_AGREE_THRESHOLD {
        Stance::Agree
    } else if similarity < STANCE_DISAGREE_THRESHOLD {
        Stance::Disagree
    } else {
        Stance::Neutral
    }
}

/// Stance of one commenter toward one post: their comment texts on that
/// post are concatenated (input order, space-joined), embedded, and
/// compared to the post text by cosine.
///
/// Errors with [`EmbedError::EmptyText`] when the concatenated comments or
/// the post text tokenize to nothing.
pub fn stance(
    comment_texts: &[&str],
    post: &Post,
    cfg: &EmbedderConfig,
) -> Result<Stance, EmbedError> {
    let mut joined = String::new();
    for (i, t) in comment_texts.iter().enumerate() {
        if i > 0 {
            joined.push(' ');
        }
        joined.push_str(t);
    }
    let comment_vec = embed::embed(&joined, cfg)?;
    let post_vec = embed::embed(&post.full_text(), cfg)?;
    let s = embed::cosine(&comment_vec, &post_vec)?;
    Ok(stance_from_similarity(s))
}

/// Authors who commented on both posts (naive reference: scans the full
/// comment list per call).
pub fn shared_commenters(a: &Post, b: &Post, comments: &[Comment]) -> BTreeSet<String> {
    let mut on_a = BTreeSet::new();
    let mut on_b = BTreeSet::new();
    for c in comments {
        if c.post_id == a.id {
            on_a.insert(c.author.clone());
        }
        if c.post_id == b.id {
            on_b.insert(c.author.clone());
        }
    }
    on_a.intersection(&on_b).cloned().collect()
}

/// Mean of stance products over one edge's shared commenters.
///
/// `stance_pairs[i]` holds commenter i's stance toward each endpoint.
/// Errors when the slice is empty (no shared commenters means no edge).
pub fn weight_edge(stance_pairs: &[(Stance, Stance)]) -> Result<f64, GraphError> {
    if stance_pairs.is_empty() {
        return Err(GraphError::NoSharedCommenters);
    }
    let mut sum = 0.0;
    for (sa, sb) in stance_pairs {
        sum += sa.value() * sb.value();
    }
    Ok(sum / stance_pairs.len() as f64)
}

/// Undirected weighted edge between node indices `a < b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected post graph: node order mirrors the input post order, edges
/// are sorted by `(a, b)` with `a < b`, and there are no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct PostGraph {
    node_ids: Vec<String>,
    edges: Vec<WeightedEdge>,
}

impl PostGraph {
    /// Assembles a graph from parts, enforcing the structural invariants
    /// (valid endpoints, `a < b`, no duplicate pairs, weights in `[-1, 1]`).
    pub fn from_parts(
        node_ids: Vec<String>,
        edges: Vec<WeightedEdge>,
    ) -> Result<PostGraph, GraphError> {
        let n = node_ids.len();
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.a >= n || e.b >= n {
                return Err(GraphError::InvalidEdge {
                    a: e.a,
                    b: e.b,
                    reason: "endpoint out of range",
                });
            }
            if e.a >= e.b {
                return Err(GraphError::InvalidEdge {
                    a: e.a,
                    b: e.b,
                    reason: "require a < b (undirected, no self-loops)",
                });
            }
            if !seen.insert((e.a, e.b)) {
                return Err(GraphError::InvalidEdge {
                    a: e.a,
                    b: e.b,
                    reason: "duplicate edge",
                });
            }
            if !(-1.0..=1.0).contains(&e.weight) {
                return Err(GraphError::InvalidEdge {
                    a: e.a,
                    b: e.b,
                    reason: "weight outside [-1, 1]",
                });
            }
        }
        Ok(PostGraph { node_ids, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    /// Neighbor lists with a self-loop (weight +1) prepended to each node,
    /// followed by that node's edges in edge-list order. This fixed order
    /// makes downstream float reductions reproducible.
    pub fn adjacency_with_self_loops(&self) -> Vec<Vec<(usize, f64)>> {
        let mut lists: Vec<Vec<(usize, f64)>> = (0..self.node_count())
            .map(|i| alloc::vec![(i, 1.0)])
            .collect();
        for e in &self.edges {
            lists[e.a].push((e.b, e.weight));
            lists[e.b].push((e.a, e.weight));
        }
        lists
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("comment {comment_id} references unknown post {post_id}")]
    DanglingComment { comment_id: String, post_id: String },
    #[error("duplicate post id {id}")]
    DuplicatePostId { id: String },
    #[error("edge ({a}, {b}) invalid: {reason}")]
    InvalidEdge {
        a: usize,
        b: usize,
        reason: &'static str,
    },
    #[error("edge weight requires at least one shared commenter")]
    NoSharedCommenters,
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
}

/// Options for graph construction.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphOptions {
    /// Author names whose comments are dropped before any stance or edge
    /// computation (placeholder accounts such as "[deleted]").
    pub ignore_authors: BTreeSet<String>,
}

/// Builds the commenter-overlap graph over `posts`.
///
/// Equivalent to calling [`shared_commenters`] and [`weight_edge`] for
/// every post pair, but runs off an inverted author-to-posts map so only
/// co-commented pairs are touched. Comment texts for an (author, post)
/// pair that tokenize to nothing yield a neutral stance: the commenter
/// still guards edge existence but contributes zero weight.
pub fn build_graph(
    posts: &[Post],
    comments: &[Comment],
    cfg: &EmbedderConfig,
    options: &GraphOptions,
) -> Result<PostGraph, GraphError> {
    let mut index_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, p) in posts.iter().enumerate() {
        if index_of.insert(p.id.as_str(), i).is_some() {
            return Err(GraphError::DuplicatePostId { id: p.id.clone() });
        }
    }

    // (author, post) -> that author's comment texts on the post, input order.
    let mut texts: BTreeMap<(&str, usize), Vec<&str>> = BTreeMap::new();
    for c in comments {
        let &post_idx =
            index_of
                .get(c.post_id.as_str())
                .ok_or_else(|| GraphError::DanglingComment {
                    comment_id: c.id.clone(),
                    post_id: c.post_id.clone(),
                })?;
        if options.ignore_authors.contains(&c.author) {
            continue;
        }
        texts
            .entry((c.author.as_str(), post_idx))
            .or_default()
            .push(c.text.as_str());
    }

    // Post texts tokenizing to nothing force neutral stances on that post.
    let mut post_vecs = Vec::with_capacity(posts.len());
    for p in posts {
        post_vecs.push(embed::embed(&p.full_text(), cfg).ok());
    }

    let mut stances: BTreeMap<(&str, usize), Stance> = BTreeMap::new();
    let mut by_author: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (&(author, post_idx), comment_texts) in &texts {
        let s = match &post_vecs[post_idx] {
            Some(post_vec) => {
                let mut joined = String::new();
                for (i, t) in comment_texts.iter().enumerate() {
                    if i > 0 {
                        joined.push(' ');
                    }
                    joined.push_str(t);
                }
                match embed::embed(&joined, cfg) {
                    Ok(v) => stance_from_similarity(
                        embed::cosine(&v, post_vec).expect("equal dimensions"),
                    ),
                    Err(EmbedError::EmptyText) | Err(EmbedError::CancelledToZero) => {
                        Stance::Neutral
                    }
                    Err(e) => return Err(GraphError::Embed(e)),
                }
            }
            None => Stance::Neutral,
        };
        stances.insert((author, post_idx), s);
        by_author.entry(author).or_default().push(post_idx);
    }

    // Shared-commenter stance pairs per post pair. BTreeMap iteration keeps
    // both pair order and per-pair commenter order deterministic (authors
    // ascending), matching the naive reference exactly.
    let mut pairs: BTreeMap<(usize, usize), Vec<(Stance, Stance)>> = BTreeMap::new();
    for (author, posts_of_author) in &by_author {
        for (i, &a) in posts_of_author.iter().enumerate() {
            for &b in &posts_of_author[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                let sa = stances[&(*author, key.0)];
                let sb = stances[&(*author, key.1)];
                pairs.entry(key).or_default().push((sa, sb));
            }
        }
    }

    let mut edges = Vec::with_capacity(pairs.len());
    for ((a, b), stance_pairs) in pairs {
        let weight = weight_edge(&stance_pairs).expect("pair exists only with shared commenters");
        edges.push(WeightedEdge { a, b, weight });
    }
    let node_ids = posts.iter().map(|p| p.id.clone()).collect();
    PostGraph::from_parts(node_ids, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    pub(crate) fn post(id: &str, title: &str, body: &str) -> Post {
        Post {
            id: id.to_string(),
            title: title.to_string(),
            body: body.to_string(),
            author: "op".to_string(),
            created_at: 1_700_000_000,
            community: "c0".to_string(),
        }
    }

    pub(crate) fn comment(id: &str, post_id: &str, author: &str, text: &str) -> Comment {
        Comment {
            id: id.to_string(),
            post_id: post_id.to_string(),
            author: author.to_string(),
            text: text.to_string(),
        }
    }

    #[test]
    fn stance_threshold_hand_values() {
        assert_eq!(stance_from_similarity(0.7), Stance::Agree);
        assert_eq!(stance_from_similarity(0.3), Stance::Neutral);
        assert_eq!(stance_from_similarity(0.05), Stance::Disagree);
        // Boundaries are neutral.
        assert_eq!(stance_from_similarity(0.5), Stance::Neutral);
        assert_eq!(stance_from_similarity(0.1), Stance::Neutral);
    }

    #[test]
    fn stance_from_texts_echo_agrees_disjoint_disagrees() {
        let cfg = EmbedderConfig::default();
        let p = post("p1", "council approves solar farm", "vote passed yesterday");
        let echo = stance(
            &["council approves solar farm vote passed yesterday"],
            &p,
            &cfg,
        )
        .unwrap();
        assert_eq!(echo, Stance::Agree);
        let disjoint = stance(
            &["nonsense hoax fabricated rubbish debunked misleading"],
            &p,
            &cfg,
        )
        .unwrap();
        assert_eq!(disjoint, Stance::Disagree);
    }

    #[test]
    fn stance_concatenates_multiple_comments() {
        let cfg = EmbedderConfig::default();
        let p = post("p1", "council approves solar farm", "vote passed yesterday");
        let split = stance(
            &["council approves solar", "farm vote passed yesterday"],
            &p,
            &cfg,
        )
        .unwrap();
        assert_eq!(split, Stance::Agree);
    }

    #[test]
    fn stance_on_empty_comments_errors() {
        let cfg = EmbedderConfig::default();
        let p = post("p1", "title words here", "");
        assert_eq!(
            stance(&["", "  "], &p, &cfg).unwrap_err(),
            EmbedError::EmptyText
        );
    }

    #[test]
    fn shared_commenters_hand_cases() {
        let pa = post("pa", "t", "");
        let pb = post("pb", "t", "");
        let comments = vec![
            comment("c1", "pa", "x", "w"),
            comment("c2", "pa", "y", "w"),
            comment("c3", "pb", "y", "w"),
            comment("c4", "pb", "z", "w"),
        ];
        let shared = shared_commenters(&pa, &pb, &comments);
        assert_eq!(shared.len(), 1);
        assert!(shared.contains("y"));
        assert_eq!(shared, shared_commenters(&pb, &pa, &comments));
        let empty = shared_commenters(&pa, &pb, &[comment("c1", "pa", "x", "w")]);
        assert!(empty.is_empty());
    }

    #[test]
    fn weight_edge_hand_values() {
        use Stance::*;
        assert_eq!(weight_edge(&[(Agree, Agree)]).unwrap(), 1.0);
        assert_eq!(
            weight_edge(&[(Agree, Agree), (Agree, Disagree)]).unwrap(),
            0.0
        );
        assert_eq!(weight_edge(&[(Neutral, Agree)]).unwrap(), 0.0);
        assert_eq!(
            weight_edge(&[(Disagree, Disagree), (Agree, Agree)]).unwrap(),
            1.0
        );
        assert_eq!(
            weight_edge(&[]).unwrap_err(),
            GraphError::NoSharedCommenters
        );
    }

    #[test]
    fn disjoint_commenters_build_no_edges() {
        let cfg = EmbedderConfig::default();
        let posts = vec![
            post("p0", "first topic here", ""),
            post("p1", "second topic here", ""),
            post("p2", "third topic here", ""),
        ];
        let comments = vec![
            comment("c0", "p0", "u0", "first topic here"),
            comment("c1", "p1", "u1", "second topic here"),
            comment("c2", "p2", "u2", "third topic here"),
        ];
        let g = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn one_agreeing_commenter_everywhere_builds_complete_graph_of_ones() {
        let cfg = EmbedderConfig::default();
        let posts: Vec<Post> = (0..4)
            .map(|i| post(&format!("p{i}"), &format!("topic number {i} report"), ""))
            .collect();
        // The commenter echoes each post's text: stance Agree toward all.
        let comments: Vec<Comment> = (0..4)
            .map(|i| {
                comment(
                    &format!("c{i}"),
                    &format!("p{i}"),
                    "u",
                    &format!("topic number {i} report"),
                )
            })
            .collect();
        let g = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(g.edges().len(), 6);
        for e in g.edges() {
            assert_eq!(e.weight, 1.0);
        }
    }

    #[test]
    fn dangling_comment_is_rejected() {
        let cfg = EmbedderConfig::default();
        let posts = vec![post("p0", "only post", "")];
        let comments = vec![comment("c0", "missing", "u", "text")];
        let err = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::DanglingComment { .. }));
    }

    #[test]
    fn ignored_authors_do_not_create_edges() {
        let cfg = EmbedderConfig::default();
        let posts = vec![
            post("p0", "alpha beta gamma", ""),
            post("p1", "delta epsilon zeta", ""),
        ];
        let comments = vec![
            comment("c0", "p0", "[deleted]", "alpha beta gamma"),
            comment("c1", "p1", "[deleted]", "delta epsilon zeta"),
        ];
        let mut options = GraphOptions::default();
        options.ignore_authors.insert("[deleted]".to_string());
        let g = build_graph(&posts, &comments, &cfg, &options).unwrap();
        assert!(g.edges().is_empty());
        // Without the ignore list the same commenter links the posts.
        let g = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn untokenizable_comment_text_counts_as_neutral_commenter() {
        let cfg = EmbedderConfig::default();
        let posts = vec![
            post("p0", "alpha beta gamma", ""),
            post("p1", "delta epsilon zeta", ""),
        ];
        // "!!!" tokenizes to nothing: the commenter still links the posts,
        // with neutral stance on p0 so the product is zero.
        let comments = vec![
            comment("c0", "p0", "u", "!!!"),
            comment("c1", "p1", "u", "delta epsilon zeta"),
        ];
        let g = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].weight, 0.0);
    }

    #[test]
    fn new_commenter_on_one_post_leaves_other_edges_unchanged() {
        let cfg = EmbedderConfig::default();
        let posts = vec![
            post("p0", "storm closes the port", ""),
            post("p1", "port reopens after storm", ""),
            post("p2", "unrelated market news", ""),
        ];
        let mut comments = vec![
            comment("c0", "p0", "u0", "storm closes the port"),
            comment("c1", "p1", "u0", "port reopens after storm"),
        ];
        let before = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        comments.push(comment("c2", "p2", "fresh", "unrelated market news"));
        let after = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(before.edges(), after.edges());
    }

    #[test]
    fn duplicate_post_ids_are_rejected() {
        let cfg = EmbedderConfig::default();
        let posts = vec![post("p0", "a b", ""), post("p0", "c d", "")];
        let err = build_graph(&posts, &[], &cfg, &GraphOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::DuplicatePostId { .. }));
    }

    #[test]
    fn from_parts_enforces_invariants() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(PostGraph::from_parts(
            ids.clone(),
            vec![WeightedEdge {
                a: 0,
                b: 1,
                weight: 0.5
            }]
        )
        .is_ok());
        for bad in [
            WeightedEdge {
                a: 1,
                b: 0,
                weight: 0.5,
            },
            WeightedEdge {
                a: 0,
                b: 0,
                weight: 0.5,
            },
            WeightedEdge {
                a: 0,
                b: 2,
                weight: 0.5,
            },
            WeightedEdge {
                a: 0,
                b: 1,
                weight: 1.5,
            },
        ] {
            assert!(PostGraph::from_parts(ids.clone(), vec![bad]).is_err());
        }
        let dup = vec![
            WeightedEdge {
                a: 0,
                b: 1,
                weight: 0.5,
            },
            WeightedEdge {
                a: 0,
                b: 1,
                weight: 0.5,
            },
        ];
        assert!(PostGraph::from_parts(ids, dup).is_err());
    }

    #[test]
    fn adjacency_prepends_self_loops() {
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let g = PostGraph::from_parts(
            ids,
            vec![
                WeightedEdge {
                    a: 0,
                    b: 1,
                    weight: 0.25,
                },
                WeightedEdge {
                    a: 1,
                    b: 2,
                    weight: -0.5,
                },
            ],
        )
        .unwrap();
        let adj = g.adjacency_with_self_loops();
        assert_eq!(adj[0], vec![(0, 1.0), (1, 0.25)]);
        assert_eq!(adj[1], vec![(1, 1.0), (0, 0.25), (2, -0.5)]);
        assert_eq!(adj[2], vec![(2, 1.0), (1, -0.5)]);
    }

    #[test]
    fn build_graph_is_deterministic() {
        let cfg = EmbedderConfig::default();
        let posts = vec![
            post("p0", "storm closes the port", "ships delayed"),
            post("p1", "port reopens after storm", "traffic resumes"),
        ];
        let comments = vec![
            comment("c0", "p0", "u0", "storm closes the port ships delayed"),
            comment("c1", "p1", "u0", "total nonsense hoax fabricated rubbish"),
            comment("c2", "p1", "u1", "port reopens after storm traffic resumes"),
            comment("c3", "p0", "u1", "port reopens question unclear maybe"),
        ];
        let g1 = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        let g2 = build_graph(&posts, &comments, &cfg, &GraphOptions::default()).unwrap();
        assert_eq!(g1, g2);
    }
}

//! Core algorithms for misinformation labeling on social-media posts.
//!
//! The pipeline has two halves. First, posts are labeled by retrieving
//! similar news articles from an embedded index and averaging the
//! credibility of their sources ([`news`]). Second, those initial labels
//! are refined by a two-layer graph attention network run over a
//! post-to-post graph whose edges connect posts sharing commenters and
//! whose weights summarize stance agreement ([`graph`], [`gat`]).
//!
//! Supporting modules: [`embed`] (signed feature-hashing text embedder used
//! by retrieval, stance detection, and node features), [`metrics`]
//! (accuracy / F1 / ROC / calibration), [`matching`] (timestamp + title
//! matching of posts against ground-truth articles), and [`synth`]
//! (seeded synthetic corpus generator for end-to-end evaluation).
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! is on by default. All transcendental math is routed through `libm` so
//! outputs are bit-identical across platforms, and every seeded code path
//! uses an explicit ChaCha8 stream: equal inputs and seeds produce equal
//! bytes everywhere.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod embed;
pub mod gat;
pub mod graph;
pub mod label;
pub mod matching;
mod math;
pub mod metrics;
pub mod news;
pub mod synth;

pub use label::Label;

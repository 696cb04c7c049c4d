//! Configuration model: defaults, the optional TOML config file, and CLI
//! flag overrides, resolved in that order (defaults < file < flags).
//!
//! Paths resolve against the working directory unless given explicitly.
//! The resolved non-path settings are echoed into every stage manifest so
//! a run can be reproduced from its artifacts alone.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use credigraph_core::embed::EmbedderConfig;
use credigraph_core::gat::TrainConfig;
use credigraph_core::matching::MatchConfig;
use credigraph_core::news;
use credigraph_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::err::{CliError, Result};

/// Conventional artifact file names inside the working directory.
pub mod names {
    pub const POSTS: &str = "posts.jsonl";
    pub const COMMENTS: &str = "comments.jsonl";
    pub const ARTICLES: &str = "articles.jsonl";
    pub const CREDIBILITY: &str = "credibility.csv";
    pub const GROUND_TRUTH: &str = "ground-truth.csv";
    pub const TRUTH: &str = "truth.jsonl";
    pub const SYNTH_MANIFEST: &str = "synth-manifest.json";
    pub const INDEX: &str = "index.json";
    pub const MATCH_REPORT: &str = "match-report.json";
    pub const LABELS_INITIAL: &str = "labels-initial.jsonl";
    pub const GRAPH_NODES: &str = "graph-nodes.json";
    pub const GRAPH_EDGES: &str = "graph-edges.jsonl";
    pub const MODEL: &str = "model.json";
    pub const LOSS_TRACE: &str = "loss-trace.csv";
    pub const LABELS_REFINED: &str = "labels-refined.jsonl";
    pub const METRICS: &str = "metrics.json";
    pub const SCORES: &str = "scores.csv";
    pub const ROC_INITIAL: &str = "roc-initial.csv";
    pub const ROC_REFINED: &str = "roc-refined.csv";
    pub const CALIBRATION_INITIAL: &str = "calibration-initial.csv";
    pub const CALIBRATION_REFINED: &str = "calibration-refined.csv";
    pub const ROC_SVG: &str = "roc.svg";
    pub const CALIBRATION_SVG: &str = "calibration.svg";
    pub const LOSS_SVG: &str = "loss.svg";

    pub fn stage_manifest(stage: &str) -> String {
        format!("manifest-{stage}.json")
    }
}

/// Current artifact format version, embedded in every structured artifact.
pub const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// TOML config file shape. Every field is optional; unknown keys are
// rejected so typos fail loudly instead of being silently ignored.
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub embedder: EmbedderSection,
    #[serde(default)]
    pub retrieval: RetrievalSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub matching: MatchingSection,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub workdir: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub comments: Option<PathBuf>,
    pub articles: Option<PathBuf>,
    pub credibility: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSection {
    pub dimension: Option<usize>,
    pub seed: Option<u64>,
    pub ngram_min: Option<usize>,
    pub ngram_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSection {
    pub top_k: Option<usize>,
    pub floor: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub ignore_authors: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub corruption_ratio: Option<f64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden_dim: Option<usize>,
    pub use_edge_weights: Option<bool>,
    pub leaky_slope: Option<f64>,
    /// Training seed override; defaults to the global seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingSection {
    pub window_days: Option<u32>,
    pub threshold: Option<f64>,
    pub min_comments: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_posts: Option<usize>,
    pub n_authors: Option<usize>,
    pub n_communities: Option<usize>,
    pub homophily: Option<f64>,
    pub fake_fraction: Option<f64>,
    pub comment_rate: Option<f64>,
    pub stance_fidelity: Option<f64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = crate::io::read_input_string(path)?;
    toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Resolved settings.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RetrievalSettings {
    pub top_k: usize,
    pub floor: f64,
    pub tau: f64,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        RetrievalSettings {
            top_k: news::DEFAULT_TOP_K,
            floor: news::DEFAULT_SIMILARITY_FLOOR,
            tau: news::DEFAULT_LABEL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchingSettings {
    pub window_days: u32,
    pub threshold: f64,
    pub min_comments: usize,
}

impl Default for MatchingSettings {
    fn default() -> Self {
        let m = MatchConfig::default();
        MatchingSettings {
            window_days: m.window_days,
            threshold: m.min_title_similarity,
            min_comments: 0,
        }
    }
}

impl MatchingSettings {
    pub fn as_match_config(&self) -> MatchConfig {
        MatchConfig {
            window_days: self.window_days,
            min_title_similarity: self.threshold,
        }
    }
}

/// Explicit path overrides; anything unset resolves to the conventional
/// name inside the working directory.
#[derive(Debug, Clone, Default)]
pub struct PathSettings {
    pub posts: Option<PathBuf>,
    pub comments: Option<PathBuf>,
    pub articles: Option<PathBuf>,
    pub credibility: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub workdir: PathBuf,
    pub paths: PathSettings,
    pub embedder: EmbedderConfig,
    pub retrieval: RetrievalSettings,
    pub ignore_authors: Vec<String>,
    pub train: TrainConfig,
    pub matching: MatchingSettings,
    pub synth: SynthConfig,
}

/// Non-path settings echoed into stage manifests. Paths are deliberately
/// excluded so runs in different directories produce identical manifests
/// (modulo timing).
#[derive(Debug, Serialize)]
pub struct SettingsEcho<'a> {
    pub seed: u64,
    pub embedder: &'a EmbedderConfig,
    pub retrieval: &'a RetrievalSettings,
    pub graph: GraphEcho<'a>,
    pub train: &'a TrainConfig,
    pub matching: &'a MatchingSettings,
    pub synth: &'a SynthConfig,
}

#[derive(Debug, Serialize)]
pub struct GraphEcho<'a> {
    pub ignore_authors: &'a [String],
}

impl Settings {
    /// Applies a parsed config file over the defaults. CLI flag overrides
    /// are applied afterwards by the stage dispatcher.
    pub fn resolve(
        file: FileConfig,
        cli_seed: Option<u64>,
        cli_workdir: Option<PathBuf>,
    ) -> Result<Settings> {
        let seed = cli_seed.or(file.seed).unwrap_or(0);

        let workdir = cli_workdir
            .or(file.paths.workdir.clone())
            .unwrap_or_else(|| PathBuf::from("."));

        let mut embedder = EmbedderConfig::default();
        if let Some(v) = file.embedder.dimension {
            embedder.dimension = v;
        }
        if let Some(v) = file.embedder.seed {
            embedder.seed = v;
        }
        if let Some(v) = file.embedder.ngram_min {
            embedder.ngram_min = v;
        }
        if let Some(v) = file.embedder.ngram_max {
            embedder.ngram_max = v;
        }

        let mut retrieval = RetrievalSettings::default();
        if let Some(v) = file.retrieval.top_k {
            retrieval.top_k = v;
        }
        if let Some(v) = file.retrieval.floor {
            retrieval.floor = v;
        }
        if let Some(v) = file.retrieval.tau {
            retrieval.tau = v;
        }

        let ignore_authors = file.graph.ignore_authors.unwrap_or_default();

        let mut train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        if let Some(v) = file.train.corruption_ratio {
            train.corruption_ratio = v;
        }
        if let Some(v) = file.train.epochs {
            train.epochs = v;
        }
        if let Some(v) = file.train.learning_rate {
            train.learning_rate = v;
        }
        if let Some(v) = file.train.hidden_dim {
            train.hidden_dim = v;
        }
        if let Some(v) = file.train.use_edge_weights {
            train.use_edge_weights = v;
        }
        if let Some(v) = file.train.leaky_slope {
            train.leaky_slope = v;
        }
        if let Some(v) = file.train.seed {
            train.seed = v;
        }

        let mut matching = MatchingSettings::default();
        if let Some(v) = file.matching.window_days {
            matching.window_days = v;
        }
        if let Some(v) = file.matching.threshold {
            matching.threshold = v;
        }
        if let Some(v) = file.matching.min_comments {
            matching.min_comments = v;
        }

        let mut synth = SynthConfig {
            seed,
            ..SynthConfig::default()
        };
        if let Some(v) = file.synth.n_posts {
            synth.n_posts = v;
        }
        if let Some(v) = file.synth.n_authors {
            synth.n_authors = v;
        }
        if let Some(v) = file.synth.n_communities {
            synth.n_communities = v;
        }
        if let Some(v) = file.synth.homophily {
            synth.homophily = v;
        }
        if let Some(v) = file.synth.fake_fraction {
            synth.fake_fraction = v;
        }
        if let Some(v) = file.synth.comment_rate {
            synth.comment_rate = v;
        }
        if let Some(v) = file.synth.stance_fidelity {
            synth.stance_fidelity = v;
        }

        Ok(Settings {
            seed,
            workdir,
            paths: PathSettings {
                posts: file.paths.posts,
                comments: file.paths.comments,
                articles: file.paths.articles,
                credibility: file.paths.credibility,
                ground_truth: file.paths.ground_truth,
                truth: file.paths.truth,
                embeddings: file.paths.embeddings,
            },
            embedder,
            retrieval,
            ignore_authors,
            train,
            matching,
            synth,
        })
    }

    pub fn echo(&self) -> SettingsEcho<'_> {
        SettingsEcho {
            seed: self.seed,
            embedder: &self.embedder,
            retrieval: &self.retrieval,
            graph: GraphEcho {
                ignore_authors: &self.ignore_authors,
            },
            train: &self.train,
            matching: &self.matching,
            synth: &self.synth,
        }
    }

    /// An artifact's location inside the working directory.
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.workdir.join(name)
    }

    fn resolved(&self, explicit: &Option<PathBuf>, conventional: &str) -> PathBuf {
        match explicit {
            Some(p) => p.clone(),
            None => self.workdir.join(conventional),
        }
    }

    pub fn posts_path(&self) -> PathBuf {
        self.resolved(&self.paths.posts, names::POSTS)
    }

    pub fn comments_path(&self) -> PathBuf {
        self.resolved(&self.paths.comments, names::COMMENTS)
    }

    pub fn articles_path(&self) -> PathBuf {
        self.resolved(&self.paths.articles, names::ARTICLES)
    }

    pub fn credibility_path(&self) -> PathBuf {
        self.resolved(&self.paths.credibility, names::CREDIBILITY)
    }

    pub fn ground_truth_path(&self) -> PathBuf {
        self.resolved(&self.paths.ground_truth, names::GROUND_TRUTH)
    }

    pub fn truth_path(&self) -> PathBuf {
        self.resolved(&self.paths.truth, names::TRUTH)
    }

    pub fn embeddings_path(&self) -> Option<PathBuf> {
        self.paths.embeddings.clone()
    }

    pub fn ignore_author_set(&self) -> BTreeSet<String> {
        self.ignore_authors.iter().cloned().collect()
    }
}

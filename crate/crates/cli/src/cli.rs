//! Command-line surface: subcommands, global flags, and the mapping from
//! flags onto the resolved settings (flags win over the config file, which
//! wins over defaults).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use credigraph_core::Label;

use crate::config::Settings;
use crate::err::{CliError, Result};
use crate::stages::{self, EvaluateOpts};

#[derive(Debug, Parser)]
#[command(
    name = "credigraph",
    version,
    about = "Misinformation-detection pipeline: credibility-weighted retrieval \
             assigns initial labels, a graph attention network refines them \
             over the shared-commenter graph",
    propagate_version = true
)]
pub struct Cli {
    /// TOML config file with [paths]/[embedder]/[retrieval]/[graph]/
    /// [train]/[matching]/[synth] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Run seed; feeds corpus generation and training.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Directory artifacts are read from and written to.
    #[arg(long, global = true, value_name = "PATH")]
    pub workdir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus (posts, comments, articles,
    /// credibility ratings, planted truth).
    Generate(GenerateArgs),
    /// Embed the reference articles and attach credibility ratings.
    BuildIndex(BuildIndexArgs),
    /// Label posts by matching them against a fact-checked claim list.
    Match(MatchArgs),
    /// Assign initial labels from retrieved article evidence.
    RagLabel(RagLabelArgs),
    /// Build the shared-commenter graph with stance-weighted edges.
    BuildGraph(BuildGraphArgs),
    /// Train the refinement network with label corruption.
    Train(TrainArgs),
    /// Apply the trained network to refine every post's label.
    Refine(RefineArgs),
    /// Score initial and refined labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Render SVG charts from evaluation and training artifacts.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of posts to generate.
    #[arg(long, value_name = "N")]
    pub n_posts: Option<usize>,
    /// Number of commenting authors.
    #[arg(long, value_name = "N")]
    pub n_authors: Option<usize>,
    /// Number of communities.
    #[arg(long, value_name = "N")]
    pub n_communities: Option<usize>,
    /// Probability a comment stays in the author's home community.
    #[arg(long, value_name = "P")]
    pub homophily: Option<f64>,
    /// Fraction of posts planted as fake.
    #[arg(long, value_name = "P")]
    pub fake_fraction: Option<f64>,
    /// Mean comments per author.
    #[arg(long, value_name = "R")]
    pub comment_rate: Option<f64>,
    /// Probability a comment's text realizes its planted stance.
    #[arg(long, value_name = "P")]
    pub stance_fidelity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Articles JSONL (default: <workdir>/articles.jsonl).
    #[arg(long, value_name = "PATH")]
    pub articles: Option<PathBuf>,
    /// Credibility CSV `source,raw_score` (default: <workdir>/credibility.csv).
    #[arg(long, value_name = "PATH")]
    pub credibility: Option<PathBuf>,
    /// Import precomputed vectors (JSONL of {"id", "vector"}) instead of
    /// embedding the articles.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long, value_name = "N")]
    pub dimension: Option<usize>,
    /// Embedder hash seed (independent of the run seed).
    #[arg(long, value_name = "N")]
    pub embedder_seed: Option<u64>,
    /// Shortest token n-gram length.
    #[arg(long, value_name = "N")]
    pub ngram_min: Option<usize>,
    /// Longest token n-gram length.
    #[arg(long, value_name = "N")]
    pub ngram_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Posts JSONL (default: <workdir>/posts.jsonl).
    #[arg(long, value_name = "PATH")]
    pub posts: Option<PathBuf>,
    /// Fact-checked claims CSV `title,label,published_at`
    /// (default: <workdir>/ground-truth.csv).
    #[arg(long, value_name = "PATH")]
    pub ground_truth: Option<PathBuf>,
    /// Comments JSONL; required when the comment floor is positive
    /// (default: <workdir>/comments.jsonl).
    #[arg(long, value_name = "PATH")]
    pub comments: Option<PathBuf>,
    /// Publication window in days on either side (inclusive).
    #[arg(long, value_name = "N")]
    pub window_days: Option<u32>,
    /// Minimum title similarity (inclusive).
    #[arg(long, value_name = "S")]
    pub threshold: Option<f64>,
    /// Exclude posts with fewer than this many comments.
    #[arg(long, value_name = "N")]
    pub min_comments: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RagLabelArgs {
    /// Posts JSONL (default: <workdir>/posts.jsonl).
    #[arg(long, value_name = "PATH")]
    pub posts: Option<PathBuf>,
    /// Articles retrieved per post.
    #[arg(long, value_name = "K")]
    pub top_k: Option<usize>,
    /// Minimum similarity for retrieved evidence (inclusive).
    #[arg(long, value_name = "S")]
    pub floor: Option<f64>,
    /// Decision threshold on the credibility estimate (Real at or above).
    #[arg(long, value_name = "T")]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    /// Posts JSONL (default: <workdir>/posts.jsonl).
    #[arg(long, value_name = "PATH")]
    pub posts: Option<PathBuf>,
    /// Comments JSONL (default: <workdir>/comments.jsonl).
    #[arg(long, value_name = "PATH")]
    pub comments: Option<PathBuf>,
    /// Author whose comments are ignored (repeatable); adds to the
    /// config's list.
    #[arg(long = "ignore-author", value_name = "NAME")]
    pub ignore_author: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Posts JSONL (default: <workdir>/posts.jsonl).
    #[arg(long, value_name = "PATH")]
    pub posts: Option<PathBuf>,
    /// Ground-truth JSONL (default: <workdir>/truth.jsonl).
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Training epochs.
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long, value_name = "LR")]
    pub learning_rate: Option<f64>,
    /// Fraction of labels flipped each epoch.
    #[arg(long, value_name = "P")]
    pub corruption_ratio: Option<f64>,
    /// Hidden layer width.
    #[arg(long, value_name = "N")]
    pub hidden_dim: Option<usize>,
    /// Attend to edge weights (false = structure-only ablation).
    #[arg(long, value_name = "BOOL")]
    pub use_edge_weights: Option<bool>,
    /// Negative-slope of the attention LeakyReLU.
    #[arg(long, value_name = "S")]
    pub leaky_slope: Option<f64>,
    /// Training seed override (defaults to the run seed).
    #[arg(long, value_name = "N")]
    pub train_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Posts JSONL (default: <workdir>/posts.jsonl).
    #[arg(long, value_name = "PATH")]
    pub posts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth JSONL (default: <workdir>/truth.jsonl, used when
    /// present; metrics are omitted without truth).
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Class treated as positive for F1 and ROC: fake or real.
    #[arg(long, value_name = "CLASS", default_value = "fake")]
    pub positive_class: String,
    /// Number of equal-width calibration bins.
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {}

/// Loads the config file (if any), resolves settings, applies the
/// subcommand's flags, and runs the stage.
pub fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => crate::config::load_file_config(path)?,
        None => Default::default(),
    };
    let mut settings = Settings::resolve(file, cli.seed, cli.workdir)?;

    match &cli.command {
        Command::Generate(a) => {
            if let Some(v) = a.n_posts {
                settings.synth.n_posts = v;
            }
            if let Some(v) = a.n_authors {
                settings.synth.n_authors = v;
            }
            if let Some(v) = a.n_communities {
                settings.synth.n_communities = v;
            }
            if let Some(v) = a.homophily {
                settings.synth.homophily = v;
            }
            if let Some(v) = a.fake_fraction {
                settings.synth.fake_fraction = v;
            }
            if let Some(v) = a.comment_rate {
                settings.synth.comment_rate = v;
            }
            if let Some(v) = a.stance_fidelity {
                settings.synth.stance_fidelity = v;
            }
            stages::generate(&settings)
        }
        Command::BuildIndex(a) => {
            if let Some(v) = &a.articles {
                settings.paths.articles = Some(v.clone());
            }
            if let Some(v) = &a.credibility {
                settings.paths.credibility = Some(v.clone());
            }
            if let Some(v) = &a.embeddings {
                settings.paths.embeddings = Some(v.clone());
            }
            if let Some(v) = a.dimension {
                settings.embedder.dimension = v;
            }
            if let Some(v) = a.embedder_seed {
                settings.embedder.seed = v;
            }
            if let Some(v) = a.ngram_min {
                settings.embedder.ngram_min = v;
            }
            if let Some(v) = a.ngram_max {
                settings.embedder.ngram_max = v;
            }
            stages::build_index(&settings)
        }
        Command::Match(a) => {
            if let Some(v) = &a.posts {
                settings.paths.posts = Some(v.clone());
            }
            if let Some(v) = &a.ground_truth {
                settings.paths.ground_truth = Some(v.clone());
            }
            if let Some(v) = &a.comments {
                settings.paths.comments = Some(v.clone());
            }
            if let Some(v) = a.window_days {
                settings.matching.window_days = v;
            }
            if let Some(v) = a.threshold {
                settings.matching.threshold = v;
            }
            if let Some(v) = a.min_comments {
                settings.matching.min_comments = v;
            }
            stages::match_stage(&settings)
        }
        Command::RagLabel(a) => {
            if let Some(v) = &a.posts {
                settings.paths.posts = Some(v.clone());
            }
            if let Some(v) = a.top_k {
                settings.retrieval.top_k = v;
            }
            if let Some(v) = a.floor {
                settings.retrieval.floor = v;
            }
            if let Some(v) = a.tau {
                settings.retrieval.tau = v;
            }
            stages::rag_label(&settings)
        }
        Command::BuildGraph(a) => {
            if let Some(v) = &a.posts {
                settings.paths.posts = Some(v.clone());
            }
            if let Some(v) = &a.comments {
                settings.paths.comments = Some(v.clone());
            }
            for author in &a.ignore_author {
                if !settings.ignore_authors.contains(author) {
                    settings.ignore_authors.push(author.clone());
                }
            }
            stages::build_graph(&settings)
        }
        Command::Train(a) => {
            if let Some(v) = &a.posts {
                settings.paths.posts = Some(v.clone());
            }
            if let Some(v) = &a.truth {
                settings.paths.truth = Some(v.clone());
            }
            if let Some(v) = a.epochs {
                settings.train.epochs = v;
            }
            if let Some(v) = a.learning_rate {
                settings.train.learning_rate = v;
            }
            if let Some(v) = a.corruption_ratio {
                settings.train.corruption_ratio = v;
            }
            if let Some(v) = a.hidden_dim {
                settings.train.hidden_dim = v;
            }
            if let Some(v) = a.use_edge_weights {
                settings.train.use_edge_weights = v;
            }
            if let Some(v) = a.leaky_slope {
                settings.train.leaky_slope = v;
            }
            if let Some(v) = a.train_seed {
                settings.train.seed = v;
            }
            stages::train(&settings)
        }
        Command::Refine(a) => {
            if let Some(v) = &a.posts {
                settings.paths.posts = Some(v.clone());
            }
            stages::refine(&settings)
        }
        Command::Evaluate(a) => {
            let truth_explicit = a.truth.is_some() || settings.paths.truth.is_some();
            if let Some(v) = &a.truth {
                settings.paths.truth = Some(v.clone());
            }
            let positive: Label = a.positive_class.parse().map_err(|_| {
                CliError::usage(format!(
                    "--positive-class must be `fake` or `real`, got `{}`",
                    a.positive_class
                ))
            })?;
            let opts = EvaluateOpts {
                positive,
                bins: a
                    .bins
                    .unwrap_or(credigraph_core::metrics::DEFAULT_CALIBRATION_BINS),
                truth_explicit,
            };
            stages::evaluate(&settings, &opts)
        }
        Command::Plot(_) => stages::plot(&settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommands_use_kebab_case() {
        let cmd = Cli::command();
        let names: Vec<&str> = cmd.get_subcommands().map(|c| c.get_name()).collect();
        assert_eq!(
            names,
            vec![
                "generate",
                "build-index",
                "match",
                "rag-label",
                "build-graph",
                "train",
                "refine",
                "evaluate",
                "plot"
            ]
        );
    }
}

//! Pipeline stage implementations. Each stage reads its declared inputs,
//! computes, writes its artifacts atomically, and finishes by writing a
//! stage manifest. Stages communicate only through files, so any stage can
//! be re-run in isolation; a missing upstream artifact is a usage error
//! naming the file to produce first.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use credigraph_core::embed::{self, Embedding};
use credigraph_core::gat::{self, FeatureMatrix, GatError, GatLayer, GatModel};
use credigraph_core::graph::{self, GraphOptions, Post, PostGraph, WeightedEdge};
use credigraph_core::metrics::{self, Prediction};
use credigraph_core::news::{self, CredibilityTable, NewsIndex};
use credigraph_core::synth;
use credigraph_core::Label;
use serde::Serialize;

use crate::config::{names, Settings, FORMAT_VERSION};
use crate::err::{CliError, Result};
use crate::formats::{
    self, EdgeRecord, EntryRecord, GraphNodesFile, IndexFile, InitialLabelRecord, LayerParamsFile,
    MetricSetFile, MetricsFile, ModelFile, RefinedLabelRecord, ScoreRow, TruthRecord,
};
use crate::manifest::StageRun;
use crate::plot::{Chart, Series};

/// Provenance tag for labels planted by the synthetic generator.
const PROVENANCE_PLANTED: &str = "planted";
/// Provenance tag for labels inherited from matched fact-checked claims.
const PROVENANCE_MATCHED: &str = "matched";

/// Abstained posts score as Real at probability one half during
/// evaluation, mirroring the uninformed 0.5 used in node features.
const ABSTAIN_EVAL_LABEL: Label = Label::Real;

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::usage(e.to_string())
}

/// Shape/config problems in training data are user-fixable; numerical
/// blowups are not.
fn gat_error(e: GatError) -> CliError {
    match e {
        GatError::NumericalError { .. } | GatError::TrainingDiverged { .. } => {
            CliError::Internal(anyhow::anyhow!("{e}"))
        }
        other => CliError::usage(other.to_string()),
    }
}

fn validate_retrieval(settings: &Settings) -> Result<()> {
    let r = &settings.retrieval;
    if r.top_k == 0 {
        return Err(CliError::usage("retrieval top_k must be at least 1"));
    }
    if !r.floor.is_finite() || !r.tau.is_finite() {
        return Err(CliError::usage("retrieval floor and tau must be finite"));
    }
    Ok(())
}

fn index_posts(posts: &[Post]) -> Result<BTreeMap<&str, &Post>> {
    let mut map = BTreeMap::new();
    for p in posts {
        if map.insert(p.id.as_str(), p).is_some() {
            return Err(CliError::usage(format!("duplicate post id {}", p.id)));
        }
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SynthManifestFile<'a> {
    format_version: u32,
    #[serde(flatten)]
    manifest: &'a synth::SynthManifest,
}

/// Generates a seeded synthetic corpus: posts, comments, reference
/// articles, source credibility ratings, and the planted truth labels.
pub fn generate(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("generate", settings);
    let dataset = synth::generate(&settings.synth).map_err(usage)?;

    run.write_output(
        &settings.posts_path(),
        &formats::write_posts(&dataset.posts)?,
    )?;
    run.write_output(
        &settings.comments_path(),
        &formats::write_comments(&dataset.comments)?,
    )?;
    run.write_output(
        &settings.articles_path(),
        &formats::write_articles(&dataset.articles)?,
    )?;
    run.write_output(
        &settings.credibility_path(),
        &formats::write_credibility_csv(&dataset.credibility)?,
    )?;

    let truth: Vec<TruthRecord> = dataset
        .posts
        .iter()
        .zip(&dataset.truth)
        .map(|(post, &label)| TruthRecord {
            post_id: post.id.clone(),
            label,
            provenance: PROVENANCE_PLANTED.to_string(),
            similarity: None,
            article_index: None,
        })
        .collect();
    run.write_output(&settings.truth_path(), &formats::write_truth(&truth)?)?;

    let manifest_file = SynthManifestFile {
        format_version: FORMAT_VERSION,
        manifest: &dataset.manifest,
    };
    run.write_output(
        &settings.artifact(names::SYNTH_MANIFEST),
        &crate::io::to_json_pretty(&manifest_file)?,
    )?;

    eprintln!(
        "generated {} posts, {} comments, {} articles ({} fake posts planted)",
        dataset.posts.len(),
        dataset.comments.len(),
        dataset.articles.len(),
        dataset.manifest.n_fake
    );
    run.finish()
}

// ---------------------------------------------------------------------------
// build-index
// ---------------------------------------------------------------------------

/// Embeds the reference articles (or imports externally computed vectors)
/// and attaches source credibility ratings, producing `index.json`.
pub fn build_index(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("build-index", settings);
    settings.embedder.validate().map_err(usage)?;

    let articles_path = settings.articles_path();
    run.record_input(&articles_path)?;
    let articles = formats::read_articles(&articles_path)?;

    let credibility_path = settings.credibility_path();
    run.record_input(&credibility_path)?;
    let credibility = formats::read_credibility_csv(&credibility_path)?;

    for a in &articles {
        if a.title.trim().is_empty() || a.body.trim().is_empty() {
            return Err(CliError::usage(format!(
                "article {} must have a non-empty title and body",
                a.id
            )));
        }
    }

    let index = match settings.embeddings_path() {
        Some(import_path) => {
            run.record_input(&import_path)?;
            let imports = formats::read_embedding_import(&import_path)?;
            let mut by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for rec in imports {
                if by_id.insert(rec.id.clone(), rec.vector).is_some() {
                    return Err(CliError::usage(format!(
                        "duplicate imported vector for article {}",
                        rec.id
                    )));
                }
            }
            let known: BTreeSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
            if let Some(stray) = by_id.keys().find(|id| !known.contains(id.as_str())) {
                return Err(CliError::usage(format!(
                    "imported vector for unknown article {stray}"
                )));
            }
            let mut vectors = Vec::with_capacity(articles.len());
            for a in &articles {
                let v = by_id.remove(&a.id).ok_or_else(|| {
                    CliError::usage(format!("no imported vector for article {}", a.id))
                })?;
                vectors.push(v);
            }
            NewsIndex::from_embeddings(articles, vectors, credibility, &settings.embedder)
                .map_err(usage)?
        }
        None => NewsIndex::build(articles, credibility, &settings.embedder).map_err(usage)?,
    };

    let file = IndexFile {
        format_version: FORMAT_VERSION,
        embedder: &settings.embedder,
        articles: index
            .articles()
            .iter()
            .map(formats::ArticleRecord::from_core)
            .collect(),
        credibility: index
            .credibility()
            .iter()
            .map(|(s, v)| (s.to_string(), v))
            .collect(),
        embeddings: index
            .embeddings()
            .iter()
            .map(|e| e.values().to_vec())
            .collect(),
    };
    run.write_output(
        &settings.artifact(names::INDEX),
        &crate::io::to_json_pretty(&file)?,
    )?;

    eprintln!(
        "indexed {} articles across {} sources",
        index.len(),
        index.credibility().len()
    );
    run.finish()
}

/// Reconstructs an in-memory index from `index.json`, using the embedder
/// configuration recorded in the file (queries must live in the same
/// hashed space the articles were embedded in).
fn load_index(settings: &Settings) -> Result<(NewsIndex, PathBuf)> {
    let path = settings.artifact(names::INDEX);
    let file = formats::read_index(&path)?;
    file.embedder.validate().map_err(usage)?;
    if file.articles.len() != file.embeddings.len() {
        return Err(CliError::usage(format!(
            "{}: {} articles but {} embeddings",
            path.display(),
            file.articles.len(),
            file.embeddings.len()
        )));
    }
    let mut table = CredibilityTable::new();
    for (source, raw) in &file.credibility {
        table.insert(source, *raw).map_err(usage)?;
    }
    let mut articles = Vec::with_capacity(file.articles.len());
    for rec in file.articles {
        articles.push(rec.into_core()?);
    }
    let index = NewsIndex::from_embeddings(articles, file.embeddings, table, &file.embedder)
        .map_err(usage)?;
    Ok((index, path))
}

// ---------------------------------------------------------------------------
// match
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MatchReportFile {
    format_version: u32,
    n_posts: usize,
    n_considered: usize,
    n_matched: usize,
    n_unmatched: usize,
    n_filtered_low_comment: usize,
    matched: Vec<formats::TruthRecord>,
    unmatched: Vec<String>,
    /// Posts excluded before matching for having fewer comments than
    /// `matching.min_comments`.
    filtered_low_comment: Vec<String>,
}

/// Labels posts by matching them against a fact-checked claim list
/// (publication window + title similarity), writing `truth.jsonl` and a
/// match report.
pub fn match_stage(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("match", settings);
    settings.embedder.validate().map_err(usage)?;

    let posts_path = settings.posts_path();
    run.record_input(&posts_path)?;
    let posts = formats::read_posts(&posts_path)?;
    index_posts(&posts)?;

    let gt_path = settings.ground_truth_path();
    run.record_input(&gt_path)?;
    let claims = formats::read_ground_truth_csv(&gt_path)?;

    // Optional activity floor: posts with too few comments are excluded
    // from matching entirely (their labels would sit on isolated nodes).
    let (considered, filtered): (Vec<Post>, Vec<String>) = if settings.matching.min_comments > 0 {
        let comments_path = settings.comments_path();
        run.record_input(&comments_path)?;
        let comments = formats::read_comments(&comments_path)?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &comments {
            *counts.entry(c.post_id.as_str()).or_default() += 1;
        }
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for p in posts {
            if counts.get(p.id.as_str()).copied().unwrap_or(0) >= settings.matching.min_comments {
                kept.push(p);
            } else {
                dropped.push(p.id);
            }
        }
        (kept, dropped)
    } else {
        (posts, Vec::new())
    };

    let report = credigraph_core::matching::match_posts(
        &considered,
        &claims,
        &settings.matching.as_match_config(),
        &settings.embedder,
    );

    let truth: Vec<TruthRecord> = report
        .matched
        .iter()
        .map(|m| TruthRecord {
            post_id: m.post_id.clone(),
            label: m.label,
            provenance: PROVENANCE_MATCHED.to_string(),
            similarity: Some(m.similarity),
            article_index: Some(m.article_index),
        })
        .collect();
    run.write_output(&settings.truth_path(), &formats::write_truth(&truth)?)?;

    let report_file = MatchReportFile {
        format_version: FORMAT_VERSION,
        n_posts: considered.len() + filtered.len(),
        n_considered: considered.len(),
        n_matched: report.matched.len(),
        n_unmatched: report.unmatched.len(),
        n_filtered_low_comment: filtered.len(),
        matched: truth.clone(),
        unmatched: report.unmatched,
        filtered_low_comment: filtered,
    };
    run.write_output(
        &settings.artifact(names::MATCH_REPORT),
        &crate::io::to_json_pretty(&report_file)?,
    )?;

    eprintln!(
        "matched {} of {} posts ({} unmatched, {} below the comment floor)",
        report_file.n_matched,
        report_file.n_posts,
        report_file.n_unmatched,
        report_file.n_filtered_low_comment
    );
    run.finish()
}

// ---------------------------------------------------------------------------
// rag-label
// ---------------------------------------------------------------------------

/// Assigns each post an initial label from retrieved article evidence:
/// `y_hat` is the mean normalized credibility of the top-k articles above
/// the similarity floor, and posts with no qualifying evidence abstain.
pub fn rag_label(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("rag-label", settings);
    validate_retrieval(settings)?;

    let (index, index_path) = load_index(settings)?;
    run.record_input(&index_path)?;

    let posts_path = settings.posts_path();
    run.record_input(&posts_path)?;
    let posts = formats::read_posts(&posts_path)?;
    index_posts(&posts)?;

    let mut records = Vec::with_capacity(posts.len());
    let mut n_abstained = 0usize;
    for post in &posts {
        let record = match embed::embed(&post.full_text(), index.config()) {
            Ok(query) => {
                let result =
                    index.retrieve(&query, settings.retrieval.top_k, settings.retrieval.floor);
                match result.y_hat {
                    Some(y_hat) => InitialLabelRecord {
                        post_id: post.id.clone(),
                        y_hat,
                        label: Some(news::initial_label(y_hat, settings.retrieval.tau)),
                        abstain: false,
                        entries: result
                            .entries
                            .iter()
                            .map(|e| EntryRecord {
                                article_id: e.article_id.clone(),
                                score: e.score,
                            })
                            .collect(),
                    },
                    None => abstain_record(&post.id),
                }
            }
            // Untokenizable post text retrieves nothing: abstain.
            Err(_) => abstain_record(&post.id),
        };
        if record.abstain {
            n_abstained += 1;
        }
        records.push(record);
    }

    run.write_output(
        &settings.artifact(names::LABELS_INITIAL),
        &formats::write_initial_labels(&records)?,
    )?;

    eprintln!(
        "labeled {} posts ({} abstained)",
        records.len(),
        n_abstained
    );
    run.finish()
}

fn abstain_record(post_id: &str) -> InitialLabelRecord {
    InitialLabelRecord {
        post_id: post_id.to_string(),
        y_hat: gat::ABSTAINED_SCORE,
        label: None,
        abstain: true,
        entries: Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// build-graph
// ---------------------------------------------------------------------------

/// Builds the commenter-overlap graph: posts are nodes, an edge connects
/// posts sharing at least one commenter, and the weight is the mean
/// product of the shared commenters' stance values.
pub fn build_graph(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("build-graph", settings);
    settings.embedder.validate().map_err(usage)?;

    let posts_path = settings.posts_path();
    run.record_input(&posts_path)?;
    let posts = formats::read_posts(&posts_path)?;

    let comments_path = settings.comments_path();
    run.record_input(&comments_path)?;
    let comments = formats::read_comments(&comments_path)?;

    let options = GraphOptions {
        ignore_authors: settings.ignore_author_set(),
    };
    let graph =
        graph::build_graph(&posts, &comments, &settings.embedder, &options).map_err(usage)?;

    let nodes = GraphNodesFile {
        format_version: FORMAT_VERSION,
        post_ids: graph.node_ids().to_vec(),
    };
    run.write_output(
        &settings.artifact(names::GRAPH_NODES),
        &crate::io::to_json_pretty(&nodes)?,
    )?;

    let edges: Vec<EdgeRecord> = graph
        .edges()
        .iter()
        .map(|e| EdgeRecord {
            a: e.a,
            b: e.b,
            weight: e.weight,
        })
        .collect();
    run.write_output(
        &settings.artifact(names::GRAPH_EDGES),
        &crate::io::to_jsonl(&edges)?,
    )?;

    eprintln!(
        "graph: {} nodes, {} edges",
        graph.node_count(),
        graph.edges().len()
    );
    run.finish()
}

// ---------------------------------------------------------------------------
// shared graph/feature loading for train and refine
// ---------------------------------------------------------------------------

struct LoadedGraph {
    graph: PostGraph,
    nodes_path: PathBuf,
    edges_path: PathBuf,
}

fn load_graph(settings: &Settings) -> Result<LoadedGraph> {
    let nodes_path = settings.artifact(names::GRAPH_NODES);
    let nodes = formats::read_graph_nodes(&nodes_path)?;
    let edges_path = settings.artifact(names::GRAPH_EDGES);
    let edge_records = formats::read_graph_edges(&edges_path)?;
    let edges: Vec<WeightedEdge> = edge_records
        .into_iter()
        .map(|e| WeightedEdge {
            a: e.a,
            b: e.b,
            weight: e.weight,
        })
        .collect();
    let graph = PostGraph::from_parts(nodes.post_ids, edges).map_err(usage)?;
    Ok(LoadedGraph {
        graph,
        nodes_path,
        edges_path,
    })
}

/// Builds the node feature matrix `[embedding | credibility score |
/// signed initial label]` for the graph's nodes, in node order.
fn build_features(
    graph: &PostGraph,
    posts: &BTreeMap<&str, &Post>,
    initial: &BTreeMap<&str, &InitialLabelRecord>,
    embedder: &credigraph_core::embed::EmbedderConfig,
) -> Result<FeatureMatrix> {
    let mut embeddings: Vec<Option<Embedding>> = Vec::with_capacity(graph.node_count());
    let mut scores: Vec<Option<f64>> = Vec::with_capacity(graph.node_count());
    let mut labels: Vec<Option<Label>> = Vec::with_capacity(graph.node_count());
    for id in graph.node_ids() {
        let post = posts.get(id.as_str()).ok_or_else(|| {
            CliError::usage(format!("graph node {id} has no post in the posts file"))
        })?;
        let record = initial.get(id.as_str()).ok_or_else(|| {
            CliError::usage(format!(
                "graph node {id} has no record in {}",
                names::LABELS_INITIAL
            ))
        })?;
        embeddings.push(embed::embed(&post.full_text(), embedder).ok());
        scores.push(Some(record.y_hat));
        labels.push(record.label);
    }
    FeatureMatrix::node_features(embedder.dimension, &embeddings, &scores, &labels)
        .map_err(gat_error)
}

fn index_initial(records: &[InitialLabelRecord]) -> Result<BTreeMap<&str, &InitialLabelRecord>> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.post_id.as_str(), r).is_some() {
            return Err(CliError::usage(format!(
                "duplicate post id {} in {}",
                r.post_id,
                names::LABELS_INITIAL
            )));
        }
    }
    Ok(map)
}

fn index_truth(records: &[TruthRecord]) -> Result<BTreeMap<&str, Label>> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.post_id.as_str(), r.label).is_some() {
            return Err(CliError::usage(format!(
                "duplicate post id {} in the truth file",
                r.post_id
            )));
        }
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Trains the two-layer attention network on the graph with per-epoch
/// label corruption, producing `model.json` and the loss trace.
pub fn train(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("train", settings);
    settings.embedder.validate().map_err(usage)?;

    let loaded = load_graph(settings)?;
    run.record_input(&loaded.nodes_path)?;
    run.record_input(&loaded.edges_path)?;

    let posts_path = settings.posts_path();
    run.record_input(&posts_path)?;
    let posts = formats::read_posts(&posts_path)?;
    let posts_by_id = index_posts(&posts)?;

    let initial_path = settings.artifact(names::LABELS_INITIAL);
    run.record_input(&initial_path)?;
    let initial_records = formats::read_initial_labels(&initial_path)?;
    let initial = index_initial(&initial_records)?;

    let truth_path = settings.truth_path();
    run.record_input(&truth_path)?;
    let truth_records = formats::read_truth(&truth_path)?;
    let truth_by_id = index_truth(&truth_records)?;

    let features = build_features(&loaded.graph, &posts_by_id, &initial, &settings.embedder)?;

    // Supervised training needs a label for every node.
    let mut truth = Vec::with_capacity(loaded.graph.node_count());
    for id in loaded.graph.node_ids() {
        let label = truth_by_id
            .get(id.as_str())
            .ok_or_else(|| CliError::usage(format!("graph node {id} has no ground-truth label")))?;
        truth.push(*label);
    }

    let outcome =
        gat::train(&loaded.graph, &features, &truth, &settings.train).map_err(gat_error)?;

    let model_file = model_to_file(&outcome.model, settings);
    run.write_output(
        &settings.artifact(names::MODEL),
        &crate::io::to_json_pretty(&model_file)?,
    )?;
    run.write_output(
        &settings.artifact(names::LOSS_TRACE),
        &formats::write_loss_trace_csv(&outcome.loss_trace)?,
    )?;

    let first = outcome.loss_trace.first().copied();
    let last = outcome.loss_trace.last().copied();
    match (first, last) {
        (Some(f), Some(l)) => eprintln!(
            "trained {} epochs on {} nodes (loss {f:.4} -> {l:.4})",
            settings.train.epochs,
            loaded.graph.node_count()
        ),
        _ => eprintln!(
            "trained 0 epochs on {} nodes (seeded initialization saved)",
            loaded.graph.node_count()
        ),
    }
    run.finish()
}

fn model_to_file(model: &GatModel, settings: &Settings) -> ModelFile {
    let layer = |l: &GatLayer| LayerParamsFile {
        in_dim: l.in_dim(),
        out_dim: l.out_dim(),
        weights: l.weights().to_vec(),
        attention: l.attention().to_vec(),
    };
    ModelFile {
        format_version: FORMAT_VERSION,
        seed: settings.train.seed,
        train: settings.train.clone(),
        embedder: settings.embedder.clone(),
        feature_dim: model.feature_dim(),
        hidden_dim: model.hidden_dim(),
        use_edge_weights: model.use_edge_weights(),
        leaky_slope: model.hidden().leaky_slope(),
        hidden: layer(model.hidden()),
        output: layer(model.output()),
    }
}

// ---------------------------------------------------------------------------
// refine
// ---------------------------------------------------------------------------

/// Applies the trained network to the graph, refining every post's label
/// and writing per-post Real probabilities.
pub fn refine(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("refine", settings);

    let model_path = settings.artifact(names::MODEL);
    run.record_input(&model_path)?;
    let model_file = formats::read_model(&model_path)?;
    model_file.embedder.validate().map_err(usage)?;
    if model_file.feature_dim != model_file.embedder.dimension + gat::EXTRA_FEATURE_COLUMNS {
        return Err(CliError::usage(format!(
            "{}: feature_dim {} does not fit embedder dimension {} plus {} extra columns",
            model_path.display(),
            model_file.feature_dim,
            model_file.embedder.dimension,
            gat::EXTRA_FEATURE_COLUMNS
        )));
    }
    let hidden = GatLayer::from_parts(
        model_file.hidden.in_dim,
        model_file.hidden.out_dim,
        model_file.hidden.weights,
        model_file.hidden.attention,
        model_file.leaky_slope,
    )
    .map_err(usage)?;
    let output = GatLayer::from_parts(
        model_file.output.in_dim,
        model_file.output.out_dim,
        model_file.output.weights,
        model_file.output.attention,
        model_file.leaky_slope,
    )
    .map_err(usage)?;
    let model = GatModel::from_parts(hidden, output, model_file.use_edge_weights).map_err(usage)?;
    if model.feature_dim() != model_file.feature_dim {
        return Err(CliError::usage(format!(
            "{}: declared feature_dim {} but hidden layer expects {}",
            model_path.display(),
            model_file.feature_dim,
            model.feature_dim()
        )));
    }

    let loaded = load_graph(settings)?;
    run.record_input(&loaded.nodes_path)?;
    run.record_input(&loaded.edges_path)?;

    let posts_path = settings.posts_path();
    run.record_input(&posts_path)?;
    let posts = formats::read_posts(&posts_path)?;
    let posts_by_id = index_posts(&posts)?;

    let initial_path = settings.artifact(names::LABELS_INITIAL);
    run.record_input(&initial_path)?;
    let initial_records = formats::read_initial_labels(&initial_path)?;
    let initial = index_initial(&initial_records)?;

    // Features must be rebuilt in the embedding space the model was
    // trained in, which the model file records.
    let features = build_features(&loaded.graph, &posts_by_id, &initial, &model_file.embedder)?;

    let refined = model.refine(&loaded.graph, &features).map_err(gat_error)?;
    let records: Vec<RefinedLabelRecord> = loaded
        .graph
        .node_ids()
        .iter()
        .zip(&refined)
        .map(|(id, r)| RefinedLabelRecord {
            post_id: id.clone(),
            label: r.label,
            p_real: r.p_real,
        })
        .collect();
    run.write_output(
        &settings.artifact(names::LABELS_REFINED),
        &formats::write_refined_labels(&records)?,
    )?;

    let n_real = records.iter().filter(|r| r.label == Label::Real).count();
    eprintln!(
        "refined {} posts ({} real, {} fake)",
        records.len(),
        n_real,
        records.len() - n_real
    );
    run.finish()
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

pub struct EvaluateOpts {
    pub positive: Label,
    pub bins: usize,
    /// True when a truth file was named explicitly (flag or config); it
    /// must then exist. The conventional `truth.jsonl` is used
    /// opportunistically otherwise.
    pub truth_explicit: bool,
}

/// Scores the initial (retrieval) and refined (network) labels against
/// ground truth side by side, writing `metrics.json`, the per-post score
/// table, and ROC/calibration curves.
pub fn evaluate(settings: &Settings, opts: &EvaluateOpts) -> Result<()> {
    let mut run = StageRun::new("evaluate", settings);
    if opts.bins == 0 {
        return Err(CliError::usage("calibration needs at least one bin"));
    }

    let initial_path = settings.artifact(names::LABELS_INITIAL);
    run.record_input(&initial_path)?;
    let initial_records = formats::read_initial_labels(&initial_path)?;
    let initial = index_initial(&initial_records)?;

    let refined_path = settings.artifact(names::LABELS_REFINED);
    run.record_input(&refined_path)?;
    let refined_records = formats::read_refined_labels(&refined_path)?;
    {
        let mut seen = BTreeSet::new();
        for r in &refined_records {
            if !seen.insert(r.post_id.as_str()) {
                return Err(CliError::usage(format!(
                    "duplicate post id {} in {}",
                    r.post_id,
                    names::LABELS_REFINED
                )));
            }
        }
    }

    // Both label files must describe the same post set; otherwise the
    // comparison would be apples to oranges.
    let initial_ids: BTreeSet<&str> = initial.keys().copied().collect();
    let refined_ids: BTreeSet<&str> = refined_records.iter().map(|r| r.post_id.as_str()).collect();
    if initial_ids != refined_ids {
        let only_initial: Vec<&&str> = initial_ids.difference(&refined_ids).take(3).collect();
        let only_refined: Vec<&&str> = refined_ids.difference(&initial_ids).take(3).collect();
        return Err(CliError::usage(format!(
            "initial and refined labels cover different post sets \
             (e.g. only initial: {only_initial:?}, only refined: {only_refined:?})"
        )));
    }

    let truth_path = settings.truth_path();
    let truth_records: Vec<TruthRecord> = if truth_path.exists() {
        run.record_input(&truth_path)?;
        formats::read_truth(&truth_path)?
    } else if opts.truth_explicit {
        return Err(CliError::usage(format!(
            "missing input file: {}",
            truth_path.display()
        )));
    } else {
        Vec::new()
    };
    let truth_by_id = index_truth(&truth_records)?;

    let mut rows = Vec::with_capacity(refined_records.len());
    let mut initial_preds = Vec::new();
    let mut refined_preds = Vec::new();
    let mut n_abstained = 0usize;
    for refined in &refined_records {
        let init = initial[refined.post_id.as_str()];
        if init.abstain {
            n_abstained += 1;
        }
        let truth = truth_by_id.get(refined.post_id.as_str()).copied();
        let initial_predicted = init.label.unwrap_or(ABSTAIN_EVAL_LABEL);
        if let Some(t) = truth {
            initial_preds.push(Prediction::new(t, initial_predicted, init.y_hat));
            refined_preds.push(Prediction::new(t, refined.label, refined.p_real));
        }
        rows.push(ScoreRow {
            post_id: refined.post_id.clone(),
            truth,
            initial_label: init.label,
            initial_y_hat: init.y_hat,
            abstained: init.abstain,
            refined_label: refined.label,
            refined_p_real: refined.p_real,
        });
    }

    run.write_output(
        &settings.artifact(names::SCORES),
        &formats::write_scores_csv(&rows)?,
    )?;

    let mut metrics_file = MetricsFile {
        format_version: FORMAT_VERSION,
        n_scored: rows.len(),
        n_with_truth: initial_preds.len(),
        n_abstained,
        initial: None,
        refined: None,
    };

    if !initial_preds.is_empty() {
        let (initial_set, initial_roc, initial_cal) =
            metric_set(&initial_preds, opts.positive, opts.bins)?;
        let (refined_set, refined_roc, refined_cal) =
            metric_set(&refined_preds, opts.positive, opts.bins)?;
        metrics_file.initial = Some(initial_set);
        metrics_file.refined = Some(refined_set);

        if let Some(points) = initial_roc {
            run.write_output(
                &settings.artifact(names::ROC_INITIAL),
                &formats::write_roc_csv(&points)?,
            )?;
        }
        if let Some(points) = refined_roc {
            run.write_output(
                &settings.artifact(names::ROC_REFINED),
                &formats::write_roc_csv(&points)?,
            )?;
        }
        run.write_output(
            &settings.artifact(names::CALIBRATION_INITIAL),
            &formats::write_calibration_csv(&initial_cal)?,
        )?;
        run.write_output(
            &settings.artifact(names::CALIBRATION_REFINED),
            &formats::write_calibration_csv(&refined_cal)?,
        )?;
    }

    run.write_output(
        &settings.artifact(names::METRICS),
        &crate::io::to_json_pretty(&metrics_file)?,
    )?;

    match (&metrics_file.initial, &metrics_file.refined) {
        (Some(i), Some(r)) => eprintln!(
            "evaluated {} posts with truth: initial accuracy {:.4} / F1 {:.4}, \
             refined accuracy {:.4} / F1 {:.4}",
            metrics_file.n_with_truth, i.accuracy, i.f1, r.accuracy, r.f1
        ),
        _ => eprintln!(
            "no ground truth available: wrote scores for {} posts, metrics omitted",
            metrics_file.n_scored
        ),
    }
    run.finish()
}

type MetricBundle = (
    MetricSetFile,
    Option<Vec<metrics::RocPoint>>,
    Vec<metrics::CalibrationBin>,
);

fn metric_set(preds: &[Prediction], positive: Label, bins: usize) -> Result<MetricBundle> {
    let accuracy = metrics::accuracy(preds).map_err(usage)?;
    let f1 = metrics::f1_score(preds, positive).map_err(usage)?;
    let (auc, roc_points, roc_note) = match metrics::roc_curve(preds, positive) {
        Ok(curve) => (Some(curve.auc), Some(curve.points), None),
        Err(metrics::MetricsError::SingleClass) => (
            None,
            None,
            Some("ground truth contains a single class; ROC undefined".to_string()),
        ),
        Err(e) => return Err(usage(e)),
    };
    let calibration = metrics::calibration_curve(preds, bins).map_err(usage)?;
    Ok((
        MetricSetFile {
            accuracy,
            f1: f1.value,
            f1_degenerate: f1.degenerate,
            positive_class: positive,
            auc,
            roc_note,
            calibration_bins: bins,
        },
        roc_points,
        calibration.bins,
    ))
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

const COLOR_INITIAL: &str = "#888888";
const COLOR_REFINED: &str = "#1557c0";
const COLOR_LOSS: &str = "#b3443a";

/// Renders SVG charts from whichever evaluation artifacts exist: ROC
/// curves, calibration curves, and the training loss trace.
pub fn plot(settings: &Settings) -> Result<()> {
    let mut run = StageRun::new("plot", settings);
    let mut wrote_any = false;

    // ROC: initial dashed gray, refined solid blue, chance diagonal.
    let roc_initial = settings.artifact(names::ROC_INITIAL);
    let roc_refined = settings.artifact(names::ROC_REFINED);
    let mut roc_series = Vec::new();
    if roc_initial.exists() {
        run.record_input(&roc_initial)?;
        roc_series.push(Series {
            label: "initial",
            points: formats::read_roc_csv(&roc_initial)?,
            color: COLOR_INITIAL,
            dashed: true,
            markers: false,
        });
    }
    if roc_refined.exists() {
        run.record_input(&roc_refined)?;
        roc_series.push(Series {
            label: "refined",
            points: formats::read_roc_csv(&roc_refined)?,
            color: COLOR_REFINED,
            dashed: false,
            markers: false,
        });
    }
    if !roc_series.is_empty() {
        let svg = crate::plot::render(&Chart {
            title: "ROC",
            x_label: "false positive rate",
            y_label: "true positive rate",
            x_domain: (0.0, 1.0),
            y_domain: (0.0, 1.0),
            diagonal: true,
            series: roc_series,
        });
        run.write_output(&settings.artifact(names::ROC_SVG), svg.as_bytes())?;
        wrote_any = true;
    }

    // Calibration: mean predicted vs observed frequency per bin.
    let cal_initial = settings.artifact(names::CALIBRATION_INITIAL);
    let cal_refined = settings.artifact(names::CALIBRATION_REFINED);
    let mut cal_series = Vec::new();
    if cal_initial.exists() {
        run.record_input(&cal_initial)?;
        let bins = formats::read_calibration_csv(&cal_initial)?;
        cal_series.push(Series {
            label: "initial",
            points: bins.iter().map(|&(_, _, m, o, _)| (m, o)).collect(),
            color: COLOR_INITIAL,
            dashed: true,
            markers: true,
        });
    }
    if cal_refined.exists() {
        run.record_input(&cal_refined)?;
        let bins = formats::read_calibration_csv(&cal_refined)?;
        cal_series.push(Series {
            label: "refined",
            points: bins.iter().map(|&(_, _, m, o, _)| (m, o)).collect(),
            color: COLOR_REFINED,
            dashed: false,
            markers: true,
        });
    }
    if !cal_series.is_empty() {
        let svg = crate::plot::render(&Chart {
            title: "Calibration",
            x_label: "mean predicted probability of real",
            y_label: "observed fraction real",
            x_domain: (0.0, 1.0),
            y_domain: (0.0, 1.0),
            diagonal: true,
            series: cal_series,
        });
        run.write_output(&settings.artifact(names::CALIBRATION_SVG), svg.as_bytes())?;
        wrote_any = true;
    }

    // Training loss per epoch.
    let loss_path = settings.artifact(names::LOSS_TRACE);
    if loss_path.exists() {
        run.record_input(&loss_path)?;
        let rows = formats::read_loss_trace_csv(&loss_path)?;
        let max_epoch = rows.iter().map(|r| r.0).fold(1.0f64, f64::max);
        let max_loss = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
        let svg = crate::plot::render(&Chart {
            title: "Training loss",
            x_label: "epoch",
            y_label: "mean negative log-likelihood",
            x_domain: (0.0, max_epoch),
            y_domain: (0.0, if max_loss > 0.0 { max_loss * 1.05 } else { 1.0 }),
            diagonal: false,
            series: vec![Series {
                label: "training loss",
                points: rows,
                color: COLOR_LOSS,
                dashed: false,
                markers: false,
            }],
        });
        run.write_output(&settings.artifact(names::LOSS_SVG), svg.as_bytes())?;
        wrote_any = true;
    }

    if !wrote_any {
        return Err(CliError::usage(
            "nothing to plot: run `evaluate` (ROC, calibration) and/or `train` (loss) first",
        ));
    }
    run.finish()
}

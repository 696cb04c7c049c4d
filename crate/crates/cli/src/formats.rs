//! On-disk artifact formats: JSON/JSONL record shapes and CSV codecs.
//!
//! Human-facing timestamps are RFC 3339 strings on disk and Unix seconds
//! in memory. Artifacts that feed back into later stages bit-exactly
//! (article embeddings, edge weights, model parameters) serialize floats
//! with 17 significant digits.

use std::collections::BTreeMap;
use std::path::Path;

use credigraph_core::embed::EmbedderConfig;
use credigraph_core::gat::TrainConfig;
use credigraph_core::graph::{Comment, Post};
use credigraph_core::matching::GroundTruthArticle;
use credigraph_core::metrics::{CalibrationBin, RocPoint};
use credigraph_core::news::{CredibilityTable, NewsArticle};
use credigraph_core::Label;
use serde::{Deserialize, Serialize};

use crate::err::{CliError, Result};
use crate::io;

// ---------------------------------------------------------------------------
// Posts / comments / articles (JSONL with RFC 3339 timestamps).
// ---------------------------------------------------------------------------

/// One social post as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub author: String,
    /// RFC 3339, e.g. `2024-05-01T12:00:00Z`.
    pub created_at: String,
    #[serde(default)]
    pub community: String,
}

impl PostRecord {
    pub fn from_core(p: &Post) -> PostRecord {
        PostRecord {
            id: p.id.clone(),
            title: p.title.clone(),
            body: p.body.clone(),
            author: p.author.clone(),
            created_at: io::format_rfc3339(p.created_at),
            community: p.community.clone(),
        }
    }

    pub fn into_core(self) -> Result<Post> {
        let created_at = io::parse_rfc3339(&self.created_at, &format!("post {}", self.id))?;
        Ok(Post {
            id: self.id,
            title: self.title,
            body: self.body,
            author: self.author,
            created_at,
            community: self.community,
        })
    }
}

pub fn read_posts(path: &Path) -> Result<Vec<Post>> {
    let records: Vec<PostRecord> = io::read_jsonl(path)?;
    let mut posts = Vec::with_capacity(records.len());
    for r in records {
        posts.push(r.into_core()?);
    }
    Ok(posts)
}

pub fn write_posts(posts: &[Post]) -> Result<Vec<u8>> {
    let records: Vec<PostRecord> = posts.iter().map(PostRecord::from_core).collect();
    io::to_jsonl(&records)
}

/// Comments carry no timestamps, so the core shape is the disk shape.
pub fn read_comments(path: &Path) -> Result<Vec<Comment>> {
    io::read_jsonl(path)
}

pub fn write_comments(comments: &[Comment]) -> Result<Vec<u8>> {
    io::to_jsonl(comments)
}

/// One reference news article as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub source: String,
    /// RFC 3339.
    pub published_at: String,
}

impl ArticleRecord {
    pub fn from_core(a: &NewsArticle) -> ArticleRecord {
        ArticleRecord {
            id: a.id.clone(),
            title: a.title.clone(),
            body: a.body.clone(),
            source: a.source.clone(),
            published_at: io::format_rfc3339(a.published_at),
        }
    }

    pub fn into_core(self) -> Result<NewsArticle> {
        let published_at = io::parse_rfc3339(&self.published_at, &format!("article {}", self.id))?;
        Ok(NewsArticle {
            id: self.id,
            title: self.title,
            body: self.body,
            source: self.source,
            published_at,
        })
    }
}

pub fn read_articles(path: &Path) -> Result<Vec<NewsArticle>> {
    let records: Vec<ArticleRecord> = io::read_jsonl(path)?;
    let mut articles = Vec::with_capacity(records.len());
    for r in records {
        articles.push(r.into_core()?);
    }
    Ok(articles)
}

pub fn write_articles(articles: &[NewsArticle]) -> Result<Vec<u8>> {
    let records: Vec<ArticleRecord> = articles.iter().map(ArticleRecord::from_core).collect();
    io::to_jsonl(&records)
}

// ---------------------------------------------------------------------------
// Credibility ratings (CSV: source,raw_score).
// ---------------------------------------------------------------------------

pub fn read_credibility_csv(path: &Path) -> Result<CredibilityTable> {
    let bytes = io::read_input(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    {
        let headers = reader
            .headers()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let expected = ["source", "raw_score"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::usage(format!(
                "{}: expected header `source,raw_score`, found `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut table = CredibilityTable::new();
    for (idx, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        let source = row.get(0).unwrap_or("").trim();
        let raw: f64 = row.get(1).unwrap_or("").trim().parse().map_err(|_| {
            CliError::usage(format!(
                "{} row {}: raw_score is not a number",
                path.display(),
                idx + 2
            ))
        })?;
        table
            .insert(source, raw)
            .map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), idx + 2)))?;
    }
    Ok(table)
}

pub fn write_credibility_csv(table: &CredibilityTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, &["source", "raw_score"])?;
    for (source, raw) in table.iter() {
        write_row(&mut w, &[source, &format!("{raw}")])?;
    }
    finish_csv(w)
}

// ---------------------------------------------------------------------------
// Fact-checked claim list (CSV: title,label,published_at).
// ---------------------------------------------------------------------------

pub fn read_ground_truth_csv(path: &Path) -> Result<Vec<GroundTruthArticle>> {
    let bytes = io::read_input(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    {
        let headers = reader
            .headers()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let expected = ["title", "label", "published_at"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::usage(format!(
                "{}: expected header `title,label,published_at`, found `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut out = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        let title = row.get(0).unwrap_or("").to_string();
        let label: Label = row.get(1).unwrap_or("").trim().parse().map_err(|_| {
            CliError::usage(format!(
                "{} row {}: label must be fake/real/0/1",
                path.display(),
                idx + 2
            ))
        })?;
        let published_at = io::parse_rfc3339(
            row.get(2).unwrap_or("").trim(),
            &format!("{} row {}", path.display(), idx + 2),
        )?;
        out.push(GroundTruthArticle {
            title,
            label,
            published_at,
        });
    }
    Ok(out)
}

pub fn write_ground_truth_csv(articles: &[GroundTruthArticle]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, &["title", "label", "published_at"])?;
    for a in articles {
        write_row(
            &mut w,
            &[
                &a.title,
                label_str(a.label),
                &io::format_rfc3339(a.published_at),
            ],
        )?;
    }
    finish_csv(w)
}

// ---------------------------------------------------------------------------
// Per-post truth labels (JSONL).
// ---------------------------------------------------------------------------

/// One post's ground-truth label plus where it came from ("planted" for
/// generated corpora, "matched" for claim matching).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRecord {
    pub post_id: String,
    pub label: Label,
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub article_index: Option<usize>,
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    io::read_jsonl(path)
}

pub fn write_truth(records: &[TruthRecord]) -> Result<Vec<u8>> {
    io::to_jsonl(records)
}

// ---------------------------------------------------------------------------
// Retrieval-stage labels (JSONL).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryRecord {
    pub article_id: String,
    pub score: f64,
}

/// Retrieval verdict for one post. Abstentions (no qualifying evidence or
/// untokenizable text) carry `abstain: true`, a neutral `y_hat` of 0.5,
/// a null label, and no entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialLabelRecord {
    pub post_id: String,
    pub y_hat: f64,
    pub label: Option<Label>,
    pub abstain: bool,
    pub entries: Vec<EntryRecord>,
}

pub fn read_initial_labels(path: &Path) -> Result<Vec<InitialLabelRecord>> {
    io::read_jsonl(path)
}

pub fn write_initial_labels(records: &[InitialLabelRecord]) -> Result<Vec<u8>> {
    io::to_jsonl(records)
}

// ---------------------------------------------------------------------------
// Refined labels (JSONL).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinedLabelRecord {
    pub post_id: String,
    pub label: Label,
    pub p_real: f64,
}

pub fn read_refined_labels(path: &Path) -> Result<Vec<RefinedLabelRecord>> {
    io::read_jsonl(path)
}

pub fn write_refined_labels(records: &[RefinedLabelRecord]) -> Result<Vec<u8>> {
    io::to_jsonl(records)
}

// ---------------------------------------------------------------------------
// Article index (JSON, embeddings at 17 significant digits).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct IndexFile<'a> {
    pub format_version: u32,
    pub embedder: &'a EmbedderConfig,
    pub articles: Vec<ArticleRecord>,
    /// source -> raw score on the 0..=64 scale.
    pub credibility: BTreeMap<String, f64>,
    /// One unit vector per article, article order.
    #[serde(serialize_with = "io::ser_mat_f64_17")]
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct IndexFileOwned {
    pub format_version: u32,
    pub embedder: EmbedderConfig,
    pub articles: Vec<ArticleRecord>,
    pub credibility: BTreeMap<String, f64>,
    pub embeddings: Vec<Vec<f64>>,
}

pub fn read_index(path: &Path) -> Result<IndexFileOwned> {
    let text = io::read_input_string(path)?;
    let file: IndexFileOwned = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    check_format_version(file.format_version, path)?;
    Ok(file)
}

// ---------------------------------------------------------------------------
// Graph artifacts.
// ---------------------------------------------------------------------------

/// Node manifest: the post id per node index.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphNodesFile {
    pub format_version: u32,
    pub post_ids: Vec<String>,
}

/// One undirected edge (`a < b`), weight at 17 significant digits.
#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
    #[serde(serialize_with = "io::ser_f64_17")]
    pub weight: f64,
}

pub fn read_graph_nodes(path: &Path) -> Result<GraphNodesFile> {
    let text = io::read_input_string(path)?;
    let file: GraphNodesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    check_format_version(file.format_version, path)?;
    Ok(file)
}

pub fn read_graph_edges(path: &Path) -> Result<Vec<EdgeRecord>> {
    io::read_jsonl(path)
}

// ---------------------------------------------------------------------------
// Model file (JSON, parameters at 17 significant digits).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerParamsFile {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `in_dim x out_dim`.
    #[serde(serialize_with = "io::ser_vec_f64_17")]
    pub weights: Vec<f64>,
    /// Length `2 * out_dim + 1`; the final slot reads the edge weight.
    #[serde(serialize_with = "io::ser_vec_f64_17")]
    pub attention: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// Training seed (also the corruption stream seed).
    pub seed: u64,
    /// Full training configuration the model was fitted under.
    pub train: TrainConfig,
    /// Embedder the node features were built with; refinement must reuse it.
    pub embedder: EmbedderConfig,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub use_edge_weights: bool,
    pub leaky_slope: f64,
    pub hidden: LayerParamsFile,
    pub output: LayerParamsFile,
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = io::read_input_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    check_format_version(file.format_version, path)?;
    Ok(file)
}

// ---------------------------------------------------------------------------
// Embedding import (JSONL: {"id": ..., "vector": [...]}).
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct EmbeddingImportRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

pub fn read_embedding_import(path: &Path) -> Result<Vec<EmbeddingImportRecord>> {
    io::read_jsonl(path)
}

// ---------------------------------------------------------------------------
// Metrics (JSON) and evaluation CSVs.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct MetricSetFile {
    pub accuracy: f64,
    pub f1: f64,
    /// True when no positive predictions or truths existed, making F1 0 by
    /// convention.
    pub f1_degenerate: bool,
    pub positive_class: Label,
    /// Null when truth was single-class (ROC undefined); see `roc_note`.
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc_note: Option<String>,
    pub calibration_bins: usize,
}

#[derive(Debug, Serialize)]
pub struct MetricsFile {
    pub format_version: u32,
    /// Posts scored (the initial/refined join).
    pub n_scored: usize,
    /// Posts with known truth among the scored ones.
    pub n_with_truth: usize,
    /// Posts the retrieval stage abstained on (scored as Real at 0.5).
    pub n_abstained: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<MetricSetFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<MetricSetFile>,
}

/// Per-post score table joined across stages; `truth` is empty when
/// unknown.
pub struct ScoreRow {
    pub post_id: String,
    pub truth: Option<Label>,
    pub initial_label: Option<Label>,
    pub initial_y_hat: f64,
    pub abstained: bool,
    pub refined_label: Label,
    pub refined_p_real: f64,
}

pub fn write_scores_csv(rows: &[ScoreRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(
        &mut w,
        &[
            "post_id",
            "truth",
            "initial_label",
            "initial_y_hat",
            "abstained",
            "refined_label",
            "refined_p_real",
        ],
    )?;
    for r in rows {
        write_row(
            &mut w,
            &[
                &r.post_id,
                r.truth.map(label_str).unwrap_or(""),
                r.initial_label.map(label_str).unwrap_or(""),
                &format!("{}", r.initial_y_hat),
                if r.abstained { "true" } else { "false" },
                label_str(r.refined_label),
                &format!("{}", r.refined_p_real),
            ],
        )?;
    }
    finish_csv(w)
}

pub fn write_roc_csv(points: &[RocPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, &["false_positive_rate", "true_positive_rate"])?;
    for p in points {
        write_row(&mut w, &[&format!("{}", p.fpr), &format!("{}", p.tpr)])?;
    }
    finish_csv(w)
}

/// Parses an ROC CSV back into (fpr, tpr) rows (used by `plot`).
pub fn read_roc_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_float_csv(path, 2).map(|rows| rows.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn write_calibration_csv(bins: &[CalibrationBin]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, &["low", "high", "mean_score", "observed", "count"])?;
    for b in bins {
        write_row(
            &mut w,
            &[
                &format!("{}", b.low),
                &format!("{}", b.high),
                &format!("{}", b.mean_score),
                &format!("{}", b.observed),
                &format!("{}", b.count),
            ],
        )?;
    }
    finish_csv(w)
}

/// One calibration CSV row: (low, high, mean_score, observed, count).
pub type CalibrationRow = (f64, f64, f64, f64, f64);

pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationRow>> {
    read_float_csv(path, 5).map(|rows| {
        rows.into_iter()
            .map(|r| (r[0], r[1], r[2], r[3], r[4]))
            .collect()
    })
}

pub fn write_loss_trace_csv(losses: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, &["epoch", "loss"])?;
    for (epoch, loss) in losses.iter().enumerate() {
        write_row(&mut w, &[&format!("{epoch}"), &format!("{loss}")])?;
    }
    finish_csv(w)
}

pub fn read_loss_trace_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_float_csv(path, 2).map(|rows| rows.into_iter().map(|r| (r[0], r[1])).collect())
}

// ---------------------------------------------------------------------------
// Shared helpers.
// ---------------------------------------------------------------------------

pub fn label_str(label: Label) -> &'static str {
    match label {
        Label::Fake => "fake",
        Label::Real => "real",
    }
}

fn check_format_version(version: u32, path: &Path) -> Result<()> {
    if version != crate::config::FORMAT_VERSION {
        return Err(CliError::usage(format!(
            "{}: format version {} unsupported (this build reads version {})",
            path.display(),
            version,
            crate::config::FORMAT_VERSION
        )));
    }
    Ok(())
}

fn write_row(w: &mut csv::Writer<Vec<u8>>, fields: &[&str]) -> Result<()> {
    w.write_record(fields)
        .map_err(|e| CliError::Internal(anyhow::anyhow!("writing CSV row: {e}")))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| CliError::Internal(anyhow::anyhow!("flushing CSV: {e}")))
}

/// Reads a headered CSV of exactly `width` float columns.
fn read_float_csv(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let bytes = io::read_input(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), idx + 2)))?;
        if row.len() != width {
            return Err(CliError::usage(format!(
                "{} row {}: expected {width} columns, found {}",
                path.display(),
                idx + 2,
                row.len()
            )));
        }
        let mut parsed = Vec::with_capacity(width);
        for field in row.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::usage(format!(
                    "{} row {}: `{field}` is not a number",
                    path.display(),
                    idx + 2
                ))
            })?;
            parsed.push(v);
        }
        out.push(parsed);
    }
    Ok(out)
}

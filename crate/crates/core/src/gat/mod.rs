//! Two-layer graph attention network that refines per-post labels.
//!
//! Node features are the post's text embedding plus two scalar slots: the
//! retrieval credibility score (0.5 when the post abstained) and the
//! current label encoded as -1/+1 (0 when unknown). Each layer linearly
//! transforms node features, scores every neighbor with a shared attention
//! vector whose final slot consumes the edge weight, normalizes the scores
//! with a softmax (self-loops of weight +1 keep isolated nodes defined),
//! and aggregates neighbor features by the resulting coefficients. The
//! hidden layer applies an ELU; the output layer produces two logits that
//! become log-probabilities over Fake/Real.
//!
//! Training ([`train`]) minimizes negative log-likelihood against ground
//! truth with Adam, re-corrupting the label feature slot every epoch so
//! the network learns to overrule noisy labels. Gradients come from the
//! hand-written reverse pass in this module's `backward` submodule and are
//! validated by [`gradient_check`].

use alloc::vec;
use alloc::vec::Vec;

use crate::embed::Embedding;
use crate::graph::PostGraph;
use crate::label::Label;
use crate::math;

mod backward;
mod train;

pub use train::{corrupt_labels, gradient_check, train, TrainConfig, TrainOutcome};

/// Number of output classes (Fake, Real).
pub const NUM_CLASSES: usize = 2;
/// Default negative-side slope of the attention LeakyReLU.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;
/// Extra feature columns appended to the text embedding: credibility score
/// and signed label.
pub const EXTRA_FEATURE_COLUMNS: usize = 2;
/// Score slot value for posts with no retrieval evidence.
pub const ABSTAINED_SCORE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatError {
    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: &'static str },
    #[error("invalid configuration: {reason}")]
    ConfigError { reason: &'static str },
    #[error("non-finite value produced at node {node}")]
    NumericalError { node: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("operation requires a non-empty graph")]
    EmptyGraph,
}

/// Dense row-major matrix of node values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, cols: usize) -> FeatureMatrix {
        FeatureMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Result<FeatureMatrix, GatError> {
        if data.len() != rows * cols {
            return Err(GatError::ShapeMismatch {
                what: "data length must equal rows * cols",
            });
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    /// Assembles node features for the network: one row per post holding
    /// `[embedding .. , credibility score, signed label]`.
    ///
    /// `None` entries fall back to the uninformed values: a zero embedding
    /// block, score [`ABSTAINED_SCORE`], label slot 0.
    pub fn node_features(
        dimension: usize,
        embeddings: &[Option<Embedding>],
        scores: &[Option<f64>],
        labels: &[Option<Label>],
    ) -> Result<FeatureMatrix, GatError> {
        let n = embeddings.len();
        if scores.len() != n || labels.len() != n {
            return Err(GatError::ShapeMismatch {
                what: "embeddings, scores, labels must have equal length",
            });
        }
        let cols = dimension + EXTRA_FEATURE_COLUMNS;
        let mut m = FeatureMatrix::zeros(n, cols);
        for i in 0..n {
            if let Some(e) = &embeddings[i] {
                if e.len() != dimension {
                    return Err(GatError::ShapeMismatch {
                        what: "embedding dimension differs from declared dimension",
                    });
                }
                m.row_mut(i)[..dimension].copy_from_slice(e.values());
            }
            let score = scores[i].unwrap_or(ABSTAINED_SCORE);
            if !(0.0..=1.0).contains(&score) {
                return Err(GatError::ConfigError {
                    reason: "credibility score outside [0, 1]",
                });
            }
            m.set(i, dimension, score);
            m.set(i, dimension + 1, labels[i].map_or(0.0, Label::signed));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Index of the signed-label column (always the last one).
    pub fn label_column(&self) -> usize {
        self.cols - 1
    }

    /// Overwrites every row's label slot with the signed encoding of
    /// `labels` (`None` means unknown, written as 0).
    pub fn write_labels(&mut self, labels: &[Option<Label>]) -> Result<(), GatError> {
        if labels.len() != self.rows {
            return Err(GatError::ShapeMismatch {
                what: "one label per row required",
            });
        }
        let col = self.label_column();
        for (i, l) in labels.iter().enumerate() {
            self.set(i, col, l.map_or(0.0, Label::signed));
        }
        Ok(())
    }
}

/// Activation applied after a layer's neighborhood aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Elu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    math::exp(x) - 1.0
                }
            }
        }
    }

    /// Derivative at the pre-activation value.
    pub(crate) fn grad(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    math::exp(x)
                }
            }
        }
    }
}

/// One attention layer: a linear transform plus an attention vector of
/// length `2 * out_dim + 1` whose halves score the source and destination
/// transforms and whose final slot consumes the edge weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `in_dim x out_dim`.
    weights: Vec<f64>,
    attention: Vec<f64>,
    leaky_slope: f64,
}

impl GatLayer {
    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        attention: Vec<f64>,
        leaky_slope: f64,
    ) -> Result<GatLayer, GatError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(GatError::ShapeMismatch {
                what: "layer dimensions must be positive",
            });
        }
        if weights.len() != in_dim * out_dim {
            return Err(GatError::ShapeMismatch {
                what: "weight length must equal in_dim * out_dim",
            });
        }
        if attention.len() != 2 * out_dim + 1 {
            return Err(GatError::ShapeMismatch {
                what: "attention length must equal 2 * out_dim + 1",
            });
        }
        Ok(GatLayer {
            in_dim,
            out_dim,
            weights,
            attention,
            leaky_slope,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    /// Transforms one input row: `g = h W`.
    fn transform_row(&self, h: &[f64], out: &mut [f64]) {
        debug_assert_eq!(h.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for (k, &hv) in h.iter().enumerate() {
            if hv == 0.0 {
                continue;
            }
            let wrow = &self.weights[k * self.out_dim..(k + 1) * self.out_dim];
            for (o, &w) in out.iter_mut().zip(wrow) {
                *o += hv * w;
            }
        }
    }

    fn attention_source(&self) -> &[f64] {
        &self.attention[..self.out_dim]
    }

    fn attention_destination(&self) -> &[f64] {
        &self.attention[self.out_dim..2 * self.out_dim]
    }

    fn attention_edge(&self) -> f64 {
        self.attention[2 * self.out_dim]
    }

    /// Softmax-normalized attention of node `h_i` over `neighbors`
    /// (transform-input rows paired with edge weights). The coefficients
    /// sum to 1 and follow neighbor order.
    ///
    /// With `use_edge_weights` off, the edge-weight attention slot reads 0
    /// for every neighbor.
    pub fn attention_coefficients(
        &self,
        h_i: &[f64],
        neighbors: &[(&[f64], f64)],
        use_edge_weights: bool,
    ) -> Result<Vec<f64>, GatError> {
        if neighbors.is_empty() {
            return Err(GatError::EmptyGraph);
        }
        if h_i.len() != self.in_dim || neighbors.iter().any(|(h, _)| h.len() != self.in_dim) {
            return Err(GatError::ShapeMismatch {
                what: "attention inputs must match layer in_dim",
            });
        }
        let mut g_i = vec![0.0; self.out_dim];
        self.transform_row(h_i, &mut g_i);
        let u_i = crate::embed::dot_slices(self.attention_source(), &g_i);
        let mut g_j = vec![0.0; self.out_dim];
        let mut scores = Vec::with_capacity(neighbors.len());
        for (h_j, w) in neighbors {
            self.transform_row(h_j, &mut g_j);
            let v_j = crate::embed::dot_slices(self.attention_destination(), &g_j);
            let w_slot = if use_edge_weights { *w } else { 0.0 };
            let s = u_i + v_j + self.attention_edge() * w_slot;
            scores.push(leaky_relu(s, self.leaky_slope));
        }
        Ok(softmax(&scores))
    }
}

pub(crate) fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub(crate) fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Numerically stable softmax (max-subtracted).
pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    for &s in scores {
        if s > max {
            max = s;
        }
    }
    let mut out: Vec<f64> = scores.iter().map(|&s| math::exp(s - max)).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Per-layer intermediates kept for the reverse pass.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// `G = X W`, one transformed row per node.
    pub(crate) transformed: FeatureMatrix,
    /// Pre-LeakyReLU attention scores, per node per neighbor.
    pub(crate) scores: Vec<Vec<f64>>,
    /// Softmax attention coefficients, per node per neighbor.
    pub(crate) alpha: Vec<Vec<f64>>,
    /// Pre-activation aggregation `o_i = sum_j alpha_ij g_j`.
    pub(crate) aggregated: FeatureMatrix,
}

pub(crate) type Adjacency = Vec<Vec<(usize, f64)>>;

/// Runs one attention layer over the adjacency structure, returning the
/// activated output and the cache needed by the reverse pass.
pub(crate) fn layer_forward_cached(
    layer: &GatLayer,
    adjacency: &Adjacency,
    input: &FeatureMatrix,
    activation: Activation,
    use_edge_weights: bool,
) -> Result<(FeatureMatrix, LayerCache), GatError> {
    let n = adjacency.len();
    if input.rows() != n {
        return Err(GatError::ShapeMismatch {
            what: "one input row per node required",
        });
    }
    if input.cols() != layer.in_dim {
        return Err(GatError::ShapeMismatch {
            what: "input columns must match layer in_dim",
        });
    }
    let mut transformed = FeatureMatrix::zeros(n, layer.out_dim);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let mut g = vec![0.0; layer.out_dim];
        layer.transform_row(input.row(i), &mut g);
        u[i] = crate::embed::dot_slices(layer.attention_source(), &g);
        v[i] = crate::embed::dot_slices(layer.attention_destination(), &g);
        transformed.row_mut(i).copy_from_slice(&g);
    }
    let a_edge = layer.attention_edge();
    let mut scores = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut aggregated = FeatureMatrix::zeros(n, layer.out_dim);
    let mut output = FeatureMatrix::zeros(n, layer.out_dim);
    for i in 0..n {
        let neighbors = &adjacency[i];
        let mut s_row = Vec::with_capacity(neighbors.len());
        for &(j, w) in neighbors {
            let w_slot = if use_edge_weights { w } else { 0.0 };
            s_row.push(u[i] + v[j] + a_edge * w_slot);
        }
        let e_row: Vec<f64> = s_row
            .iter()
            .map(|&s| leaky_relu(s, layer.leaky_slope))
            .collect();
        let a_row = softmax(&e_row);
        let agg = aggregated.row_mut(i);
        for (t, &(j, _)) in neighbors.iter().enumerate() {
            let coeff = a_row[t];
            for (o, &g) in agg.iter_mut().zip(transformed.row(j)) {
                *o += coeff * g;
            }
        }
        for (out, &pre) in output.row_mut(i).iter_mut().zip(aggregated.row(i)) {
            let value = activation.apply(pre);
            if !value.is_finite() {
                return Err(GatError::NumericalError { node: i });
            }
            *out = value;
        }
        scores.push(s_row);
        alpha.push(a_row);
    }
    Ok((
        output,
        LayerCache {
            transformed,
            scores,
            alpha,
            aggregated,
        },
    ))
}

/// Convenience single-layer forward over a post graph (self-loops added).
pub fn layer_forward(
    layer: &GatLayer,
    graph: &PostGraph,
    input: &FeatureMatrix,
    activation: Activation,
    use_edge_weights: bool,
) -> Result<FeatureMatrix, GatError> {
    let adjacency = graph.adjacency_with_self_loops();
    layer_forward_cached(layer, &adjacency, input, activation, use_edge_weights).map(|(out, _)| out)
}

/// Full forward pass outputs plus cached intermediates for backprop.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Log-probabilities per node, columns ordered [Fake, Real].
    pub log_probs: FeatureMatrix,
    pub(crate) hidden_cache: LayerCache,
    pub(crate) hidden_output: FeatureMatrix,
    pub(crate) output_cache: LayerCache,
}

/// Refined verdict for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinedLabel {
    pub label: Label,
    /// Probability mass on Real; `1 - p_real` is on Fake.
    pub p_real: f64,
}

/// Two-layer attention network over a post graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GatModel {
    hidden: GatLayer,
    output: GatLayer,
    use_edge_weights: bool,
}

impl GatModel {
    /// Seeded initialization: every tensor draws uniform `(-s, s)` with
    /// `s = sqrt(6 / (fan_in + fan_out))`, in a fixed order, from a ChaCha8
    /// stream. Equal seeds and shapes give bit-identical models.
    pub fn init(
        feature_dim: usize,
        hidden_dim: usize,
        seed: u64,
        leaky_slope: f64,
        use_edge_weights: bool,
    ) -> Result<GatModel, GatError> {
        use rand::{Rng, SeedableRng};
        if feature_dim == 0 || hidden_dim == 0 {
            return Err(GatError::ShapeMismatch {
                what: "model dimensions must be positive",
            });
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize, fan_in: usize, fan_out: usize| -> Vec<f64> {
            let s = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            (0..len)
                .map(|_| rng.random::<f64>() * 2.0 * s - s)
                .collect()
        };
        let w1 = draw(feature_dim * hidden_dim, feature_dim, hidden_dim);
        let a1 = draw(2 * hidden_dim + 1, 2 * hidden_dim + 1, 1);
        let w2 = draw(hidden_dim * NUM_CLASSES, hidden_dim, NUM_CLASSES);
        let a2 = draw(2 * NUM_CLASSES + 1, 2 * NUM_CLASSES + 1, 1);
        let hidden = GatLayer::from_parts(feature_dim, hidden_dim, w1, a1, leaky_slope)?;
        let output = GatLayer::from_parts(hidden_dim, NUM_CLASSES, w2, a2, leaky_slope)?;
        GatModel::from_parts(hidden, output, use_edge_weights)
    }

    pub fn from_parts(
        hidden: GatLayer,
        output: GatLayer,
        use_edge_weights: bool,
    ) -> Result<GatModel, GatError> {
        if hidden.out_dim != output.in_dim {
            return Err(GatError::ShapeMismatch {
                what: "hidden out_dim must match output in_dim",
            });
        }
        if output.out_dim != NUM_CLASSES {
            return Err(GatError::ShapeMismatch {
                what: "output layer must have one unit per class",
            });
        }
        Ok(GatModel {
            hidden,
            output,
            use_edge_weights,
        })
    }

    pub fn hidden(&self) -> &GatLayer {
        &self.hidden
    }

    pub fn output(&self) -> &GatLayer {
        &self.output
    }

    pub fn use_edge_weights(&self) -> bool {
        self.use_edge_weights
    }

    pub fn feature_dim(&self) -> usize {
        self.hidden.in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.out_dim
    }

    /// Full forward pass: hidden layer with ELU, output layer, then a
    /// per-node log-softmax over the two class logits.
    pub fn forward(
        &self,
        graph: &PostGraph,
        features: &FeatureMatrix,
    ) -> Result<ForwardPass, GatError> {
        if features.rows() != graph.node_count() {
            return Err(GatError::ShapeMismatch {
                what: "one feature row per graph node required",
            });
        }
        let adjacency = graph.adjacency_with_self_loops();
        self.forward_on(&adjacency, features)
    }

    pub(crate) fn forward_on(
        &self,
        adjacency: &Adjacency,
        features: &FeatureMatrix,
    ) -> Result<ForwardPass, GatError> {
        let (hidden_output, hidden_cache) = layer_forward_cached(
            &self.hidden,
            adjacency,
            features,
            Activation::Elu,
            self.use_edge_weights,
        )?;
        let (logits, output_cache) = layer_forward_cached(
            &self.output,
            adjacency,
            &hidden_output,
            Activation::Identity,
            self.use_edge_weights,
        )?;
        let n = logits.rows();
        let mut log_probs = FeatureMatrix::zeros(n, NUM_CLASSES);
        for i in 0..n {
            let (lp0, lp1) = log_softmax2(logits.get(i, 0), logits.get(i, 1));
            if !lp0.is_finite() || !lp1.is_finite() {
                return Err(GatError::NumericalError { node: i });
            }
            log_probs.set(i, 0, lp0);
            log_probs.set(i, 1, lp1);
        }
        Ok(ForwardPass {
            log_probs,
            hidden_cache,
            hidden_output,
            output_cache,
        })
    }

    /// Inference: forward pass, then per node the probability mass on Real
    /// and the argmax label (ties at 0.5 go to Real, mirroring the
    /// inclusive retrieval threshold).
    pub fn refine(
        &self,
        graph: &PostGraph,
        features: &FeatureMatrix,
    ) -> Result<Vec<RefinedLabel>, GatError> {
        let fw = self.forward(graph, features)?;
        let mut out = Vec::with_capacity(fw.log_probs.rows());
        for i in 0..fw.log_probs.rows() {
            let p_real = math::exp(fw.log_probs.get(i, 1));
            let label = if p_real >= 0.5 {
                Label::Real
            } else {
                Label::Fake
            };
            out.push(RefinedLabel { label, p_real });
        }
        Ok(out)
    }

    pub(crate) fn params(&self) -> [&[f64]; 4] {
        [
            &self.hidden.weights,
            &self.hidden.attention,
            &self.output.weights,
            &self.output.attention,
        ]
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.hidden.weights,
            &mut self.hidden.attention,
            &mut self.output.weights,
            &mut self.output.attention,
        ]
    }
}

/// Stable two-class log-softmax.
pub(crate) fn log_softmax2(z0: f64, z1: f64) -> (f64, f64) {
    let m = if z0 > z1 { z0 } else { z1 };
    let lse = m + math::ln(math::exp(z0 - m) + math::exp(z1 - m));
    (z0 - lse, z1 - lse)
}

/// Mean negative log-likelihood of `truth` under per-node log-probabilities.
pub fn nll_loss(log_probs: &FeatureMatrix, truth: &[Label]) -> Result<f64, GatError> {
    if log_probs.rows() != truth.len() {
        return Err(GatError::ShapeMismatch {
            what: "one truth label per node required",
        });
    }
    if truth.is_empty() {
        return Err(GatError::EmptyGraph);
    }
    let mut sum = 0.0;
    for (i, t) in truth.iter().enumerate() {
        sum -= log_probs.get(i, t.class_index());
    }
    Ok(sum / truth.len() as f64)
}

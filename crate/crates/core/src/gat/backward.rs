//! Reverse-mode gradients for the two-layer attention network.
//!
//! The chain runs: mean NLL -> log-softmax -> output layer -> ELU ->
//! hidden layer. Per layer, the upstream gradient with respect to the
//! aggregated pre-activation `o_i = sum_j alpha_ij g_j` splits three ways:
//! through the coefficients `alpha` (softmax, then LeakyReLU, then the
//! attention vector and both endpoint transforms), through the aggregated
//! neighbor transforms `g_j`, and from `g` back into the layer weights and
//! the layer input. Every loop runs in a fixed order so accumulation is
//! deterministic.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    leaky_relu_grad, Activation, Adjacency, FeatureMatrix, ForwardPass, GatLayer, GatModel,
    LayerCache, NUM_CLASSES,
};
use crate::label::Label;
use crate::math;

/// Parameter gradients, shaped like the model tensors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Gradients {
    pub(crate) hidden_weights: Vec<f64>,
    pub(crate) hidden_attention: Vec<f64>,
    pub(crate) output_weights: Vec<f64>,
    pub(crate) output_attention: Vec<f64>,
}

impl Gradients {
    pub(crate) fn tensors(&self) -> [&[f64]; 4] {
        [
            &self.hidden_weights,
            &self.hidden_attention,
            &self.output_weights,
            &self.output_attention,
        ]
    }
}

/// Gradient of the mean NLL with respect to both model tensors, given the
/// cached forward pass over the same adjacency and features.
pub(crate) fn backward(
    model: &GatModel,
    adjacency: &Adjacency,
    features: &FeatureMatrix,
    forward: &ForwardPass,
    truth: &[Label],
) -> Gradients {
    let n = adjacency.len();
    debug_assert_eq!(features.rows(), n);
    debug_assert_eq!(truth.len(), n);

    // d(mean NLL)/d(logits): softmax minus the one-hot target, over n.
    let mut d_logits = FeatureMatrix::zeros(n, NUM_CLASSES);
    for (i, t) in truth.iter().enumerate() {
        for c in 0..NUM_CLASSES {
            let p = math::exp(forward.log_probs.get(i, c));
            let indicator = if t.class_index() == c { 1.0 } else { 0.0 };
            d_logits.set(i, c, (p - indicator) / n as f64);
        }
    }

    // Output layer: Identity activation, so d(aggregated) = d(logits).
    let (output_weights, output_attention, d_hidden_out) = layer_backward(
        &model.output,
        adjacency,
        &forward.hidden_output,
        &forward.output_cache,
        &d_logits,
        model.use_edge_weights,
        true,
    );
    let d_hidden_out = d_hidden_out.expect("input gradient requested");

    // Hidden layer: push through the ELU at the cached pre-activation.
    let mut d_hidden_agg = FeatureMatrix::zeros(n, model.hidden.out_dim());
    for i in 0..n {
        for c in 0..model.hidden.out_dim() {
            let pre = forward.hidden_cache.aggregated.get(i, c);
            d_hidden_agg.set(i, c, d_hidden_out.get(i, c) * Activation::Elu.grad(pre));
        }
    }
    let (hidden_weights, hidden_attention, _) = layer_backward(
        &model.hidden,
        adjacency,
        features,
        &forward.hidden_cache,
        &d_hidden_agg,
        model.use_edge_weights,
        false,
    );

    Gradients {
        hidden_weights,
        hidden_attention,
        output_weights,
        output_attention,
    }
}

/// One layer's reverse pass. `d_aggregated` is the upstream gradient with
/// respect to the pre-activation aggregation per node. Returns gradients
/// for the weight matrix and attention vector, plus (optionally) the
/// gradient with respect to the layer input.
fn layer_backward(
    layer: &GatLayer,
    adjacency: &Adjacency,
    input: &FeatureMatrix,
    cache: &LayerCache,
    d_aggregated: &FeatureMatrix,
    use_edge_weights: bool,
    want_d_input: bool,
) -> (Vec<f64>, Vec<f64>, Option<FeatureMatrix>) {
    let n = adjacency.len();
    let out_dim = layer.out_dim();
    let in_dim = layer.in_dim();
    let a_src = layer.attention_source();
    let a_dst = layer.attention_destination();

    // d(transformed rows) accumulates from three paths below.
    let mut d_g = FeatureMatrix::zeros(n, out_dim);
    // Per-node score sums entering the per-edge attention inputs:
    // u_i from the source half, v_j from the destination half.
    let mut d_u = vec![0.0; n];
    let mut d_v = vec![0.0; n];
    let mut d_a_edge = 0.0;

    let mut d_alpha: Vec<f64> = Vec::new();
    for i in 0..n {
        let neighbors = &adjacency[i];
        let alpha = &cache.alpha[i];
        let scores = &cache.scores[i];
        let d_out_i = d_aggregated.row(i);

        // Aggregation: o_i = sum_t alpha_t g_{j_t}.
        d_alpha.clear();
        for (t, &(j, _)) in neighbors.iter().enumerate() {
            d_alpha.push(crate::embed::dot_slices(d_out_i, cache.transformed.row(j)));
            let coeff = alpha[t];
            let row = d_g.row_mut(j);
            for (dgv, &dov) in row.iter_mut().zip(d_out_i) {
                *dgv += coeff * dov;
            }
        }

        // Softmax backward: de_t = alpha_t * (dalpha_t - sum_k alpha_k dalpha_k).
        let mut dot_sum = 0.0;
        for (a, da) in alpha.iter().zip(&d_alpha) {
            dot_sum += a * da;
        }
        for (t, &(j, w)) in neighbors.iter().enumerate() {
            let d_e = alpha[t] * (d_alpha[t] - dot_sum);
            let d_s = d_e * leaky_relu_grad(scores[t], layer.leaky_slope());
            d_u[i] += d_s;
            d_v[j] += d_s;
            if use_edge_weights {
                d_a_edge += d_s * w;
            }
        }
    }

    // u_i = a_src . g_i and v_j = a_dst . g_j close the attention paths.
    let mut d_attention = vec![0.0; 2 * out_dim + 1];
    for i in 0..n {
        let g_i = cache.transformed.row(i);
        let row = d_g.row_mut(i);
        for c in 0..out_dim {
            d_attention[c] += d_u[i] * g_i[c];
            d_attention[out_dim + c] += d_v[i] * g_i[c];
            row[c] += d_u[i] * a_src[c] + d_v[i] * a_dst[c];
        }
    }
    d_attention[2 * out_dim] = d_a_edge;

    // G = X W: dW = X^T dG, dX = dG W^T.
    let mut d_weights = vec![0.0; in_dim * out_dim];
    for r in 0..n {
        let x_row = input.row(r);
        let dg_row = d_g.row(r);
        for k in 0..in_dim {
            let xv = x_row[k];
            if xv == 0.0 {
                continue;
            }
            let w_row = &mut d_weights[k * out_dim..(k + 1) * out_dim];
            for (dw, &dg) in w_row.iter_mut().zip(dg_row) {
                *dw += xv * dg;
            }
        }
    }
    let d_input = want_d_input.then(|| {
        let mut d_x = FeatureMatrix::zeros(n, in_dim);
        for r in 0..n {
            let dg_row = d_g.row(r);
            let dx_row = d_x.row_mut(r);
            for (k, slot) in dx_row.iter_mut().enumerate() {
                let w_row = &layer.weights()[k * out_dim..(k + 1) * out_dim];
                *slot = crate::embed::dot_slices(dg_row, w_row);
            }
        }
        d_x
    });

    (d_weights, d_attention, d_input)
}

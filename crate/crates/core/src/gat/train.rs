//! Training loop (Adam + per-epoch label corruption), label corruption
//! itself, and the finite-difference gradient check.

use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backward::backward;
use super::{nll_loss, FeatureMatrix, GatError, GatModel};
use crate::graph::PostGraph;
use crate::label::Label;
use crate::math;

/// Default fraction of ground-truth labels flipped each epoch.
pub const DEFAULT_CORRUPTION_RATIO: f64 = 0.15;
/// Default number of training epochs.
pub const DEFAULT_EPOCHS: usize = 200;
/// Default Adam learning rate.
pub const DEFAULT_LEARNING_RATE: f64 = 0.005;
/// Default hidden layer width.
pub const DEFAULT_HIDDEN_DIM: usize = 16;

/// Decorrelates the per-epoch corruption seed stream from the
/// parameter-init stream that shares the user-facing seed.
const CORRUPTION_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Training hyperparameters. Equal configs (and inputs) reproduce the
/// trained model bit for bit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Fraction of ground-truth labels flipped in the label feature slot
    /// each epoch, in `[0, 1]`.
    pub corruption_ratio: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub hidden_dim: usize,
    pub leaky_slope: f64,
    /// With this off, the attention slot that reads edge weights is forced
    /// to zero (structure-only ablation).
    pub use_edge_weights: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            corruption_ratio: DEFAULT_CORRUPTION_RATIO,
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LEARNING_RATE,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            leaky_slope: super::DEFAULT_LEAKY_SLOPE,
            use_edge_weights: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GatError> {
        if !(0.0..=1.0).contains(&self.corruption_ratio) {
            return Err(GatError::ConfigError {
                reason: "corruption_ratio outside [0, 1]",
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GatError::ConfigError {
                reason: "learning_rate must be positive and finite",
            });
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(GatError::ConfigError {
                reason: "adam betas must lie in [0, 1)",
            });
        }
        if self.adam_epsilon <= 0.0 {
            return Err(GatError::ConfigError {
                reason: "adam_epsilon must be positive",
            });
        }
        if self.hidden_dim == 0 {
            return Err(GatError::ConfigError {
                reason: "hidden_dim must be positive",
            });
        }
        Ok(())
    }
}

/// Flips exactly `floor(ratio * n)` distinct labels, chosen by a seeded
/// draw. Returns the corrupted labels and the flipped indices (ascending).
pub fn corrupt_labels(
    labels: &[Label],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<Label>, Vec<usize>), GatError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(GatError::ConfigError {
            reason: "corruption ratio outside [0, 1]",
        });
    }
    let n = labels.len();
    let flips = math::floor(ratio * n as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, n, flips).into_vec();
    indices.sort_unstable();
    let mut corrupted = labels.to_vec();
    for &i in &indices {
        corrupted[i] = corrupted[i].flipped();
    }
    Ok((corrupted, indices))
}

/// Adam state per parameter tensor, with a shared step counter.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: usize,
    first_moment: [Vec<f64>; 4],
    second_moment: [Vec<f64>; 4],
}

impl Adam {
    fn new(cfg: &TrainConfig, shapes: [usize; 4]) -> Adam {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            epsilon: cfg.adam_epsilon,
            step: 0,
            first_moment: shapes.map(|len| vec![0.0; len]),
            second_moment: shapes.map(|len| vec![0.0; len]),
        }
    }

    fn update(&mut self, params: [&mut Vec<f64>; 4], grads: [&[f64]; 4]) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - libm::pow(self.beta1, f64::from(t));
        let bias2 = 1.0 - libm::pow(self.beta2, f64::from(t));
        for (slot, (param, grad)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.first_moment[slot];
            let v = &mut self.second_moment[slot];
            for (k, p) in param.iter_mut().enumerate() {
                let g = grad[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                *p -= self.lr * m_hat / (math::sqrt(v_hat) + self.epsilon);
            }
        }
    }
}

/// Trained model plus the per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GatModel,
    pub loss_trace: Vec<f64>,
}

/// Trains a fresh seeded model on `graph` + `features` against `truth`.
///
/// Each epoch: corrupt `truth` at the configured ratio with a fresh seed,
/// write the corrupted labels into the label feature slot, run the forward
/// pass, score mean NLL against the uncorrupted truth, backpropagate, and
/// take one Adam step. The loss trace holds the per-epoch losses; training
/// with zero epochs returns the seeded initialization unchanged.
pub fn train(
    graph: &PostGraph,
    features: &FeatureMatrix,
    truth: &[Label],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, GatError> {
    cfg.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Err(GatError::EmptyGraph);
    }
    if features.rows() != n || truth.len() != n {
        return Err(GatError::ShapeMismatch {
            what: "features and truth must cover every graph node",
        });
    }
    let mut model = GatModel::init(
        features.cols(),
        cfg.hidden_dim,
        cfg.seed,
        cfg.leaky_slope,
        cfg.use_edge_weights,
    )?;
    let adjacency = graph.adjacency_with_self_loops();
    let mut work = features.clone();
    let mut epoch_seeds = ChaCha8Rng::seed_from_u64(cfg.seed ^ CORRUPTION_STREAM_SALT);
    let shapes = model.params().map(<[f64]>::len);
    let mut adam = Adam::new(cfg, shapes);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (corrupted, _) = corrupt_labels(truth, cfg.corruption_ratio, epoch_seeds.next_u64())?;
        let col = work.label_column();
        for (i, label) in corrupted.iter().enumerate() {
            work.set(i, col, label.signed());
        }
        let fw = model.forward_on(&adjacency, &work)?;
        let loss = nll_loss(&fw.log_probs, truth)?;
        if !loss.is_finite() {
            return Err(GatError::TrainingDiverged { epoch });
        }
        let grads = backward(&model, &adjacency, &work, &fw, truth);
        adam.update(model.params_mut(), grads.tensors());
        loss_trace.push(loss);
    }
    Ok(TrainOutcome { model, loss_trace })
}

/// Compares analytic gradients against central finite differences over
/// every parameter and returns the largest per-parameter error
/// `|ga - gn| / max(1, |ga|, |gn|)`.
///
/// The check runs at the model's current parameters with the features
/// exactly as given (no label corruption).
pub fn gradient_check(
    model: &GatModel,
    graph: &PostGraph,
    features: &FeatureMatrix,
    truth: &[Label],
    epsilon: f64,
) -> Result<f64, GatError> {
    if epsilon <= 0.0 {
        return Err(GatError::ConfigError {
            reason: "epsilon must be positive",
        });
    }
    if graph.node_count() == 0 {
        return Err(GatError::EmptyGraph);
    }
    let adjacency = graph.adjacency_with_self_loops();
    let fw = model.forward_on(&adjacency, features)?;
    let analytic = backward(model, &adjacency, features, &fw, truth);

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for slot in 0..4 {
        let len = probe.params()[slot].len();
        for k in 0..len {
            let original = probe.params()[slot][k];
            probe.params_mut()[slot][k] = original + epsilon;
            let plus = nll_loss(&probe.forward_on(&adjacency, features)?.log_probs, truth)?;
            probe.params_mut()[slot][k] = original - epsilon;
            let minus = nll_loss(&probe.forward_on(&adjacency, features)?.log_probs, truth)?;
            probe.params_mut()[slot][k] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let ga = analytic.tensors()[slot][k];
            let denom = max3(1.0, math::abs(ga), math::abs(numeric));
            let err = math::abs(ga - numeric) / denom;
            if err > worst {
                worst = err;
            }
        }
    }
    Ok(worst)
}

fn max3(a: f64, b: f64, c: f64) -> f64 {
    let m = if a > b { a } else { b };
    if m > c {
        m
    } else {
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gat::DEFAULT_LEAKY_SLOPE;
    use crate::graph::WeightedEdge;
    use alloc::format;
    use alloc::string::String;

    fn truth_pattern(n: usize) -> Vec<Label> {
        (0..n)
            .map(|i| if i % 2 == 0 { Label::Fake } else { Label::Real })
            .collect()
    }

    /// Small seeded graph with mixed-sign weights and an isolated node.
    fn fixture_graph(n: usize, seed: u64) -> (PostGraph, FeatureMatrix) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n.saturating_sub(1) {
                if rng.random::<f64>() < 0.35 {
                    edges.push(WeightedEdge {
                        a,
                        b,
                        weight: rng.random::<f64>() * 2.0 - 1.0,
                    });
                }
            }
        }
        let graph = PostGraph::from_parts(ids, edges).unwrap();
        let cols = 6;
        let mut features = FeatureMatrix::zeros(n, cols);
        for i in 0..n {
            for c in 0..cols {
                features.set(i, c, rng.random::<f64>() * 2.0 - 1.0);
            }
        }
        (graph, features)
    }

    #[test]
    fn corrupt_flips_exact_floor_counts() {
        let labels = truth_pattern(10);
        let (c, flipped) = corrupt_labels(&labels, 0.15, 1).unwrap();
        assert_eq!(flipped.len(), 1);
        assert_eq!(c.len(), 10);
        let labels = truth_pattern(100);
        let (_, flipped) = corrupt_labels(&labels, 0.15, 1).unwrap();
        assert_eq!(flipped.len(), 15);
    }

    #[test]
    fn corrupt_zero_ratio_is_identity() {
        let labels = truth_pattern(12);
        let (c, flipped) = corrupt_labels(&labels, 0.0, 9).unwrap();
        assert_eq!(c, labels);
        assert!(flipped.is_empty());
    }

    #[test]
    fn corrupt_full_ratio_flips_everything() {
        let labels = truth_pattern(8);
        let (c, flipped) = corrupt_labels(&labels, 1.0, 9).unwrap();
        assert_eq!(flipped.len(), 8);
        for (orig, new) in labels.iter().zip(&c) {
            assert_eq!(orig.flipped(), *new);
        }
    }

    #[test]
    fn corrupt_is_seed_reproducible_and_indices_distinct() {
        let labels = truth_pattern(50);
        let (c1, f1) = corrupt_labels(&labels, 0.3, 77).unwrap();
        let (c2, f2) = corrupt_labels(&labels, 0.3, 77).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(f1, f2);
        let (_, f3) = corrupt_labels(&labels, 0.3, 78).unwrap();
        assert_ne!(f1, f3);
        let mut sorted = f1.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), f1.len());
    }

    #[test]
    fn corrupt_rejects_bad_ratio() {
        let labels = truth_pattern(4);
        assert!(corrupt_labels(&labels, -0.1, 0).is_err());
        assert!(corrupt_labels(&labels, 1.1, 0).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (graph, features) = fixture_graph(10, 7);
        let truth = truth_pattern(10);
        let model = GatModel::init(6, 4, 7, DEFAULT_LEAKY_SLOPE, true).unwrap();
        let err = gradient_check(&model, &graph, &features, &truth, 1e-5).unwrap();
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradients_match_with_edge_slot_disabled() {
        let (graph, features) = fixture_graph(9, 21);
        let truth = truth_pattern(9);
        let model = GatModel::init(6, 4, 3, DEFAULT_LEAKY_SLOPE, false).unwrap();
        let err = gradient_check(&model, &graph, &features, &truth, 1e-5).unwrap();
        assert!(err <= 1e-4, "max relative error {err}");
    }

    /// With every parameter zero the loss is exactly flat in each single
    /// parameter, so analytic and numeric gradients agree to roundoff.
    #[test]
    fn gradient_check_at_zero_parameters_is_tight() {
        let (graph, features) = fixture_graph(8, 13);
        let truth = truth_pattern(8);
        let zeros = GatModel::from_parts(
            super::super::GatLayer::from_parts(6, 4, vec![0.0; 24], vec![0.0; 9], 0.2).unwrap(),
            super::super::GatLayer::from_parts(4, 2, vec![0.0; 8], vec![0.0; 5], 0.2).unwrap(),
            true,
        )
        .unwrap();
        let err = gradient_check(&zeros, &graph, &features, &truth, 1e-5).unwrap();
        assert!(err <= 1e-6, "max relative error {err}");
    }

    #[test]
    fn halving_epsilon_does_not_blow_up_the_check() {
        let (graph, features) = fixture_graph(8, 5);
        let truth = truth_pattern(8);
        let model = GatModel::init(6, 3, 2, DEFAULT_LEAKY_SLOPE, true).unwrap();
        let e1 = gradient_check(&model, &graph, &features, &truth, 1e-5).unwrap();
        let e2 = gradient_check(&model, &graph, &features, &truth, 5e-6).unwrap();
        assert!(e2 <= (e1 * 10.0).max(1e-9), "e1={e1} e2={e2}");
    }

    #[test]
    fn train_zero_epochs_returns_seeded_init() {
        let (graph, features) = fixture_graph(6, 3);
        let truth = truth_pattern(6);
        let cfg = TrainConfig {
            epochs: 0,
            hidden_dim: 4,
            seed: 99,
            ..TrainConfig::default()
        };
        let outcome = train(&graph, &features, &truth, &cfg).unwrap();
        let init = GatModel::init(6, 4, 99, cfg.leaky_slope, true).unwrap();
        assert_eq!(outcome.model, init);
        assert!(outcome.loss_trace.is_empty());
    }

    #[test]
    fn train_is_deterministic() {
        let (graph, features) = fixture_graph(8, 17);
        let truth = truth_pattern(8);
        let cfg = TrainConfig {
            epochs: 5,
            hidden_dim: 4,
            seed: 4,
            ..TrainConfig::default()
        };
        let a = train(&graph, &features, &truth, &cfg).unwrap();
        let b = train(&graph, &features, &truth, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn train_loss_decreases_on_average() {
        let (graph, features) = fixture_graph(12, 29);
        let truth = truth_pattern(12);
        let cfg = TrainConfig {
            epochs: 60,
            hidden_dim: 4,
            corruption_ratio: 0.0,
            seed: 1,
            ..TrainConfig::default()
        };
        let outcome = train(&graph, &features, &truth, &cfg).unwrap();
        let first: f64 = outcome.loss_trace[..10].iter().sum::<f64>() / 10.0;
        let last: f64 = outcome.loss_trace[50..].iter().sum::<f64>() / 10.0;
        assert!(last < first, "first10={first} last10={last}");
    }

    #[test]
    fn train_rejects_empty_and_mismatched_inputs() {
        let graph = PostGraph::from_parts(Vec::new(), Vec::new()).unwrap();
        let features = FeatureMatrix::zeros(0, 4);
        assert_eq!(
            train(&graph, &features, &[], &TrainConfig::default()).unwrap_err(),
            GatError::EmptyGraph
        );
        let (graph, features) = fixture_graph(4, 2);
        let err = train(
            &graph,
            &features,
            &truth_pattern(3),
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, GatError::ShapeMismatch { .. }));
    }

    /// An absurd learning rate sends the parameters to ~1e200 after one
    /// Adam step; the next forward pass overflows and training must fail
    /// with a numeric error instead of returning garbage.
    #[test]
    fn train_surfaces_numeric_failure_instead_of_garbage() {
        let (graph, features) = fixture_graph(6, 8);
        let cfg = TrainConfig {
            epochs: 10,
            hidden_dim: 4,
            learning_rate: 1e200,
            seed: 1,
            ..TrainConfig::default()
        };
        let err = train(&graph, &features, &truth_pattern(6), &cfg);
        assert!(
            matches!(
                err,
                Err(GatError::TrainingDiverged { .. }) | Err(GatError::NumericalError { .. })
            ),
            "expected divergence, got {err:?}"
        );
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let base = TrainConfig::default();
        for cfg in [
            TrainConfig {
                corruption_ratio: 1.5,
                ..base.clone()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..base.clone()
            },
            TrainConfig {
                adam_beta1: 1.0,
                ..base.clone()
            },
            TrainConfig {
                adam_epsilon: 0.0,
                ..base.clone()
            },
            TrainConfig {
                hidden_dim: 0,
                ..base.clone()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
        assert!(base.validate().is_ok());
    }
}

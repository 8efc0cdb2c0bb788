//! Training: mini-batch backpropagation with Adam on binary cross-entropy.
//!
//! The output unit is a logistic sigmoid, so the output-layer error term
//! is simply `p - y`; hidden layers backpropagate through the
//! rectified-linear gradient. Probabilities are clamped to
//! `[1e-12, 1 - 1e-12]` before the log so the loss stays finite.

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureTable;
use crate::scalar::{c, Scalar};

use super::{FfnnModel, NnError};

const CLAMP_EPS: f64 = 1e-12;

/// Training loss. Only binary cross-entropy is defined for this task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    #[default]
    BinaryCrossEntropy,
}

/// Optimizer and loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<F> {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: F,
    pub adam_beta1: F,
    pub adam_beta2: F,
    pub adam_epsilon: F,
    pub loss: Loss,
    pub shuffle_seed: u64,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: c(0.001),
            adam_beta1: c(0.9),
            adam_beta2: c(0.999),
            adam_epsilon: c(1e-8),
            loss: Loss::BinaryCrossEntropy,
            shuffle_seed: 0,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs < 1 {
            return Err(NnError::Config("epochs must be at least 1".to_string()));
        }
        if self.batch_size < 1 {
            return Err(NnError::Config("batch size must be at least 1".to_string()));
        }
        // Zero is allowed as an explicit no-op step size.
        if self.learning_rate < F::zero() || !self.learning_rate.is_finite() {
            return Err(NnError::Config(
                "learning rate must be a finite non-negative number".to_string(),
            ));
        }
        for (name, beta) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(beta >= F::zero() && beta < F::one()) {
                return Err(NnError::Config(format!("adam {name} must lie in [0, 1)")));
            }
        }
        if !self.adam_epsilon.is_finite() || self.adam_epsilon <= F::zero() {
            return Err(NnError::Config("adam epsilon must be positive".to_string()));
        }
        Ok(())
    }
}

/// Per-epoch training loss and accuracy, one entry per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory<F> {
    pub loss: Vec<F>,
    pub accuracy: Vec<F>,
}

impl<F: Scalar> TrainHistory<F> {
    pub fn len(&self) -> usize {
        self.loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss.is_empty()
    }

    pub fn final_accuracy(&self) -> Option<F> {
        self.accuracy.last().copied()
    }
}

/// Parameter-shaped gradient buffers.
struct Gradients<F> {
    weights: Vec<Vec<F>>,
    biases: Vec<Vec<F>>,
}

impl<F: Scalar> Gradients<F> {
    fn zeros_like(model: &FfnnModel<F>) -> Self {
        Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| vec![F::zero(); w.data.len()])
                .collect(),
            biases: model
                .biases
                .iter()
                .map(|b| vec![F::zero(); b.len()])
                .collect(),
        }
    }

    fn reset(&mut self) {
        for buf in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            buf.iter_mut().for_each(|g| *g = F::zero());
        }
    }

    fn scale(&mut self, factor: F) {
        for buf in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            buf.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Flattens into the model's parameter order (per layer: weights
    /// row-major, then biases).
    fn flatten(&self) -> Vec<F> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

struct Adam<F> {
    m: Gradients<F>,
    v: Gradients<F>,
    step: u32,
}

impl<F: Scalar> Adam<F> {
    fn new(model: &FfnnModel<F>) -> Self {
        Adam {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
        }
    }

    fn apply(&mut self, model: &mut FfnnModel<F>, grads: &Gradients<F>, cfg: &TrainConfig<F>) {
        self.step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let correction1 = F::one() - b1.powi(self.step as i32);
        let correction2 = F::one() - b2.powi(self.step as i32);
        let update = |param: &mut F, grad: F, m: &mut F, v: &mut F| {
            *m = b1 * *m + (F::one() - b1) * grad;
            *v = b2 * *v + (F::one() - b2) * grad * grad;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *param -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        };
        for layer in 0..model.weights.len() {
            for (i, g) in grads.weights[layer].iter().enumerate() {
                update(
                    &mut model.weights[layer].data[i],
                    *g,
                    &mut self.m.weights[layer][i],
                    &mut self.v.weights[layer][i],
                );
            }
            for (i, g) in grads.biases[layer].iter().enumerate() {
                update(
                    &mut model.biases[layer][i],
                    *g,
                    &mut self.m.biases[layer][i],
                    &mut self.v.biases[layer][i],
                );
            }
        }
    }
}

fn clamp_probability<F: Scalar>(p: F) -> F {
    let eps = c::<F>(CLAMP_EPS);
    p.max(eps).min(F::one() - eps)
}

fn bce_term<F: Scalar>(p: F, label: u8) -> F {
    let p = clamp_probability(p);
    if label == 1 {
        -p.ln()
    } else {
        -(F::one() - p).ln()
    }
}

fn check_labels(n_rows: usize, labels: &[u8]) -> Result<(), NnError> {
    if labels.len() != n_rows {
        return Err(NnError::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            n_rows
        )));
    }
    if let Some(row) = labels.iter().position(|&l| l > 1) {
        return Err(NnError::Label {
            row: row + 1,
            value: labels[row],
        });
    }
    Ok(())
}

impl<F: Scalar> FfnnModel<F> {
    /// Accumulates one sample's gradient contribution into `grads`.
    ///
    /// `activations` must hold the forward pass for `x`; `deltas` are
    /// per-layer scratch buffers shaped like the activations.
    fn backward_accumulate(
        &self,
        x: &[F],
        activations: &[Vec<F>],
        label: u8,
        deltas: &mut [Vec<F>],
        grads: &mut Gradients<F>,
    ) {
        // Sigmoid + cross-entropy collapse to p - y at the output.
        let y = if label == 1 { F::one() } else { F::zero() };
        deltas[3][0] = activations[3][0] - y;

        for layer in (0..4).rev() {
            let input: &[F] = if layer == 0 {
                x
            } else {
                &activations[layer - 1]
            };
            let weights = &self.weights[layer];
            let cols = weights.cols;
            let (lower, upper) = deltas.split_at_mut(layer);
            let delta = &upper[0];
            for (j, g) in grads.biases[layer].iter_mut().enumerate() {
                *g += delta[j];
            }
            if layer == 0 {
                for (i, &a) in input.iter().enumerate() {
                    if a == F::zero() {
                        continue;
                    }
                    let g_row = &mut grads.weights[layer][i * cols..(i + 1) * cols];
                    for (g, &d) in g_row.iter_mut().zip(delta) {
                        *g += a * d;
                    }
                }
            } else {
                let prev_delta = &mut lower[layer - 1];
                for (i, &a) in input.iter().enumerate() {
                    let w_row = &weights.data[i * cols..(i + 1) * cols];
                    let g_row = &mut grads.weights[layer][i * cols..(i + 1) * cols];
                    let mut back = F::zero();
                    for ((g, &w), &d) in g_row.iter_mut().zip(w_row).zip(delta) {
                        *g += a * d;
                        back += w * d;
                    }
                    // Rectified-linear gradient: positive output <=> slope 1.
                    prev_delta[i] = if a > F::zero() { back } else { F::zero() };
                }
            }
        }
    }

    fn validate_supervised(
        &self,
        table: &FeatureTable<F>,
        labels: &[u8],
    ) -> Result<(), NnError> {
        if table.n_rows() == 0 {
            return Err(NnError::EmptyInput);
        }
        self.check_table(table)?;
        check_labels(table.n_rows(), labels)
    }

    /// Mean clamped binary cross-entropy over a labeled table.
    pub fn bce_loss(&self, table: &FeatureTable<F>, labels: &[u8]) -> Result<F, NnError> {
        Ok(self.evaluate(table, labels)?.0)
    }

    /// `(mean loss, accuracy)` over a labeled table.
    pub fn evaluate(&self, table: &FeatureTable<F>, labels: &[u8]) -> Result<(F, F), NnError> {
        self.validate_supervised(table, labels)?;
        let mut activations = self.new_activation_buffers();
        let mut x = vec![F::zero(); self.input_width()];
        let half = c::<F>(0.5);
        let mut loss = F::zero();
        let mut hits = 0usize;
        for (row, &label) in labels.iter().enumerate() {
            table.copy_row_into(row, &mut x);
            self.forward_unchecked(&x, &mut activations);
            let p = activations[3][0];
            loss += bce_term(p, label);
            if u8::from(p >= half) == label {
                hits += 1;
            }
        }
        let n = c::<F>(table.n_rows() as f64);
        Ok((loss / n, c::<F>(hits as f64) / n))
    }

    /// Full-batch mean loss and its analytic gradient, flattened in
    /// parameter order. This is the quantity finite differences verify.
    pub fn loss_gradients(
        &self,
        table: &FeatureTable<F>,
        labels: &[u8],
    ) -> Result<(F, Vec<F>), NnError> {
        self.validate_supervised(table, labels)?;
        let mut activations = self.new_activation_buffers();
        let mut deltas = self.new_activation_buffers();
        let mut grads = Gradients::zeros_like(self);
        let mut x = vec![F::zero(); self.input_width()];
        let mut loss = F::zero();
        for (row, &label) in labels.iter().enumerate() {
            table.copy_row_into(row, &mut x);
            self.forward_unchecked(&x, &mut activations);
            loss += bce_term(activations[3][0], label);
            self.backward_accumulate(&x, &activations, label, &mut deltas, &mut grads);
        }
        let n = c::<F>(table.n_rows() as f64);
        grads.scale(F::one() / n);
        Ok((loss / n, grads.flatten()))
    }

    /// Trains a copy of this model and returns it with its history.
    ///
    /// Mini-batches are drawn from a seeded shuffle each epoch; the
    /// history records epoch-end loss and accuracy over the full training
    /// set. Deterministic given the model seed, data, and config.
    pub fn train(
        &self,
        table: &FeatureTable<F>,
        labels: &[u8],
        cfg: &TrainConfig<F>,
    ) -> Result<(Self, TrainHistory<F>), NnError> {
        cfg.validate()?;
        self.validate_supervised(table, labels)?;

        let mut model = self.clone();
        let mut adam = Adam::new(&model);
        let mut grads = Gradients::zeros_like(&model);
        let mut activations = model.new_activation_buffers();
        let mut deltas = model.new_activation_buffers();
        let mut x = vec![F::zero(); model.input_width()];
        let mut shuffler = crate::rng::seeded(cfg.shuffle_seed);
        let n = table.n_rows();

        let mut history = TrainHistory {
            loss: Vec::with_capacity(cfg.epochs),
            accuracy: Vec::with_capacity(cfg.epochs),
        };
        for _ in 0..cfg.epochs {
            let order = crate::rng::shuffled_indices(n, &mut shuffler);
            for batch in order.chunks(cfg.batch_size) {
                grads.reset();
                for &row in batch {
                    table.copy_row_into(row, &mut x);
                    model.forward_unchecked(&x, &mut activations);
                    model.backward_accumulate(
                        &x,
                        &activations,
                        labels[row],
                        &mut deltas,
                        &mut grads,
                    );
                }
                grads.scale(F::one() / c::<F>(batch.len() as f64));
                adam.apply(&mut model, &grads, cfg);
            }
            let (loss, accuracy) = model.evaluate(table, labels)?;
            history.loss.push(loss);
            history.accuracy.push(accuracy);
        }
        Ok((model, history))
    }
}

//! From-scratch dense feed-forward network.
//!
//! Architecture is fixed by the experiment: three hidden rectified-linear
//! layers of widths N, 2N, N over an N-wide input, and a single
//! logistic-sigmoid output unit. Training (backpropagation, Adam, binary
//! cross-entropy) lives in the `train` submodule; this module holds the model,
//! the forward pass, third-hidden-layer representation extraction,
//! prediction, and checkpoint I/O.

mod train;

pub use train::{Loss, TrainConfig, TrainHistory};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureTable;
use crate::payload::RepresentationFile;
use crate::scalar::{c, Scalar};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input at row {row}, feature {feature:?}")]
    NumericInput { row: usize, feature: String },
    #[error("label at row {row} must be 0 or 1, got {value}")]
    Label { row: usize, value: u8 },
    #[error("empty training input")]
    EmptyInput,
    #[error("checkpoint i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
}

/// Element-wise activation applied by a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    RectifiedLinear,
    LogisticSigmoid,
}

impl Activation {
    fn apply<F: Scalar>(self, z: F) -> F {
        match self {
            Activation::RectifiedLinear => {
                if z > F::zero() {
                    z
                } else {
                    F::zero()
                }
            }
            // Clamped away from exact 0/1 so probabilities stay strictly
            // inside the unit interval and downstream logs stay finite
            // even when the sigmoid saturates in floating point.
            Activation::LogisticSigmoid => {
                let eps = c::<F>(1e-12);
                (F::one() / (F::one() + (-z).exp()))
                    .max(eps)
                    .min(F::one() - eps)
            }
        }
    }
}

/// Dense weight matrix; `rows` is the layer's fan-in, `cols` its fan-out,
/// storage row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<(), NnError> {
    if layer_dims.len() != 5 {
        return Err(NnError::Config(format!(
            "expected 5 layer dims (input, 3 hidden, output), got {}",
            layer_dims.len()
        )));
    }
    let n = layer_dims[0];
    if n == 0 {
        return Err(NnError::Config("input width must be positive".to_string()));
    }
    let expected = [n, n, 2 * n, n, 1];
    if layer_dims != expected {
        return Err(NnError::Config(format!(
            "layer dims {layer_dims:?} do not follow the N-N-2N-N-1 pattern (expected {expected:?})"
        )));
    }
    Ok(())
}

/// Feed-forward model with three hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnnModel<F> {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix<F>>,
    biases: Vec<Vec<F>>,
    hidden_activation: Activation,
    output_activation: Activation,
    rng_seed: u64,
}

/// Per-layer post-activation values for one input row.
#[derive(Debug, Clone)]
pub struct ForwardPass<F> {
    /// One vector per layer: hidden 1..3, then the output layer.
    pub activations: Vec<Vec<F>>,
}

impl<F: Scalar> ForwardPass<F> {
    /// Output probability (the single sigmoid unit).
    pub fn probability(&self) -> F {
        self.activations[3][0]
    }

    /// Third-hidden-layer activations.
    pub fn representation(&self) -> &[F] {
        &self.activations[2]
    }
}

/// Per-ID output probabilities and rounded classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<F> {
    pub ids: Vec<u64>,
    pub probabilities: Vec<F>,
    pub classes: Vec<u8>,
}

impl<F: Scalar> PredictionSet<F> {
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = String::from("id,probability,class\n");
        for ((id, p), class) in self.ids.iter().zip(&self.probabilities).zip(&self.classes) {
            out.push_str(&format!("{id},{p},{class}\n"));
        }
        out.into_bytes()
    }
}

impl<F: Scalar> FfnnModel<F> {
    /// Builds a model with He-uniform weights (scaled by fan-in) and zero
    /// biases, deterministically from the seed.
    pub fn init(layer_dims: &[usize], rng_seed: u64) -> Result<Self, NnError> {
        validate_dims(layer_dims)?;
        let mut rng = crate::rng::seeded(rng_seed);
        let mut weights = Vec::with_capacity(4);
        let mut biases = Vec::with_capacity(4);
        for l in 0..4 {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut matrix = Matrix::zeros(fan_in, fan_out);
            for w in &mut matrix.data {
                *w = c((2.0 * crate::rng::uniform(&mut rng) - 1.0) * limit);
            }
            weights.push(matrix);
            biases.push(vec![F::zero(); fan_out]);
        }
        Ok(FfnnModel {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            hidden_activation: Activation::RectifiedLinear,
            output_activation: Activation::LogisticSigmoid,
            rng_seed,
        })
    }

    /// Model for an N-wide input: layer dims `[N, N, 2N, N, 1]`.
    pub fn for_input_width(n: usize, rng_seed: u64) -> Result<Self, NnError> {
        Self::init(&[n, n, 2 * n, n, 1], rng_seed)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_width(&self) -> usize {
        self.layer_dims[0]
    }

    /// Width of the third hidden layer, i.e. of extracted representations.
    pub fn representation_width(&self) -> usize {
        self.layer_dims[3]
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn weights(&self) -> &[Matrix<F>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<F>] {
        &self.biases
    }

    fn activation_for_layer(&self, layer: usize) -> Activation {
        if layer == 3 {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub(crate) fn new_activation_buffers(&self) -> Vec<Vec<F>> {
        (1..=4)
            .map(|l| vec![F::zero(); self.layer_dims[l]])
            .collect()
    }

    /// Forward pass without shape or finiteness checks; `activations`
    /// must come from [`new_activation_buffers`](Self::new_activation_buffers).
    pub(crate) fn forward_unchecked(&self, x: &[F], activations: &mut [Vec<F>]) {
        for layer in 0..4 {
            let weights = &self.weights[layer];
            let bias = &self.biases[layer];
            let activation = self.activation_for_layer(layer);
            let (before, rest) = activations.split_at_mut(layer);
            let input: &[F] = if layer == 0 { x } else { &before[layer - 1] };
            let out = &mut rest[0];
            out.copy_from_slice(bias);
            for (i, &xi) in input.iter().enumerate() {
                if xi == F::zero() {
                    continue;
                }
                let row = &weights.data[i * weights.cols..(i + 1) * weights.cols];
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += xi * w;
                }
            }
            for o in out.iter_mut() {
                *o = activation.apply(*o);
            }
        }
    }

    fn check_row_width(&self, width: usize) -> Result<(), NnError> {
        if width != self.input_width() {
            return Err(NnError::Shape(format!(
                "input width {width} does not match model input width {}",
                self.input_width()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_table(&self, table: &FeatureTable<F>) -> Result<(), NnError> {
        self.check_row_width(table.n_features())?;
        for (idx, name) in table.names().iter().enumerate() {
            let column = table.column(name).expect("name comes from the table");
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(NnError::NumericInput {
                    row: row + 1,
                    feature: table.names()[idx].clone(),
                });
            }
        }
        Ok(())
    }

    /// Full forward pass for one input row, returning every layer's
    /// post-activation values.
    pub fn forward(&self, x: &[F]) -> Result<ForwardPass<F>, NnError> {
        self.check_row_width(x.len())?;
        if let Some(idx) = x.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NumericInput {
                row: 1,
                feature: format!("input[{idx}]"),
            });
        }
        let mut activations = self.new_activation_buffers();
        self.forward_unchecked(x, &mut activations);
        Ok(ForwardPass { activations })
    }

    /// Third-hidden-layer representations for every row of a table,
    /// preserving IDs. Entries are non-negative by construction.
    pub fn extract_representation(
        &self,
        rows: &FeatureTable<F>,
        source: &str,
    ) -> Result<RepresentationFile<F>, NnError> {
        self.check_table(rows)?;
        let mut activations = self.new_activation_buffers();
        let mut x = vec![F::zero(); self.input_width()];
        let mut entries = Vec::with_capacity(rows.n_rows());
        for row in 0..rows.n_rows() {
            rows.copy_row_into(row, &mut x);
            self.forward_unchecked(&x, &mut activations);
            entries.push((rows.ids()[row], activations[2].clone()));
        }
        Ok(
            RepresentationFile::new(source, self.representation_width(), entries)
                .expect("table ids are unique and rectified output is non-negative"),
        )
    }

    /// Output probabilities and rounded binary predictions for a table.
    /// The rounding threshold maps probability 0.5 to class 1.
    pub fn predict(&self, rows: &FeatureTable<F>) -> Result<PredictionSet<F>, NnError> {
        self.check_table(rows)?;
        let half = c::<F>(0.5);
        let mut activations = self.new_activation_buffers();
        let mut x = vec![F::zero(); self.input_width()];
        let mut probabilities = Vec::with_capacity(rows.n_rows());
        let mut classes = Vec::with_capacity(rows.n_rows());
        for row in 0..rows.n_rows() {
            rows.copy_row_into(row, &mut x);
            self.forward_unchecked(&x, &mut activations);
            let p = activations[3][0];
            probabilities.push(p);
            classes.push(u8::from(p >= half));
        }
        Ok(PredictionSet {
            ids: rows.ids().to_vec(),
            probabilities,
            classes,
        })
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.data.len())
            .chain(self.biases.iter().map(|b| b.len()))
            .sum()
    }

    fn param_location(&self, index: usize) -> (usize, bool, usize) {
        let mut offset = index;
        for layer in 0..self.weights.len() {
            let w_len = self.weights[layer].data.len();
            if offset < w_len {
                return (layer, false, offset);
            }
            offset -= w_len;
            let b_len = self.biases[layer].len();
            if offset < b_len {
                return (layer, true, offset);
            }
            offset -= b_len;
        }
        panic!("parameter index {index} out of range");
    }

    /// Flat parameter access in a fixed order (per layer: weights
    /// row-major, then biases). Used by gradient verification.
    pub fn param(&self, index: usize) -> F {
        match self.param_location(index) {
            (layer, false, offset) => self.weights[layer].data[offset],
            (layer, true, offset) => self.biases[layer][offset],
        }
    }

    pub fn param_mut(&mut self, index: usize) -> &mut F {
        match self.param_location(index) {
            (layer, false, offset) => &mut self.weights[layer].data[offset],
            (layer, true, offset) => &mut self.biases[layer][offset],
        }
    }

    /// Writes a versioned checkpoint that reloads bit-exactly.
    pub fn save_checkpoint(&self, path: &Path) -> Result<(), NnError> {
        let checkpoint = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&checkpoint)
            .map_err(|e| NnError::Checkpoint(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, NnError> {
        let bytes = std::fs::read(path).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let checkpoint: Checkpoint<F> =
            serde_json::from_slice(&bytes).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        if checkpoint.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unexpected format tag {:?}",
                checkpoint.format
            )));
        }
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                checkpoint.version
            )));
        }
        checkpoint.model.validate_structure()?;
        Ok(checkpoint.model)
    }

    /// Checks that weight and bias shapes are consistent with the layer
    /// dims; loaded checkpoints must pass before any forward pass.
    fn validate_structure(&self) -> Result<(), NnError> {
        validate_dims(&self.layer_dims)?;
        if self.weights.len() != 4 || self.biases.len() != 4 {
            return Err(NnError::Checkpoint(format!(
                "expected 4 weight matrices and bias vectors, found {} and {}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for layer in 0..4 {
            let (rows, cols) = (self.layer_dims[layer], self.layer_dims[layer + 1]);
            let w = &self.weights[layer];
            if w.rows != rows || w.cols != cols || w.data.len() != rows * cols {
                return Err(NnError::Checkpoint(format!(
                    "layer {layer} weights are {}x{} with {} values, expected {rows}x{cols}",
                    w.rows,
                    w.cols,
                    w.data.len()
                )));
            }
            if self.biases[layer].len() != cols {
                return Err(NnError::Checkpoint(format!(
                    "layer {layer} has {} biases, expected {cols}",
                    self.biases[layer].len()
                )));
            }
            if w.data.iter().chain(&self.biases[layer]).any(|v| !v.is_finite()) {
                return Err(NnError::Checkpoint(format!(
                    "layer {layer} contains non-finite parameters"
                )));
            }
        }
        Ok(())
    }
}

const CHECKPOINT_FORMAT: &str = "splitchain-model";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint<F> {
    format: String,
    version: u32,
    #[serde(bound(
        serialize = "F: Serialize",
        deserialize = "F: serde::de::DeserializeOwned"
    ))]
    model: FfnnModel<F>,
}

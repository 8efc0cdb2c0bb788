//! Oracle helpers shared by the integration suites. Everything here goes
//! through the crate's public API only; the gradient oracle in
//! particular never touches the analytic backpropagation path it checks.

#![allow(dead_code)]

use std::sync::Arc;

use splitchain_core::dataset::{
    split_train_test, vertical_partition, FeatureTable, PartitionSpec, Scaler,
};
use splitchain_core::ledger::Ledger;
use splitchain_core::metrics::{accuracy, classification_report, ClassificationReport};
use splitchain_core::nn::{FfnnModel, TrainHistory};
use splitchain_core::protocol::{Deployment, PipelineConfig};
use splitchain_core::store::MemStore;

/// Central finite differences of the mean training loss with respect to
/// every parameter, via the public loss + parameter API.
pub fn finite_difference_gradients(
    model: &mut FfnnModel<f64>,
    table: &FeatureTable<f64>,
    labels: &[u8],
    h: f64,
) -> Vec<f64> {
    let mut numeric = Vec::with_capacity(model.param_count());
    for idx in 0..model.param_count() {
        let original = model.param(idx);
        *model.param_mut(idx) = original + h;
        let plus = model.bce_loss(table, labels).unwrap();
        *model.param_mut(idx) = original - h;
        let minus = model.bce_loss(table, labels).unwrap();
        *model.param_mut(idx) = original;
        numeric.push((plus - minus) / (2.0 * h));
    }
    numeric
}

/// Relative error with an absolute fallback for numerically unresolvable
/// (near-zero) gradient pairs.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-6 {
                (a - n).abs()
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Random model for gradient checking: He weights plus small random
/// biases, so no pre-activation sits exactly on the rectifier kink
/// (where the gradient does not exist and finite differences are
/// one-sided).
pub fn off_kink_model(dims: &[usize], seed: u64) -> FfnnModel<f64> {
    let mut model = FfnnModel::<f64>::init(dims, seed).unwrap();
    let mut rng = splitchain_core::rng::seeded(seed ^ 0x0ff5eed);
    for i in 0..model.param_count() {
        if model.param(i) == 0.0 {
            *model.param_mut(i) = 0.4 * (splitchain_core::rng::uniform(&mut rng) - 0.5);
        }
    }
    model
}

/// Standard-normal feature table with random binary labels.
pub fn random_table(n: usize, width: usize, seed: u64) -> (FeatureTable<f64>, Vec<u8>) {
    let mut rng = splitchain_core::rng::seeded(seed);
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|_| (0..n).map(|_| splitchain_core::rng::normal(&mut rng)).collect())
        .collect();
    let labels: Vec<u8> = (0..n)
        .map(|_| u8::from(splitchain_core::rng::uniform(&mut rng) < 0.5))
        .collect();
    let table = FeatureTable::new(
        (1..=n as u64).collect(),
        (1..=width).map(|i| format!("x{i}")).collect(),
        columns,
        Some(labels.clone()),
    )
    .unwrap();
    (table, labels)
}

/// Accuracy of all four models for one dataset and seed: decentralized
/// host, both local nodes, and the centralized baseline.
pub struct ComparisonRun {
    pub acc_host: f64,
    pub acc_node1: f64,
    pub acc_node2: f64,
    pub acc_centralized: f64,
    pub host_report: ClassificationReport<f64>,
    pub host_history: TrainHistory<f64>,
    pub centralized_history: TrainHistory<f64>,
}

pub fn run_full_comparison(
    data: &FeatureTable<f64>,
    partition: &PartitionSpec,
    seed: u64,
    epochs: usize,
) -> ComparisonRun {
    let (train, test) = split_train_test(data, 0.7, seed.wrapping_add(100)).unwrap();
    let (t1, t2) = vertical_partition(&train, partition).unwrap();
    let test_labels = test.labels().unwrap().to_vec();

    let deployment = Deployment::new(
        Arc::new(MemStore::new()),
        Arc::new(Ledger::in_memory()),
        seed,
    );
    let cfg = PipelineConfig::<f64>::from_master_seed("sweep", seed, epochs);
    let outcome = deployment.run_training_phase(&t1, &t2, &cfg).unwrap();
    let inference = deployment
        .run_inference_phase(&outcome.pipeline, &test, "sweep-infer")
        .unwrap();
    let acc_host = accuracy::<f64>(&test_labels, &inference.predictions.classes).unwrap();
    let host_report =
        classification_report::<f64>(&test_labels, &inference.predictions.classes).unwrap();

    let mut node_acc = [0.0f64; 2];
    for (slot, state) in [&outcome.pipeline.node1, &outcome.pipeline.node2]
        .into_iter()
        .enumerate()
    {
        let columns = test.select_columns(&state.columns).unwrap();
        let scaled = state.scaler.transform(&columns).unwrap();
        let predictions = state.model.predict(&scaled).unwrap();
        node_acc[slot] = accuracy::<f64>(&test_labels, &predictions.classes).unwrap();
    }

    let scaler = Scaler::fit(&train).unwrap();
    let scaled_train = scaler.transform(&train).unwrap();
    let scaled_test = scaler.transform(&test).unwrap();
    let model =
        FfnnModel::<f64>::for_input_width(train.n_features(), cfg.host_init_seed).unwrap();
    let (model, centralized_history) = model
        .train(&scaled_train, train.labels().unwrap(), &cfg.host_train)
        .unwrap();
    let predictions = model.predict(&scaled_test).unwrap();
    let acc_centralized = accuracy::<f64>(&test_labels, &predictions.classes).unwrap();

    ComparisonRun {
        acc_host,
        acc_node1: node_acc[0],
        acc_node2: node_acc[1],
        acc_centralized,
        host_report,
        host_history: outcome.host_history,
        centralized_history,
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Location of the public loan CSV, when the user has supplied it.
pub fn kaggle_csv_path() -> Option<std::path::PathBuf> {
    if let Ok(path) = std::env::var("SPLITCHAIN_KAGGLE_CSV") {
        let path = std::path::PathBuf::from(path);
        if path.is_file() {
            return Some(path);
        }
    }
    let workspace = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in [
        "data/Bank_Personal_Loan_Modelling.csv",
        "data/bank-loan.csv",
    ] {
        let candidate = workspace.join(name);
        if candidate.is_file() {
            return Some(candidate);
        }
    }
    None
}

/// Kaggle pipeline front half: load, engineer, infer the partition.
pub fn load_kaggle(path: &std::path::Path) -> (FeatureTable<f64>, PartitionSpec) {
    let raw = FeatureTable::<f64>::load_csv(
        path,
        &splitchain_core::dataset::LoadOptions::labeled("Personal Loan"),
    )
    .unwrap();
    let (engineered, _) = splitchain_core::dataset::engineer_features(
        &raw,
        &splitchain_core::dataset::EngineerConfig::default(),
    )
    .unwrap();
    let partition = PartitionSpec::infer(engineered.names()).unwrap();
    (engineered, partition)
}

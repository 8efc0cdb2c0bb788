//! `splitchain train`: run one of the four training modes on prepared
//! artifacts and write models, reports, curves, and the run manifest.

use std::path::PathBuf;

use splitchain_core::dataset::Scaler;
use splitchain_core::nn::FfnnModel;
use splitchain_core::protocol::{
    Deployment, NodeState, ParticipantId, PipelineConfig, RunManifest, TrainedPipeline,
};
use splitchain_core::Real;

use crate::common::{emit_curves, ensure_dir, open_fabric_backends, write_report, RUN_MANIFEST};
use crate::error::{CliError, Result};
use crate::prepare::{load_prepared, PreparedData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Decentralized,
    Centralized,
    LocalNode1,
    LocalNode2,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Decentralized => "decentralized",
            Mode::Centralized => "centralized",
            Mode::LocalNode1 => "local-node1",
            Mode::LocalNode2 => "local-node2",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "decentralized" => Ok(Mode::Decentralized),
            "centralized" => Ok(Mode::Centralized),
            "local-node1" => Ok(Mode::LocalNode1),
            "local-node2" => Ok(Mode::LocalNode2),
            other => Err(format!(
                "unknown mode {other:?} (decentralized | centralized | local-node1 | local-node2)"
            )),
        }
    }
}

pub struct TrainArgs {
    pub mode: Mode,
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub store_root: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub run_id: String,
    pub plot: bool,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let data = load_prepared(&args.data)?;
    let mut cfg = PipelineConfig::<Real>::from_master_seed(&args.run_id, args.seed, args.epochs);
    if let Some(batch) = args.batch_size {
        cfg.node1_train.batch_size = batch;
        cfg.node2_train.batch_size = batch;
        cfg.host_train.batch_size = batch;
    }

    let mut manifest = RunManifest::new(&args.run_id, args.mode.as_str(), args.seed, args.epochs);
    manifest.data_dir = Some(args.data.display().to_string());

    match args.mode {
        Mode::Decentralized => decentralized(args, &data, &cfg, &mut manifest)?,
        Mode::Centralized => centralized(args, &data, &cfg, &mut manifest)?,
        Mode::LocalNode1 => local_node(args, &data, &cfg, ParticipantId::Node1, &mut manifest)?,
        Mode::LocalNode2 => local_node(args, &data, &cfg, ParticipantId::Node2, &mut manifest)?,
    }

    manifest
        .save(&args.out.join(RUN_MANIFEST))
        .map_err(CliError::internal)?;
    Ok(())
}

fn record(manifest: &mut RunManifest, name: &str, file: &str) {
    manifest.artifacts.insert(name.to_string(), file.to_string());
}

fn save_node_state(
    out: &std::path::Path,
    state: &NodeState<Real>,
    manifest: &mut RunManifest,
) -> Result<()> {
    let id = state.id.as_str();
    let model_file = format!("{id}-model.json");
    let scaler_file = format!("{id}-scaler.txt");
    state
        .model
        .save_checkpoint(&out.join(&model_file))
        .map_err(CliError::internal)?;
    state
        .scaler
        .save(&out.join(&scaler_file))
        .map_err(CliError::internal)?;
    record(manifest, &format!("{id}-model"), &model_file);
    record(manifest, &format!("{id}-scaler"), &scaler_file);
    Ok(())
}

/// Evaluates a node's frozen model on its columns of the test split.
fn node_test_predictions(
    state: &NodeState<Real>,
    test: &splitchain_core::FeatureTable,
) -> Result<Vec<u8>> {
    let columns = test
        .select_columns(&state.columns)
        .map_err(CliError::input)?;
    let scaled = state.scaler.transform(&columns).map_err(CliError::internal)?;
    let predictions = state.model.predict(&scaled).map_err(CliError::internal)?;
    Ok(predictions.classes)
}

fn decentralized(
    args: &TrainArgs,
    data: &PreparedData,
    cfg: &PipelineConfig<Real>,
    manifest: &mut RunManifest,
) -> Result<()> {
    let store_root = args
        .store_root
        .clone()
        .unwrap_or_else(|| args.out.join("store"));
    let journal = args
        .ledger
        .clone()
        .unwrap_or_else(|| args.out.join("ledger.journal"));
    let (store, ledger) = open_fabric_backends(&store_root, &journal)?;
    manifest.store_root = Some(store_root.display().to_string());
    manifest.ledger_journal = Some(journal.display().to_string());

    let deployment = Deployment::new(store, ledger, args.seed);
    let outcome = deployment
        .run_training_phase(&data.node1_train, &data.node2_train, cfg)
        .map_err(CliError::input)?;
    manifest.phase_seqs.train_repr = outcome.train_repr_seqs.to_vec();

    // Evaluate on the held-out test set through the inference round trip.
    let test_labels = data.test.labels().ok_or_else(|| {
        CliError::input("test split carries no labels; re-run prepare")
    })?;
    let inference = deployment
        .run_inference_phase(&outcome.pipeline, &data.test, &args.run_id)
        .map_err(CliError::input)?;
    manifest.phase_seqs.test_split = inference.test_split_seqs.to_vec();
    manifest.phase_seqs.test_repr = inference.test_repr_seqs.to_vec();

    let report = write_report(&args.out, None, test_labels, &inference.predictions.classes)?;
    record(manifest, "report", "report.json");

    for state in [&outcome.pipeline.node1, &outcome.pipeline.node2] {
        let classes = node_test_predictions(state, &data.test)?;
        write_report(&args.out, Some(state.id.as_str()), test_labels, &classes)?;
        record(
            manifest,
            &format!("report-{}", state.id),
            &format!("report-{}.json", state.id),
        );
        save_node_state(&args.out, state, manifest)?;
    }

    outcome
        .pipeline
        .host_model
        .save_checkpoint(&args.out.join("host-model.json"))
        .map_err(CliError::internal)?;
    record(manifest, "host-model", "host-model.json");

    std::fs::write(
        args.out.join("predictions.csv"),
        inference.predictions.to_csv_bytes(),
    )
    .map_err(CliError::internal)?;
    record(manifest, "predictions", "predictions.csv");

    emit_curves(
        &args.out,
        &[
            ("node1".to_string(), &outcome.node1_history),
            ("node2".to_string(), &outcome.node2_history),
            ("host".to_string(), &outcome.host_history),
        ],
        args.plot,
    )?;
    record(manifest, "curves-host", "curves-host.csv");
    record(manifest, "curves-node1", "curves-node1.csv");
    record(manifest, "curves-node2", "curves-node2.csv");

    println!("decentralized run {} complete", args.run_id);
    println!(
        "test accuracy {:.4} over {} samples; 6 fabric transfers registered",
        report.accuracy, report.total_support
    );
    print!("{report}");
    Ok(())
}

fn centralized(
    args: &TrainArgs,
    data: &PreparedData,
    cfg: &PipelineConfig<Real>,
    manifest: &mut RunManifest,
) -> Result<()> {
    let labels = data
        .train
        .labels_required()
        .map_err(CliError::input)?
        .to_vec();
    let scaler = Scaler::fit(&data.train).map_err(CliError::input)?;
    let scaled_train = scaler.transform(&data.train).map_err(CliError::internal)?;
    let model = FfnnModel::<Real>::for_input_width(data.train.n_features(), cfg.host_init_seed)
        .map_err(CliError::input)?;
    let (model, history) = model
        .train(&scaled_train, &labels, &cfg.host_train)
        .map_err(CliError::input)?;

    let test_labels = data
        .test
        .labels_required()
        .map_err(CliError::input)?;
    let scaled_test = scaler.transform(&data.test).map_err(CliError::internal)?;
    let predictions = model.predict(&scaled_test).map_err(CliError::internal)?;

    let report = write_report(&args.out, None, test_labels, &predictions.classes)?;
    record(manifest, "report", "report.json");
    model
        .save_checkpoint(&args.out.join("centralized-model.json"))
        .map_err(CliError::internal)?;
    scaler
        .save(&args.out.join("centralized-scaler.txt"))
        .map_err(CliError::internal)?;
    record(manifest, "centralized-model", "centralized-model.json");
    record(manifest, "centralized-scaler", "centralized-scaler.txt");
    std::fs::write(
        args.out.join("predictions.csv"),
        predictions.to_csv_bytes(),
    )
    .map_err(CliError::internal)?;
    record(manifest, "predictions", "predictions.csv");
    emit_curves(&args.out, &[("centralized".to_string(), &history)], args.plot)?;
    record(manifest, "curves-centralized", "curves-centralized.csv");

    println!("centralized run {} complete", args.run_id);
    println!(
        "test accuracy {:.4} over {} samples",
        report.accuracy, report.total_support
    );
    print!("{report}");
    Ok(())
}

fn local_node(
    args: &TrainArgs,
    data: &PreparedData,
    cfg: &PipelineConfig<Real>,
    id: ParticipantId,
    manifest: &mut RunManifest,
) -> Result<()> {
    let (partition_table, train_cfg, init_seed) = match id {
        ParticipantId::Node1 => (&data.node1_train, &cfg.node1_train, cfg.node1_init_seed),
        ParticipantId::Node2 => (&data.node2_train, &cfg.node2_train, cfg.node2_init_seed),
        ParticipantId::Host => unreachable!("local mode is node-only"),
    };
    let (state, history, _) =
        splitchain_core::protocol::train_local_node(id, partition_table, train_cfg, init_seed)
            .map_err(CliError::input)?;

    let test_labels = data
        .test
        .labels_required()
        .map_err(CliError::input)?;
    let classes = node_test_predictions(&state, &data.test)?;
    let report = write_report(&args.out, None, test_labels, &classes)?;
    record(manifest, "report", "report.json");
    save_node_state(&args.out, &state, manifest)?;
    emit_curves(&args.out, &[(id.as_str().to_string(), &history)], args.plot)?;
    record(
        manifest,
        &format!("curves-{id}"),
        &format!("curves-{id}.csv"),
    );

    println!("local-{} run {} complete", id.as_str(), args.run_id);
    println!(
        "test accuracy {:.4} over {} samples",
        report.accuracy, report.total_support
    );
    print!("{report}");
    Ok(())
}

/// Reloads the trained pipeline of a decentralized run for `infer`.
pub fn load_pipeline(
    manifest_path: &std::path::Path,
    manifest: &RunManifest,
) -> Result<TrainedPipeline<Real>> {
    let load_state = |id: ParticipantId, columns: Vec<String>| -> Result<NodeState<Real>> {
        let model_path = manifest
            .artifact_path(manifest_path, &format!("{id}-model"))
            .map_err(CliError::state)?;
        let scaler_path = manifest
            .artifact_path(manifest_path, &format!("{id}-scaler"))
            .map_err(CliError::state)?;
        let model = FfnnModel::<Real>::load_checkpoint(&model_path).map_err(CliError::state)?;
        let scaler = Scaler::<Real>::load(&scaler_path).map_err(CliError::state)?;
        Ok(NodeState {
            id,
            model,
            scaler,
            columns,
        })
    };
    let data_dir = manifest
        .data_dir
        .as_ref()
        .ok_or_else(|| CliError::state("run manifest lacks a data_dir"))?;
    let prepared = crate::common::PrepareManifest::load(std::path::Path::new(data_dir))
        .map_err(|_| CliError::state(format!("prepared data at {data_dir} is gone")))?;

    let node1 = load_state(ParticipantId::Node1, prepared.partition.personal_columns)?;
    let node2 = load_state(ParticipantId::Node2, prepared.partition.bank_columns)?;
    let host_path = manifest
        .artifact_path(manifest_path, "host-model")
        .map_err(CliError::state)?;
    let host_model = FfnnModel::<Real>::load_checkpoint(&host_path).map_err(CliError::state)?;
    Ok(TrainedPipeline {
        node1,
        node2,
        host_model,
    })
}

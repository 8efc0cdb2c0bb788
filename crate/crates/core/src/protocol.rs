//! Orchestration of the aggregation mechanism.
//!
//! Two data nodes train on their vertical partitions, extract
//! third-hidden-layer representations, and hand them to the host through
//! the exchange fabric: seal to the recipient's key, put into the
//! content store, register the hash on the ledger; the recipient fetches
//! the hash, gets the blob, and opens the envelope. The host joins the
//! representations on sample ID and trains the aggregate model; inference
//! round-trips the test columns out to the nodes and their test
//! representations back.
//!
//! All cross-participant traffic flows through
//! [`Endpoint::send_artifact`]/[`Endpoint::receive_artifact`] — no shared
//! memory between participants. Node 1 and node 2 train concurrently.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, FeatureTable, Scaler};
use crate::envelope::{self, EnvelopeError, KeyPair, PublicKey, SealedEnvelope};
use crate::ledger::{Ledger, LedgerError};
use crate::nn::{FfnnModel, NnError, PredictionSet, TrainConfig, TrainHistory};
use crate::payload::{self, PayloadError, RepresentationFile};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::store::{BlobStore, StoreError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error("representation join failed; ids only in {only_in_left:?} (left) / {only_in_right:?} (right)")]
    Join {
        only_in_left: Vec<u64>,
        only_in_right: Vec<u64>,
    },
    #[error("participant alignment error: {0}")]
    Alignment(String),
    #[error("no public key registered for {0:?}")]
    UnknownKey(String),
    #[error("invalid run id {0:?}: use ASCII letters, digits, '-', '_', '.'")]
    InvalidRunId(String),
    #[error("manifest error: {0}")]
    Manifest(String),
}

/// The three parties of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParticipantId {
    Node1,
    Node2,
    Host,
}

impl ParticipantId {
    pub fn as_str(self) -> &'static str {
        match self {
            ParticipantId::Node1 => "node1",
            ParticipantId::Node2 => "node2",
            ParticipantId::Host => "host",
        }
    }

    pub const ALL: [ParticipantId; 3] =
        [ParticipantId::Node1, ParticipantId::Node2, ParticipantId::Host];
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParticipantId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node1" => Ok(ParticipantId::Node1),
            "node2" => Ok(ParticipantId::Node2),
            "host" => Ok(ParticipantId::Host),
            other => Err(ProtocolError::Alignment(format!(
                "unknown participant {other:?}"
            ))),
        }
    }
}

/// The three artifact kinds that cross the fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferPhase {
    TrainRepr,
    TestSplit,
    TestRepr,
}

impl TransferPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferPhase::TrainRepr => "train-repr",
            TransferPhase::TestSplit => "test-split",
            TransferPhase::TestRepr => "test-repr",
        }
    }
}

impl fmt::Display for TransferPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ledger tag for one artifact of one run: `<run-id>:<phase>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferTag {
    pub run_id: String,
    pub phase: TransferPhase,
}

pub fn validate_run_id(run_id: &str) -> Result<(), ProtocolError> {
    let ok = !run_id.is_empty()
        && run_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ProtocolError::InvalidRunId(run_id.to_string()))
    }
}

impl TransferTag {
    pub fn new(run_id: &str, phase: TransferPhase) -> Result<Self, ProtocolError> {
        validate_run_id(run_id)?;
        Ok(TransferTag {
            run_id: run_id.to_string(),
            phase,
        })
    }
}

impl fmt::Display for TransferTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.run_id, self.phase)
    }
}

/// Out-of-band directory of participant public keys, loaded at startup.
#[derive(Debug, Clone, Default)]
pub struct PublicKeyDirectory {
    keys: BTreeMap<String, PublicKey>,
}

impl PublicKeyDirectory {
    pub fn insert(&mut self, owner: &str, key: PublicKey) {
        self.keys.insert(owner.to_string(), key);
    }

    pub fn get(&self, owner: &str) -> Result<&PublicKey, ProtocolError> {
        self.keys
            .get(owner)
            .ok_or_else(|| ProtocolError::UnknownKey(owner.to_string()))
    }
}

/// Shared exchange infrastructure: content store, hash ledger, key
/// directory. This is the simulated network between participants.
pub struct Fabric {
    pub store: Arc<dyn BlobStore>,
    pub ledger: Arc<Ledger>,
    pub directory: PublicKeyDirectory,
}

/// One participant's handle on the fabric.
pub struct Endpoint {
    id: ParticipantId,
    keys: KeyPair,
    fabric: Arc<Fabric>,
}

impl Endpoint {
    pub fn id(&self) -> ParticipantId {
        self.id
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    /// Seal to the recipient, store the envelope, register its hash.
    /// Returns the ledger sequence number. Nothing is stored or
    /// registered if sealing fails (e.g. empty payload).
    pub fn send_artifact(
        &self,
        recipient: ParticipantId,
        tag: &TransferTag,
        payload: &[u8],
    ) -> Result<u64, ProtocolError> {
        let recipient_key = self.fabric.directory.get(recipient.as_str())?;
        let sealed = envelope::seal(payload, recipient_key)?;
        let hash = self.fabric.store.put(&sealed.to_bytes())?;
        let seq = self.fabric.ledger.register_hash(
            self.id.as_str(),
            recipient.as_str(),
            &tag.to_string(),
            hash,
        )?;
        Ok(seq)
    }

    /// Fetch the latest hash for the key, get the blob, open the
    /// envelope. Returns exactly the bytes the sender serialized.
    pub fn receive_artifact(
        &self,
        sender: ParticipantId,
        tag: &TransferTag,
    ) -> Result<Vec<u8>, ProtocolError> {
        let hash = self.fabric.ledger.fetch_hash(
            self.id.as_str(),
            sender.as_str(),
            &tag.to_string(),
        )?;
        let bytes = self.fabric.store.get(&hash)?;
        let sealed = SealedEnvelope::from_bytes(&bytes)?;
        Ok(envelope::open(&sealed, self.keys.private())?)
    }
}

/// Per-run seeds and training configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig<F> {
    pub run_id: String,
    pub node1_train: TrainConfig<F>,
    pub node2_train: TrainConfig<F>,
    pub host_train: TrainConfig<F>,
    pub node1_init_seed: u64,
    pub node2_init_seed: u64,
    pub host_init_seed: u64,
}

impl<F: Scalar> PipelineConfig<F> {
    /// Derives every seed from one master seed; `epochs` overrides the
    /// default epoch count for all three models.
    pub fn from_master_seed(run_id: &str, master_seed: u64, epochs: usize) -> Self {
        let train_for = |label: &str| TrainConfig {
            epochs,
            shuffle_seed: derive_seed(master_seed, &format!("{label}-shuffle")),
            ..TrainConfig::default()
        };
        PipelineConfig {
            run_id: run_id.to_string(),
            node1_train: train_for("node1"),
            node2_train: train_for("node2"),
            host_train: train_for("host"),
            node1_init_seed: derive_seed(master_seed, "node1-init"),
            node2_init_seed: derive_seed(master_seed, "node2-init"),
            host_init_seed: derive_seed(master_seed, "host-init"),
        }
    }
}

/// A node's trained local state: frozen model, train-fitted scaler, and
/// the raw columns it owns. Scaler parameters never leave the node.
#[derive(Debug, Clone)]
pub struct NodeState<F> {
    pub id: ParticipantId,
    pub model: FfnnModel<F>,
    pub scaler: Scaler<F>,
    pub columns: Vec<String>,
}

/// Everything needed to serve inference after training.
#[derive(Debug, Clone)]
pub struct TrainedPipeline<F> {
    pub node1: NodeState<F>,
    pub node2: NodeState<F>,
    pub host_model: FfnnModel<F>,
}

/// Output of the training phase.
pub struct TrainingOutcome<F> {
    pub pipeline: TrainedPipeline<F>,
    pub node1_history: TrainHistory<F>,
    pub node2_history: TrainHistory<F>,
    pub host_history: TrainHistory<F>,
    /// Joined representation table the host model trained on.
    pub host_inputs: FeatureTable<F>,
    pub train_repr_seqs: [u64; 2],
}

/// Output of the inference phase.
pub struct InferenceOutcome<F> {
    pub predictions: PredictionSet<F>,
    pub test_split_seqs: [u64; 2],
    pub test_repr_seqs: [u64; 2],
}

/// A node's training-phase products: its state, the training history,
/// and the extracted train representations.
pub type NodeTraining<F> = (NodeState<F>, TrainHistory<F>, RepresentationFile<F>);

/// Trains one node on its partition: fit the scaler, train the local
/// model against the shared label, extract train representations.
pub fn train_local_node<F: Scalar>(
    id: ParticipantId,
    table: &FeatureTable<F>,
    cfg: &TrainConfig<F>,
    init_seed: u64,
) -> Result<NodeTraining<F>, ProtocolError> {
    let labels = table.labels_required()?.to_vec();
    let scaler = Scaler::fit(table)?;
    let scaled = scaler.transform(table)?;
    let model = FfnnModel::for_input_width(table.n_features(), init_seed)?;
    let (model, history) = model.train(&scaled, &labels, cfg)?;
    let representations = model.extract_representation(&scaled, id.as_str())?;
    Ok((
        NodeState {
            id,
            model,
            scaler,
            columns: table.names().to_vec(),
        },
        history,
        representations,
    ))
}

/// Joins two representation files on the common sample ID. Column order
/// is the node-1 block then the node-2 block; a mismatch in ID sets is a
/// join error naming the offending IDs.
pub fn concatenate_representations<F: Scalar>(
    left: &RepresentationFile<F>,
    right: &RepresentationFile<F>,
) -> Result<FeatureTable<F>, ProtocolError> {
    if left.ids() != right.ids() {
        let only_in = |a: &RepresentationFile<F>, b: &RepresentationFile<F>| {
            let b_ids: std::collections::HashSet<u64> = b.ids().iter().copied().collect();
            a.ids()
                .iter()
                .copied()
                .filter(|id| !b_ids.contains(id))
                .take(8)
                .collect::<Vec<_>>()
        };
        return Err(ProtocolError::Join {
            only_in_left: only_in(left, right),
            only_in_right: only_in(right, left),
        });
    }
    let mut names = Vec::with_capacity(left.width() + right.width());
    for (file, width) in [(left, left.width()), (right, right.width())] {
        for f in 1..=width {
            names.push(format!("{}_f{f}", file.source()));
        }
    }
    let n = left.n_rows();
    let mut columns = vec![Vec::with_capacity(n); left.width() + right.width()];
    for row in 0..n {
        for (slot, value) in columns
            .iter_mut()
            .zip(left.row(row).iter().chain(right.row(row)))
        {
            slot.push(*value);
        }
    }
    Ok(FeatureTable::new(left.ids().to_vec(), names, columns, None)?)
}

fn attach_labels<F: Scalar>(
    table: FeatureTable<F>,
    id_to_label: &BTreeMap<u64, u8>,
) -> Result<(FeatureTable<F>, Vec<u8>), ProtocolError> {
    let mut labels = Vec::with_capacity(table.n_rows());
    for id in table.ids() {
        let label = id_to_label.get(id).ok_or_else(|| {
            ProtocolError::Alignment(format!("no label for sample id {id}"))
        })?;
        labels.push(*label);
    }
    let relabeled = FeatureTable::new(
        table.ids().to_vec(),
        table.names().to_vec(),
        (0..table.n_features())
            .map(|idx| table.column(&table.names()[idx]).unwrap().to_vec())
            .collect(),
        Some(labels.clone()),
    )?;
    Ok((relabeled, labels))
}

/// In-process reference path: node training and the representation join
/// with no encryption, store, or ledger in between. The fabric pipeline
/// must reproduce its output bit-exactly.
pub fn local_training_inputs<F: Scalar>(
    t1: &FeatureTable<F>,
    t2: &FeatureTable<F>,
    cfg: &PipelineConfig<F>,
) -> Result<FeatureTable<F>, ProtocolError> {
    let (_, _, r1) = train_local_node(ParticipantId::Node1, t1, &cfg.node1_train, cfg.node1_init_seed)?;
    let (_, _, r2) = train_local_node(ParticipantId::Node2, t2, &cfg.node2_train, cfg.node2_init_seed)?;
    concatenate_representations(&r1, &r2)
}

/// A running deployment: the fabric plus one endpoint per participant.
pub struct Deployment {
    fabric: Arc<Fabric>,
    node1: Endpoint,
    node2: Endpoint,
    host: Endpoint,
}

impl Deployment {
    /// Registers the three participants, derives their key pairs from the
    /// master seed, and publishes public keys to the shared directory.
    pub fn new(store: Arc<dyn BlobStore>, ledger: Arc<Ledger>, master_seed: u64) -> Self {
        let mut directory = PublicKeyDirectory::default();
        let mut keypairs = Vec::new();
        for id in ParticipantId::ALL {
            let keys = envelope::keygen(
                id.as_str(),
                derive_seed(master_seed, &format!("{id}-keys")),
            );
            ledger.register_participant(id.as_str());
            directory.insert(id.as_str(), *keys.public());
            keypairs.push(keys);
        }
        let fabric = Arc::new(Fabric {
            store,
            ledger,
            directory,
        });
        let mut keypairs = keypairs.into_iter();
        let mut endpoint = |id| Endpoint {
            id,
            keys: keypairs.next().expect("three key pairs"),
            fabric: fabric.clone(),
        };
        Deployment {
            node1: endpoint(ParticipantId::Node1),
            node2: endpoint(ParticipantId::Node2),
            host: endpoint(ParticipantId::Host),
            fabric,
        }
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn endpoint(&self, id: ParticipantId) -> &Endpoint {
        match id {
            ParticipantId::Node1 => &self.node1,
            ParticipantId::Node2 => &self.node2,
            ParticipantId::Host => &self.host,
        }
    }

    /// Training phase: both nodes train concurrently on their partitions,
    /// send train representations through the fabric, and the host joins
    /// them and trains the aggregate model. Two ledger entries.
    pub fn run_training_phase<F: Scalar>(
        &self,
        t1: &FeatureTable<F>,
        t2: &FeatureTable<F>,
        cfg: &PipelineConfig<F>,
    ) -> Result<TrainingOutcome<F>, ProtocolError> {
        if t1.ids() != t2.ids() {
            return Err(ProtocolError::Alignment(
                "partition tables must share the same id sequence".to_string(),
            ));
        }
        let labels = t1.labels_required()?;
        if t2.labels_required()? != labels {
            return Err(ProtocolError::Alignment(
                "partition tables must share the same labels".to_string(),
            ));
        }
        let tag = TransferTag::new(&cfg.run_id, TransferPhase::TrainRepr)?;

        let (result1, result2) = std::thread::scope(|scope| {
            let handle1 = scope.spawn(|| {
                train_local_node(ParticipantId::Node1, t1, &cfg.node1_train, cfg.node1_init_seed)
            });
            let handle2 = scope.spawn(|| {
                train_local_node(ParticipantId::Node2, t2, &cfg.node2_train, cfg.node2_init_seed)
            });
            (
                handle1.join().expect("node 1 training thread panicked"),
                handle2.join().expect("node 2 training thread panicked"),
            )
        });
        let (state1, history1, reprs1) = result1?;
        let (state2, history2, reprs2) = result2?;

        // Sends are ordered node1-then-node2 so ledger sequence numbers
        // are reproducible across runs.
        let seq1 = self
            .node1
            .send_artifact(ParticipantId::Host, &tag, &reprs1.to_csv_bytes())?;
        let seq2 = self
            .node2
            .send_artifact(ParticipantId::Host, &tag, &reprs2.to_csv_bytes())?;

        // Host side: receive, parse, join, label, train.
        let f1 = RepresentationFile::from_csv_bytes(
            ParticipantId::Node1.as_str(),
            &self.host.receive_artifact(ParticipantId::Node1, &tag)?,
        )?;
        let f2 = RepresentationFile::from_csv_bytes(
            ParticipantId::Node2.as_str(),
            &self.host.receive_artifact(ParticipantId::Node2, &tag)?,
        )?;
        let joined = concatenate_representations(&f1, &f2)?;
        let id_to_label: BTreeMap<u64, u8> = t1
            .ids()
            .iter()
            .copied()
            .zip(labels.iter().copied())
            .collect();
        let (host_inputs, host_labels) = attach_labels(joined, &id_to_label)?;
        let host_model =
            FfnnModel::for_input_width(host_inputs.n_features(), cfg.host_init_seed)?;
        let (host_model, host_history) =
            host_model.train(&host_inputs, &host_labels, &cfg.host_train)?;

        Ok(TrainingOutcome {
            pipeline: TrainedPipeline {
                node1: state1,
                node2: state2,
                host_model,
            },
            node1_history: history1,
            node2_history: history2,
            host_history,
            host_inputs,
            train_repr_seqs: [seq1, seq2],
        })
    }

    /// Inference phase: the host splits the test columns out to the
    /// nodes (sealed to their keys), each node answers with frozen-model
    /// test representations, and the host joins and predicts. Four
    /// ledger entries; prediction order follows `t_test`.
    pub fn run_inference_phase<F: Scalar>(
        &self,
        pipeline: &TrainedPipeline<F>,
        t_test: &FeatureTable<F>,
        run_id: &str,
    ) -> Result<InferenceOutcome<F>, ProtocolError> {
        let split_tag = TransferTag::new(run_id, TransferPhase::TestSplit)?;
        let repr_tag = TransferTag::new(run_id, TransferPhase::TestRepr)?;

        // Host splits the test table by each node's columns.
        let mut split_seqs = [0u64; 2];
        for (slot, state) in [&pipeline.node1, &pipeline.node2].into_iter().enumerate() {
            let columns = t_test.select_columns(&state.columns)?;
            split_seqs[slot] = self.host.send_artifact(
                state.id,
                &split_tag,
                &payload::table_to_payload(&columns),
            )?;
        }

        // Each node transforms with its own train-fitted scaler and
        // answers with test representations from its frozen model.
        let mut repr_seqs = [0u64; 2];
        for (slot, state) in [&pipeline.node1, &pipeline.node2].into_iter().enumerate() {
            let endpoint = self.endpoint(state.id);
            let received = endpoint.receive_artifact(ParticipantId::Host, &split_tag)?;
            let table: FeatureTable<F> = payload::table_from_payload(&received)?;
            if table.names() != state.columns.as_slice() {
                return Err(ProtocolError::Alignment(format!(
                    "{} received columns {:?}, owns {:?}",
                    state.id,
                    table.names(),
                    state.columns
                )));
            }
            let scaled = state.scaler.transform(&table)?;
            let representations = state.model.extract_representation(&scaled, state.id.as_str())?;
            repr_seqs[slot] = endpoint.send_artifact(
                ParticipantId::Host,
                &repr_tag,
                &representations.to_csv_bytes(),
            )?;
        }

        // Host joins the test representations and predicts.
        let f1 = RepresentationFile::from_csv_bytes(
            ParticipantId::Node1.as_str(),
            &self.host.receive_artifact(ParticipantId::Node1, &repr_tag)?,
        )?;
        let f2 = RepresentationFile::from_csv_bytes(
            ParticipantId::Node2.as_str(),
            &self.host.receive_artifact(ParticipantId::Node2, &repr_tag)?,
        )?;
        let joined = concatenate_representations(&f1, &f2)?;
        if joined.n_features() != pipeline.host_model.input_width() {
            return Err(ProtocolError::Nn(NnError::Shape(format!(
                "joined test representations are {} wide, host model expects {}",
                joined.n_features(),
                pipeline.host_model.input_width()
            ))));
        }
        let sorted = pipeline.host_model.predict(&joined)?;

        // Emit predictions in the caller's test-row order.
        let by_id: BTreeMap<u64, (F, u8)> = sorted
            .ids
            .iter()
            .copied()
            .zip(sorted.probabilities.iter().copied().zip(sorted.classes.iter().copied()))
            .collect();
        let mut predictions = PredictionSet {
            ids: Vec::with_capacity(t_test.n_rows()),
            probabilities: Vec::with_capacity(t_test.n_rows()),
            classes: Vec::with_capacity(t_test.n_rows()),
        };
        for id in t_test.ids() {
            let (p, class) = by_id.get(id).ok_or_else(|| {
                ProtocolError::Alignment(format!("no prediction for sample id {id}"))
            })?;
            predictions.ids.push(*id);
            predictions.probabilities.push(*p);
            predictions.classes.push(*class);
        }

        Ok(InferenceOutcome {
            predictions,
            test_split_seqs: split_seqs,
            test_repr_seqs: repr_seqs,
        })
    }
}

/// Ledger sequence numbers of one run, grouped by phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeqs {
    pub train_repr: Vec<u64>,
    pub test_split: Vec<u64>,
    pub test_repr: Vec<u64>,
}

/// Human-readable record of a pipeline run: seeds, configuration, fabric
/// locations, per-phase ledger sequence numbers, artifact paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub run_id: String,
    pub mode: String,
    pub master_seed: u64,
    pub epochs: usize,
    pub data_dir: Option<String>,
    pub store_root: Option<String>,
    pub ledger_journal: Option<String>,
    pub phase_seqs: PhaseSeqs,
    pub artifacts: BTreeMap<String, String>,
}

pub const MANIFEST_FORMAT: &str = "splitchain-run";
pub const MANIFEST_VERSION: u32 = 1;

impl RunManifest {
    pub fn new(run_id: &str, mode: &str, master_seed: u64, epochs: usize) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            run_id: run_id.to_string(),
            mode: mode.to_string(),
            master_seed,
            epochs,
            data_dir: None,
            store_root: None,
            ledger_journal: None,
            phase_seqs: PhaseSeqs::default(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| ProtocolError::Manifest(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| ProtocolError::Manifest(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProtocolError::Manifest(format!("read {}: {e}", path.display())))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| ProtocolError::Manifest(e.to_string()))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(ProtocolError::Manifest(format!(
                "{} is not a run manifest",
                path.display()
            )));
        }
        if manifest.version != MANIFEST_VERSION {
            return Err(ProtocolError::Manifest(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    /// Resolves an artifact path relative to the manifest's directory.
    pub fn artifact_path(&self, manifest_path: &Path, name: &str) -> Result<PathBuf, ProtocolError> {
        let relative = self.artifacts.get(name).ok_or_else(|| {
            ProtocolError::Manifest(format!("manifest has no {name:?} artifact"))
        })?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        Ok(base.join(relative))
    }
}

//! Shared plumbing for the subcommands: the prepared-data manifest,
//! fabric construction, artifact loading, and report writing.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use splitchain_core::dataset::{FeatureTable, LoadOptions, PartitionSpec};
use splitchain_core::ledger::Ledger;
use splitchain_core::metrics::{classification_report, ClassificationReport};
use splitchain_core::nn::TrainHistory;
use splitchain_core::store::DirStore;
use splitchain_core::Real;

use crate::error::{CliError, Result};

pub const PREPARE_MANIFEST: &str = "prepare.json";
pub const RUN_MANIFEST: &str = "manifest.json";

/// Files written by `prepare` into its output directory.
pub const FEATURES_CSV: &str = "features.csv";
pub const TRAIN_CSV: &str = "train.csv";
pub const TEST_CSV: &str = "test.csv";
pub const NODE1_TRAIN_CSV: &str = "node1-train.csv";
pub const NODE2_TRAIN_CSV: &str = "node2-train.csv";

/// Record of a `prepare` invocation; `train` reads this to find the
/// artifacts and the partition layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub source: String,
    pub split_ratio: f64,
    pub stratified: bool,
    pub corr_threshold: Option<f64>,
    pub partition: PartitionSpec,
    pub kept_columns: Vec<(String, f64)>,
    pub dropped_columns: Vec<(String, f64)>,
    pub rows_total: usize,
    pub rows_train: usize,
    pub rows_test: usize,
}

pub const PREPARE_FORMAT: &str = "splitchain-prepare";

impl PrepareManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(CliError::internal)?;
        std::fs::write(dir.join(PREPARE_MANIFEST), text).map_err(CliError::internal)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PREPARE_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::input(format!(
                "no prepared dataset at {} ({e}); run `splitchain prepare` first",
                path.display()
            ))
        })?;
        let manifest: PrepareManifest =
            serde_json::from_str(&text).map_err(CliError::input)?;
        if manifest.format != PREPARE_FORMAT {
            return Err(CliError::input(format!(
                "{} is not a prepare manifest",
                path.display()
            )));
        }
        Ok(manifest)
    }
}

pub fn load_artifact_table(path: &Path) -> Result<FeatureTable<Real>> {
    FeatureTable::load_csv(path, &LoadOptions::artifact()).map_err(CliError::input)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))
}

/// Opens the directory store and journal-backed ledger for a run.
pub fn open_fabric_backends(store_root: &Path, journal: &Path) -> Result<(Arc<DirStore>, Arc<Ledger>)> {
    let store = DirStore::open(store_root).map_err(CliError::internal)?;
    let ledger = Ledger::with_journal(journal).map_err(CliError::internal)?;
    Ok((Arc::new(store), Arc::new(ledger)))
}

/// Writes `report-<name>.{json,txt}` (or `report.{json,txt}` for the
/// run's primary model) and returns the report.
pub fn write_report(
    out_dir: &Path,
    name: Option<&str>,
    y_true: &[u8],
    y_pred: &[u8],
) -> Result<ClassificationReport<Real>> {
    let report =
        classification_report::<Real>(y_true, y_pred).map_err(CliError::internal)?;
    let stem = match name {
        Some(n) => format!("report-{n}"),
        None => "report".to_string(),
    };
    std::fs::write(out_dir.join(format!("{stem}.json")), report.to_json())
        .map_err(CliError::internal)?;
    std::fs::write(out_dir.join(format!("{stem}.txt")), report.to_string())
        .map_err(CliError::internal)?;
    Ok(report)
}

pub fn read_report(dir: &Path, name: Option<&str>) -> Result<ClassificationReport<Real>> {
    let stem = match name {
        Some(n) => format!("report-{n}"),
        None => "report".to_string(),
    };
    let path = dir.join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::state(format!("missing report {} ({e})", path.display()))
    })?;
    ClassificationReport::from_json(&text).map_err(CliError::state)
}

/// Reads the accuracy column back out of a curves CSV.
pub fn read_curve_accuracy(path: &Path) -> Result<Vec<Real>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::state(format!("missing curves {} ({e})", path.display())))?;
    let mut accuracy = Vec::new();
    for line in text.lines().skip(1) {
        let cell = line.rsplit(',').next().unwrap_or("");
        accuracy.push(
            cell.parse::<Real>()
                .map_err(|_| CliError::state(format!("bad curves line {line:?}")))?,
        );
    }
    Ok(accuracy)
}

pub fn emit_curves(
    out_dir: &Path,
    histories: &[(String, &TrainHistory<Real>)],
    plot: bool,
) -> Result<Vec<PathBuf>> {
    let mut paths =
        splitchain_core::metrics::emit_curves(histories, out_dir).map_err(CliError::internal)?;
    if plot {
        for (name, history) in histories {
            let path = out_dir.join(format!("curves-{name}.svg"));
            splitchain_core::metrics::render_curves_svg(name, history, &path)
                .map_err(CliError::internal)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

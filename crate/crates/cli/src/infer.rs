//! `splitchain infer`: replay the three-leg inference round trip for a
//! trained decentralized run on a new input file.

use std::path::{Path, PathBuf};

use splitchain_core::dataset::{FeatureTable, LoadOptions};
use splitchain_core::ledger::EntryFilter;
use splitchain_core::protocol::{Deployment, RunManifest};
use splitchain_core::Real;

use crate::common::{open_fabric_backends, RUN_MANIFEST};
use crate::error::{CliError, Result};

pub struct InferArgs {
    pub run: PathBuf,
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub run_id: Option<String>,
}

fn manifest_path(run: &Path) -> PathBuf {
    if run.is_dir() {
        run.join(RUN_MANIFEST)
    } else {
        run.to_path_buf()
    }
}

/// Picks the first unused `<train-run>-infer-<n>` namespace so repeated
/// inferences append fresh tags instead of superseding old ones.
fn fresh_run_id(base: &str, ledger: &splitchain_core::ledger::Ledger) -> String {
    let tags: std::collections::HashSet<String> = ledger
        .history(&EntryFilter::all())
        .into_iter()
        .map(|e| e.tag)
        .collect();
    let mut n = 1usize;
    loop {
        let candidate = format!("{base}-infer-{n}");
        if !tags.iter().any(|t| t.starts_with(&format!("{candidate}:"))) {
            return candidate;
        }
        n += 1;
    }
}

pub fn run(args: &InferArgs) -> Result<()> {
    let manifest_path = manifest_path(&args.run);
    let manifest = RunManifest::load(&manifest_path).map_err(|e| {
        CliError::state(format!("no trained run at {}: {e}", manifest_path.display()))
    })?;
    if manifest.mode != "decentralized" {
        return Err(CliError::state(format!(
            "run {} was trained in {:?} mode; infer needs a decentralized run",
            manifest.run_id, manifest.mode
        )));
    }
    let store_root = manifest
        .store_root
        .as_ref()
        .ok_or_else(|| CliError::state("run manifest lacks a store root"))?;
    let journal = manifest
        .ledger_journal
        .as_ref()
        .ok_or_else(|| CliError::state("run manifest lacks a ledger journal"))?;

    let pipeline = crate::train::load_pipeline(&manifest_path, &manifest)?;
    let (store, ledger) = open_fabric_backends(Path::new(store_root), Path::new(journal))?;
    let deployment = Deployment::new(store, ledger, manifest.master_seed);

    // Inputs may or may not carry a label column; consume one named
    // "label" so it is not mistaken for a feature, and otherwise ignore
    // labels entirely.
    let header = {
        use std::io::BufRead;
        let file = std::fs::File::open(&args.input).map_err(|e| {
            CliError::input(format!("cannot read {}: {e}", args.input.display()))
        })?;
        let mut line = String::new();
        std::io::BufReader::new(file)
            .read_line(&mut line)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.input.display())))?;
        line
    };
    let label_column = header
        .split(',')
        .any(|h| h.trim() == "label")
        .then(|| "label".to_string());
    let input: FeatureTable<Real> = FeatureTable::load_csv(
        &args.input,
        &LoadOptions {
            id_column: None,
            label_column,
        },
    )
    .map_err(CliError::input)?;

    let run_id = match &args.run_id {
        Some(id) => id.clone(),
        None => fresh_run_id(&manifest.run_id, &deployment.fabric().ledger),
    };
    let outcome = deployment
        .run_inference_phase(&pipeline, &input, &run_id)
        .map_err(CliError::input)?;

    let out_path = args.out.clone().unwrap_or_else(|| {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(format!("predictions-{run_id}.csv"))
    });
    std::fs::write(&out_path, outcome.predictions.to_csv_bytes())
        .map_err(CliError::internal)?;

    println!(
        "inference run {run_id}: {} predictions written to {} (4 fabric transfers registered)",
        outcome.predictions.ids.len(),
        out_path.display()
    );
    Ok(())
}

//! `splitchain prepare`: ingest or synthesize the dataset, engineer
//! features, split 7:3, partition vertically, and write the artifacts.

use std::path::{Path, PathBuf};

use splitchain_core::dataset::{
    engineer_features, split_train_test, split_train_test_stratified, synthesize_dataset,
    vertical_partition, EngineerConfig, FeatureTable, LoadOptions, PartitionSpec,
};
use splitchain_core::rng::derive_seed;
use splitchain_core::Real;

use crate::common::{
    ensure_dir, PrepareManifest, FEATURES_CSV, NODE1_TRAIN_CSV, NODE2_TRAIN_CSV, PREPARE_FORMAT,
    TEST_CSV, TRAIN_CSV,
};
use crate::error::{CliError, Result};

pub struct PrepareArgs {
    pub csv: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub seed: u64,
    pub ratio: f64,
    pub stratified: bool,
    pub corr_threshold: f64,
    pub label_col: String,
    pub income_col: String,
    pub spending_col: String,
    pub out: PathBuf,
}

/// `n=5000,rate=0.096` specs for the synthetic source.
fn parse_synthetic_spec(spec: &str) -> Result<(usize, f64)> {
    let mut n = 5000usize;
    let mut rate = 0.096f64;
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("bad synthetic spec fragment {part:?}")))?;
        match key.trim() {
            "n" => {
                n = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(format!("bad synthetic n {value:?}")))?
            }
            "rate" => {
                rate = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(format!("bad synthetic rate {value:?}")))?
            }
            other => {
                return Err(CliError::input(format!(
                    "unknown synthetic key {other:?} (use n=..,rate=..)"
                )))
            }
        }
    }
    Ok((n, rate))
}

pub fn run(args: &PrepareArgs) -> Result<()> {
    ensure_dir(&args.out)?;

    let (engineered, partition, source, threshold, kept, dropped) = match (&args.csv, &args.synthetic)
    {
        (Some(path), None) => {
            let raw: FeatureTable<Real> =
                FeatureTable::load_csv(path, &LoadOptions::labeled(&args.label_col))
                    .map_err(CliError::input)?;
            let config = EngineerConfig {
                corr_threshold: args.corr_threshold,
                income_column: args.income_col.clone(),
                spending_column: args.spending_col.clone(),
                ..EngineerConfig::default()
            };
            let (engineered, report) =
                engineer_features(&raw, &config).map_err(CliError::input)?;
            let partition =
                PartitionSpec::infer(engineered.names()).map_err(CliError::input)?;
            (
                engineered,
                partition,
                format!("csv:{}", path.display()),
                Some(args.corr_threshold),
                report.kept,
                report.dropped,
            )
        }
        (None, Some(spec)) => {
            let (n, rate) = parse_synthetic_spec(spec)?;
            let table = synthesize_dataset::<Real>(n, rate, args.seed)
                .map_err(CliError::input)?;
            // The generator emits the 10 engineered-equivalent features
            // directly; correlation elimination does not apply.
            (
                table,
                PartitionSpec::synthetic(),
                format!("synthetic:n={n},rate={rate}"),
                None,
                Vec::new(),
                Vec::new(),
            )
        }
        _ => {
            return Err(CliError::input(
                "exactly one of --csv or --synthetic is required",
            ))
        }
    };

    let split_seed = derive_seed(args.seed, "train-test-split");
    let (train, test) = if args.stratified {
        split_train_test_stratified(&engineered, args.ratio, split_seed)
    } else {
        split_train_test(&engineered, args.ratio, split_seed)
    }
    .map_err(CliError::input)?;
    let (t1, t2) = vertical_partition(&train, &partition).map_err(CliError::input)?;

    let write = |name: &str, table: &FeatureTable<Real>| -> Result<()> {
        table
            .write_csv(&args.out.join(name))
            .map_err(CliError::internal)
    };
    write(FEATURES_CSV, &engineered)?;
    write(TRAIN_CSV, &train)?;
    write(TEST_CSV, &test)?;
    write(NODE1_TRAIN_CSV, &t1)?;
    write(NODE2_TRAIN_CSV, &t2)?;

    let manifest = PrepareManifest {
        format: PREPARE_FORMAT.to_string(),
        version: 1,
        seed: args.seed,
        source,
        split_ratio: args.ratio,
        stratified: args.stratified,
        corr_threshold: threshold,
        partition: partition.clone(),
        kept_columns: kept,
        dropped_columns: dropped,
        rows_total: engineered.n_rows(),
        rows_train: train.n_rows(),
        rows_test: test.n_rows(),
    };
    manifest.save(&args.out)?;

    println!(
        "prepared {} rows ({} train / {} test) into {}",
        engineered.n_rows(),
        train.n_rows(),
        test.n_rows(),
        args.out.display()
    );
    println!(
        "node1 (personal) columns: {:?}",
        partition.personal_columns
    );
    println!("node2 (bank) columns: {:?}", partition.bank_columns);
    if !manifest.dropped_columns.is_empty() {
        let dropped: Vec<&str> = manifest
            .dropped_columns
            .iter()
            .map(|(name, _)| name.as_str())
            .collect();
        println!("dropped by correlation threshold: {dropped:?}");
    }
    Ok(())
}

/// Loads the prepared artifacts back for `train`.
pub struct PreparedData {
    pub train: FeatureTable<Real>,
    pub test: FeatureTable<Real>,
    pub node1_train: FeatureTable<Real>,
    pub node2_train: FeatureTable<Real>,
}

pub fn load_prepared(dir: &Path) -> Result<PreparedData> {
    // The manifest is the marker that `prepare` ran here.
    PrepareManifest::load(dir)?;
    Ok(PreparedData {
        train: crate::common::load_artifact_table(&dir.join(TRAIN_CSV))?,
        test: crate::common::load_artifact_table(&dir.join(TEST_CSV))?,
        node1_train: crate::common::load_artifact_table(&dir.join(NODE1_TRAIN_CSV))?,
        node2_train: crate::common::load_artifact_table(&dir.join(NODE2_TRAIN_CSV))?,
    })
}

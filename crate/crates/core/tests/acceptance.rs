//! Acceptance suite. One test per criterion, each printing a single
//! pass/fail line (run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria too).

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use splitchain_core::dataset::{synthesize_dataset, vertical_partition, PartitionSpec};
use splitchain_core::envelope;
use splitchain_core::ledger::Ledger;
use splitchain_core::metrics::{accuracy, classification_report, convergence_epoch};
use splitchain_core::protocol::{
    concatenate_representations, local_training_inputs, train_local_node, Deployment,
    ParticipantId, PipelineConfig,
};
use splitchain_core::store::{BlobStore, DirStore, MemStore};

use common::*;

fn criterion(number: usize, name: &str, result: Result<String, String>) {
    match result {
        Ok(detail) => println!("criterion {number} ({name}): PASS — {detail}"),
        Err(detail) => {
            println!("criterion {number} ({name}): FAIL — {detail}");
            panic!("criterion {number} ({name}) failed: {detail}");
        }
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed <= budget {
        Ok(())
    } else {
        Err(format!("runtime {elapsed:?} exceeded budget {budget:?}"))
    }
}

#[test]
fn criterion_1_gradient_oracle() {
    let started = Instant::now();
    let result = (|| {
        let mut worst = 0.0f64;
        for seed in 0..20u64 {
            let (table, labels) = random_table(8, 3, 1000 + seed);
            let mut model = off_kink_model(&[3, 3, 6, 3, 1], seed);
            let (_, analytic) = model
                .loss_gradients(&table, &labels)
                .map_err(|e| e.to_string())?;
            let numeric = finite_difference_gradients(&mut model, &table, &labels, 1e-5);
            let err = max_relative_error(&analytic, &numeric);
            if err > worst {
                worst = err;
            }
            if err >= 1e-4 {
                return Err(format!("model seed {seed}: max relative error {err:.3e}"));
            }
        }
        within_budget(started.elapsed(), Duration::from_secs(5))?;
        Ok(format!(
            "20 models x 61 params, max relative error {worst:.3e} (< 1e-4) in {:?}",
            started.elapsed()
        ))
    })();
    criterion(1, "gradient oracle", result);
}

#[test]
fn criterion_2_fabric_transparency() {
    let started = Instant::now();
    let result = (|| {
        let data = synthesize_dataset::<f64>(50, 0.3, 21).map_err(|e| e.to_string())?;
        let (t1, t2) =
            vertical_partition(&data, &PartitionSpec::synthetic()).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig::<f64>::from_master_seed("transparency", 21, 10);

        let deployment = Deployment::new(
            Arc::new(MemStore::new()),
            Arc::new(Ledger::in_memory()),
            21,
        );
        let fabric_inputs = deployment
            .run_training_phase(&t1, &t2, &cfg)
            .map_err(|e| e.to_string())?
            .host_inputs;
        let local_inputs = local_training_inputs(&t1, &t2, &cfg).map_err(|e| e.to_string())?;

        if fabric_inputs.ids() != local_inputs.ids()
            || fabric_inputs.names() != local_inputs.names()
        {
            return Err("fabric and in-process inputs disagree on ids or columns".to_string());
        }
        for row in 0..local_inputs.n_rows() {
            let (a, b) = (fabric_inputs.row(row), local_inputs.row(row));
            if a != b {
                return Err(format!("row {row} differs: fabric {a:?} vs local {b:?}"));
            }
        }
        within_budget(started.elapsed(), Duration::from_secs(5))?;
        Ok(format!(
            "50 rows x 10 joined features bit-identical through seal/put/register/fetch/get/open in {:?}",
            started.elapsed()
        ))
    })();
    criterion(2, "fabric transparency oracle", result);
}

#[test]
fn criterion_3_round_trips_and_tamper_rejection() {
    let started = Instant::now();
    let result = (|| {
        let mut rng = splitchain_core::rng::seeded(33);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let dir_store = DirStore::open(dir.path()).map_err(|e| e.to_string())?;
        let mem_store = MemStore::new();
        let keys = envelope::keygen("host", 33);

        let mut payloads = Vec::new();
        for i in 0..120usize {
            let len = 1 + (splitchain_core::rng::uniform(&mut rng) * 2048.0) as usize;
            let mut payload = vec![0u8; len];
            rand::RngCore::fill_bytes(&mut rng, &mut payload);
            payload[0] = i as u8; // keep payloads distinct
            payloads.push(payload);
        }

        for payload in &payloads {
            for store in [&dir_store as &dyn BlobStore, &mem_store] {
                let hash = store.put(payload).map_err(|e| e.to_string())?;
                let back = store.get(&hash).map_err(|e| e.to_string())?;
                if &back != payload {
                    return Err("store round trip mismatch".to_string());
                }
            }
            let sealed = envelope::seal(payload, keys.public()).map_err(|e| e.to_string())?;
            let opened = envelope::open(&sealed, keys.private()).map_err(|e| e.to_string())?;
            if &opened != payload {
                return Err("envelope round trip mismatch".to_string());
            }
        }

        // Tamper rejection: several random single-bit flips per payload,
        // plus every bit of one whole envelope.
        let mut flips = 0usize;
        for payload in &payloads {
            let sealed = envelope::seal(payload, keys.public()).map_err(|e| e.to_string())?;
            let bytes = sealed.to_bytes();
            for _ in 0..3 {
                let bit = (splitchain_core::rng::uniform(&mut rng) * (bytes.len() * 8) as f64)
                    as usize;
                let mut tampered = bytes.clone();
                tampered[bit / 8] ^= 1 << (bit % 8);
                flips += 1;
                let survived = envelope::SealedEnvelope::from_bytes(&tampered)
                    .ok()
                    .and_then(|e| envelope::open(&e, keys.private()).ok());
                if survived.is_some() {
                    return Err(format!("bit flip at {bit} went undetected"));
                }
            }
        }
        let sealed = envelope::seal(&payloads[0], keys.public()).map_err(|e| e.to_string())?;
        let bytes = sealed.to_bytes();
        for bit in 0..bytes.len() * 8 {
            let mut tampered = bytes.clone();
            tampered[bit / 8] ^= 1 << (bit % 8);
            flips += 1;
            let survived = envelope::SealedEnvelope::from_bytes(&tampered)
                .ok()
                .and_then(|e| envelope::open(&e, keys.private()).ok());
            if survived.is_some() {
                return Err(format!("exhaustive bit flip at {bit} went undetected"));
            }
        }

        within_budget(started.elapsed(), Duration::from_secs(10))?;
        Ok(format!(
            "120 payloads round-tripped through both stores and envelopes; {flips}/{flips} bit flips rejected in {:?}",
            started.elapsed()
        ))
    })();
    criterion(3, "round trips and tamper rejection", result);
}

#[test]
fn criterion_4_ledger_audit() {
    let result = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let journal = dir.path().join("ledger.journal");
        let store = Arc::new(MemStore::new());

        let data = synthesize_dataset::<f64>(60, 0.3, 4).map_err(|e| e.to_string())?;
        let (train, test) = splitchain_core::dataset::split_train_test(&data, 0.7, 4)
            .map_err(|e| e.to_string())?;
        let (t1, t2) =
            vertical_partition(&train, &PartitionSpec::synthetic()).map_err(|e| e.to_string())?;

        let run = |run_id: &str| -> Result<(), String> {
            let ledger =
                Arc::new(Ledger::with_journal(&journal).map_err(|e| e.to_string())?);
            let deployment = Deployment::new(store.clone(), ledger, 4);
            let cfg = PipelineConfig::<f64>::from_master_seed(run_id, 4, 4);
            let outcome = deployment
                .run_training_phase(&t1, &t2, &cfg)
                .map_err(|e| e.to_string())?;
            deployment
                .run_inference_phase(&outcome.pipeline, &test, run_id)
                .map_err(|e| e.to_string())?;
            Ok(())
        };

        run("audit-1")?;
        let after_first = std::fs::read_to_string(&journal).map_err(|e| e.to_string())?;
        let entries = splitchain_core::ledger::read_journal(&journal).map_err(|e| e.to_string())?;
        if entries.len() != 6 {
            return Err(format!("expected 6 entries after one run, found {}", entries.len()));
        }
        let count = |phase: &str| {
            entries
                .iter()
                .filter(|e| e.tag == format!("audit-1:{phase}"))
                .count()
        };
        let (tr, ts, te) = (count("train-repr"), count("test-split"), count("test-repr"));
        if (tr, ts, te) != (2, 2, 2) {
            return Err(format!(
                "phase counts train-repr {tr}, test-split {ts}, test-repr {te}, expected 2/2/2"
            ));
        }

        run("audit-2")?;
        let after_second = std::fs::read_to_string(&journal).map_err(|e| e.to_string())?;
        if !after_second.starts_with(&after_first) {
            return Err("journal was rewritten; earlier entries changed".to_string());
        }
        let entries = splitchain_core::ledger::read_journal(&journal).map_err(|e| e.to_string())?;
        if entries.len() != 12 {
            return Err(format!("expected 12 entries after two runs, found {}", entries.len()));
        }
        Ok("6 registrations per run (2 train-repr, 2 test-split, 2 test-repr); journal append-only across runs".to_string())
    })();
    criterion(4, "ledger audit", result);
}

#[test]
fn criterion_5_paper_reproduction() {
    let Some(path) = kaggle_csv_path() else {
        println!(
            "criterion 5 (paper reproduction): SKIP — public loan CSV not supplied \
             (set SPLITCHAIN_KAGGLE_CSV or place it at data/Bank_Personal_Loan_Modelling.csv)"
        );
        return;
    };
    let started = Instant::now();
    let result = (|| {
        let (data, partition) = load_kaggle(&path);
        let mut h = Vec::new();
        let mut n1 = Vec::new();
        let mut n2 = Vec::new();
        let mut c = Vec::new();
        let mut p1 = Vec::new();
        let mut r1 = Vec::new();
        let mut f1 = Vec::new();
        for seed in 0..5u64 {
            let run = run_full_comparison(&data, &partition, seed, 50);
            h.push(run.acc_host);
            n1.push(run.acc_node1);
            n2.push(run.acc_node2);
            c.push(run.acc_centralized);
            p1.push(run.host_report.class1.precision);
            r1.push(run.host_report.class1.recall);
            f1.push(run.host_report.class1.f1);
        }
        let (mh, mn1, mn2, mc) = (mean(&h), mean(&n1), mean(&n2), mean(&c));
        let checks = [
            ("H accuracy vs 0.9813", mh, 0.9813, 0.015),
            ("N1 accuracy vs 0.978", mn1, 0.978, 0.015),
            ("N2 accuracy vs 0.9093", mn2, 0.9093, 0.015),
            ("class-1 precision vs 0.96", mean(&p1), 0.96, 0.05),
            ("class-1 recall vs 0.85", mean(&r1), 0.85, 0.05),
            ("class-1 F1 vs 0.91", mean(&f1), 0.91, 0.05),
        ];
        for (name, got, want, tolerance) in checks {
            if (got - want).abs() > tolerance {
                return Err(format!("{name}: mean {got:.4} not within ±{tolerance}"));
            }
        }
        if (mh - mc).abs() > 0.010 {
            return Err(format!(
                "|acc(H) - acc(centralized)| = {:.4} exceeds 1.0 point",
                (mh - mc).abs()
            ));
        }
        within_budget(started.elapsed(), Duration::from_secs(120))?;
        Ok(format!(
            "5-seed means: H {mh:.4}, N1 {mn1:.4}, N2 {mn2:.4}, centralized {mc:.4} in {:?}",
            started.elapsed()
        ))
    })();
    criterion(5, "paper reproduction", result);
}

#[test]
fn criterion_6_synthetic_fallback() {
    let result = (|| {
        let mut h = Vec::new();
        let mut n1 = Vec::new();
        let mut n2 = Vec::new();
        let mut c = Vec::new();
        for seed in 0..5u64 {
            let data = synthesize_dataset::<f64>(5000, 0.096, seed).map_err(|e| e.to_string())?;
            let run = run_full_comparison(&data, &PartitionSpec::synthetic(), seed, 50);
            h.push(run.acc_host);
            n1.push(run.acc_node1);
            n2.push(run.acc_node2);
            c.push(run.acc_centralized);
        }
        let (mh, mn1, mn2, mc) = (mean(&h), mean(&n1), mean(&n2), mean(&c));
        if mh < mn1 {
            return Err(format!("mean acc(H) {mh:.4} < mean acc(N1) {mn1:.4}"));
        }
        if mh < mn2 {
            return Err(format!("mean acc(H) {mh:.4} < mean acc(N2) {mn2:.4}"));
        }
        if (mh - mc).abs() > 0.015 {
            return Err(format!(
                "|acc(H) - acc(centralized)| = {:.4} exceeds 1.5 points",
                (mh - mc).abs()
            ));
        }
        Ok(format!(
            "5-seed means on n=5000, rate 0.096: H {mh:.4} >= N1 {mn1:.4}, N2 {mn2:.4}; |H - C| = {:.4}",
            (mh - mc).abs()
        ))
    })();
    criterion(6, "synthetic fallback", result);
}

#[test]
fn criterion_7_metrics_oracle() {
    let result = (|| {
        // 8-sample fixture; confusion matrix by hand:
        //   true 1: rows 0,1,2 -> predictions 1,1,0  (tp=2, fn=1)
        //   true 0: rows 3..8  -> predictions 0,0,0,0,1 (tn=4, fp=1)
        let y_true = [1u8, 1, 1, 0, 0, 0, 0, 0];
        let y_pred = [1u8, 1, 0, 0, 0, 0, 0, 1];
        let report = classification_report::<f64>(&y_true, &y_pred)
            .map_err(|e| e.to_string())?;
        // Defining formulas evaluated by hand from those counts:
        // precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2pr/(p+r).
        let (p1, r1) = (2.0 / 3.0, 2.0 / 3.0);
        let (p0, r0) = (4.0 / 5.0, 4.0 / 5.0);
        let f1_1 = 2.0 * p1 * r1 / (p1 + r1);
        let f1_0 = 2.0 * p0 * r0 / (p0 + r0);
        let expected = [
            ("class1 precision", report.class1.precision, p1),
            ("class1 recall", report.class1.recall, r1),
            ("class1 f1", report.class1.f1, f1_1),
            ("class0 precision", report.class0.precision, p0),
            ("class0 recall", report.class0.recall, r0),
            ("class0 f1", report.class0.f1, f1_0),
            ("accuracy", report.accuracy, 6.0 / 8.0),
            ("macro f1", report.macro_avg.f1, (f1_0 + f1_1) * 0.5),
            (
                "weighted precision",
                report.weighted_avg.precision,
                (p0 * 5.0 + p1 * 3.0) / 8.0,
            ),
        ];
        for (name, got, want) in expected {
            if got != want {
                return Err(format!("{name}: got {got}, hand-computed {want}"));
            }
        }
        if (report.class1.support, report.class0.support) != (3, 5) {
            return Err("supports disagree with the fixture".to_string());
        }

        // Micro consistency on 100 random label vectors.
        let mut rng = splitchain_core::rng::seeded(77);
        for round in 0..100 {
            let n = 1 + (splitchain_core::rng::uniform(&mut rng) * 60.0) as usize;
            let draw = |rng: &mut _| {
                (0..n)
                    .map(|_| u8::from(splitchain_core::rng::uniform(rng) < 0.3))
                    .collect::<Vec<u8>>()
            };
            let t = draw(&mut rng);
            let p = draw(&mut rng);
            let report = classification_report::<f64>(&t, &p).map_err(|e| e.to_string())?;
            let acc = accuracy::<f64>(&t, &p).map_err(|e| e.to_string())?;
            if (report.accuracy - acc).abs() > 1e-12
                || (report.weighted_avg.recall - acc).abs() > 1e-12
            {
                return Err(format!(
                    "round {round}: accuracy {acc} != support-weighted recall {}",
                    report.weighted_avg.recall
                ));
            }
        }
        Ok("8-sample fixture exact; accuracy = support-weighted recall on 100 random vectors".to_string())
    })();
    criterion(7, "metrics oracle", result);
}

/// Soft check (logged, not gating): the decentralized host model should
/// converge no later than the centralized baseline.
#[test]
fn criterion_8_convergence_proxy() {
    let (data, partition, source) = match kaggle_csv_path() {
        Some(path) => {
            let (data, partition) = load_kaggle(&path);
            (data, partition, "public loan CSV")
        }
        None => {
            println!(
                "criterion 8 (convergence proxy): SKIP — public loan CSV not supplied; \
                 the claim is specific to that dataset"
            );
            return;
        }
    };
    let run = run_full_comparison(&data, &partition, 0, 50);
    let threshold = 0.98;
    let host = convergence_epoch(&run.host_history.accuracy, threshold);
    let centralized = convergence_epoch(&run.centralized_history.accuracy, threshold);
    match (host, centralized) {
        (Some(h), Some(c)) if h <= c => println!(
            "criterion 8 (convergence proxy): PASS — on {source}, decentralized reaches 98% of final \
             training accuracy at epoch {h}, centralized at epoch {c}"
        ),
        (h, c) => println!(
            "criterion 8 (convergence proxy): INFO — deviation from the faster-convergence claim \
             on {source}: decentralized {h:?}, centralized {c:?} (logged, not gating)"
        ),
    }
}

/// Sends of identical sealed bytes deduplicate in the store while the
/// ledger stays append-only (composed store + ledger behavior).
#[test]
fn identical_sealed_bytes_share_one_blob() {
    let store = MemStore::new();
    let ledger = Ledger::in_memory();
    ledger.register_participant("node1");
    ledger.register_participant("host");

    let keys = envelope::keygen("host", 5);
    let sealed = envelope::seal(b"same artifact bytes", keys.public())
        .unwrap()
        .to_bytes();
    let h1 = store.put(&sealed).unwrap();
    let h2 = store.put(&sealed).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(store.blob_count(), 1);
    ledger.register_hash("node1", "host", "r:train-repr", h1).unwrap();
    ledger.register_hash("node1", "host", "r:train-repr", h2).unwrap();
    assert_eq!(ledger.len(), 2);
}

/// Ten-feature toy run: the joined table is 20 rows x 10 columns.
#[test]
fn toy_join_has_expected_shape() {
    let data = synthesize_dataset::<f64>(20, 0.3, 9).unwrap();
    let (t1, t2) = vertical_partition(&data, &PartitionSpec::synthetic()).unwrap();
    let cfg = PipelineConfig::<f64>::from_master_seed("toy", 9, 2);
    let (_, _, r1) =
        train_local_node(ParticipantId::Node1, &t1, &cfg.node1_train, cfg.node1_init_seed).unwrap();
    let (_, _, r2) =
        train_local_node(ParticipantId::Node2, &t2, &cfg.node2_train, cfg.node2_init_seed).unwrap();
    let joined = concatenate_representations(&r1, &r2).unwrap();
    assert_eq!(joined.n_rows(), 20);
    assert_eq!(joined.n_features(), 10);
}

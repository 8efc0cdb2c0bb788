//! `splitchain compare`: side-by-side metrics for the decentralized host
//! model, the local node models, and the centralized baseline.

use std::path::{Path, PathBuf};

use serde::Serialize;
use splitchain_core::metrics::{convergence_epoch, ClassificationReport};
use splitchain_core::Real;

use crate::common::{ensure_dir, read_curve_accuracy, read_report};
use crate::error::{CliError, Result};

pub struct CompareArgs {
    pub decentralized: PathBuf,
    pub centralized: PathBuf,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    model: String,
    accuracy: Real,
    precision: Real,
    recall: Real,
    f1: Real,
}

#[derive(Debug, Serialize)]
struct Comparison {
    rows: Vec<ComparisonRow>,
    accuracy_delta: Real,
    convergence_epoch_decentralized: Option<usize>,
    convergence_epoch_centralized: Option<usize>,
}

fn row(model: &str, report: &ClassificationReport<Real>) -> ComparisonRow {
    // Summary rows carry macro-averaged precision/recall/F1.
    ComparisonRow {
        model: model.to_string(),
        accuracy: report.accuracy,
        precision: report.macro_avg.precision,
        recall: report.macro_avg.recall,
        f1: report.macro_avg.f1,
    }
}

/// Training-accuracy series for a run directory, whichever curve file
/// the mode produced.
fn curve_for(dir: &Path, preference: &[&str]) -> Option<Vec<Real>> {
    preference
        .iter()
        .map(|name| dir.join(format!("curves-{name}.csv")))
        .find(|path| path.exists())
        .and_then(|path| read_curve_accuracy(&path).ok())
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let host_report = read_report(&args.decentralized, None)?;
    let centralized_report = read_report(&args.centralized, None)?;

    let mut rows = Vec::new();
    for node in ["node1", "node2"] {
        if let Ok(report) = read_report(&args.decentralized, Some(node)) {
            rows.push(row(&format!("N-{node}"), &report));
        }
    }
    rows.push(row("H-decentralized", &host_report));
    rows.push(row("centralized", &centralized_report));

    let threshold = 0.98;
    let comparison = Comparison {
        accuracy_delta: (host_report.accuracy - centralized_report.accuracy).abs(),
        convergence_epoch_decentralized: curve_for(
            &args.decentralized,
            &["host", "centralized", "node1", "node2"],
        )
        .and_then(|acc| convergence_epoch(&acc, threshold)),
        convergence_epoch_centralized: curve_for(
            &args.centralized,
            &["centralized", "host", "node1", "node2"],
        )
        .and_then(|acc| convergence_epoch(&acc, threshold)),
        rows,
    };

    let mut text = String::new();
    text.push_str(&format!(
        "{:<16} {:>9} {:>10} {:>8} {:>8}\n",
        "model", "accuracy", "precision", "recall", "f1"
    ));
    for row in &comparison.rows {
        text.push_str(&format!(
            "{:<16} {:>9.4} {:>10.2} {:>8.2} {:>8.2}\n",
            row.model, row.accuracy, row.precision, row.recall, row.f1
        ));
    }
    text.push_str(&format!(
        "\n|accuracy(decentralized) - accuracy(centralized)| = {:.4}\n",
        comparison.accuracy_delta
    ));
    let epoch = |e: Option<usize>| match e {
        Some(n) => n.to_string(),
        None => "n/a".to_string(),
    };
    text.push_str(&format!(
        "convergence epoch at 98% of final training accuracy: decentralized {}, centralized {}\n",
        epoch(comparison.convergence_epoch_decentralized),
        epoch(comparison.convergence_epoch_centralized),
    ));

    print!("{text}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        std::fs::write(out.join("comparison.txt"), &text).map_err(CliError::internal)?;
        let json = serde_json::to_string_pretty(&comparison).map_err(CliError::internal)?;
        std::fs::write(out.join("comparison.json"), json).map_err(CliError::internal)?;
    }
    Ok(())
}

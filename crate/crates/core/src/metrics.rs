//! Binary classification metrics and training-curve emission.
//!
//! Reports carry per-class precision/recall/F1/support, accuracy, and
//! macro/weighted averages. The text rendering mirrors the familiar
//! classification-report layout (2-decimal rates, 4-decimal accuracy);
//! the JSON form keeps full precision.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::TrainHistory;
use crate::scalar::{c, Scalar};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {true_len} true labels vs {pred_len} predictions")]
    ShapeMismatch { true_len: usize, pred_len: usize },
    #[error("metrics need at least one sample")]
    Empty,
    #[error("label {value} at position {index} is not binary")]
    NonBinaryLabel { index: usize, value: u8 },
    #[error("history for {0:?} is empty")]
    EmptyHistory(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Precision/recall/F1 and support for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub support: usize,
}

/// Averaged precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

/// Full binary classification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<F> {
    pub class0: ClassMetrics<F>,
    pub class1: ClassMetrics<F>,
    pub accuracy: F,
    pub macro_avg: AverageMetrics<F>,
    pub weighted_avg: AverageMetrics<F>,
    pub total_support: usize,
    /// Set when any precision/recall denominator was zero and the metric
    /// was reported as 0.
    pub zero_division: bool,
}

fn check_inputs(y_true: &[u8], y_pred: &[u8]) -> Result<(), MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::ShapeMismatch {
            true_len: y_true.len(),
            pred_len: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (index, &value) in y_true.iter().chain(y_pred).enumerate() {
        if value > 1 {
            return Err(MetricsError::NonBinaryLabel {
                index: index % y_true.len(),
                value,
            });
        }
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy<F: Scalar>(y_true: &[u8], y_pred: &[u8]) -> Result<F, MetricsError> {
    check_inputs(y_true, y_pred)?;
    let hits = y_true
        .iter()
        .zip(y_pred)
        .filter(|(t, p)| t == p)
        .count();
    Ok(c::<F>(hits as f64) / c::<F>(y_true.len() as f64))
}

/// Builds the full report from true and predicted binary labels.
/// Zero-denominator precision/recall are reported as 0 with a flag.
pub fn classification_report<F: Scalar>(
    y_true: &[u8],
    y_pred: &[u8],
) -> Result<ClassificationReport<F>, MetricsError> {
    check_inputs(y_true, y_pred)?;
    let mut counts = [[0usize; 2]; 2]; // counts[true][pred]
    for (&t, &p) in y_true.iter().zip(y_pred) {
        counts[t as usize][p as usize] += 1;
    }
    let total = y_true.len();
    let mut zero_division = false;
    let mut rate = |num: usize, den: usize| -> F {
        if den == 0 {
            zero_division = true;
            F::zero()
        } else {
            c::<F>(num as f64) / c::<F>(den as f64)
        }
    };

    let mut per_class = Vec::with_capacity(2);
    for class in [0usize, 1] {
        let tp = counts[class][class];
        let predicted = counts[0][class] + counts[1][class];
        let support = counts[class][0] + counts[class][1];
        let precision = rate(tp, predicted);
        let recall = rate(tp, support);
        let f1 = if precision + recall == F::zero() {
            F::zero()
        } else {
            c::<F>(2.0) * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
        });
    }
    let (class0, class1) = (per_class[0], per_class[1]);

    let half = c::<F>(0.5);
    let macro_avg = AverageMetrics {
        precision: (class0.precision + class1.precision) * half,
        recall: (class0.recall + class1.recall) * half,
        f1: (class0.f1 + class1.f1) * half,
    };
    let total_f = c::<F>(total as f64);
    let weight = |m0: F, m1: F| {
        (m0 * c::<F>(class0.support as f64) + m1 * c::<F>(class1.support as f64)) / total_f
    };
    let weighted_avg = AverageMetrics {
        precision: weight(class0.precision, class1.precision),
        recall: weight(class0.recall, class1.recall),
        f1: weight(class0.f1, class1.f1),
    };
    let accuracy = c::<F>((counts[0][0] + counts[1][1]) as f64) / total_f;

    Ok(ClassificationReport {
        class0,
        class1,
        accuracy,
        macro_avg,
        weighted_avg,
        total_support: total,
        zero_division,
    })
}

impl<F: Scalar> ClassificationReport<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl<F: Scalar> fmt::Display for ClassificationReport<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let two = |v: F| format!("{:.2}", v.to_f64().unwrap_or(f64::NAN));
        writeln!(
            f,
            "{:>12} {:>10} {:>10} {:>10} {:>10}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        for (label, m) in [("0", &self.class0), ("1", &self.class1)] {
            writeln!(
                f,
                "{:>12} {:>10} {:>10} {:>10} {:>10}",
                label,
                two(m.precision),
                two(m.recall),
                two(m.f1),
                m.support
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>12} {:>10} {:>10} {:>10} {:>10}",
            "accuracy",
            "",
            "",
            format!("{:.4}", self.accuracy.to_f64().unwrap_or(f64::NAN)),
            self.total_support
        )?;
        for (label, m) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            writeln!(
                f,
                "{:>12} {:>10} {:>10} {:>10} {:>10}",
                label,
                two(m.precision),
                two(m.recall),
                two(m.f1),
                self.total_support
            )?;
        }
        Ok(())
    }
}

/// Writes one `curves-<name>.csv` per history (`epoch,loss,accuracy`) and
/// returns the written paths. Empty histories are rejected.
pub fn emit_curves<F: Scalar>(
    histories: &[(String, &TrainHistory<F>)],
    dir: &Path,
) -> Result<Vec<PathBuf>, MetricsError> {
    if histories.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut paths = Vec::with_capacity(histories.len());
    for (name, history) in histories {
        if history.is_empty() {
            return Err(MetricsError::EmptyHistory(name.clone()));
        }
        let mut out = String::from("epoch,loss,accuracy\n");
        for (epoch, (loss, accuracy)) in
            history.loss.iter().zip(&history.accuracy).enumerate()
        {
            out.push_str(&format!("{},{loss},{accuracy}\n", epoch + 1));
        }
        let path = dir.join(format!("curves-{name}.csv"));
        std::fs::write(&path, out).map_err(|source| MetricsError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

/// First 1-based epoch whose training accuracy reaches `fraction` of the
/// final training accuracy.
pub fn convergence_epoch<F: Scalar>(accuracy: &[F], fraction: F) -> Option<usize> {
    let last = *accuracy.last()?;
    let target = fraction * last;
    accuracy.iter().position(|&a| a >= target).map(|i| i + 1)
}

/// Renders a training history as a small standalone SVG: loss scaled to
/// its own maximum, accuracy on the unit interval, one polyline each.
/// The CSV curves are the machine contract; this is the optional visual.
pub fn render_curves_svg<F: Scalar>(
    name: &str,
    history: &TrainHistory<F>,
    path: &Path,
) -> Result<(), MetricsError> {
    if history.is_empty() {
        return Err(MetricsError::EmptyHistory(name.to_string()));
    }
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const MARGIN: f64 = 42.0;
    let epochs = history.len();
    let loss_max = history
        .loss
        .iter()
        .map(|l| l.to_f64().unwrap_or(0.0))
        .fold(f64::MIN_POSITIVE, f64::max);

    let x = |epoch: usize| {
        if epochs == 1 {
            W / 2.0
        } else {
            MARGIN + (W - 2.0 * MARGIN) * epoch as f64 / (epochs - 1) as f64
        }
    };
    let y = |unit: f64| H - MARGIN - (H - 2.0 * MARGIN) * unit.clamp(0.0, 1.0);
    let polyline = |values: &[F], scale: f64| {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", x(i), y(v.to_f64().unwrap_or(0.0) / scale)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{name}: training accuracy and loss over {epochs} epochs</text>\n",
        W / 2.0
    ));
    for (values, scale, color, label) in [
        (&history.accuracy, 1.0, "#1f77b4", "accuracy (0..1)"),
        (&history.loss, loss_max, "#d62728", "loss (scaled to max)"),
    ] {
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            polyline(values, scale)
        ));
        svg.push_str(&format!(
            "<text x=\"{MARGIN}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
            if color == "#1f77b4" { 34.0 } else { 48.0 }
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MARGIN,
        W - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epoch</text>\n</svg>\n",
        W / 2.0,
        H - 12.0
    ));
    std::fs::write(path, svg).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

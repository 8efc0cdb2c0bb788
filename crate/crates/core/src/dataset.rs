//! Tabular data handling: CSV ingestion, feature engineering, the 7:3
//! train/test split, vertical partitioning, standardization, and a
//! schema-compatible synthetic generator for when the public loan CSV is
//! not available.

use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::rng;
use crate::scalar::{c, Scalar};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot parse {value:?} as a number at row {row}, column {column:?}")]
    Ingestion {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),
    #[error("label at row {row} is {value:?}, expected 0 or 1")]
    LabelNotBinary { row: usize, value: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// ID-indexed matrix of named numeric feature columns plus optional
/// binary labels. Columns are stored column-major and share one ID list.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<F> {
    ids: Vec<u64>,
    names: Vec<String>,
    columns: Vec<Vec<F>>,
    labels: Option<Vec<u8>>,
}

impl<F: Scalar> FeatureTable<F> {
    pub fn new(
        ids: Vec<u64>,
        names: Vec<String>,
        columns: Vec<Vec<F>>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self, DataError> {
        if names.len() != columns.len() {
            return Err(DataError::Schema(format!(
                "{} column names but {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (name, column) in names.iter().zip(&columns) {
            if name.is_empty() || name.eq_ignore_ascii_case("id") || name.eq_ignore_ascii_case("label")
            {
                return Err(DataError::Schema(format!(
                    "feature name {name:?} is reserved or empty"
                )));
            }
            if column.len() != ids.len() {
                return Err(DataError::Schema(format!(
                    "column {name:?} has {} values for {} ids",
                    column.len(),
                    ids.len()
                )));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(DataError::DuplicateId(id));
            }
        }
        let mut name_set = std::collections::HashSet::new();
        for name in &names {
            if !name_set.insert(name) {
                return Err(DataError::Schema(format!("duplicate column name {name:?}")));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != ids.len() {
                return Err(DataError::Schema(format!(
                    "{} labels for {} ids",
                    labels.len(),
                    ids.len()
                )));
            }
            if let Some(row) = labels.iter().position(|&l| l > 1) {
                return Err(DataError::LabelNotBinary {
                    row: row + 1,
                    value: labels[row].to_string(),
                });
            }
        }
        Ok(FeatureTable {
            ids,
            names,
            columns,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn labels_required(&self) -> Result<&[u8], DataError> {
        self.labels()
            .ok_or_else(|| DataError::Schema("table has no label column".to_string()))
    }

    pub fn column(&self, name: &str) -> Option<&[F]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|idx| self.columns[idx].as_slice())
    }

    pub fn row(&self, index: usize) -> Vec<F> {
        self.columns.iter().map(|col| col[index]).collect()
    }

    pub fn copy_row_into(&self, index: usize, out: &mut [F]) {
        for (slot, col) in out.iter_mut().zip(&self.columns) {
            *slot = col[index];
        }
    }

    /// True when every cell is a finite number.
    pub fn all_finite(&self) -> bool {
        self.columns
            .iter()
            .all(|col| col.iter().all(|v| v.is_finite()))
    }

    /// Sub-table with the given feature columns, in the given order.
    /// IDs and labels are carried over unchanged.
    pub fn select_columns(&self, names: &[String]) -> Result<Self, DataError> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let col = self
                .column(name)
                .ok_or_else(|| DataError::Schema(format!("unknown column {name:?}")))?;
            columns.push(col.to_vec());
        }
        FeatureTable::new(
            self.ids.clone(),
            names.to_vec(),
            columns,
            self.labels.clone(),
        )
    }

    fn select_rows(&self, indices: &[usize]) -> Self {
        FeatureTable {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| indices.iter().map(|&i| col[i]).collect())
                .collect(),
            labels: self
                .labels
                .as_ref()
                .map(|labels| indices.iter().map(|&i| labels[i]).collect()),
        }
    }

    /// Deterministic CSV rendering: header `id,<features...>[,label]`,
    /// floats as shortest round-trip decimals, `\n` line endings.
    pub fn to_csv_bytes(&self, include_labels: bool) -> Vec<u8> {
        let mut out = String::new();
        out.push_str("id");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        let with_labels = include_labels && self.labels.is_some();
        if with_labels {
            out.push_str(",label");
        }
        out.push('\n');
        for row in 0..self.n_rows() {
            out.push_str(&self.ids[row].to_string());
            for col in &self.columns {
                out.push(',');
                out.push_str(&format!("{}", col[row]));
            }
            if with_labels {
                out.push(',');
                out.push_str(&self.labels.as_ref().unwrap()[row].to_string());
            }
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_csv_bytes(true)).map_err(|e| io_err(path, e))
    }

    pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<Self, DataError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::from_csv_reader(file, options)
    }

    pub fn from_csv_bytes(bytes: &[u8], options: &LoadOptions) -> Result<Self, DataError> {
        Self::from_csv_reader(std::io::Cursor::new(bytes), options)
    }

    pub fn from_csv_reader(reader: impl Read, options: &LoadOptions) -> Result<Self, DataError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = csv_reader
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| {
                if i == 0 {
                    h.trim_start_matches('\u{feff}').to_string()
                } else {
                    h.to_string()
                }
            })
            .collect();

        let id_idx = match &options.id_column {
            Some(name) => Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| DataError::Schema(format!("no id column named {name:?}")))?,
            ),
            None => headers.iter().position(|h| h.eq_ignore_ascii_case("id")),
        };
        let label_idx = match &options.label_column {
            Some(name) => Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| DataError::Schema(format!("no label column named {name:?}")))?,
            ),
            None => None,
        };

        let feature_indices: Vec<usize> = (0..headers.len())
            .filter(|i| Some(*i) != id_idx && Some(*i) != label_idx)
            .collect();
        let names: Vec<String> = feature_indices.iter().map(|&i| headers[i].clone()).collect();

        let mut ids = Vec::new();
        let mut columns: Vec<Vec<F>> = vec![Vec::new(); feature_indices.len()];
        let mut labels: Vec<u8> = Vec::new();
        for (row_no, record) in csv_reader.records().enumerate() {
            let record = record?;
            let row = row_no + 1;
            let id = match id_idx {
                Some(idx) => parse_id(record.get(idx).unwrap_or(""), row, &headers[idx])?,
                None => row_no as u64,
            };
            ids.push(id);
            for (slot, &idx) in feature_indices.iter().enumerate() {
                let raw = record.get(idx).unwrap_or("");
                let value: F = raw.parse().map_err(|_| DataError::Ingestion {
                    row,
                    column: headers[idx].clone(),
                    value: raw.to_string(),
                })?;
                columns[slot].push(value);
            }
            if let Some(idx) = label_idx {
                let raw = record.get(idx).unwrap_or("");
                labels.push(parse_label(raw, row)?);
            }
        }
        FeatureTable::new(ids, names, columns, label_idx.map(|_| labels))
    }
}

fn parse_id(raw: &str, row: usize, column: &str) -> Result<u64, DataError> {
    if let Ok(id) = raw.parse::<u64>() {
        return Ok(id);
    }
    if let Ok(v) = raw.parse::<f64>() {
        if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
            return Ok(v as u64);
        }
    }
    Err(DataError::Ingestion {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

fn parse_label(raw: &str, row: usize) -> Result<u8, DataError> {
    match raw.parse::<f64>() {
        Ok(v) if v == 0.0 || v == 1.0 => Ok(v as u8),
        _ => Err(DataError::LabelNotBinary {
            row,
            value: raw.to_string(),
        }),
    }
}

/// How to interpret a CSV file's columns.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Explicit ID column; `None` auto-detects a column named `id`
    /// (case-insensitive) and otherwise assigns row indices.
    pub id_column: Option<String>,
    /// Column holding the binary label; `None` loads an unlabeled table.
    pub label_column: Option<String>,
}

impl LoadOptions {
    pub fn labeled(label_column: &str) -> Self {
        LoadOptions {
            id_column: None,
            label_column: Some(label_column.to_string()),
        }
    }

    /// Schema of artifacts written by [`FeatureTable::write_csv`].
    pub fn artifact() -> Self {
        LoadOptions {
            id_column: Some("id".to_string()),
            label_column: Some("label".to_string()),
        }
    }

    /// Artifact schema without labels (exchange payloads, prediction inputs).
    pub fn unlabeled() -> Self {
        LoadOptions {
            id_column: Some("id".to_string()),
            label_column: None,
        }
    }
}

/// Pearson correlation in f64; 0 when either side has zero variance.
pub fn pearson<F: Scalar>(x: &[F], y: &[f64]) -> f64 {
    let n = x.len();
    if n == 0 || n != y.len() {
        return 0.0;
    }
    let nf = n as f64;
    let mean_x = x.iter().map(|v| v.to_f64().unwrap_or(0.0)).sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (xv, yv) in x.iter().zip(y) {
        let dx = xv.to_f64().unwrap_or(0.0) - mean_x;
        let dy = yv - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return 0.0;
    }
    cov / (var_x * var_y).sqrt()
}

/// Settings for [`engineer_features`].
#[derive(Debug, Clone)]
pub struct EngineerConfig {
    /// Features whose |Pearson correlation| with the label falls below
    /// this are dropped.
    pub corr_threshold: f64,
    pub income_column: String,
    pub spending_column: String,
    pub combination_column: String,
}

impl Default for EngineerConfig {
    fn default() -> Self {
        EngineerConfig {
            // Tuned so the public loan schema retains exactly 10 features.
            corr_threshold: 0.0068,
            income_column: "Income".to_string(),
            spending_column: "CCAvg".to_string(),
            combination_column: "combination_feature".to_string(),
        }
    }
}

/// Per-column outcome of feature engineering.
#[derive(Debug, Clone)]
pub struct EngineerReport {
    pub kept: Vec<(String, f64)>,
    pub dropped: Vec<(String, f64)>,
}

/// Adds the income x card-spending combination feature, then drops every
/// feature whose |correlation| with the label is below the threshold.
///
/// Re-applying to an already-engineered table is rejected.
pub fn engineer_features<F: Scalar>(
    table: &FeatureTable<F>,
    config: &EngineerConfig,
) -> Result<(FeatureTable<F>, EngineerReport), DataError> {
    let labels = table.labels_required()?;
    if table.column(&config.combination_column).is_some() {
        return Err(DataError::Schema(format!(
            "column {:?} already present: table is already engineered",
            config.combination_column
        )));
    }
    let income = table.column(&config.income_column).ok_or_else(|| {
        DataError::Schema(format!("missing income column {:?}", config.income_column))
    })?;
    let spending = table.column(&config.spending_column).ok_or_else(|| {
        DataError::Schema(format!(
            "missing card-spending column {:?}",
            config.spending_column
        ))
    })?;
    let combination: Vec<F> = income
        .iter()
        .zip(spending)
        .map(|(&i, &s)| i * s)
        .collect();

    let label_f64: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut report = EngineerReport {
        kept: Vec::new(),
        dropped: Vec::new(),
    };
    let candidates = table
        .names()
        .iter()
        .map(|n| (n.clone(), table.column(n).unwrap().to_vec()))
        .chain(std::iter::once((
            config.combination_column.clone(),
            combination,
        )));
    for (name, column) in candidates {
        let corr = pearson(&column, &label_f64);
        if corr.abs() < config.corr_threshold {
            report.dropped.push((name, corr));
        } else {
            report.kept.push((name.clone(), corr));
            names.push(name);
            columns.push(column);
        }
    }
    let engineered = FeatureTable::new(
        table.ids().to_vec(),
        names,
        columns,
        Some(labels.to_vec()),
    )?;
    Ok((engineered, report))
}

fn split_by_indices<F: Scalar>(
    table: &FeatureTable<F>,
    mut train_idx: Vec<usize>,
    mut test_idx: Vec<usize>,
) -> (FeatureTable<F>, FeatureTable<F>) {
    // Canonical storage order is ascending ID on both sides.
    train_idx.sort_by_key(|&i| table.ids[i]);
    test_idx.sort_by_key(|&i| table.ids[i]);
    (table.select_rows(&train_idx), table.select_rows(&test_idx))
}

fn check_split_args<F: Scalar>(table: &FeatureTable<F>, ratio: f64) -> Result<(), DataError> {
    if table.n_rows() < 2 {
        return Err(DataError::InsufficientData {
            needed: 2,
            got: table.n_rows(),
        });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Config(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    Ok(())
}

/// Seeded random split; `|train| = round(ratio * n)`, clamped so both
/// sides stay non-empty. Both outputs are stored in ascending ID order.
pub fn split_train_test<F: Scalar>(
    table: &FeatureTable<F>,
    ratio: f64,
    seed: u64,
) -> Result<(FeatureTable<F>, FeatureTable<F>), DataError> {
    check_split_args(table, ratio)?;
    let n = table.n_rows();
    let train_n = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = rng::seeded(seed);
    let order = rng::shuffled_indices(n, &mut rng);
    Ok(split_by_indices(
        table,
        order[..train_n].to_vec(),
        order[train_n..].to_vec(),
    ))
}

/// Class-stratified variant: the split ratio is applied within each label
/// class separately. Requires labels.
pub fn split_train_test_stratified<F: Scalar>(
    table: &FeatureTable<F>,
    ratio: f64,
    seed: u64,
) -> Result<(FeatureTable<F>, FeatureTable<F>), DataError> {
    check_split_args(table, ratio)?;
    let labels = table.labels_required()?;
    let mut rng = rng::seeded(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1u8] {
        let members: Vec<usize> = (0..table.n_rows()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let take = ((ratio * members.len() as f64).round() as usize).min(members.len());
        let order = rng::shuffled_indices(members.len(), &mut rng);
        for (pos, &slot) in order.iter().enumerate() {
            if pos < take {
                train_idx.push(members[slot]);
            } else {
                test_idx.push(members[slot]);
            }
        }
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(DataError::InsufficientData {
            needed: 2,
            got: table.n_rows(),
        });
    }
    Ok(split_by_indices(table, train_idx, test_idx))
}

/// Which feature columns belong to which data node.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PartitionSpec {
    pub personal_columns: Vec<String>,
    pub bank_columns: Vec<String>,
}

/// Bank-side column vocabulary across the supported schemas; everything
/// else is treated as a personal detail.
const BANK_SIDE_NAMES: &[&str] = &[
    "Securities Account",
    "CD Account",
    "Online",
    "CreditCard",
    "combination_feature",
    "sec_account",
    "cd_account",
    "credit_card",
    "combination",
];

impl PartitionSpec {
    pub fn new(
        personal_columns: Vec<String>,
        bank_columns: Vec<String>,
    ) -> Result<Self, DataError> {
        for p in &personal_columns {
            if bank_columns.contains(p) {
                return Err(DataError::Schema(format!(
                    "column {p:?} appears in both partitions"
                )));
            }
        }
        if personal_columns.is_empty() || bank_columns.is_empty() {
            return Err(DataError::Schema(
                "both partitions need at least one column".to_string(),
            ));
        }
        Ok(PartitionSpec {
            personal_columns,
            bank_columns,
        })
    }

    /// Classifies engineered feature names into the two nodes using the
    /// known bank-side vocabulary.
    pub fn infer(names: &[String]) -> Result<Self, DataError> {
        let mut personal = Vec::new();
        let mut bank = Vec::new();
        for name in names {
            if BANK_SIDE_NAMES.contains(&name.as_str()) {
                bank.push(name.clone());
            } else {
                personal.push(name.clone());
            }
        }
        PartitionSpec::new(personal, bank)
    }

    /// Fixed partition of the synthetic schema.
    pub fn synthetic() -> Self {
        PartitionSpec {
            personal_columns: SYNTH_PERSONAL.iter().map(|s| s.to_string()).collect(),
            bank_columns: SYNTH_BANK.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Splits a table by feature columns into the personal-details and
/// bank-details nodes. Both partitions keep the full ID sequence and the
/// labels; the partition spec must cover every feature exactly once.
pub fn vertical_partition<F: Scalar>(
    table: &FeatureTable<F>,
    spec: &PartitionSpec,
) -> Result<(FeatureTable<F>, FeatureTable<F>), DataError> {
    for p in &spec.personal_columns {
        if spec.bank_columns.contains(p) {
            return Err(DataError::Schema(format!(
                "column {p:?} appears in both partitions"
            )));
        }
    }
    let covered = spec.personal_columns.len() + spec.bank_columns.len();
    if covered != table.n_features() {
        return Err(DataError::Schema(format!(
            "partition covers {covered} columns but the table has {}",
            table.n_features()
        )));
    }
    let personal = table.select_columns(&spec.personal_columns)?;
    let bank = table.select_columns(&spec.bank_columns)?;
    Ok((personal, bank))
}

/// Per-column z-score parameters fitted on a training table.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler<F> {
    names: Vec<String>,
    means: Vec<F>,
    stds: Vec<F>,
}

impl<F: Scalar> Scaler<F> {
    /// Fits train-column means and population standard deviations.
    pub fn fit(table: &FeatureTable<F>) -> Result<Self, DataError> {
        if table.n_rows() == 0 {
            return Err(DataError::InsufficientData { needed: 1, got: 0 });
        }
        let n = table.n_rows() as f64;
        let mut means = Vec::with_capacity(table.n_features());
        let mut stds = Vec::with_capacity(table.n_features());
        for name in table.names() {
            let col = table.column(name).unwrap();
            let mean = col.iter().map(|v| v.to_f64().unwrap_or(0.0)).sum::<f64>() / n;
            let var = col
                .iter()
                .map(|v| {
                    let d = v.to_f64().unwrap_or(0.0) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            means.push(c(mean));
            stds.push(c(var.sqrt()));
        }
        Ok(Scaler {
            names: table.names().to_vec(),
            means,
            stds,
        })
    }

    fn check_schema(&self, table: &FeatureTable<F>) -> Result<(), DataError> {
        if table.names() != self.names.as_slice() {
            return Err(DataError::Schema(format!(
                "scaler fitted on {:?} applied to {:?}",
                self.names,
                table.names()
            )));
        }
        Ok(())
    }

    /// Applies `(x - mean) / std`; zero-std columns are scaled by 1.
    pub fn transform(&self, table: &FeatureTable<F>) -> Result<FeatureTable<F>, DataError> {
        self.check_schema(table)?;
        let columns = table
            .columns
            .iter()
            .enumerate()
            .map(|(idx, col)| {
                let mean = self.means[idx];
                let std = self.stds[idx];
                let scale = if std == F::zero() { F::one() } else { std };
                col.iter().map(|&v| (v - mean) / scale).collect()
            })
            .collect();
        FeatureTable::new(
            table.ids.clone(),
            table.names.clone(),
            columns,
            table.labels.clone(),
        )
    }

    /// Undoes [`transform`](Self::transform).
    pub fn inverse_transform(&self, table: &FeatureTable<F>) -> Result<FeatureTable<F>, DataError> {
        self.check_schema(table)?;
        let columns = table
            .columns
            .iter()
            .enumerate()
            .map(|(idx, col)| {
                let mean = self.means[idx];
                let std = self.stds[idx];
                let scale = if std == F::zero() { F::one() } else { std };
                col.iter().map(|&v| v * scale + mean).collect()
            })
            .collect();
        FeatureTable::new(
            table.ids.clone(),
            table.names.clone(),
            columns,
            table.labels.clone(),
        )
    }

    /// Key-value text persistence: one `column|mean|std` line per column.
    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut out = String::from("splitchain-scaler v1\n");
        for ((name, mean), std) in self.names.iter().zip(&self.means).zip(&self.stds) {
            out.push_str(&format!("{name}|{mean}|{std}\n"));
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some("splitchain-scaler v1") {
            return Err(DataError::Schema(format!(
                "{} is not a v1 scaler file",
                path.display()
            )));
        }
        let mut names = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for (no, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || DataError::Schema(format!("bad scaler line {}: {line:?}", no + 2));
            let mut fields = line.split('|');
            let name = fields.next().ok_or_else(bad)?;
            let mean: F = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let std: F = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if fields.next().is_some() {
                return Err(bad());
            }
            names.push(name.to_string());
            means.push(mean);
            stds.push(std);
        }
        Ok(Scaler { names, means, stds })
    }
}

const SYNTH_PERSONAL: &[&str] = &[
    "education",
    "family",
    "income",
    "card_spend",
    "experience",
    "mortgage",
];
const SYNTH_BANK: &[&str] = &["sec_account", "cd_account", "credit_card", "combination"];

/// Logistic weights of the planted labeling rule over the z-scored
/// synthetic columns, in schema order. Both partitions carry real signal
/// so aggregating them measurably beats either one alone.
const SYNTH_WEIGHTS: &[f64] = &[
    0.9,  // education
    0.45, // family
    1.7,  // income
    0.8,  // card_spend
    0.15, // experience
    0.3,  // mortgage
    0.45, // sec_account
    1.25, // cd_account
    0.3,  // credit_card
    1.0,  // combination
];

/// Generates a loan-schema-shaped table: 6 continuous personal columns,
/// 4 mostly-binary bank columns, and labels drawn from a noisy logistic
/// rule over all 10 features calibrated to the requested positive rate.
pub fn synthesize_dataset<F: Scalar>(
    n: usize,
    positive_rate: f64,
    seed: u64,
) -> Result<FeatureTable<F>, DataError> {
    if n < 10 {
        return Err(DataError::Config(format!(
            "synthetic dataset needs n >= 10, got {n}"
        )));
    }
    if !(positive_rate > 0.0 && positive_rate < 1.0) {
        return Err(DataError::Config(format!(
            "positive rate must be in (0, 1), got {positive_rate}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut columns: Vec<Vec<f64>> = (0..10).map(|_| Vec::with_capacity(n)).collect();
    for _ in 0..n {
        let education = 1.0 + (rng::uniform(&mut rng) * 3.0).floor().min(2.0);
        let family = 1.0 + (rng::uniform(&mut rng) * 4.0).floor().min(3.0);
        let income = (rng::normal(&mut rng) * 0.6 + 4.2).exp();
        let card_spend =
            income * (0.02 + 0.03 * rng::uniform(&mut rng)) + rng::normal(&mut rng).abs() * 0.5;
        let experience = (rng::normal(&mut rng) * 11.0 + 20.0).clamp(0.0, 45.0);
        let mortgage = if rng::uniform(&mut rng) < 0.6 {
            0.0
        } else {
            30.0 + rng::uniform(&mut rng) * 370.0
        };
        let sec_account = f64::from(rng::uniform(&mut rng) < 0.10);
        let cd_account = f64::from(rng::uniform(&mut rng) < 0.06);
        let credit_card = f64::from(rng::uniform(&mut rng) < 0.29);
        let combination = income * card_spend / 100.0;
        for (slot, value) in columns.iter_mut().zip([
            education, family, income, card_spend, experience, mortgage, sec_account, cd_account,
            credit_card, combination,
        ]) {
            slot.push(value);
        }
    }

    // Scores over z-scored columns; zero-variance degenerates to zero.
    let nf = n as f64;
    let mut scores = vec![0.0f64; n];
    for (col, &weight) in columns.iter().zip(SYNTH_WEIGHTS) {
        let mean = col.iter().sum::<f64>() / nf;
        let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
        if std == 0.0 {
            continue;
        }
        for (score, v) in scores.iter_mut().zip(col) {
            *score += weight * (v - mean) / std;
        }
    }

    // Calibrate the intercept so the mean positive probability hits the
    // requested rate; the label draw then adds binomial noise around it.
    let mean_prob = |b0: f64| {
        scores
            .iter()
            .map(|s| 1.0 / (1.0 + (-(b0 + s)).exp()))
            .sum::<f64>()
            / nf
    };
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean_prob(mid) < positive_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let intercept = 0.5 * (lo + hi);

    let labels: Vec<u8> = scores
        .iter()
        .map(|s| {
            let p = 1.0 / (1.0 + (-(intercept + s)).exp());
            u8::from(rng::uniform(&mut rng) < p)
        })
        .collect();

    let names: Vec<String> = SYNTH_PERSONAL
        .iter()
        .chain(SYNTH_BANK)
        .map(|s| s.to_string())
        .collect();
    FeatureTable::new(
        (1..=n as u64).collect(),
        names,
        columns
            .into_iter()
            .map(|col| col.into_iter().map(c).collect())
            .collect(),
        Some(labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    type Table = FeatureTable<f64>;

    fn table(ids: &[u64], cols: &[(&str, &[f64])], labels: Option<&[u8]>) -> Table {
        FeatureTable::new(
            ids.to_vec(),
            cols.iter().map(|(n, _)| n.to_string()).collect(),
            cols.iter().map(|(_, v)| v.to_vec()).collect(),
            labels.map(|l| l.to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn csv_header_only_gives_empty_table() {
        let t = Table::from_csv_bytes(b"id,a,b\n", &LoadOptions::unlabeled()).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.n_features(), 2);
    }

    #[test]
    fn csv_bad_cell_names_the_coordinate() {
        let err = Table::from_csv_bytes(
            b"id,a,b\n1,2,3\n2,oops,4\n",
            &LoadOptions::unlabeled(),
        )
        .unwrap_err();
        match err {
            DataError::Ingestion { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "a", "oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_duplicate_id_is_rejected() {
        let err = Table::from_csv_bytes(b"id,a\n7,1\n7,2\n", &LoadOptions::unlabeled()).unwrap_err();
        assert!(matches!(err, DataError::DuplicateId(7)));
    }

    #[test]
    fn csv_round_trips_through_artifact_schema() {
        let t = table(
            &[3, 1, 9],
            &[("x", &[0.1, -2.5, 3.125]), ("y", &[1e-9, 0.0, 7.0])],
            Some(&[1, 0, 1]),
        );
        let bytes = t.to_csv_bytes(true);
        let back = Table::from_csv_bytes(&bytes, &LoadOptions::artifact()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn engineering_adds_product_and_drops_weak_columns() {
        // `noise` is constant: correlation 0, dropped at any threshold.
        let t = table(
            &[1, 2, 3, 4],
            &[
                ("Income", &[0.0, 1.0, 2.0, 3.0]),
                ("CCAvg", &[1.0, 1.0, 2.0, 2.0]),
                ("noise", &[5.0, 5.0, 5.0, 5.0]),
            ],
            Some(&[0, 0, 1, 1]),
        );
        let (out, report) = engineer_features(&t, &EngineerConfig::default()).unwrap();
        assert_eq!(
            out.names(),
            &["Income", "CCAvg", "combination_feature"]
        );
        // Row with income 0 gets combination 0.
        assert_eq!(out.column("combination_feature").unwrap()[0], 0.0);
        assert_eq!(out.column("combination_feature").unwrap()[3], 6.0);
        assert_eq!(report.dropped.len(), 1);
        assert_eq!(report.dropped[0].0, "noise");
        assert_eq!(report.dropped[0].1, 0.0);
    }

    #[test]
    fn engineering_twice_is_rejected() {
        let t = table(
            &[1, 2],
            &[("Income", &[1.0, 2.0]), ("CCAvg", &[1.0, 2.0])],
            Some(&[0, 1]),
        );
        let (out, _) = engineer_features(&t, &EngineerConfig::default()).unwrap();
        assert!(matches!(
            engineer_features(&out, &EngineerConfig::default()),
            Err(DataError::Schema(_))
        ));
    }

    #[test]
    fn engineering_requires_income_and_spending() {
        let t = table(&[1, 2], &[("a", &[1.0, 2.0])], Some(&[0, 1]));
        assert!(matches!(
            engineer_features(&t, &EngineerConfig::default()),
            Err(DataError::Schema(_))
        ));
    }

    #[test]
    fn split_sizes_follow_the_ratio() {
        let t = synthesize_dataset::<f64>(10, 0.3, 1).unwrap();
        let (train, test) = split_train_test(&t, 0.7, 5).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (7, 3));

        let big = synthesize_dataset::<f64>(5000, 0.096, 1).unwrap();
        let (train, test) = split_train_test(&big, 0.7, 5).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (3500, 1500));
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let t = synthesize_dataset::<f64>(100, 0.3, 2).unwrap();
        let (a_train, a_test) = split_train_test(&t, 0.7, 9).unwrap();
        let (b_train, b_test) = split_train_test(&t, 0.7, 9).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);

        let mut all: Vec<u64> = a_train.ids().iter().chain(a_test.ids()).copied().collect();
        all.sort_unstable();
        let mut expected: Vec<u64> = t.ids().to_vec();
        expected.sort_unstable();
        assert_eq!(all, expected);
    }

    #[test]
    fn stratified_split_preserves_class_ratios() {
        let t = synthesize_dataset::<f64>(1000, 0.2, 3).unwrap();
        let positives = t.labels().unwrap().iter().filter(|&&l| l == 1).count();
        let (train, _) = split_train_test_stratified(&t, 0.7, 4).unwrap();
        let train_pos = train.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert_eq!(train_pos, ((positives as f64) * 0.7).round() as usize);
    }

    #[test]
    fn too_few_rows_cannot_split() {
        let t = table(&[1], &[("a", &[1.0])], None);
        assert!(matches!(
            split_train_test(&t, 0.7, 0),
            Err(DataError::InsufficientData { .. })
        ));
    }

    #[test]
    fn partition_keeps_alignment_and_labels() {
        let t = synthesize_dataset::<f64>(50, 0.3, 7).unwrap();
        let spec = PartitionSpec::synthetic();
        let (personal, bank) = vertical_partition(&t, &spec).unwrap();
        assert_eq!(personal.n_features(), 6);
        assert_eq!(bank.n_features(), 4);
        assert_eq!(personal.ids(), bank.ids());
        assert_eq!(personal.labels(), t.labels());
        assert_eq!(bank.labels(), t.labels());

        // Concatenating partition rows reconstructs the original rows.
        for i in 0..t.n_rows() {
            let mut joined = personal.row(i);
            joined.extend(bank.row(i));
            assert_eq!(joined, t.row(i));
        }
    }

    #[test]
    fn partition_rejects_overlap_unknowns_and_gaps() {
        let t = synthesize_dataset::<f64>(20, 0.3, 7).unwrap();
        let mut overlap = PartitionSpec::synthetic();
        overlap.bank_columns.push("income".to_string());
        assert!(matches!(
            vertical_partition(&t, &overlap),
            Err(DataError::Schema(_))
        ));

        let mut unknown = PartitionSpec::synthetic();
        unknown.bank_columns[0] = "no_such_column".to_string();
        assert!(matches!(
            vertical_partition(&t, &unknown),
            Err(DataError::Schema(_))
        ));

        let mut gap = PartitionSpec::synthetic();
        gap.bank_columns.pop();
        assert!(matches!(
            vertical_partition(&t, &gap),
            Err(DataError::Schema(_))
        ));
    }

    #[test]
    fn partition_spec_inference_matches_the_synthetic_schema() {
        let t = synthesize_dataset::<f64>(20, 0.3, 7).unwrap();
        let inferred = PartitionSpec::infer(t.names()).unwrap();
        assert_eq!(inferred, PartitionSpec::synthetic());
    }

    #[test]
    fn scaled_columns_are_centered() {
        let t = synthesize_dataset::<f64>(200, 0.3, 11).unwrap();
        let scaler = Scaler::fit(&t).unwrap();
        let scaled = scaler.transform(&t).unwrap();
        for name in scaled.names() {
            let col = scaled.column(name).unwrap();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9, "column {name} mean {mean}");
        }
    }

    #[test]
    fn constant_columns_scale_by_one() {
        let t = table(&[1, 2, 3], &[("k", &[4.0, 4.0, 4.0])], None);
        let scaler = Scaler::fit(&t).unwrap();
        let scaled = scaler.transform(&t).unwrap();
        assert_eq!(scaled.column("k").unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn inverse_transform_round_trips() {
        let t = synthesize_dataset::<f64>(150, 0.3, 13).unwrap();
        let (train, test) = split_train_test(&t, 0.7, 13).unwrap();
        let scaler = Scaler::fit(&train).unwrap();
        let restored = scaler
            .inverse_transform(&scaler.transform(&test).unwrap())
            .unwrap();
        for name in test.names() {
            for (a, b) in restored
                .column(name)
                .unwrap()
                .iter()
                .zip(test.column(name).unwrap())
            {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaler_persistence_round_trips() {
        let t = synthesize_dataset::<f64>(60, 0.3, 17).unwrap();
        let scaler = Scaler::fit(&t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scaler.txt");
        scaler.save(&path).unwrap();
        let loaded: Scaler<f64> = Scaler::load(&path).unwrap();
        assert_eq!(loaded, scaler);
    }

    #[test]
    fn synthetic_row_counts_and_determinism() {
        let small = synthesize_dataset::<f64>(10, 0.3, 1).unwrap();
        assert_eq!(small.n_rows(), 10);
        assert_eq!(small.n_features(), 10);

        let a = synthesize_dataset::<f64>(500, 0.2, 21).unwrap();
        let b = synthesize_dataset::<f64>(500, 0.2, 21).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_positive_count_tracks_the_rate() {
        let t = synthesize_dataset::<f64>(5000, 0.096, 42).unwrap();
        let positives = t.labels().unwrap().iter().filter(|&&l| l == 1).count();
        // 480 expected; allow generous binomial noise (about 5 sigma).
        assert!(
            (375..=585).contains(&positives),
            "got {positives} positives"
        );
    }

    #[test]
    fn synthetic_rejects_bad_arguments() {
        assert!(matches!(
            synthesize_dataset::<f64>(5, 0.3, 1),
            Err(DataError::Config(_))
        ));
        assert!(matches!(
            synthesize_dataset::<f64>(100, 0.0, 1),
            Err(DataError::Config(_))
        ));
        assert!(matches!(
            synthesize_dataset::<f64>(100, 1.0, 1),
            Err(DataError::Config(_))
        ));
    }
}

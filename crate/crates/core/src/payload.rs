//! Exchange payloads.
//!
//! Everything that crosses the fabric is a deterministic CSV: header
//! `id,f1..fN` for intermediate representations, `id,<column names>` for
//! raw test-split columns. Floats are written as shortest round-trip
//! decimals, rows in ascending ID order, `\n` line endings — so equal
//! content means equal bytes and content addresses deduplicate.

use thiserror::Error;

use crate::dataset::{DataError, FeatureTable, LoadOptions};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PayloadError {
    #[error("payload parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate representation id {0}")]
    DuplicateId(u64),
    #[error("representation row for id {id} has width {got}, expected {expected}")]
    Width { id: u64, got: usize, expected: usize },
    #[error("negative representation entry {value} at id {id}, feature {feature}")]
    Negative { id: u64, feature: usize, value: String },
    #[error("representation payload has zero width")]
    ZeroWidth,
    #[error(transparent)]
    Table(#[from] DataError),
}

/// ID-indexed matrix of last-hidden-layer activations from one node.
///
/// Rows are kept in ascending ID order regardless of construction order,
/// and every entry is non-negative (rectified-linear output).
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationFile<F> {
    source: String,
    width: usize,
    ids: Vec<u64>,
    rows: Vec<Vec<F>>,
}

impl<F: Scalar> RepresentationFile<F> {
    pub fn new(
        source: &str,
        width: usize,
        mut entries: Vec<(u64, Vec<F>)>,
    ) -> Result<Self, PayloadError> {
        if width == 0 {
            return Err(PayloadError::ZeroWidth);
        }
        entries.sort_by_key(|(id, _)| *id);
        let mut ids = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (id, row) in entries {
            if ids.last() == Some(&id) {
                return Err(PayloadError::DuplicateId(id));
            }
            if row.len() != width {
                return Err(PayloadError::Width {
                    id,
                    got: row.len(),
                    expected: width,
                });
            }
            if let Some(feature) = row.iter().position(|v| *v < F::zero()) {
                return Err(PayloadError::Negative {
                    id,
                    feature: feature + 1,
                    value: format!("{}", row[feature]),
                });
            }
            ids.push(id);
            rows.push(row);
        }
        Ok(RepresentationFile {
            source: source.to_string(),
            width,
            ids,
            rows,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, index: usize) -> &[F] {
        &self.rows[index]
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = String::from("id");
        for f in 1..=self.width {
            out.push_str(&format!(",f{f}"));
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(&id.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn from_csv_bytes(source: &str, bytes: &[u8]) -> Result<Self, PayloadError> {
        let text = std::str::from_utf8(bytes).map_err(|e| PayloadError::Parse {
            line: 0,
            reason: format!("payload is not UTF-8: {e}"),
        })?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(PayloadError::Parse {
            line: 1,
            reason: "empty payload".to_string(),
        })?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.first() != Some(&"id") {
            return Err(PayloadError::Parse {
                line: 1,
                reason: format!("header must start with 'id', got {header:?}"),
            });
        }
        let width = fields.len() - 1;
        for (i, field) in fields.iter().skip(1).enumerate() {
            if *field != format!("f{}", i + 1) {
                return Err(PayloadError::Parse {
                    line: 1,
                    reason: format!("expected representation header column f{}, got {field:?}", i + 1),
                });
            }
        }
        if width == 0 {
            return Err(PayloadError::ZeroWidth);
        }
        let mut entries = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let mut cells = line.split(',');
            let id_cell = cells.next().unwrap_or("");
            let id: u64 = id_cell.parse().map_err(|_| PayloadError::Parse {
                line: line_no,
                reason: format!("bad id {id_cell:?}"),
            })?;
            let mut row = Vec::with_capacity(width);
            for cell in cells {
                let value: F = cell.parse().map_err(|_| PayloadError::Parse {
                    line: line_no,
                    reason: format!("bad value {cell:?}"),
                })?;
                if !value.is_finite() {
                    return Err(PayloadError::Parse {
                        line: line_no,
                        reason: format!("non-finite value {cell:?}"),
                    });
                }
                row.push(value);
            }
            entries.push((id, row));
        }
        RepresentationFile::new(source, width, entries)
    }
}

/// Serializes a table for transfer: id plus feature columns, never labels.
pub fn table_to_payload<F: Scalar>(table: &FeatureTable<F>) -> Vec<u8> {
    table.to_csv_bytes(false)
}

/// Parses a raw-column payload back into an unlabeled table.
pub fn table_from_payload<F: Scalar>(bytes: &[u8]) -> Result<FeatureTable<F>, PayloadError> {
    Ok(FeatureTable::from_csv_bytes(bytes, &LoadOptions::unlabeled())?)
}

/// True when a decrypted payload is an intermediate-representation file
/// rather than raw feature columns. Used by confinement audits.
pub fn looks_like_representation(bytes: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return false;
    };
    let Some(header) = text.lines().next() else {
        return false;
    };
    let fields: Vec<&str> = header.split(',').collect();
    fields.len() >= 2
        && fields[0] == "id"
        && fields[1..]
            .iter()
            .enumerate()
            .all(|(i, f)| *f == format!("f{}", i + 1))
}

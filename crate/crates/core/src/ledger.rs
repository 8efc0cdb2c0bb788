//! Append-only hash registry.
//!
//! Smart-contract stand-in: participants register content hashes under a
//! `(sender, recipient, tag)` key, fetches resolve to the latest matching
//! entry, and every registration lands in an append-only journal that
//! replays on open. Entries are never mutated or removed.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{SecondsFormat, Utc};
use thiserror::Error;

use crate::store::ContentHash;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("participant {0:?} is not registered")]
    UnknownParticipant(String),
    #[error("invalid tag {0:?}: tags must be non-empty and free of '|' and newlines")]
    InvalidTag(String),
    #[error("no entry registered for sender {sender:?}, recipient {recipient:?}, tag {tag:?}")]
    NotFound {
        sender: String,
        recipient: String,
        tag: String,
    },
    #[error("journal line {line} is corrupt: {reason}")]
    JournalCorrupt { line: usize, reason: String },
    #[error("journal i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One immutable registration record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub seq: u64,
    pub timestamp: String,
    pub sender: String,
    pub recipient: String,
    pub tag: String,
    pub hash: ContentHash,
}

impl LedgerEntry {
    /// Journal line format: `seq|iso8601|sender|recipient|tag|hex-hash`.
    fn to_line(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.seq, self.timestamp, self.sender, self.recipient, self.tag, self.hash
        )
    }

    fn parse_line(line: &str, line_no: usize) -> Result<Self, LedgerError> {
        let corrupt = |reason: &str| LedgerError::JournalCorrupt {
            line: line_no,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 6 {
            return Err(corrupt("expected 6 '|'-separated fields"));
        }
        Ok(LedgerEntry {
            seq: fields[0].parse().map_err(|_| corrupt("bad sequence number"))?,
            timestamp: fields[1].to_string(),
            sender: fields[2].to_string(),
            recipient: fields[3].to_string(),
            tag: fields[4].to_string(),
            hash: fields[5].parse().map_err(|_| corrupt("bad content hash"))?,
        })
    }
}

/// Optional match constraints for [`Ledger::history`].
#[derive(Debug, Default, Clone)]
pub struct EntryFilter {
    pub sender: Option<String>,
    pub recipient: Option<String>,
    pub tag: Option<String>,
}

impl EntryFilter {
    pub fn all() -> Self {
        Self::default()
    }

    fn matches(&self, entry: &LedgerEntry) -> bool {
        self.sender.as_deref().is_none_or(|s| s == entry.sender)
            && self.recipient.as_deref().is_none_or(|r| r == entry.recipient)
            && self.tag.as_deref().is_none_or(|t| t == entry.tag)
    }
}

struct Inner {
    entries: Vec<LedgerEntry>,
    participants: BTreeSet<String>,
    journal: Option<(PathBuf, File)>,
    next_seq: u64,
}

/// Append-only registry with serialized writes and an optional on-disk
/// journal. Safe for concurrent callers.
pub struct Ledger {
    inner: Mutex<Inner>,
}

impl Ledger {
    /// Purely in-memory ledger (tests, throwaway runs).
    pub fn in_memory() -> Self {
        Ledger {
            inner: Mutex::new(Inner {
                entries: Vec::new(),
                participants: BTreeSet::new(),
                journal: None,
                next_seq: 1,
            }),
        }
    }

    /// Opens a journal-backed ledger, replaying any existing entries.
    ///
    /// Participants named by replayed entries are considered registered.
    pub fn with_journal(path: impl Into<PathBuf>) -> Result<Self, LedgerError> {
        let path = path.into();
        let io = |source: std::io::Error| LedgerError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
        }

        let mut entries = Vec::new();
        let mut participants = BTreeSet::new();
        let mut next_seq = 1;
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.is_empty() {
                    continue;
                }
                let entry = LedgerEntry::parse_line(&line, idx + 1)?;
                participants.insert(entry.sender.clone());
                participants.insert(entry.recipient.clone());
                next_seq = next_seq.max(entry.seq + 1);
                entries.push(entry);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        Ok(Ledger {
            inner: Mutex::new(Inner {
                entries,
                participants,
                journal: Some((path, file)),
                next_seq,
            }),
        })
    }

    pub fn register_participant(&self, id: &str) {
        self.inner
            .lock()
            .expect("ledger lock")
            .participants
            .insert(id.to_string());
    }

    /// Appends a new entry and returns its sequence number.
    ///
    /// Duplicate `(sender, recipient, tag)` keys are allowed; the later
    /// entry wins for [`fetch_hash`](Self::fetch_hash).
    pub fn register_hash(
        &self,
        sender: &str,
        recipient: &str,
        tag: &str,
        hash: ContentHash,
    ) -> Result<u64, LedgerError> {
        if tag.is_empty() || tag.contains('|') || tag.contains('\n') {
            return Err(LedgerError::InvalidTag(tag.to_string()));
        }
        let mut inner = self.inner.lock().expect("ledger lock");
        for id in [sender, recipient] {
            if !inner.participants.contains(id) {
                return Err(LedgerError::UnknownParticipant(id.to_string()));
            }
        }
        let entry = LedgerEntry {
            seq: inner.next_seq,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true),
            sender: sender.to_string(),
            recipient: recipient.to_string(),
            tag: tag.to_string(),
            hash,
        };
        if let Some((path, file)) = inner.journal.as_mut() {
            let io = |source: std::io::Error| LedgerError::Io {
                path: path.clone(),
                source,
            };
            writeln!(file, "{}", entry.to_line()).map_err(io)?;
            file.flush().map_err(io)?;
        }
        inner.next_seq += 1;
        let seq = entry.seq;
        inner.entries.push(entry);
        Ok(seq)
    }

    /// Returns the hash of the highest-seq entry matching the key.
    pub fn fetch_hash(
        &self,
        recipient: &str,
        sender: &str,
        tag: &str,
    ) -> Result<ContentHash, LedgerError> {
        let inner = self.inner.lock().expect("ledger lock");
        inner
            .entries
            .iter()
            .rev()
            .find(|e| e.sender == sender && e.recipient == recipient && e.tag == tag)
            .map(|e| e.hash)
            .ok_or_else(|| LedgerError::NotFound {
                sender: sender.to_string(),
                recipient: recipient.to_string(),
                tag: tag.to_string(),
            })
    }

    /// All matching entries in sequence order.
    pub fn history(&self, filter: &EntryFilter) -> Vec<LedgerEntry> {
        self.inner
            .lock()
            .expect("ledger lock")
            .entries
            .iter()
            .filter(|e| filter.matches(e))
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("ledger lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn journal_path(&self) -> Option<PathBuf> {
        self.inner
            .lock()
            .expect("ledger lock")
            .journal
            .as_ref()
            .map(|(path, _)| path.clone())
    }
}

/// Reads a journal file back as entries, without opening it for writing.
pub fn read_journal(path: &Path) -> Result<Vec<LedgerEntry>, LedgerError> {
    let io = |source: std::io::Error| LedgerError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if !line.is_empty() {
            entries.push(LedgerEntry::parse_line(&line, idx + 1)?);
        }
    }
    Ok(entries)
}

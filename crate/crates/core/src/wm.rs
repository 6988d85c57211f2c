//! Capacity-bounded working memory and the comparison primitive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WmError {
    #[error("cannot compare vectors of length {0} and {1}")]
    DimMismatch(usize, usize),
    #[error("degenerate comparison: zero vector")]
    Degenerate,
    #[error("representation is not finite")]
    NotFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmEntry {
    pub key: String,
    pub representation: Vec<f64>,
    pub stored_at: u64,
}

/// FIFO-evicting store. Entries are kept in insertion order, so the front is
/// always the oldest.
#[derive(Debug, Clone, PartialEq)]
pub struct WmStore {
    entries: Vec<WmEntry>,
    capacity: usize,
}

impl Default for WmStore {
    fn default() -> Self {
        WmStore::new(7)
    }
}

impl WmStore {
    pub fn new(capacity: usize) -> Self {
        WmStore {
            entries: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[WmEntry] {
        &self.entries
    }

    /// Inserts or overwrites `key`. An overwrite refreshes `stored_at`. Returns
    /// the evicted entry, if any.
    pub fn store(
        &mut self,
        key: &str,
        representation: Vec<f64>,
        now: u64,
    ) -> Result<Option<WmEntry>, WmError> {
        if representation.iter().any(|v| !v.is_finite()) {
            return Err(WmError::NotFinite);
        }
        self.entries.retain(|e| e.key != key);
        let evicted = if self.entries.len() >= self.capacity {
            Some(self.entries.remove(0))
        } else {
            None
        };
        self.entries.push(WmEntry {
            key: key.to_string(),
            representation,
            stored_at: now,
        });
        Ok(evicted)
    }

    pub fn recall(&self, key: &str) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.representation.as_slice())
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Same,
    Different,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub decision: Decision,
    pub score: f64,
}

/// Cosine comparison; `same` iff the score is at least `1 - tolerance`.
pub fn compare(a: &[f64], b: &[f64], tolerance: f64) -> Result<MatchResult, WmError> {
    if a.len() != b.len() {
        return Err(WmError::DimMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(WmError::Degenerate);
    }
    let score = (dot / (na * nb)).clamp(-1.0, 1.0);
    let decision = if score >= 1.0 - tolerance {
        Decision::Same
    } else {
        Decision::Different
    };
    Ok(MatchResult { decision, score })
}

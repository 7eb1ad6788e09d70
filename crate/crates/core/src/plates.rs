//! Per-frame plate candidates and their confidence-weighted consensus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Plates are six alphanumeric characters after normalization.
pub const PLATE_LEN: usize = 6;
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Error)]
pub enum PlateError {
    #[error("candidate line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateCandidate {
    pub tick: u64,
    pub raw: String,
    pub confidence: f64,
}

impl PlateCandidate {
    pub fn new(raw: impl Into<String>, confidence: f64) -> Self {
        Self { tick: 0, raw: raw.into(), confidence }
    }
}

/// Uppercases and drops spaces and hyphens. Other characters survive so the
/// validity check can reject them.
pub fn normalize_plate(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace() && *c != '-')
        .flat_map(char::to_uppercase)
        .collect()
}

/// True when the (already normalized) plate is six ASCII letters or digits.
pub fn is_valid_plate(plate: &str) -> bool {
    plate.len() == PLATE_LEN && plate.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
}

pub fn filter_valid(candidates: &[PlateCandidate]) -> Vec<PlateCandidate> {
    candidates
        .iter()
        .filter(|c| is_valid_plate(&normalize_plate(&c.raw)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPlate {
    pub plate: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub winner: Option<String>,
    pub ranked: Vec<RankedPlate>,
}

impl ConsensusResult {
    pub fn winner_score(&self) -> Option<f64> {
        self.ranked.first().map(|r| r.score)
    }
}

/// Scores every valid plate by the sum of its candidates' confidences and
/// keeps the top `k`, ties broken by ascending plate string.
pub fn consensus(candidates: &[PlateCandidate], k: usize) -> Result<ConsensusResult, PlateError> {
    if k == 0 {
        return Err(PlateError::ZeroK);
    }
    let mut occurrences: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for c in candidates {
        let plate = normalize_plate(&c.raw);
        if is_valid_plate(&plate) && c.confidence.is_finite() {
            occurrences.entry(plate).or_default().push(c.confidence);
        }
    }
    let mut ranked: Vec<RankedPlate> = occurrences
        .into_iter()
        .map(|(plate, mut confs)| {
            // Summing in sorted order keeps the score independent of input order.
            confs.sort_by(f64::total_cmp);
            RankedPlate { plate, score: confs.iter().sum() }
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.plate.cmp(&b.plate)));
    ranked.truncate(k);
    Ok(ConsensusResult {
        winner: ranked.first().map(|r| r.plate.clone()),
        ranked,
    })
}

/// Parses a candidate log: one `{tick, raw, confidence}` object per line.
/// Confidences must lie in `[0, 100]`.
pub fn parse_candidates(jsonl: &str) -> Result<Vec<PlateCandidate>, PlateError> {
    let mut out = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: PlateCandidate = serde_json::from_str(line).map_err(|e| PlateError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if !(0.0..=100.0).contains(&c.confidence) {
            return Err(PlateError::Parse {
                line: i + 1,
                msg: format!("confidence {} outside [0, 100]", c.confidence),
            });
        }
        out.push(c);
    }
    Ok(out)
}

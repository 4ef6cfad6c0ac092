//! Line-delimited JSON records exchanged between stages.

use std::path::Path;

use pairforge_core::corpus::{Label, LabelSource, LabeledPair, Provenance, UnlabeledPair};
use pairforge_core::swap::{RejectionReason, SwapResult};
use pairforge_core::text::{tokenize, Casing, Sentence};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::output::{require_file, runtime, CliError};

/// A pair with plain-text sentences. Labels are optional so the same shape
/// serves generated, labeled and recombined pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: u64,
    pub s1: String,
    pub s2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_source: Option<LabelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lineage: Vec<u64>,
}

fn sentence(id: u64, text: &str, casing: Casing) -> Result<Sentence, CliError> {
    tokenize(text, casing).map_err(|e| runtime(format!("pair {id}: {e}")))
}

impl PairRecord {
    pub fn generated(id: u64, s1: &Sentence, s2: &Sentence, provenance: Provenance) -> Self {
        PairRecord {
            id,
            s1: s1.detokenize(),
            s2: s2.detokenize(),
            label: None,
            label_source: None,
            provenance: Some(provenance),
            lineage: Vec::new(),
        }
    }

    pub fn to_unlabeled(&self, casing: Casing) -> Result<UnlabeledPair, CliError> {
        Ok(UnlabeledPair {
            id: self.id,
            s1: sentence(self.id, &self.s1, casing)?,
            s2: sentence(self.id, &self.s2, casing)?,
            provenance: self.provenance,
        })
    }

    pub fn to_labeled(&self, casing: Casing) -> Result<LabeledPair, CliError> {
        Ok(LabeledPair {
            id: self.id,
            s1: sentence(self.id, &self.s1, casing)?,
            s2: sentence(self.id, &self.s2, casing)?,
            label: self.label.ok_or_else(|| runtime(format!("pair {} has no label", self.id)))?,
            label_source: self.label_source.unwrap_or(LabelSource::Human),
            provenance: self.provenance.ok_or_else(|| runtime(format!("pair {} has no provenance", self.id)))?,
            lineage: self.lineage.clone(),
        })
    }
}

impl From<&LabeledPair> for PairRecord {
    fn from(p: &LabeledPair) -> Self {
        PairRecord {
            id: p.id,
            s1: p.s1.detokenize(),
            s2: p.s2.detokenize(),
            label: Some(p.label),
            label_source: Some(p.label_source),
            provenance: Some(p.provenance),
            lineage: p.lineage.clone(),
        }
    }
}

/// Full outcome of swap generation for one input sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub index: usize,
    pub source: String,
    pub generated: Option<String>,
    pub lm_source: f64,
    pub lm_generated: Option<f64>,
    pub accepted: bool,
    pub rejection_reason: Option<RejectionReason>,
}

impl SwapRecord {
    pub fn new(index: usize, r: &SwapResult) -> Self {
        SwapRecord {
            index,
            source: r.source.detokenize(),
            generated: r.generated.as_ref().map(Sentence::detokenize),
            lm_source: r.lm_source,
            lm_generated: r.lm_generated,
            accepted: r.accepted,
            rejection_reason: r.rejection_reason,
        }
    }
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, what: &str) -> Result<Vec<T>, CliError> {
    require_file(path, what)?;
    let text = std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| runtime(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn labeled_records(pairs: &[LabeledPair]) -> Vec<PairRecord> {
    pairs.iter().map(PairRecord::from).collect()
}

use std::collections::{BTreeMap, HashMap};

use pairforge_core::corpus::{Label, Provenance};
use pairforge_core::judgment::{aggregate, JudgmentError, JudgmentRecord, RaterVote, RATERS_PER_PAIR};
use pairforge_core::text::{tokenize, Casing};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::AnnotationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Correction,
    Judgment,
}

impl Phase {
    /// Swap output is corrected before judgment; back translations go
    /// straight to judgment.
    pub fn for_provenance(p: Provenance) -> Option<Phase> {
        match p {
            Provenance::Swap => Some(Phase::Correction),
            Provenance::Backtranslation => Some(Phase::Judgment),
            Provenance::Recombined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairState {
    Correction,
    Judgment,
    Rejected,
    Complete,
}

/// A generated pair submitted for review. `s1` is the source sentence, `s2`
/// the generated one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairInput {
    pub id: u64,
    pub s1: String,
    pub s2: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRequest {
    #[serde(default)]
    pub batch_id: Option<String>,
    pub phase: Phase,
    pub pairs: Vec<PairInput>,
}

impl BatchRequest {
    /// Hash of phase and pairs, used as the batch id when none is given.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_vec(&(self.phase, &self.pairs)).expect("serializable");
        hex::encode(&Sha256::digest(&body)[..12])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionAction {
    Accept,
    Fix,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub pair_id: u64,
    pub rater_id: String,
    pub action: CorrectionAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSubmission {
    pub pair_id: u64,
    pub rater_id: String,
    pub vote: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    BatchEnqueued {
        batch_id: String,
        content_hash: String,
        phase: Phase,
        pairs: Vec<PairInput>,
    },
    Correction(CorrectionRecord),
    Vote(JudgmentSubmission),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub pair_id: u64,
    pub phase: Phase,
    /// One sentence in correction, both (order masked) in judgment.
    pub displayed: Vec<String>,
    pub assignment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub id: u64,
    pub state: PairState,
    pub displayed: Vec<String>,
    pub votes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionAction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<JudgmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub pairs: usize,
    pub by_state: BTreeMap<String, usize>,
    pub votes: usize,
    pub complete: usize,
    pub kept: usize,
    pub corpus_agreement: Option<f64>,
    pub corpus_agreement_kept: Option<f64>,
    pub votes_by_rater: BTreeMap<String, usize>,
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PairEntry {
    pub input: PairInput,
    pub state: PairState,
    pub text: String,
    pub correction: Option<CorrectionRecord>,
    pub votes: Vec<RaterVote>,
    pub record: Option<JudgmentRecord>,
}

impl PairEntry {
    /// Judgment display order, flipped by a hash of the id so raters cannot
    /// tell source from generated.
    fn flipped(&self) -> bool {
        Sha256::digest(self.input.id.to_le_bytes())[0] & 1 == 1
    }

    pub fn displayed(&self) -> Vec<String> {
        match self.state {
            PairState::Correction => vec![self.text.clone()],
            _ if self.flipped() => vec![self.text.clone(), self.input.s1.clone()],
            _ => vec![self.input.s1.clone(), self.text.clone()],
        }
    }

    pub fn view(&self) -> PairView {
        PairView {
            id: self.input.id,
            state: self.state,
            displayed: self.displayed(),
            votes: self.votes.len(),
            correction: self.correction.as_ref().map(|c| c.action),
            record: self.record.clone(),
        }
    }
}

fn valid_sentence(text: &str) -> bool {
    tokenize(text, Casing::Lower).is_ok()
}

fn check_rater(rater: &str) -> Result<(), AnnotationError> {
    if rater.trim().is_empty() {
        return Err(AnnotationError::Validation("rater_id must be non-empty".into()));
    }
    Ok(())
}

/// Materialized aggregates. Every change goes through [`State::apply`], so
/// replaying the event log rebuilds the same state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct State {
    pub agreement_min: usize,
    pub pairs: BTreeMap<u64, PairEntry>,
    pub order: Vec<u64>,
    pub batches: HashMap<String, String>,
}

pub(crate) enum Applied {
    Batch { batch_id: String, created: usize },
    Pair,
}

impl State {
    pub fn new(agreement_min: usize) -> Self {
        State {
            agreement_min,
            pairs: BTreeMap::new(),
            order: Vec::new(),
            batches: HashMap::new(),
        }
    }

    /// Turns a batch request into the event to log, or `None` when the
    /// identical batch was already enqueued.
    pub fn batch_event(&self, req: BatchRequest) -> Result<(String, Option<Event>), AnnotationError> {
        if req.pairs.is_empty() {
            return Err(AnnotationError::EmptyBatch);
        }
        for p in &req.pairs {
            if Phase::for_provenance(p.provenance) != Some(req.phase) {
                return Err(AnnotationError::PhaseMismatch {
                    pair_id: p.id,
                    provenance: p.provenance,
                    phase: req.phase,
                });
            }
            if !valid_sentence(&p.s1) || !valid_sentence(&p.s2) {
                return Err(AnnotationError::Validation(format!("pair {} has an empty sentence", p.id)));
            }
        }
        let hash = req.content_hash();
        let batch_id = req.batch_id.clone().unwrap_or_else(|| hash.clone());
        match self.batches.get(&batch_id) {
            Some(h) if *h == hash => return Ok((batch_id, None)),
            Some(_) => return Err(AnnotationError::DuplicateBatch(batch_id)),
            None => {}
        }
        let event = Event::BatchEnqueued {
            batch_id: batch_id.clone(),
            content_hash: hash,
            phase: req.phase,
            pairs: req.pairs,
        };
        self.check(&event)?;
        Ok((batch_id, Some(event)))
    }

    /// Validates without mutating.
    pub fn check(&self, event: &Event) -> Result<(), AnnotationError> {
        match event {
            Event::BatchEnqueued { batch_id, pairs, .. } => {
                if self.batches.contains_key(batch_id) {
                    return Err(AnnotationError::DuplicateBatch(batch_id.clone()));
                }
                let mut ids = std::collections::HashSet::new();
                for p in pairs {
                    if !ids.insert(p.id) {
                        return Err(AnnotationError::PairConflict(p.id));
                    }
                    if let Some(existing) = self.pairs.get(&p.id) {
                        if existing.input != *p {
                            return Err(AnnotationError::PairConflict(p.id));
                        }
                    }
                }
                Ok(())
            }
            Event::Correction(c) => {
                check_rater(&c.rater_id)?;
                let entry = self.pairs.get(&c.pair_id).ok_or(AnnotationError::UnknownPair(c.pair_id))?;
                if entry.correction.is_some() {
                    return Err(AnnotationError::AlreadyCorrected(c.pair_id));
                }
                if entry.state != PairState::Correction {
                    return Err(AnnotationError::WrongState {
                        pair_id: c.pair_id,
                        state: entry.state,
                    });
                }
                match (c.action, &c.fixed_text) {
                    (CorrectionAction::Fix, Some(t)) if valid_sentence(t) => Ok(()),
                    (CorrectionAction::Fix, _) => Err(AnnotationError::Validation(
                        "fix requires a non-empty fixed_text".into(),
                    )),
                    (_, Some(_)) => Err(AnnotationError::Validation(
                        "fixed_text is only allowed with action fix".into(),
                    )),
                    (_, None) => Ok(()),
                }
            }
            Event::Vote(v) => {
                check_rater(&v.rater_id)?;
                let entry = self.pairs.get(&v.pair_id).ok_or(AnnotationError::UnknownPair(v.pair_id))?;
                if entry.votes.len() >= RATERS_PER_PAIR {
                    return Err(JudgmentError::QuotaExceeded.into());
                }
                if entry.state != PairState::Judgment {
                    return Err(AnnotationError::WrongState {
                        pair_id: v.pair_id,
                        state: entry.state,
                    });
                }
                if entry.votes.iter().any(|r| r.rater_id == v.rater_id) {
                    return Err(JudgmentError::DuplicateRater(v.rater_id.clone()).into());
                }
                Ok(())
            }
        }
    }

    pub fn apply(&mut self, event: &Event) -> Result<Applied, AnnotationError> {
        self.check(event)?;
        Ok(match event {
            Event::BatchEnqueued {
                batch_id,
                content_hash,
                phase,
                pairs,
            } => {
                let mut created = 0;
                for p in pairs {
                    if self.pairs.contains_key(&p.id) {
                        continue;
                    }
                    created += 1;
                    self.order.push(p.id);
                    self.pairs.insert(
                        p.id,
                        PairEntry {
                            input: p.clone(),
                            state: match phase {
                                Phase::Correction => PairState::Correction,
                                Phase::Judgment => PairState::Judgment,
                            },
                            text: p.s2.clone(),
                            correction: None,
                            votes: Vec::new(),
                            record: None,
                        },
                    );
                }
                self.batches.insert(batch_id.clone(), content_hash.clone());
                Applied::Batch {
                    batch_id: batch_id.clone(),
                    created,
                }
            }
            Event::Correction(c) => {
                let entry = self.pairs.get_mut(&c.pair_id).expect("checked");
                match c.action {
                    CorrectionAction::Accept => entry.state = PairState::Judgment,
                    CorrectionAction::Fix => {
                        entry.text = c.fixed_text.clone().expect("checked");
                        entry.state = PairState::Judgment;
                    }
                    CorrectionAction::Reject => entry.state = PairState::Rejected,
                }
                entry.correction = Some(c.clone());
                Applied::Pair
            }
            Event::Vote(v) => {
                let min = self.agreement_min;
                let entry = self.pairs.get_mut(&v.pair_id).expect("checked");
                entry.votes.push(RaterVote {
                    rater_id: v.rater_id.clone(),
                    vote: v.vote,
                });
                if entry.votes.len() == RATERS_PER_PAIR {
                    entry.record = Some(aggregate(&v.pair_id.to_string(), &entry.votes, min)?);
                    entry.state = PairState::Complete;
                }
                Applied::Pair
            }
        })
    }

    pub fn next_task(&self, phase: Phase, rater: &str) -> Option<AnnotationTask> {
        let wanted = match phase {
            Phase::Correction => PairState::Correction,
            Phase::Judgment => PairState::Judgment,
        };
        self.order
            .iter()
            .map(|id| &self.pairs[id])
            .find(|e| e.state == wanted && !e.votes.iter().any(|v| v.rater_id == rater))
            .map(|e| AnnotationTask {
                pair_id: e.input.id,
                phase,
                displayed: e.displayed(),
                assignment: "pending".into(),
            })
    }
}

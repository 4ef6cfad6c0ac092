use std::io::{BufRead, Write};
use std::path::Path;

use parking_lot::Mutex;
use pairforge_core::corpus::{LabelSource, LabeledPair, Provenance};
use pairforge_core::judgment::{corpus_agreement, JudgmentError, JudgmentRecord, RATERS_PER_PAIR};
use pairforge_core::text::{tokenize, Casing};

use crate::model::{
    AnnotationTask, Applied, BatchRequest, CorrectionRecord, Event, JudgmentSubmission, PairState, PairView, Phase,
    State, Stats,
};
use crate::store::{LoggedEvent, Store};
use crate::AnnotationError;

const AGREEMENT_KEY: &str = "agreement_min";

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EnqueueOutcome {
    pub batch_id: String,
    pub created: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JudgmentOutcome {
    pub pair: PairView,
    pub votes: usize,
}

/// Human-labeled pairs ready for label balancing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledExport {
    pub swap_pairs: Vec<LabeledPair>,
    pub bt_pairs: Vec<LabeledPair>,
    pub records: Vec<JudgmentRecord>,
}

struct Inner {
    store: Store,
    state: State,
}

/// Review state backed by an append-only event log. Every mutation validates
/// against the materialized state, appends, then applies under one lock.
pub struct Workspace {
    inner: Mutex<Inner>,
}

impl Workspace {
    pub fn open(path: &Path, agreement_min: usize) -> Result<Self, AnnotationError> {
        Self::from_store(Store::open(path)?, agreement_min)
    }

    pub fn in_memory(agreement_min: usize) -> Result<Self, AnnotationError> {
        Self::from_store(Store::in_memory()?, agreement_min)
    }

    fn from_store(store: Store, agreement_min: usize) -> Result<Self, AnnotationError> {
        if !(3..=RATERS_PER_PAIR).contains(&agreement_min) {
            return Err(AnnotationError::Validation(format!("agreement_min {agreement_min} outside [3, 5]")));
        }
        match store.meta(AGREEMENT_KEY)? {
            Some(v) if v != agreement_min.to_string() => {
                return Err(AnnotationError::ConfigMismatch {
                    stored: v,
                    requested: agreement_min.to_string(),
                })
            }
            Some(_) => {}
            None => store.set_meta(AGREEMENT_KEY, &agreement_min.to_string())?,
        }
        let mut state = State::new(agreement_min);
        for logged in store.events()? {
            state.apply(&logged.event).map_err(|e| AnnotationError::Corrupt {
                seq: logged.seq,
                message: e.to_string(),
            })?;
        }
        Ok(Workspace {
            inner: Mutex::new(Inner { store, state }),
        })
    }

    fn commit(&self, inner: &mut Inner, event: Event) -> Result<Applied, AnnotationError> {
        inner.state.check(&event)?;
        inner.store.append(&event, None)?;
        inner.state.apply(&event)
    }

    pub fn enqueue_batch(&self, req: BatchRequest) -> Result<EnqueueOutcome, AnnotationError> {
        let mut inner = self.inner.lock();
        let (batch_id, event) = inner.state.batch_event(req)?;
        let Some(event) = event else {
            return Ok(EnqueueOutcome { batch_id, created: 0 });
        };
        match self.commit(&mut inner, event)? {
            Applied::Batch { batch_id, created } => Ok(EnqueueOutcome { batch_id, created }),
            Applied::Pair => unreachable!("batch event"),
        }
    }

    pub fn next_task(&self, phase: Phase, rater: &str) -> Option<AnnotationTask> {
        self.inner.lock().state.next_task(phase, rater)
    }

    pub fn submit_correction(&self, record: CorrectionRecord) -> Result<PairView, AnnotationError> {
        let mut inner = self.inner.lock();
        let id = record.pair_id;
        self.commit(&mut inner, Event::Correction(record))?;
        Ok(inner.state.pairs[&id].view())
    }

    pub fn submit_judgment(&self, sub: JudgmentSubmission) -> Result<JudgmentOutcome, AnnotationError> {
        let mut inner = self.inner.lock();
        let id = sub.pair_id;
        self.commit(&mut inner, Event::Vote(sub))?;
        let pair = inner.state.pairs[&id].view();
        Ok(JudgmentOutcome { votes: pair.votes, pair })
    }

    pub fn aggregate_judgments(&self, pair_id: u64) -> Result<JudgmentRecord, AnnotationError> {
        let inner = self.inner.lock();
        let entry = inner.state.pairs.get(&pair_id).ok_or(AnnotationError::UnknownPair(pair_id))?;
        entry
            .record
            .clone()
            .ok_or(AnnotationError::Judgment(JudgmentError::Incomplete(entry.votes.len())))
    }

    pub fn pair(&self, id: u64) -> Result<PairView, AnnotationError> {
        let inner = self.inner.lock();
        inner.state.pairs.get(&id).map(|e| e.view()).ok_or(AnnotationError::UnknownPair(id))
    }

    pub fn records(&self) -> Vec<JudgmentRecord> {
        let inner = self.inner.lock();
        inner.state.order.iter().filter_map(|id| inner.state.pairs[id].record.clone()).collect()
    }

    pub fn stats(&self) -> Stats {
        let inner = self.inner.lock();
        let mut by_state = std::collections::BTreeMap::new();
        let mut votes_by_rater = std::collections::BTreeMap::new();
        let mut votes = 0;
        for e in inner.state.pairs.values() {
            let key = serde_json::to_value(e.state).expect("serializable");
            *by_state.entry(key.as_str().unwrap_or_default().to_string()).or_insert(0) += 1;
            votes += e.votes.len();
            for v in &e.votes {
                *votes_by_rater.entry(v.rater_id.clone()).or_insert(0) += 1;
            }
        }
        drop(inner);
        let records = self.records();
        Stats {
            pairs: by_state.values().sum(),
            by_state,
            votes,
            complete: records.len(),
            kept: records.iter().filter(|r| r.kept).count(),
            corpus_agreement: corpus_agreement(&records, false).ok(),
            corpus_agreement_kept: corpus_agreement(&records, true).ok(),
            votes_by_rater,
            batches: self.inner.lock().state.batches.len(),
        }
    }

    /// Kept, completed pairs with majority labels, split by provenance. The
    /// generated side carries any correction.
    pub fn labeled_pairs(&self, casing: Casing) -> Result<LabeledExport, AnnotationError> {
        let inner = self.inner.lock();
        let mut out = LabeledExport::default();
        for id in &inner.state.order {
            let e = &inner.state.pairs[id];
            let Some(record) = &e.record else { continue };
            out.records.push(record.clone());
            if e.state != PairState::Complete || !record.kept {
                continue;
            }
            let sentence = |t: &str| tokenize(t, casing).map_err(|err| AnnotationError::Validation(err.to_string()));
            let pair = LabeledPair {
                id: e.input.id,
                s1: sentence(&e.input.s1)?,
                s2: sentence(&e.text)?,
                label: record.majority,
                label_source: LabelSource::Human,
                provenance: e.input.provenance,
                lineage: Vec::new(),
            };
            match e.input.provenance {
                Provenance::Swap => out.swap_pairs.push(pair),
                _ => out.bt_pairs.push(pair),
            }
        }
        Ok(out)
    }

    pub fn events(&self) -> Result<Vec<LoggedEvent>, AnnotationError> {
        self.inner.lock().store.events()
    }

    /// One JSON event per line, in log order.
    pub fn export_jsonl(&self, mut w: impl Write) -> Result<(), AnnotationError> {
        for e in self.events()? {
            serde_json::to_writer(&mut w, &e).expect("serializable");
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Replays an exported log into this (normally empty) workspace, keeping
    /// the original timestamps.
    pub fn import_jsonl(&self, r: impl BufRead) -> Result<usize, AnnotationError> {
        let mut inner = self.inner.lock();
        let mut n = 0;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let logged: LoggedEvent = serde_json::from_str(&line).map_err(|e| AnnotationError::Corrupt {
                seq: i as u64 + 1,
                message: e.to_string(),
            })?;
            inner.state.check(&logged.event)?;
            inner.store.append(&logged.event, Some(logged.ts_ms))?;
            inner.state.apply(&logged.event)?;
            n += 1;
        }
        Ok(n)
    }

    #[cfg(test)]
    pub(crate) fn state_snapshot(&self) -> State {
        self.inner.lock().state.clone()
    }
}

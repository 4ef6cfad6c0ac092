//! Two-phase human review of generated pairs.
//!
//! Swap pairs are first corrected by one rater who sees only the generated
//! sentence, then judged by five raters; back-translation pairs go straight to
//! judgment. State is an append-only event log in a single SQLite file.

pub mod api;
pub mod model;
pub mod store;
pub mod workspace;

use pairforge_core::corpus::Provenance;
use pairforge_core::judgment::JudgmentError;
use thiserror::Error;

pub use api::{router, serve, WORKSPACE_KEY_HEADER};
pub use model::{
    AnnotationTask, BatchRequest, CorrectionAction, CorrectionRecord, JudgmentSubmission, PairInput, PairState,
    PairView, Phase, Stats,
};
pub use workspace::{EnqueueOutcome, JudgmentOutcome, LabeledExport, Workspace};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("batch has no pairs")]
    EmptyBatch,
    #[error("pair {pair_id} with {provenance} provenance cannot enter the {phase:?} phase")]
    PhaseMismatch {
        pair_id: u64,
        provenance: Provenance,
        phase: Phase,
    },
    #[error("batch {0} already exists with different content")]
    DuplicateBatch(String),
    #[error("pair {0} already exists with different content")]
    PairConflict(u64),
    #[error("unknown pair {0}")]
    UnknownPair(u64),
    #[error("pair {pair_id} is in state {state:?}")]
    WrongState { pair_id: u64, state: PairState },
    #[error("pair {0} already has a correction")]
    AlreadyCorrected(u64),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Judgment(#[from] JudgmentError),
    #[error("missing or wrong workspace key")]
    Unauthorized,
    #[error("store says agreement_min = {stored}, requested {requested}")]
    ConfigMismatch { stored: String, requested: String },
    #[error("event {seq}: {message}")]
    Corrupt { seq: u64, message: String },
    #[error("store: {0}")]
    Store(#[from] rusqlite::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AnnotationError {
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::EmptyBatch => "empty_batch",
            AnnotationError::PhaseMismatch { .. } => "phase_mismatch",
            AnnotationError::DuplicateBatch(_) => "duplicate_batch",
            AnnotationError::PairConflict(_) => "pair_conflict",
            AnnotationError::UnknownPair(_) => "unknown_pair",
            AnnotationError::WrongState { .. } => "wrong_state",
            AnnotationError::AlreadyCorrected(_) => "already_corrected",
            AnnotationError::Validation(_) => "validation_error",
            AnnotationError::Judgment(JudgmentError::QuotaExceeded) => "quota_exceeded",
            AnnotationError::Judgment(JudgmentError::DuplicateRater(_)) => "duplicate_rater",
            AnnotationError::Judgment(JudgmentError::Incomplete(_)) => "incomplete",
            AnnotationError::Judgment(JudgmentError::Undefined) => "undefined",
            AnnotationError::Unauthorized => "unauthorized",
            AnnotationError::ConfigMismatch { .. } => "config_mismatch",
            AnnotationError::Corrupt { .. } => "corrupt_log",
            AnnotationError::Store(_) => "store_error",
            AnnotationError::Io(_) => "io_error",
        }
    }
}

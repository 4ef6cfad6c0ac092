//! Adversarial paraphrase pair generation.
//!
//! Word swapping under n-gram LM guidance produces high-overlap pairs with
//! different word order; round-trip translation produces paraphrases with
//! reordering. Label balancing, splitting and a bag-of-words baseline turn
//! them into an evaluation corpus.

pub mod align;
pub mod backtrans;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod judgment;
pub mod lm;
pub mod swap;
pub mod tagging;
pub mod text;

pub use align::{align_monotonic, inversion_rate, sentence_inversion, AlignmentLink, InversionReport};
pub use backtrans::{BackTransCandidate, Direction, TranslationProvider};
pub use config::PipelineConfig;
pub use corpus::{DatasetSplit, Label, LabelSource, LabeledPair, Provenance, SplitName, UnlabeledPair};
pub use eval::{PrCurve, ScoredPair};
pub use judgment::{JudgmentRecord, RaterVote};
pub use lm::NgramModel;
pub use swap::{RejectionReason, SwapConfig, SwapResult};
pub use tagging::{CandidateSets, EntityTag, TagTemplate, TaggedToken, TaggerProvider};
pub use text::{tokenize, BowVector, Casing, FeatureOrder, Sentence};

//! Rater vote aggregation, agreement statistics and provenance masking.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, LabeledPair};

pub const RATERS_PER_PAIR: usize = 5;
pub const DEFAULT_AGREEMENT_MIN: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JudgmentError {
    #[error("pair has {0} of {RATERS_PER_PAIR} votes")]
    Incomplete(usize),
    #[error("pair already has {RATERS_PER_PAIR} votes")]
    QuotaExceeded,
    #[error("rater {0:?} voted more than once")]
    DuplicateRater(String),
    #[error("agreement is undefined for an empty pool")]
    Undefined,
}

pub type Vote = Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterVote {
    pub rater_id: String,
    pub vote: Vote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub pair_id: String,
    pub votes: Vec<RaterVote>,
    pub majority: Label,
    pub agreement: f64,
    pub kept: bool,
}

impl JudgmentRecord {
    pub fn matching_votes(&self) -> usize {
        self.votes.iter().filter(|v| v.vote == self.majority).count()
    }
}

/// Majority of exactly five votes, fraction agreeing with it, and whether at
/// least `agreement_min` raters agree.
pub fn aggregate(pair_id: &str, votes: &[RaterVote], agreement_min: usize) -> Result<JudgmentRecord, JudgmentError> {
    if votes.len() > RATERS_PER_PAIR {
        return Err(JudgmentError::QuotaExceeded);
    }
    if votes.len() < RATERS_PER_PAIR {
        return Err(JudgmentError::Incomplete(votes.len()));
    }
    let mut raters = HashSet::new();
    for v in votes {
        if !raters.insert(v.rater_id.as_str()) {
            return Err(JudgmentError::DuplicateRater(v.rater_id.clone()));
        }
    }
    let yes = votes.iter().filter(|v| v.vote == Label::Paraphrase).count();
    let (majority, matching) = if 2 * yes > votes.len() {
        (Label::Paraphrase, yes)
    } else {
        (Label::NonParaphrase, votes.len() - yes)
    };
    Ok(JudgmentRecord {
        pair_id: pair_id.to_string(),
        votes: votes.to_vec(),
        majority,
        agreement: matching as f64 / votes.len() as f64,
        kept: matching >= agreement_min,
    })
}

/// Mean per-record agreement, optionally over kept records only.
pub fn corpus_agreement(records: &[JudgmentRecord], kept_only: bool) -> Result<f64, JudgmentError> {
    let included: Vec<f64> = records
        .iter()
        .filter(|r| !kept_only || r.kept)
        .map(|r| r.agreement)
        .collect();
    if included.is_empty() {
        return Err(JudgmentError::Undefined);
    }
    Ok(included.iter().sum::<f64>() / included.len() as f64)
}

/// Independent fair coin per pair, deterministic under `seed`.
pub fn flip_pattern(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

/// Swaps `s1` and `s2` of each pair with probability 0.5. Labels, ids and
/// lineage are untouched.
pub fn mask_provenance(pairs: Vec<LabeledPair>, seed: u64) -> Vec<LabeledPair> {
    let flips = flip_pattern(pairs.len(), seed);
    pairs
        .into_iter()
        .zip(flips)
        .map(|(mut p, flip)| {
            if flip {
                std::mem::swap(&mut p.s1, &mut p.s2);
            }
            p
        })
        .collect()
}

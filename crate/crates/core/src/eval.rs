//! Thresholded bag-of-words baseline, accuracy and precision-recall AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::text::{bag_of_words, cosine_similarity, FeatureOrder, Sentence, TextError};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no scored pairs")]
    Empty,
    #[error("precision-recall AUC is undefined without gold positives")]
    UndefinedAuc,
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair_id: String,
    pub score: f64,
    pub gold: Label,
}

impl ScoredPair {
    pub fn predicted(&self) -> Label {
        if self.score > DECISION_THRESHOLD {
            Label::Paraphrase
        } else {
            Label::NonParaphrase
        }
    }
}

/// Cosine over unigram and bigram counts.
pub fn bow_score(a: &Sentence, b: &Sentence) -> Result<f64, EvalError> {
    score_with(a, b, FeatureOrder::UnigramBigram)
}

pub fn score_with(a: &Sentence, b: &Sentence, order: FeatureOrder) -> Result<f64, EvalError> {
    Ok(cosine_similarity(&bag_of_words(a, order), &bag_of_words(b, order))?)
}

pub fn accuracy(scored: &[ScoredPair]) -> Result<f64, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = scored.iter().filter(|p| p.predicted() == p.gold).count();
    Ok(correct as f64 / scored.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, thresholds descending.
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

/// Average precision: sum of precision times recall increment, sweeping the
/// distinct scores from high to low. Equal scores form one step.
pub fn pr_auc(scored: &[ScoredPair]) -> Result<PrCurve, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::Empty);
    }
    let positives = scored.iter().filter(|p| p.gold == Label::Paraphrase).count();
    if positives == 0 {
        return Err(EvalError::UndefinedAuc);
    }
    let mut sorted: Vec<(f64, bool)> = scored.iter().map(|p| (p.score, p.gold == Label::Paraphrase)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            tp += sorted[i].1 as usize;
            seen += 1;
            i += 1;
        }
        let precision = tp as f64 / seen as f64;
        let recall = tp as f64 / positives as f64;
        auc += precision * (recall - prev_recall);
        prev_recall = recall;
        points.push(PrPoint { threshold, precision, recall });
    }
    Ok(PrCurve { points, auc })
}

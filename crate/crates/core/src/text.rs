//! Tokenization, bag-of-words vectors and cosine similarity.
//!
//! Every downstream stage works on [`Sentence`] values produced here, so the
//! tokenizer is deliberately simple and reversible: whitespace split, then
//! leading and trailing ASCII punctuation peeled off into separate tokens.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PUNCT: &[char] = &['.', ',', '?', '!', ';', ':', '"', '\'', '(', ')'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("bag-of-words vector has no features")]
    ZeroVector,
    #[error("cannot compare {0:?} vector with {1:?} vector")]
    FeatureOrderMismatch(FeatureOrder, FeatureOrder),
}

/// Casing policy applied at tokenization time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Casing {
    Preserve,
    #[default]
    Lower,
}

impl Casing {
    pub fn apply(self, token: &str) -> String {
        match self {
            Casing::Preserve => token.to_string(),
            Casing::Lower => token.to_lowercase(),
        }
    }
}

/// A tokenized sentence. `tokens` is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<String>,
    raw: String,
}

impl Sentence {
    /// Builds a sentence from already-tokenized text. The raw form is the
    /// space-joined tokens.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() || tokens.iter().any(|t| t.is_empty()) {
            return Err(TextError::EmptySentence);
        }
        let raw = tokens.join(" ");
        Ok(Sentence { tokens, raw })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined tokens; tokenizing this string yields the same tokens.
    pub fn detokenize(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detokenize())
    }
}

pub fn tokenize(text: &str, casing: Casing) -> Result<Sentence, TextError> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut tokens);
    }
    if tokens.is_empty() {
        return Err(TextError::EmptySentence);
    }
    let tokens: Vec<String> = tokens.into_iter().map(|t| casing.apply(t)).collect();
    Ok(Sentence {
        tokens,
        raw: text.to_string(),
    })
}

fn split_chunk<'a>(chunk: &'a str, out: &mut Vec<&'a str>) {
    let start = chunk
        .char_indices()
        .find(|(_, c)| !PUNCT.contains(c))
        .map(|(i, _)| i)
        .unwrap_or(chunk.len());
    for (i, c) in chunk[..start].char_indices() {
        out.push(&chunk[i..i + c.len_utf8()]);
    }
    if start == chunk.len() {
        return;
    }
    let rest = &chunk[start..];
    let end = rest
        .char_indices()
        .rev()
        .find(|(_, c)| !PUNCT.contains(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    out.push(&rest[..end]);
    for (i, c) in rest[end..].char_indices() {
        out.push(&rest[end + i..end + i + c.len_utf8()]);
    }
}

/// Reads a corpus file: one sentence per line, `#` comment lines and blank
/// lines skipped.
pub fn read_corpus(path: &Path, casing: Casing) -> std::io::Result<Vec<Sentence>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_corpus(&text, casing))
}

pub fn parse_corpus(text: &str, casing: Casing) -> Vec<Sentence> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .filter_map(|l| tokenize(l, casing).ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrder {
    #[default]
    Unigram,
    UnigramBigram,
}

/// Sparse count vector keyed by feature string. Bigram features are the two
/// tokens joined by a single space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVector {
    counts: BTreeMap<String, u64>,
    order: FeatureOrder,
}

impl BowVector {
    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn order(&self) -> FeatureOrder {
        self.order
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> BowVector {
        BowVector {
            counts: self
                .counts
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
            order: self.order,
        }
    }

    fn norm_sq(&self) -> u128 {
        self.counts.values().map(|&c| (c as u128) * (c as u128)).sum()
    }
}

pub fn bag_of_words(s: &Sentence, order: FeatureOrder) -> BowVector {
    let mut counts = BTreeMap::new();
    for t in s.tokens() {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    if order == FeatureOrder::UnigramBigram {
        for w in s.tokens().windows(2) {
            *counts.entry(format!("{} {}", w[0], w[1])).or_insert(0) += 1;
        }
    }
    BowVector { counts, order }
}

/// Cosine similarity of two count vectors.
///
/// Dot products and squared norms are accumulated as integers, so vectors
/// with identical counts compare at exactly 1.0.
pub fn cosine_similarity(u: &BowVector, v: &BowVector) -> Result<f64, TextError> {
    if u.order != v.order {
        return Err(TextError::FeatureOrderMismatch(u.order, v.order));
    }
    let (nu, nv) = (u.norm_sq(), v.norm_sq());
    if nu == 0 || nv == 0 {
        return Err(TextError::ZeroVector);
    }
    let (small, large) = if u.counts.len() <= v.counts.len() {
        (u, v)
    } else {
        (v, u)
    };
    let dot: u128 = small
        .counts
        .iter()
        .filter_map(|(k, &a)| large.counts.get(k).map(|&b| a as u128 * b as u128))
        .sum();
    let cos = dot as f64 / ((nu as f64) * (nv as f64)).sqrt();
    Ok(cos.min(1.0))
}

/// Convenience: cosine of two sentences under one feature order.
pub fn sentence_cosine(a: &Sentence, b: &Sentence, order: FeatureOrder) -> f64 {
    // Sentences are non-empty, so neither vector can be zero.
    cosine_similarity(&bag_of_words(a, order), &bag_of_words(b, order)).unwrap_or(0.0)
}

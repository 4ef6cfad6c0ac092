//! Constrained beam search over tag templates.
//!
//! Slots are filled left to right. Each slot draws, without replacement, one
//! span from the candidate set of its tag, so every completed sentence has the
//! same bag of words as the source. States are scored incrementally with the
//! n-gram model and the `beam_size` best survive each depth.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::NgramModel;
use crate::tagging::{CandidateSets, TagTemplate};
use crate::text::Sentence;

pub const DEFAULT_BEAM_SIZE: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 3.0;
pub const DEFAULT_LIST_KEEP_FRACTION: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum SwapError {
    #[error("template does not reproduce the sentence")]
    TemplateMismatch,
    #[error("template slot tag {0:?} has no candidate set")]
    MissingCandidates(String),
    #[error("beam size must be at least 1")]
    InvalidBeam,
    #[error("threshold must be a finite non-negative number, got {0}")]
    InvalidThreshold(f64),
    #[error("sentences do not share a bag of words")]
    PreconditionViolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    NoAlternative,
    BelowThreshold,
    ListPermutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapResult {
    pub source: Sentence,
    pub generated: Option<Sentence>,
    pub lm_source: f64,
    pub lm_generated: Option<f64>,
    pub accepted: bool,
    pub rejection_reason: Option<RejectionReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    pub beam_size: usize,
    pub threshold: f64,
}

impl Default for SwapConfig {
    fn default() -> Self {
        SwapConfig {
            beam_size: DEFAULT_BEAM_SIZE,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Distinct spans of one candidate set, with multiplicities.
struct Group {
    spans: Vec<Vec<String>>,
    counts: Vec<u32>,
}

#[derive(Clone)]
struct BeamState {
    tokens: Vec<String>,
    history: Vec<u32>,
    remaining: Vec<Vec<u32>>,
    score: f64,
}

fn rank(a: &BeamState, b: &BeamState) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.tokens.cmp(&b.tokens))
}

/// Searches for the best same-bag-of-words rewrite of `s` and applies the
/// acceptance rule `LM(s') >= LM(s) - t`.
pub fn generate_swap_pair(
    s: &Sentence,
    template: &TagTemplate,
    candidates: &CandidateSets,
    model: &NgramModel,
    config: SwapConfig,
) -> Result<SwapResult, SwapError> {
    if config.beam_size == 0 {
        return Err(SwapError::InvalidBeam);
    }
    if !(config.threshold.is_finite() && config.threshold >= 0.0) {
        return Err(SwapError::InvalidThreshold(config.threshold));
    }
    if template.source_tokens() != s.tokens() {
        return Err(SwapError::TemplateMismatch);
    }
    let lm_source = model.log_likelihood(s);
    let rejected = |reason| SwapResult {
        source: s.clone(),
        generated: None,
        lm_source,
        lm_generated: None,
        accepted: false,
        rejection_reason: Some(reason),
    };

    if candidates.permutable_tags() == 0 {
        return Ok(rejected(RejectionReason::NoAlternative));
    }
    let best = beam_search(template, candidates, model, config.beam_size, s.tokens())?;
    let Some(tokens) = best else {
        return Ok(rejected(RejectionReason::NoAlternative));
    };
    let lm_generated = model.log_likelihood_tokens(&tokens);
    let accepted = lm_generated >= lm_source - config.threshold;
    Ok(SwapResult {
        source: s.clone(),
        generated: Some(Sentence::from_tokens(tokens).expect("non-empty filling")),
        lm_source,
        lm_generated: Some(lm_generated),
        accepted,
        rejection_reason: (!accepted).then_some(RejectionReason::BelowThreshold),
    })
}

/// Returns the best completed token sequence different from `exclude`.
///
/// Completed states are re-ranked by full-sentence log-likelihood, ties going
/// to the lexicographically smaller token sequence.
fn beam_search(
    template: &TagTemplate,
    candidates: &CandidateSets,
    model: &NgramModel,
    beam_size: usize,
    exclude: &[String],
) -> Result<Option<Vec<String>>, SwapError> {
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (tag, spans) in candidates.iter() {
        let mut g = Group {
            spans: Vec::new(),
            counts: Vec::new(),
        };
        for span in spans {
            match g.spans.iter().position(|x| x == span) {
                Some(i) => g.counts[i] += 1,
                None => {
                    g.spans.push(span.clone());
                    g.counts.push(1);
                }
            }
        }
        group_of.insert(tag, groups.len());
        groups.push(g);
    }
    let slot_groups: Vec<usize> = template
        .slots()
        .iter()
        .map(|slot| {
            group_of
                .get(slot.tag.as_str())
                .copied()
                .ok_or_else(|| SwapError::MissingCandidates(slot.tag.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut beam = vec![BeamState {
        tokens: Vec::new(),
        history: model.history(&[]),
        remaining: groups.iter().map(|g| g.counts.clone()).collect(),
        score: 0.0,
    }];
    let last = slot_groups.len() - 1;
    for (depth, &g) in slot_groups.iter().enumerate() {
        let mut next = Vec::with_capacity(beam.len() * groups[g].spans.len());
        for state in &beam {
            for (j, span) in groups[g].spans.iter().enumerate() {
                if state.remaining[g][j] == 0 {
                    continue;
                }
                let mut child = state.clone();
                child.remaining[g][j] -= 1;
                child.score += model.extend_history(&mut child.history, span);
                child.tokens.extend(span.iter().cloned());
                if depth == last {
                    child.score += model.eos_log_prob(&child.history);
                }
                next.push(child);
            }
        }
        next.sort_by(rank);
        next.truncate(beam_size);
        beam = next;
    }

    let mut seen = HashSet::new();
    let mut finals: Vec<(f64, Vec<String>)> = beam
        .into_iter()
        .filter(|st| st.tokens != exclude && seen.insert(st.tokens.clone()))
        .map(|st| (model.log_likelihood_tokens(&st.tokens), st.tokens))
        .collect();
    finals.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(finals.into_iter().next().map(|(_, t)| t))
}

/// One unit of corpus-level generation.
#[derive(Debug, Clone)]
pub struct SwapInput {
    pub sentence: Sentence,
    pub template: TagTemplate,
    pub candidates: CandidateSets,
}

/// Runs [`generate_swap_pair`] over many sentences in parallel; results keep
/// input order.
pub fn generate_corpus(
    inputs: &[SwapInput],
    model: &NgramModel,
    config: SwapConfig,
) -> Result<Vec<SwapResult>, SwapError> {
    inputs
        .par_iter()
        .map(|i| generate_swap_pair(&i.sentence, &i.template, &i.candidates, model, config))
        .collect()
}

const CONNECTIVES: [&str; 2] = ["and", "or"];

fn is_item(tok: &str) -> bool {
    !CONNECTIVES.contains(&tok) && tok.chars().any(char::is_alphanumeric)
}

/// Item positions of each maximal coordination `X1 (, X2)* [,] (and|or) Xn`,
/// where every item is a single token.
fn coordination_groups(tokens: &[String]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for c in 1..tokens.len().saturating_sub(1) {
        if !CONNECTIVES.contains(&tokens[c].as_str()) || !is_item(&tokens[c + 1]) {
            continue;
        }
        let first = if is_item(&tokens[c - 1]) {
            c - 1
        } else if tokens[c - 1] == "," && c >= 2 && is_item(&tokens[c - 2]) {
            c - 2
        } else {
            continue;
        };
        let mut items = vec![c + 1, first];
        let mut i = first;
        while i >= 2 && tokens[i - 1] == "," && is_item(&tokens[i - 2]) {
            i -= 2;
            items.push(i);
        }
        items.sort_unstable();
        // merge with a group sharing the first item ("a and b or c")
        match groups.iter_mut().find(|g| g.contains(&items[0])) {
            Some(g) => {
                g.extend(items);
                g.sort_unstable();
                g.dedup();
            }
            None => groups.push(items),
        }
    }
    groups
}

/// True when `s_prime` differs from `s` only by reordering items inside
/// coordination groups such as "a and b" or "x , y or z".
pub fn is_list_permutation(s: &Sentence, s_prime: &Sentence) -> Result<bool, SwapError> {
    let (a, b) = (s.tokens(), s_prime.tokens());
    let mut ma: Vec<&String> = a.iter().collect();
    let mut mb: Vec<&String> = b.iter().collect();
    ma.sort();
    mb.sort();
    if ma != mb {
        return Err(SwapError::PreconditionViolation);
    }
    let groups = coordination_groups(a);
    let in_group: HashSet<usize> = groups.iter().flatten().copied().collect();
    if (0..a.len()).any(|i| !in_group.contains(&i) && a[i] != b[i]) {
        return Ok(false);
    }
    Ok(groups.iter().all(|g| {
        let mut x: Vec<&String> = g.iter().map(|&i| &a[i]).collect();
        let mut y: Vec<&String> = g.iter().map(|&i| &b[i]).collect();
        x.sort();
        y.sort();
        x == y
    }))
}

/// Keeps each accepted list-permutation pair with probability `keep_fraction`;
/// the rest are marked rejected with [`RejectionReason::ListPermutation`].
pub fn prune_list_permutations(
    mut results: Vec<SwapResult>,
    keep_fraction: f64,
    seed: u64,
) -> Vec<SwapResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in results.iter_mut().filter(|r| r.accepted) {
        let Some(generated) = &r.generated else { continue };
        if !is_list_permutation(&r.source, generated).unwrap_or(false) {
            continue;
        }
        if rng.random::<f64>() >= keep_fraction {
            r.accepted = false;
            r.rejection_reason = Some(RejectionReason::ListPermutation);
        }
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagging::{build_candidate_sets, build_template, TaggedToken};
    use crate::text::{tokenize, Casing};

    fn sent(text: &str) -> Sentence {
        tokenize(text, Casing::Lower).unwrap()
    }

    fn template_for(s: &Sentence, tags: &[&str]) -> (TagTemplate, CandidateSets) {
        let tagged: Vec<TaggedToken> = s
            .tokens()
            .iter()
            .zip(tags)
            .map(|(w, t)| TaggedToken::word(w.clone(), *t))
            .collect();
        let t = build_template(s, &tagged, 0.95).unwrap();
        let c = build_candidate_sets(&t);
        (t, c)
    }

    fn adjective_model() -> NgramModel {
        let corpus: Vec<Sentence> = [
            "can a good person become bad ?",
            "a good person can become bad .",
            "can a good person become bad ?",
            "can a bad person become good ?",
        ]
        .iter()
        .map(|t| sent(t))
        .collect();
        NgramModel::train(&corpus, 3).unwrap()
    }

    #[test]
    fn adjective_swap() {
        let s = sent("Can a bad person become good?");
        let (t, c) = template_for(&s, &["AUX", "DET", "ADJ", "NOUN", "VERB", "ADJ", "PUNCT"]);
        let r = generate_swap_pair(&s, &t, &c, &adjective_model(), SwapConfig::default()).unwrap();
        assert_eq!(r.generated.unwrap().detokenize(), "can a good person become bad ?");
        assert!(r.accepted);
        assert_eq!(r.rejection_reason, None);
    }

    #[test]
    fn threshold_rejects() {
        let s = sent("Can a bad person become good?");
        let (t, c) = template_for(&s, &["AUX", "DET", "ADJ", "NOUN", "VERB", "ADJ", "PUNCT"]);
        // a model that strongly prefers the source ordering
        let corpus: Vec<Sentence> = (0..20).map(|_| s.clone()).collect();
        let model = NgramModel::train(&corpus, 3).unwrap();
        let r = generate_swap_pair(&s, &t, &c, &model, SwapConfig { beam_size: 100, threshold: 0.0 }).unwrap();
        assert!(!r.accepted);
        assert_eq!(r.rejection_reason, Some(RejectionReason::BelowThreshold));
        assert!(r.lm_generated.unwrap() < r.lm_source);
    }

    #[test]
    fn singletons_have_no_alternative() {
        let s = sent("the cat sat");
        let (t, c) = template_for(&s, &["DET", "NOUN", "VERB"]);
        let r = generate_swap_pair(&s, &t, &c, &adjective_model(), SwapConfig::default()).unwrap();
        assert_eq!(r.rejection_reason, Some(RejectionReason::NoAlternative));
        assert!(r.generated.is_none());

        // duplicate spans alone cannot produce a different sentence
        let s = sent("the cat and the dog");
        let (t, c) = template_for(&s, &["DET", "NOUN", "CONJ", "DET", "NOUN2"]);
        let r = generate_swap_pair(&s, &t, &c, &adjective_model(), SwapConfig::default()).unwrap();
        assert_eq!(r.rejection_reason, Some(RejectionReason::NoAlternative));
    }

    #[test]
    fn beam_one_may_keep_only_the_source() {
        let s = sent("can a good person become bad ?");
        let (t, c) = template_for(&s, &["AUX", "DET", "ADJ", "NOUN", "VERB", "ADJ", "PUNCT"]);
        let r = generate_swap_pair(&s, &t, &c, &adjective_model(), SwapConfig { beam_size: 1, threshold: 3.0 }).unwrap();
        assert_eq!(r.rejection_reason, Some(RejectionReason::NoAlternative));
    }

    #[test]
    fn errors() {
        let s = sent("a b");
        let (t, c) = template_for(&s, &["X", "X"]);
        let m = adjective_model();
        let other = sent("b a");
        assert_eq!(
            generate_swap_pair(&other, &t, &c, &m, SwapConfig::default()),
            Err(SwapError::TemplateMismatch)
        );
        assert_eq!(
            generate_swap_pair(&s, &t, &c, &m, SwapConfig { beam_size: 0, threshold: 3.0 }),
            Err(SwapError::InvalidBeam)
        );
        assert!(generate_swap_pair(&s, &t, &c, &m, SwapConfig { beam_size: 5, threshold: -1.0 }).is_err());
    }

    #[test]
    fn list_permutations() {
        assert!(is_list_permutation(&sent("a and b"), &sent("b and a")).unwrap());
        let s = sent("flights from new york to florida");
        assert!(is_list_permutation(&s, &s).unwrap());
        assert!(!is_list_permutation(&s, &sent("flights from florida to new york")).unwrap());
        assert!(is_list_permutation(&sent("we saw cats , dogs , and birds ."), &sent("we saw birds , cats , and dogs .")).unwrap());
        assert!(is_list_permutation(&sent("tea or coffee"), &sent("coffee or tea")).unwrap());
        // reordering outside the group
        assert!(!is_list_permutation(&sent("x saw a and b"), &sent("a saw x and b")).unwrap());
        assert_eq!(
            is_list_permutation(&sent("a and b"), &sent("a and c")),
            Err(SwapError::PreconditionViolation)
        );
    }

    fn list_result(i: usize) -> SwapResult {
        SwapResult {
            source: sent(&format!("x{i} and y{i}")),
            generated: Some(sent(&format!("y{i} and x{i}"))),
            lm_source: -1.0,
            lm_generated: Some(-1.0),
            accepted: true,
            rejection_reason: None,
        }
    }

    #[test]
    fn pruning_fractions() {
        let pool: Vec<SwapResult> = (0..1000).map(list_result).collect();
        let none = prune_list_permutations(pool.clone(), 0.0, 7);
        assert!(none.iter().all(|r| !r.accepted && r.rejection_reason == Some(RejectionReason::ListPermutation)));
        assert_eq!(prune_list_permutations(pool.clone(), 1.0, 7), pool);
        let some = prune_list_permutations(pool.clone(), 0.01, 7);
        let survivors = some.iter().filter(|r| r.accepted).count();
        assert!(survivors <= 25, "{survivors}");
        assert_eq!(some, prune_list_permutations(pool, 0.01, 7));
    }

    #[test]
    fn pruning_leaves_other_pairs() {
        let mut r = list_result(0);
        r.source = sent("flights from new york to florida");
        r.generated = Some(sent("flights from florida to new york"));
        let out = prune_list_permutations(vec![r.clone()], 0.0, 1);
        assert_eq!(out, vec![r]);
    }
}

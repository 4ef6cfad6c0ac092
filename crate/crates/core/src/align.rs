//! Monotonic word alignment and word-order inversion rate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{Casing, Sentence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("alignment links {0} on the {1} side more than once")]
    InvalidAlignment(usize, &'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlignmentLink {
    pub left: usize,
    pub right: usize,
}

impl AlignmentLink {
    pub fn new(left: usize, right: usize) -> Self {
        AlignmentLink { left, right }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub links: Vec<AlignmentLink>,
    pub crossed_pairs: u64,
    pub total_pairs: u64,
    pub rate: f64,
}

/// The i-th occurrence of a token type in `s1` links to its i-th occurrence
/// in `s2`; surplus occurrences stay unlinked. Links are sorted by left index.
pub fn align_monotonic(s1: &Sentence, s2: &Sentence, casing: Casing) -> Vec<AlignmentLink> {
    let mut occurrences: HashMap<String, Vec<usize>> = HashMap::new();
    for (j, tok) in s2.tokens().iter().enumerate() {
        occurrences.entry(casing.apply(tok)).or_default().push(j);
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut links = Vec::new();
    for (i, tok) in s1.tokens().iter().enumerate() {
        let key = casing.apply(tok);
        let nth = seen.entry(key.clone()).or_insert(0);
        if let Some(&j) = occurrences.get(&key).and_then(|v| v.get(*nth)) {
            links.push(AlignmentLink::new(i, j));
        }
        *nth += 1;
    }
    links
}

/// Fraction of crossed link pairs among all `C(n, 2)` pairs; 0 when n <= 1.
///
/// Counts inversions with a merge sort, O(n log n).
pub fn inversion_rate(links: &[AlignmentLink]) -> Result<InversionReport, AlignError> {
    let mut sorted = links.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0].left == w[1].left {
            return Err(AlignError::InvalidAlignment(w[0].left, "left"));
        }
    }
    let mut rights: Vec<usize> = sorted.iter().map(|l| l.right).collect();
    {
        let mut r = rights.clone();
        r.sort_unstable();
        if let Some(w) = r.windows(2).find(|w| w[0] == w[1]) {
            return Err(AlignError::InvalidAlignment(w[0], "right"));
        }
    }
    let n = rights.len() as u64;
    let crossed = count_inversions(&mut rights);
    let total = n * n.saturating_sub(1) / 2;
    let rate = if total == 0 { 0.0 } else { crossed as f64 / total as f64 };
    Ok(InversionReport {
        links: sorted,
        crossed_pairs: crossed,
        total_pairs: total,
        rate,
    })
}

fn count_inversions(v: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            merged.push(v[i]);
            i += 1;
        } else {
            merged.push(v[j]);
            count += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    count
}

/// Alignment and inversion report for a sentence pair.
pub fn sentence_inversion(s1: &Sentence, s2: &Sentence, casing: Casing) -> InversionReport {
    inversion_rate(&align_monotonic(s1, s2, casing)).expect("monotonic alignment is one-to-one")
}
